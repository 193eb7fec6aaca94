//! Grid extents shared by images, masks and distance maps.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Spatial extents of a 2-D or 3-D grid, slowest axis first (C order).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Extents(Vec<usize>);

impl Extents {
    pub fn new(axes: &[usize]) -> Result<Self> {
        if !(2..=3).contains(&axes.len()) {
            return Err(Error::InvalidInput(format!(
                "grids must be 2-D or 3-D, got {} axes",
                axes.len()
            )));
        }
        if axes.contains(&0) {
            return Err(Error::InvalidInput(format!("zero-length axis in {axes:?}")));
        }
        Ok(Self(axes.to_vec()))
    }

    pub fn d2(h: usize, w: usize) -> Self {
        Self::new(&[h, w]).expect("nonzero extents")
    }

    pub fn d3(d: usize, h: usize, w: usize) -> Self {
        Self::new(&[d, h, w]).expect("nonzero extents")
    }

    pub fn ndim(&self) -> usize {
        self.0.len()
    }

    pub fn axes(&self) -> &[usize] {
        &self.0
    }

    /// Number of voxels.
    pub fn len(&self) -> usize {
        self.0.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Extents padded to three axes with a leading unit depth for 2-D grids.
    pub fn as3(&self) -> [usize; 3] {
        match *self.0.as_slice() {
            [h, w] => [1, h, w],
            [d, h, w] => [d, h, w],
            _ => unreachable!("validated on construction"),
        }
    }

    /// Row-major strides matching [`Extents::as3`].
    pub fn strides3(&self) -> [usize; 3] {
        let [_, h, w] = self.as3();
        [h * w, w, 1]
    }

    pub fn coord3(&self, index: usize) -> [usize; 3] {
        let [_, h, w] = self.as3();
        [index / (h * w), (index / w) % h, index % w]
    }

    /// Euclidean diameter of the grid in voxel units.
    pub fn diameter(&self) -> f64 {
        self.0
            .iter()
            .map(|&a| ((a - 1) as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

impl TryFrom<Vec<usize>> for Extents {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Extents::new(&v)
    }
}

impl From<Extents> for Vec<usize> {
    fn from(e: Extents) -> Self {
        e.0
    }
}

impl std::fmt::Display for Extents {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}
