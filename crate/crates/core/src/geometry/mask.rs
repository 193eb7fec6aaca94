use serde::{Deserialize, Serialize};

use crate::{Error, Extents, Result};

/// Per-voxel category labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelMask {
    data: Vec<u8>,
    extents: Extents,
    spacing: Vec<f64>,
    num_categories: u8,
}

impl LabelMask {
    pub fn new(data: Vec<u8>, extents: Extents, num_categories: u8) -> Result<Self> {
        if num_categories < 2 {
            return Err(Error::InvalidInput(format!(
                "a label mask needs at least 2 categories, got {num_categories}"
            )));
        }
        if data.len() != extents.len() {
            return Err(Error::InvalidInput(format!(
                "mask has {} values but extents {extents} hold {}",
                data.len(),
                extents.len()
            )));
        }
        if let Some(&bad) = data.iter().find(|&&v| v >= num_categories) {
            return Err(Error::InvalidInput(format!(
                "label {bad} out of range for {num_categories} categories"
            )));
        }
        let spacing = vec![1.0; extents.ndim()];
        Ok(Self {
            data,
            extents,
            spacing,
            num_categories,
        })
    }

    /// Binary mask (categories {0, 1}) from a boolean grid.
    pub fn from_bools(fg: &[bool], extents: Extents) -> Result<Self> {
        Self::new(fg.iter().map(|&b| b as u8).collect(), extents, 2)
    }

    pub fn with_spacing(mut self, spacing: Vec<f64>) -> Result<Self> {
        if spacing.len() != self.extents.ndim() || spacing.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "spacing {spacing:?} does not fit extents {}",
                self.extents
            )));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn extents(&self) -> &Extents {
        &self.extents
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn num_categories(&self) -> u8 {
        self.num_categories
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn foreground(&self, category: u8) -> Vec<bool> {
        self.data.iter().map(|&v| v == category).collect()
    }

    pub fn count(&self, category: u8) -> usize {
        self.data.iter().filter(|&&v| v == category).count()
    }

    pub(crate) fn check_category(&self, category: u8) -> Result<()> {
        if category >= self.num_categories {
            return Err(Error::InvalidInput(format!(
                "foreground id {category} out of range for {} categories",
                self.num_categories
            )));
        }
        Ok(())
    }

    /// Spacing padded to three axes, matching [`Extents::as3`].
    pub(crate) fn spacing3(&self) -> [f64; 3] {
        match *self.spacing.as_slice() {
            [h, w] => [1.0, h, w],
            [d, h, w] => [d, h, w],
            _ => unreachable!(),
        }
    }
}

/// Boundary voxels of a foreground set under the face-adjacency convention.
///
/// Axes of extent 1 are degenerate and never make a voxel a boundary voxel.
pub fn boundary_voxels(fg: &[bool], extents: &Extents) -> Vec<bool> {
    let dims = extents.as3();
    let strides = extents.strides3();
    // Unit-extent axes (including the padded depth of 2-D grids) have no
    // neighbours and no edge.
    let axes: Vec<usize> = (0..3).filter(|&ax| dims[ax] > 1).collect();
    let mut out = vec![false; fg.len()];
    for (i, o) in out.iter_mut().enumerate() {
        if !fg[i] {
            continue;
        }
        let c = extents.coord3(i);
        *o = axes.iter().any(|&ax| {
            c[ax] == 0
                || c[ax] + 1 == dims[ax]
                || !fg[i - strides[ax]]
                || !fg[i + strides[ax]]
        });
    }
    out
}
