use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::edt::squared_distance_to_sites;
use super::mask::{boundary_voxels, LabelMask};
use super::DistanceOptions;
use crate::{Extents, Result};

/// Default sharpness of the smooth inverse transform. Saturates within one
/// voxel at unit distance scale while staying finite in 64-bit arithmetic.
pub const DEFAULT_K: f64 = 1500.0;

/// Real-valued signed distance grid: negative inside, zero on the boundary,
/// positive outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedDistanceMap {
    data: Vec<f64>,
    extents: Extents,
}

impl SignedDistanceMap {
    pub fn new(data: Vec<f64>, extents: Extents) -> Result<Self> {
        if data.len() != extents.len() {
            return Err(crate::Error::InvalidInput(format!(
                "distance map has {} values but extents {extents} hold {}",
                data.len(),
                extents.len()
            )));
        }
        Ok(Self { data, extents })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn extents(&self) -> &Extents {
        &self.extents
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

pub fn sdf_transform(mask: &LabelMask, foreground: u8) -> Result<SignedDistanceMap> {
    sdf_transform_with(mask, foreground, DistanceOptions::default())
}

/// Signed Euclidean distance of every voxel to the nearest boundary voxel of
/// the `foreground` category.
///
/// Empty and full foregrounds yield an all-zero map.
pub fn sdf_transform_with(
    mask: &LabelMask,
    foreground: u8,
    opts: DistanceOptions,
) -> Result<SignedDistanceMap> {
    mask.check_category(foreground)?;
    let extents = mask.extents().clone();
    let fg = mask.foreground(foreground);
    let count = fg.iter().filter(|&&b| b).count();
    if count == 0 || count == fg.len() {
        return SignedDistanceMap::new(vec![0.0; fg.len()], extents);
    }
    let boundary = boundary_voxels(&fg, &extents);
    let spacing = if opts.use_spacing {
        mask.spacing3()
    } else {
        [1.0; 3]
    };
    let sq = squared_distance_to_sites(&boundary, &extents, spacing);
    let data = sq
        .iter()
        .zip(fg.iter().zip(&boundary))
        .map(|(&d2, (&inside, &edge))| {
            if edge {
                0.0
            } else if inside {
                -d2.sqrt()
            } else {
                d2.sqrt()
            }
        })
        .collect();
    SignedDistanceMap::new(data, extents)
}

/// Scale negatives by `|min|` and positives by `max` so values span [-1, 1].
pub fn sdf_normalize(sdf: &SignedDistanceMap) -> SignedDistanceMap {
    let min = sdf.data.iter().copied().fold(0.0, f64::min);
    let max = sdf.data.iter().copied().fold(0.0, f64::max);
    let data = sdf
        .data
        .iter()
        .map(|&v| {
            if v < 0.0 {
                v / -min
            } else if v > 0.0 {
                v / max
            } else {
                0.0
            }
        })
        .collect();
    SignedDistanceMap {
        data,
        extents: sdf.extents.clone(),
    }
}

/// Smooth inverse transform `1 / (1 + e^{k z})`: inside (negative) values map
/// toward 1, outside toward 0. Saturates instead of overflowing and stays
/// inside the open unit interval.
pub fn inverse_sdf<F: Float>(z: F, k: F) -> F {
    let t = k * z;
    let v = if t > F::zero() {
        let e = (-t).exp();
        e / (F::one() + e)
    } else {
        F::one() / (F::one() + t.exp())
    };
    v.max(F::min_positive_value()).min(F::one() - F::epsilon())
}

pub fn inverse_sdf_grid(values: &[f64], k: f64) -> Vec<f64> {
    values.iter().map(|&z| inverse_sdf(z, k)).collect()
}
