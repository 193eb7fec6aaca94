//! Signed distance transforms, their smooth inverse and surface distances.
//!
//! Boundary convention: a boundary voxel is a foreground voxel with at least
//! one face-adjacent background voxel, or a foreground voxel on the grid edge.
//! Distances are measured center to center in voxel units unless
//! [`DistanceOptions::use_spacing`] is set.

mod edt;
mod mask;
mod sdf;
mod surface;

pub use edt::squared_distance_to_sites;
pub use mask::{boundary_voxels, LabelMask};
pub use sdf::{
    inverse_sdf, inverse_sdf_grid, sdf_normalize, sdf_transform, sdf_transform_with,
    SignedDistanceMap, DEFAULT_K,
};
pub use surface::{surface_distances, surface_distances_with, SurfaceDistanceSet};

/// Metric options shared by the distance-based operations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DistanceOptions {
    /// Scale each axis by the mask's physical spacing.
    pub use_spacing: bool,
}
