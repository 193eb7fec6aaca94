use super::edt::squared_distance_to_sites;
use super::mask::{boundary_voxels, LabelMask};
use super::DistanceOptions;
use crate::{Error, Result};

/// Directed boundary-to-boundary distances between two masks.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceDistanceSet {
    /// One entry per boundary voxel of `a`, in voxel index order.
    pub a_to_b: Vec<f64>,
    /// One entry per boundary voxel of `b`, in voxel index order.
    pub b_to_a: Vec<f64>,
}

impl SurfaceDistanceSet {
    /// Both directions concatenated.
    pub fn pooled(&self) -> Vec<f64> {
        let mut all = Vec::with_capacity(self.a_to_b.len() + self.b_to_a.len());
        all.extend_from_slice(&self.a_to_b);
        all.extend_from_slice(&self.b_to_a);
        all
    }
}

pub fn surface_distances(a: &LabelMask, b: &LabelMask, foreground: u8) -> Result<SurfaceDistanceSet> {
    surface_distances_with(a, b, foreground, DistanceOptions::default())
}

pub fn surface_distances_with(
    a: &LabelMask,
    b: &LabelMask,
    foreground: u8,
    opts: DistanceOptions,
) -> Result<SurfaceDistanceSet> {
    if a.extents() != b.extents() {
        return Err(Error::InvalidInput(format!(
            "mask extents differ: {} vs {}",
            a.extents(),
            b.extents()
        )));
    }
    a.check_category(foreground)?;
    b.check_category(foreground)?;
    let extents = a.extents();
    let fa = a.foreground(foreground);
    let fb = b.foreground(foreground);
    for (name, f) in [("first", &fa), ("second", &fb)] {
        if !f.iter().any(|&v| v) {
            return Err(Error::UndefinedSurface(format!(
                "{name} mask has no voxels of category {foreground}"
            )));
        }
    }
    let spacing = if opts.use_spacing { a.spacing3() } else { [1.0; 3] };
    let ba = boundary_voxels(&fa, extents);
    let bb = boundary_voxels(&fb, extents);
    let da = squared_distance_to_sites(&ba, extents, spacing);
    let db = squared_distance_to_sites(&bb, extents, spacing);
    let sample = |edge: &[bool], field: &[f64]| -> Vec<f64> {
        edge.iter()
            .zip(field)
            .filter(|(&e, _)| e)
            .map(|(_, &d2)| d2.sqrt())
            .collect()
    };
    Ok(SurfaceDistanceSet {
        a_to_b: sample(&ba, &db),
        b_to_a: sample(&bb, &da),
    })
}
