use crate::data::reflect_index;
use crate::model::{softmax, DualBranchNet, Tensor};
use crate::{Error, Extents, Result};

/// Anything that maps an image patch `[1, 1, ...]` to per-voxel category
/// probabilities `[1, C, ...]`.
pub trait PatchPredictor {
    fn num_categories(&self) -> usize;
    fn predict_patch(&self, patch: &Tensor<f32>) -> Result<Tensor<f32>>;
}

impl PatchPredictor for DualBranchNet<f32> {
    fn num_categories(&self) -> usize {
        self.config().num_categories
    }

    fn predict_patch(&self, patch: &Tensor<f32>) -> Result<Tensor<f32>> {
        Ok(softmax(&self.forward(patch, None)?.seg_scores))
    }
}

/// Category probabilities over a whole image, `[C, voxels]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityMap {
    pub extents: Extents,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl ProbabilityMap {
    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.extents.len();
        &self.data[c * n..(c + 1) * n]
    }

    /// Most probable category per voxel; ties go to the lower index.
    pub fn argmax(&self) -> Vec<u8> {
        let n = self.extents.len();
        (0..n)
            .map(|v| {
                let mut best = 0;
                for c in 1..self.channels {
                    if self.data[c * n + v] > self.data[best * n + v] {
                        best = c;
                    }
                }
                best as u8
            })
            .collect()
    }
}

/// Window origins along one axis: multiples of `stride`, plus a final
/// window flush with the far edge.
fn origins(len: usize, patch: usize, stride: usize) -> Vec<usize> {
    if len <= patch {
        return vec![0];
    }
    let last = len - patch;
    let mut out: Vec<usize> = (0..=last).step_by(stride).collect();
    if *out.last().expect("nonempty") != last {
        out.push(last);
    }
    out
}

/// Overlap-averaged patch predictions covering every voxel. Axes shorter
/// than the patch are reflect-padded and cropped back afterwards.
pub fn sliding_window_predict<P: PatchPredictor + ?Sized>(
    predictor: &P,
    image: &[f32],
    extents: &Extents,
    patch: &Extents,
    stride: &Extents,
) -> Result<ProbabilityMap> {
    if image.len() != extents.len() {
        return Err(Error::InvalidInput(format!("{} values for extents {extents}", image.len())));
    }
    if patch.ndim() != extents.ndim() || stride.ndim() != extents.ndim() {
        return Err(Error::InvalidInput(format!("patch {patch} and stride {stride} must match image {extents}")));
    }
    if stride.axes().iter().zip(patch.axes()).any(|(s, p)| s > p) {
        return Err(Error::InvalidInput(format!("stride {stride} exceeds patch {patch}")));
    }
    let e3 = extents.as3();
    let p3 = patch.as3();
    let s3 = stride.as3();
    let padded3: [usize; 3] = std::array::from_fn(|a| e3[a].max(p3[a]));
    let padded: Vec<f32> = if padded3 == e3 {
        image.to_vec()
    } else {
        let mut out = Vec::with_capacity(padded3.iter().product());
        for z in 0..padded3[0] {
            for y in 0..padded3[1] {
                for x in 0..padded3[2] {
                    let (sz, sy, sx) = (
                        reflect_index(z as isize, e3[0]),
                        reflect_index(y as isize, e3[1]),
                        reflect_index(x as isize, e3[2]),
                    );
                    out.push(image[(sz * e3[1] + sy) * e3[2] + sx]);
                }
            }
        }
        out
    };

    let c = predictor.num_categories();
    let np: usize = padded3.iter().product();
    let mut acc = vec![0f64; c * np];
    let mut cover = vec![0u32; np];
    let pv: usize = p3.iter().product();
    let axes: [Vec<usize>; 3] = std::array::from_fn(|a| origins(padded3[a], p3[a], s3[a]));
    for &oz in &axes[0] {
        for &oy in &axes[1] {
            for &ox in &axes[2] {
                let mut window = Vec::with_capacity(pv);
                for z in 0..p3[0] {
                    for y in 0..p3[1] {
                        let row = ((oz + z) * padded3[1] + oy + y) * padded3[2] + ox;
                        window.extend_from_slice(&padded[row..row + p3[2]]);
                    }
                }
                let probs = predictor.predict_patch(&Tensor::from_vec(1, 1, p3, window))?;
                if probs.channels != c || probs.spatial != p3 {
                    return Err(Error::InvalidState("predictor returned a mis-shaped patch".into()));
                }
                for z in 0..p3[0] {
                    for y in 0..p3[1] {
                        for x in 0..p3[2] {
                            let g = ((oz + z) * padded3[1] + oy + y) * padded3[2] + ox + x;
                            let l = (z * p3[1] + y) * p3[2] + x;
                            cover[g] += 1;
                            for k in 0..c {
                                acc[k * np + g] += f64::from(probs.data[k * pv + l]);
                            }
                        }
                    }
                }
            }
        }
    }

    let n = extents.len();
    let mut data = vec![0f32; c * n];
    for z in 0..e3[0] {
        for y in 0..e3[1] {
            for x in 0..e3[2] {
                let g = (z * padded3[1] + y) * padded3[2] + x;
                let v = (z * e3[1] + y) * e3[2] + x;
                debug_assert!(cover[g] > 0);
                for k in 0..c {
                    data[k * n + v] = (acc[k * np + g] / f64::from(cover[g])) as f32;
                }
            }
        }
    }
    Ok(ProbabilityMap {
        extents: extents.clone(),
        channels: c,
        data,
    })
}
