use crate::model::{Real, Tensor};

/// Per-voxel predictive entropy, `[batch, spatial]` flattened.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertaintyMap {
    data: Vec<f64>,
    u_max: f64,
}

impl UncertaintyMap {
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `ln C`, the entropy of the uniform distribution.
    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.data.iter().sum::<f64>() / self.data.len() as f64
        }
    }

    /// Voxels with `u < u_th`.
    pub fn certainty_mask(&self, u_th: f64) -> CertaintyMask {
        CertaintyMask {
            data: self.data.iter().map(|&u| u < u_th).collect(),
        }
    }
}

/// `-sum_i p_i ln p_i` over channels, with `0 ln 0 = 0`, clamped to `[0, ln C]`.
pub fn predictive_entropy<F: Real>(mean_probs: &Tensor<F>) -> UncertaintyMap {
    let c = mean_probs.channels;
    let s = mean_probs.voxels();
    let u_max = (c as f64).ln();
    let mut data = Vec::with_capacity(mean_probs.batch * s);
    for i in 0..mean_probs.batch {
        let p = mean_probs.sample(i);
        for v in 0..s {
            let mut u = 0.0;
            for k in 0..c {
                let q = p[k * s + v].as_f64();
                if q > 0.0 {
                    u -= q * q.ln();
                }
            }
            data.push(u.clamp(0.0, u_max));
        }
    }
    UncertaintyMap { data, u_max }
}

/// Voxels whose teacher prediction is trusted by the consistency loss.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertaintyMask {
    data: Vec<bool>,
}

impl CertaintyMask {
    pub fn all(len: usize) -> Self {
        Self { data: vec![true; len] }
    }

    pub fn from_vec(data: Vec<bool>) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn fraction(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.count() as f64 / self.data.len() as f64
        }
    }
}
