use serde::{Deserialize, Serialize};

use crate::data::BatchComposition;
use crate::geometry::DEFAULT_K;
use crate::model::{NetConfig, DEFAULT_ALPHA};
use crate::objectives::{RampShape, DEFAULT_RAMP_MAX};
use crate::{Error, Extents, Result};

/// Loss terms enabled on top of supervised segmentation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationFlags {
    pub use_dis_supervision: bool,
    pub use_itc: bool,
    pub use_ctc: bool,
    pub use_uncertainty_mask: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        Self::full()
    }
}

impl AblationFlags {
    pub fn full() -> Self {
        Self {
            use_dis_supervision: true,
            use_itc: true,
            use_ctc: true,
            use_uncertainty_mask: true,
        }
    }

    pub fn supervised_only() -> Self {
        Self {
            use_dis_supervision: false,
            use_itc: false,
            use_ctc: false,
            use_uncertainty_mask: false,
        }
    }

    /// The distance head takes part in training.
    pub fn regression_active(&self) -> bool {
        self.use_dis_supervision || self.use_ctc
    }

    pub fn any_consistency(&self) -> bool {
        self.use_itc || self.use_ctc
    }

    /// Disables the named terms (`dis`, `itc`, `ctc`, `mask`), comma separated.
    pub fn ablate(mut self, list: &str) -> Result<Self> {
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name {
                "dis" => self.use_dis_supervision = false,
                "itc" => self.use_itc = false,
                "ctc" => self.use_ctc = false,
                "mask" => self.use_uncertainty_mask = false,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown ablation term '{other}' (expected dis, itc, ctc or mask)"
                    )))
                }
            }
        }
        Ok(self)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "value")]
pub enum ThresholdMode {
    /// Rises with the ramp from three quarters of `ln C` to `ln C`.
    #[default]
    Ramp,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalNetwork {
    #[default]
    Student,
    Teacher,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferConfig {
    /// Window stride per axis; half the patch when absent.
    pub stride: Option<Extents>,
    pub network: EvalNetwork,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub net: NetConfig,
    pub max_iters: u64,
    pub lr0: f64,
    pub lr_decay: f64,
    pub lr_step: u64,
    pub momentum: f64,
    pub patch: Extents,
    pub composition: BatchComposition,
    pub lambda_i_max: f64,
    pub lambda_c_max: f64,
    pub ramp_shape: RampShape,
    /// Ramp length in steps; `max_iters` when absent.
    pub ramp_length: Option<u64>,
    pub threshold: ThresholdMode,
    pub beta: f64,
    pub k: f64,
    pub alpha: f64,
    pub mc_passes: usize,
    /// Standard deviation of the clamped Gaussian noise added to the teacher input.
    pub teacher_noise: Option<f64>,
    pub seed: u64,
    pub labeled_fraction: f64,
    pub ablation: AblationFlags,
    /// Steps between checkpoints; 0 writes only the final one.
    pub checkpoint_every: u64,
    pub log_every: u64,
    pub infer: InferConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            net: NetConfig::default(),
            max_iters: 6000,
            lr0: 0.01,
            lr_decay: 0.1,
            lr_step: 2500,
            momentum: 0.9,
            patch: Extents::d2(64, 64),
            composition: BatchComposition::default(),
            lambda_i_max: DEFAULT_RAMP_MAX,
            lambda_c_max: DEFAULT_RAMP_MAX,
            ramp_shape: RampShape::Printed,
            ramp_length: None,
            threshold: ThresholdMode::Ramp,
            beta: 0.75,
            k: DEFAULT_K,
            alpha: DEFAULT_ALPHA,
            mc_passes: 8,
            teacher_noise: None,
            seed: 0,
            labeled_fraction: 0.2,
            ablation: AblationFlags::full(),
            checkpoint_every: 0,
            log_every: 100,
            infer: InferConfig::default(),
        }
    }
}

impl TrainConfig {
    /// Reduced schedule for a single workstation: 2000 steps, decay every 800.
    pub fn desk() -> Self {
        Self {
            max_iters: 2000,
            lr_step: 800,
            ..Self::default()
        }
    }

    /// Scales `max_iters` and the decay interval together, keeping the
    /// decay-to-length ratio.
    pub fn with_iters(mut self, iters: u64) -> Self {
        let ratio = self.lr_step as f64 / self.max_iters.max(1) as f64;
        self.max_iters = iters;
        self.lr_step = ((iters as f64 * ratio).round() as u64).max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.net.validate()?;
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if self.lr_step == 0 || !(self.lr0 > 0.0) || !(self.lr_decay > 0.0) {
            return bad("learning-rate schedule must be positive".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} not in [0, 1)", self.momentum));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta {} not in [0, 1]", self.beta));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} not in [0, 1]", self.alpha));
        }
        if !(self.k > 0.0) {
            return bad(format!("k must be positive, got {}", self.k));
        }
        if self.mc_passes == 0 {
            return bad("mc_passes must be at least 1".into());
        }
        if !(self.labeled_fraction > 0.0 && self.labeled_fraction <= 1.0) {
            return bad(format!("labeled fraction {} not in (0, 1]", self.labeled_fraction));
        }
        if self.composition.labeled == 0 {
            return bad("batch needs at least one labeled slot".into());
        }
        if self.lambda_i_max < 0.0 || self.lambda_c_max < 0.0 {
            return bad("consistency weights must be nonnegative".into());
        }
        if let Some(s) = self.teacher_noise {
            if !(s >= 0.0) {
                return bad(format!("teacher noise {s} must be nonnegative"));
            }
        }
        if self.patch.ndim() != self.net.dims {
            return bad(format!("patch {} does not match a {}-D network", self.patch, self.net.dims));
        }
        let m = self.net.size_multiple();
        if self.patch.axes().iter().any(|a| a % m != 0) {
            return bad(format!("patch {} must be divisible by {m}", self.patch));
        }
        if let Some(stride) = &self.infer.stride {
            if stride.ndim() != self.patch.ndim() || stride.axes().iter().zip(self.patch.axes()).any(|(s, p)| s > p) {
                return bad(format!("stride {stride} must not exceed patch {}", self.patch));
            }
        }
        Ok(())
    }

    pub fn lr_at(&self, t: u64) -> f64 {
        self.lr0 * self.lr_decay.powi((t / self.lr_step) as i32)
    }

    pub fn ramp_length(&self) -> u64 {
        self.ramp_length.unwrap_or(self.max_iters)
    }

    /// ITC weight on the segmentation term. Without the distance head only
    /// the segmentation term remains.
    pub fn effective_beta(&self) -> f64 {
        if self.ablation.regression_active() {
            self.beta
        } else {
            1.0
        }
    }

    pub fn stride(&self) -> Extents {
        self.infer.stride.clone().unwrap_or_else(|| {
            Extents::new(&self.patch.axes().iter().map(|&p| (p / 2).max(1)).collect::<Vec<_>>())
                .expect("nonzero stride")
        })
    }
}

/// `0.01 * 0.1^floor(t / 2500)`.
pub fn lr_schedule(t: u64) -> f64 {
    TrainConfig::default().lr_at(t)
}
