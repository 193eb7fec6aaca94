use serde::{Deserialize, Serialize};

pub const DEFAULT_RAMP_MAX: f64 = 0.1;

/// Exponent form of the ramp: `e^{-5 (1 - t/T)}` or `e^{-5 (1 - t/T)^2}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RampShape {
    #[default]
    Printed,
    Squared,
}

/// Ramp value in `(0, 1]`, equal to 1 at `t = t_max`. `t` is clamped to `[0, t_max]`.
pub fn ramp_fraction(t: u64, t_max: u64, shape: RampShape) -> f64 {
    if t_max == 0 {
        return 1.0;
    }
    let phase = 1.0 - t.min(t_max) as f64 / t_max as f64;
    let x = match shape {
        RampShape::Printed => phase,
        RampShape::Squared => phase * phase,
    };
    (-5.0 * x).exp()
}

pub fn rampup_weight(t: u64, t_max: u64, w_max: f64, shape: RampShape) -> f64 {
    w_max * ramp_fraction(t, t_max, shape)
}

/// Uncertainty threshold rising from about three quarters of `ln C` to `ln C`.
pub fn threshold_schedule(t: u64, t_max: u64, num_categories: usize, shape: RampShape) -> f64 {
    (0.75 + 0.25 * ramp_fraction(t, t_max, shape)) * (num_categories as f64).ln()
}
