//! Loss terms with analytic gradients, predictive uncertainty and the
//! weight and threshold schedules.
//!
//! Every loss returns its value in `f64` together with the gradient with
//! respect to the network output it consumes. Gradients never flow into
//! teacher outputs.

mod losses;
mod schedule;
mod uncertainty;

pub use losses::{
    ce_loss, cross_task_consistency, dice_loss, dist_loss, intra_task_consistency, total_loss, LossBreakdown,
    LossGrad, LossTerms, PairLossGrad, DICE_EPS,
};
pub use schedule::{ramp_fraction, rampup_weight, threshold_schedule, RampShape, DEFAULT_RAMP_MAX};
pub use uncertainty::{predictive_entropy, CertaintyMask, UncertaintyMap};
