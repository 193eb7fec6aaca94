//! Optimization loop: batches, teacher-student losses, SGD with momentum,
//! EMA stepping, checkpoints and sliding-window inference.
//!
//! Every random draw at step `t` comes from a stream keyed by the run seed,
//! `t` and its purpose, so a checkpoint plus the step count fully determines
//! the rest of a run.

mod config;
mod infer;
mod optim;
mod run;
mod state;

pub use config::{lr_schedule, AblationFlags, EvalNetwork, InferConfig, ThresholdMode, TrainConfig};
pub use infer::{sliding_window_predict, PatchPredictor, ProbabilityMap};
pub use optim::sgd_momentum_step;
pub use run::{history_csv, read_history, train, write_history, RunOptions, TrainOutcome, HISTORY_FILE};
pub use state::{batch_for_step, train_step, train_step_on, CallCounts, TrainState};
