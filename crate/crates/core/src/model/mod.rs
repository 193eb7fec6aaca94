//! Dual-branch encoder-decoder on a small CPU convolution engine, generic
//! over the floating-point type, plus the teacher-student pair and
//! checkpoint files.

mod checkpoint;
mod ema;
mod layers;
mod net;
mod params;
mod real;
mod tensor;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CheckpointManifest, MANIFEST_FILE as CHECKPOINT_MANIFEST,
    MOMENTUM_FILE, STUDENT_FILE, TEACHER_FILE,
};
pub use ema::{ema_update_params, TeacherStudentPair, DEFAULT_ALPHA};
pub use net::{softmax, softmax_backward, DualBranchNet, McSamples, NetConfig, NetOutput, Trace};
pub use params::{ParamEntry, ParamLayout, Params};
pub use real::Real;
pub use tensor::Tensor;
