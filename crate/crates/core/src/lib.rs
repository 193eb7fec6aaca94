//! Semi-supervised volumetric segmentation with a dual-branch network.
//!
//! A shared encoder-decoder feeds a segmentation head and a tanh-bounded
//! signed-distance regression head. Training combines supervised losses on
//! labeled volumes with two consistency terms evaluated on every volume:
//!
//! * intra-task consistency between the student and an EMA teacher, masked by
//!   the teacher's Monte Carlo dropout predictive entropy;
//! * cross-task consistency between the segmentation probabilities and the
//!   mask recovered from the predicted signed distance map.
//!
//! Modules are layered bottom-up: [`geometry`] and [`data`] have no model
//! dependencies, [`model`] is a small CPU convolution engine, [`objectives`]
//! holds every loss and schedule, [`trainer`] runs the optimization loop and
//! [`evaluation`] scores predictions and drives the experiment grids.

// `!(x > 0.0)` is the NaN-rejecting form used throughout validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod data;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod grid;
pub mod model;
pub mod objectives;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
pub use grid::Extents;
