//! Click models over one-hot multi-field data: LR, FM, FFM, FwFM, FEFM and DeepFEFM.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod data;
pub mod deep;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod pairs;
pub mod shallow;
pub mod synthetic;
pub mod train;

pub use error::{Error, Result};
pub use model::{Architecture, Model, ModelSpec};
