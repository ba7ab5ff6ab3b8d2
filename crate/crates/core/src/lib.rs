// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod calibration;
pub mod channel;
pub mod detectors;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod harness;
pub mod linalg;
pub mod los_fit;
pub mod rng;
pub mod theory;
pub mod waveform;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
