//! Cascaded Gaussian-process learning of serial-manipulator inverse dynamics.

pub mod bench;
pub mod ctrlsim;
pub mod datasets;
pub mod error;
pub mod features;
pub mod gpr;
pub mod kinchain;
pub mod learner;

pub use error::{Error, Result};
