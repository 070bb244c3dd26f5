pub mod basis;
pub mod calibration;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod gal;
pub mod linalg;
pub mod quad;
pub mod sampler;
pub mod seed;
pub mod simlab;
pub mod special;

pub use error::{Error, Result};
