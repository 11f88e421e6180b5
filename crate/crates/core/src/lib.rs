pub mod cli;
pub mod error;
pub mod factors;
pub mod fmb;
pub mod grs;
mod linalg;
pub mod panel;
mod parallel;
pub mod rolling;
pub mod simkit;
pub mod stationarity;

pub use error::{Error, Result};
pub use linalg::SpdFactor;
