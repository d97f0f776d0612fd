pub mod cli;
pub mod cycle_spectra;
pub mod error;
pub mod extremal;
pub mod geometry;
pub mod laplace;
pub mod matching;
pub mod model_spaces;
pub mod packing;
pub mod rng;
pub mod spectra;

pub use error::{Error, Result};
