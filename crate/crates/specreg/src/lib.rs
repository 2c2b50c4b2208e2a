//! File formats, parallel fitting, the benchmark harness and the command-line
//! interface built on [`specreg_core`].

pub mod bench;
pub mod cli;
pub mod csvio;
pub mod error;
pub mod grid;
pub mod model_file;
pub mod parallel;

pub use error::{Error, Result};
