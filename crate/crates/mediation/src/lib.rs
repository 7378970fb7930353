//! File formats, parallel drivers and the `mediate` command-line tool for
//! `mediation-core`.

pub mod cli;
pub mod dataset_csv;
pub mod error;
pub mod graph_file;
pub mod model_file;
pub mod parallel;

pub use error::{Error, Result};
pub use mediation_core as core;
