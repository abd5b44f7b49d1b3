pub mod cli;
pub mod econometrics;
pub mod error;
pub mod fitness;
pub mod ingest;
pub mod kernelmap;
pub mod matrix;
pub mod pipeline;
pub mod rca;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
