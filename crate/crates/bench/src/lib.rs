pub mod config;
pub mod error;
pub mod experiment;
pub mod functions;
pub mod records;
pub mod report;
pub mod synthetic;
pub mod targets;

pub use error::{BenchError, Result};
