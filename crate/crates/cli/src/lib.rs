//! Library half of the `fastk` command: file formats, data generation, the
//! clustering pipeline, reports and the scaling benchmark.

pub mod bench;
pub mod cluster;
pub mod error;
pub mod gen;
pub mod ingest;
pub mod report;

pub use error::CliError;
