//! Command-line verification harness for the `ncindex` engine: configurable suites that
//! emit one JSON-lines record per check, plus pairing, zeta and residue-table tools.

pub mod config;
pub mod error;
pub mod models;
pub mod report;
pub mod suites;
pub mod table;

pub use config::{Suite, SuiteConfig};
pub use error::{HarnessError, Result};
pub use report::{CheckRecord, Report};
