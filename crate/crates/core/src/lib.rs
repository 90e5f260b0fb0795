//! Template-based hybrid schema matching for tenancy schedules.

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod fd;
pub mod ingest;
pub mod matcher;
pub mod metrics;
pub mod optimizer;
pub mod schema;
pub mod synth;
pub mod table;

pub use error::{Error, Result};
