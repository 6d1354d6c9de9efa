//! Event-detection evaluation for time series.
//!
//! Scores hard or probabilistic event predictions against ground truth
//! using three metric families:
//! - pointwise precision/recall/F_β
//! - point adjustment with a minimum hit fraction K (pa%K)
//! - window-based counts that tolerate temporal offsets (F1_w)
//!
//! Per-subject scores are compared against a seeded random baseline and a
//! zero-score null baseline with sign-flip permutation tests and bootstrap
//! confidence intervals.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod scenarios;
pub mod series;
pub mod stats;

pub use error::{Error, Result};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = concat!("evtol ", env!("CARGO_PKG_VERSION"));
