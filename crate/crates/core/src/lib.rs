//! Draw-down analysis of daily price series.
//!
//! The pipeline extracts the trough depth of every complete draw-down below a
//! trailing six-month ceiling, sweeps the sorted depths for the cutoff whose
//! inferior segment has excess kurtosis closest to zero, fits a continuous
//! power law to the superior segment by maximum likelihood, and classifies
//! the series against seeded random-walk controls.
//!
//! ```
//! use soc_drawdown::{control, report};
//!
//! let series = control::gen_gbm(&control::GbmSpec::new(4_000, 0.0, 0.01, 11)).unwrap();
//! let config = report::AnalysisConfig::default();
//! let report = report::analyze_index(&series, &config).unwrap();
//! assert_eq!(report.params.n_tot, report.params.n_sup + report.params.n_inf);
//! ```

pub mod control;
pub mod critical;
pub mod drawdown;
pub mod error;
pub mod fixtures;
pub mod powerlaw;
pub mod report;
pub mod rng;
pub mod series;

pub use error::{Error, Result};
