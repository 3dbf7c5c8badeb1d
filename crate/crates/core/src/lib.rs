//! Two-stage (select-then-test) multiple hypothesis testing.
//!
//! A selection statistic (per-sample sum of squares) that is independent of
//! the t test statistic under the null lets a first screening stage shrink
//! the multiplicity burden without distorting second-stage error control.
//! This crate provides:
//!
//! - [`dist`]: normal / chi-square / Student t CDFs and quantiles, plus the
//!   closed-form quantile bounds used to analyze the procedures;
//! - [`procedures`]: the two-stage Bonferroni and Holm procedures (known and
//!   estimated variance), classic stepwise corrections, global tests (Simes,
//!   Higher Criticism), and the split-sample competitor;
//! - [`asymptotics`]: detection-boundary calculators and the selection-rate
//!   tuning machinery;
//! - [`sim`]: scenario-driven data generation and a reproducible,
//!   parallelism-independent Monte Carlo harness with figure presets.

pub mod asymptotics;
pub mod dataset;
pub mod dist;
pub mod error;
pub mod numerics;
pub mod procedures;
pub mod sim;
pub mod special;

pub use dataset::Dataset;
pub use error::{Error, Result};
