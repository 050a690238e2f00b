//! Photovoltaic power estimation pipeline.
//!
//! End to end: sensor-log ingestion and validation, min-max normalization,
//! Pearson correlation screening, from-scratch multilayer perceptron
//! training over small topologies, a multiple-linear-regression baseline
//! with ANOVA, and RMSE-based evaluation. A synthetic generator with a known
//! ground-truth power function provides the test oracle.
//!
//! Modules map onto pipeline stages:
//!
//! - [`types`]: records, datasets, feature matrices, the shuffled split
//! - [`ingest`]: CSV schemas, grid resampling, timestamp alignment
//! - [`synthetic`]: seeded clear-sky dataset generator
//! - [`stats`]: scaling, RMSE, Pearson, F-distribution tail
//! - [`mlr`]: least-squares baseline and its ANOVA table
//! - [`ann`]: multilayer perceptron with backpropagation
//! - [`experiment`]: sweeps, model comparison, station comparison, forecasting
//!
//! Everything randomized is driven by explicit 64-bit seeds and is
//! bit-reproducible.

pub mod ann;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod mlr;
pub mod stats;
pub mod synthetic;
pub mod types;

pub use error::{Error, ErrorCategory, Result};
