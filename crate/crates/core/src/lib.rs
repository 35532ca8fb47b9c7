//! SVAR-LiNGAM: causal discovery for multivariate time series with
//! non-Gaussian structural shocks.
//!
//! The pipeline runs ingest → unit-root and cointegration checks → VAR →
//! ICA-LiNGAM on the VAR residuals → structural coefficients, bootstrap
//! significance and impulse responses.

pub mod assignment;
pub mod bootstrap;
pub mod coint;
pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod ica;
pub mod ingest;
pub mod irf;
pub mod linalg;
pub mod lingam;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod svar;
pub mod synthetic;
pub mod unit_root;
pub mod var;

pub use error::{Error, ErrorClass, Result};
pub use ingest::Panel;
pub use svar::{fit_svar_lingam, SvarConfig, SvarLingamModel};
