//! Counterfactual impact of an intervention on electricity load, and its
//! translation to economic activity.
//!
//! The pipeline: [`ingest`] raw hourly load and daily temperatures into a
//! [`ingest::DailySeries`]; build the calendar/temperature fixed-effects
//! [`features::DesignMatrix`]; [`estimator::fit`] it with OLS, Newey-West, or
//! AR(1) errors; simulate the no-intervention counterfactual and its
//! uncertainty in [`impact`]; check pre-treatment weeks in [`diagnostics`].

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod features;
pub mod impact;
pub mod ingest;
pub mod linalg;
pub mod pipeline;
pub mod report;
pub mod synthetic;

pub use error::{Error, ErrorClass, Result};
