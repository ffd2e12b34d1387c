//! Survival prognosis for age-related macular degeneration.
//!
//! Cox proportional-hazards models predict the probability of progressing
//! to late AMD, geographic atrophy or neovascular AMD within 1 to 12 years
//! from baseline fundus grades, deep image features, demographics and
//! genotype. The crate covers the whole workflow:
//!
//! - [`cohort`]: participant records, CSV input, splits and standardization
//! - [`cox`]: partial likelihood (Breslow and Efron ties), Newton fitting,
//!   Breslow baseline survival and Wald statistics
//! - [`featsel`]: lasso Cox regularization path and feature selection
//! - [`metrics`]: concordance, Kaplan–Meier, Brier score, calibration and
//!   the percentile bootstrap
//! - [`scales`]: the Simplified Severity Scale
//! - [`pipeline`], [`model`], [`predict`], [`report`]: training, model
//!   files, risk profiles and evaluation tables
//! - [`cli`] and [`service`]: the `prognos` command and its HTTP API
//! - [`synth`]: seeded synthetic cohorts with known generating parameters
//!
//! ```
//! use prognos::cox::{fit_cox, CoxOptions};
//! use prognos::synth::WeibullDesign;
//!
//! let sample = WeibullDesign::default().sample(500, 7);
//! let fit = fit_cox(&sample.x, &sample.times, &sample.events, &CoxOptions::default()).unwrap();
//! assert!(fit.converged);
//! ```

pub mod cli;
pub mod cohort;
pub mod covariates;
pub mod cox;
pub mod error;
pub mod featsel;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod predict;
pub mod report;
pub mod scales;
pub mod service;
pub mod synth;

pub use error::{Error, Result};
