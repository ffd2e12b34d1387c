//! Evaluation: horizon-truncated concordance, percentile bootstrap,
//! Kaplan–Meier, censoring-weighted Brier curves and calibration by group.

mod bootstrap;
mod brier;
mod calibration;
mod concordance;
mod km;

pub use bootstrap::{bootstrap_ci, quantile_sorted, resample_indices, resample_rng, BootstrapCi, MAX_REDRAWS};
pub use brier::{brier_curve, BrierCurve};
pub use calibration::{calibrate_cohort, calibration_by_group, CalibrationPoint, CalibrationTable, GroupCalibration};
pub use concordance::{concordance, truncate_at_horizon, ConcordanceResult};
pub use km::{kaplan_meier, KmCurve, KmKnot};
