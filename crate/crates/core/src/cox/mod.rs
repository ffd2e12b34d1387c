//! Cox proportional-hazards estimation: partial likelihood under Breslow or
//! Efron ties, Newton fitting, Breslow baseline survival, absolute-risk
//! prediction and Wald inference.

mod baseline;
mod fit;
mod likelihood;
mod wald;

use nalgebra::DMatrix;

pub use baseline::{
    breslow_baseline, breslow_estimate, predict_survival, progression_probability, BaselineKnot, BaselineSurvival,
    Prediction,
};
pub use fit::{constant_columns, fit_cox, CoxFit, CoxOptions};
pub(crate) use likelihood::EtaHessian;
pub use likelihood::{partial_loglik, CoxProblem, EtaDerivatives, PartialLikelihood, TieMethod};
pub use wald::{format_wald_table, two_sided_p, wald_report, WaldRow, Z95};

use crate::cohort::{Cohort, Endpoint, Normalization};
use crate::covariates::{CovariateSource, CovariateSpec};
use crate::error::{Error, Result};

/// A fitted Cox model for one endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CoxModel {
    pub endpoint: Endpoint,
    pub covariates: CovariateSpec,
    /// Log hazard ratios, one per covariate.
    pub beta: Vec<f64>,
    pub tie_method: TieMethod,
    /// Deep-feature standardization (empty when the model uses none).
    pub normalization: Normalization,
    pub info_inverse: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub loglik: f64,
}

impl CoxModel {
    pub fn covariate_names(&self) -> Vec<String> {
        self.covariates.names()
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.beta.len()).map(|j| self.info_inverse[(j, j)].sqrt()).collect()
    }

    /// x'β for an encoded covariate row.
    pub fn linear_predictor(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.beta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.beta.len(),
                found: row.len(),
            });
        }
        Ok(row.iter().zip(&self.beta).map(|(x, b)| x * b).sum())
    }

    /// Encodes `subject` with the model's covariate spec and normalization.
    pub fn encode<S: CovariateSource + ?Sized>(&self, subject: &S) -> Result<Vec<f64>> {
        self.covariates.row(subject, &self.normalization)
    }

    pub fn linear_predictor_for<S: CovariateSource + ?Sized>(&self, subject: &S) -> Result<f64> {
        self.linear_predictor(&self.encode(subject)?)
    }
}

/// Fits a Cox model for `endpoint` on `train` with the given covariates.
pub fn cox_fit(
    train: &Cohort,
    spec: &CovariateSpec,
    normalization: Normalization,
    endpoint: Endpoint,
    opts: &CoxOptions,
) -> Result<CoxModel> {
    if train.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let x = spec.design_matrix(train, &normalization)?;
    let (times, events) = train.outcomes(endpoint)?;
    let problem = CoxProblem::new(&x, &times, &events, opts.tie_method)?;
    if let Some(&j) = constant_columns(&x).first() {
        return Err(Error::SingularInformation(format!(
            "covariate `{}` is constant in the training data",
            spec.0[j]
        )));
    }
    let fit = fit::newton(&problem, opts)?;
    Ok(CoxModel {
        endpoint,
        covariates: spec.clone(),
        beta: fit.beta.iter().copied().collect(),
        tie_method: opts.tie_method,
        normalization,
        info_inverse: fit.info_inverse,
        converged: fit.converged,
        iterations: fit.iterations,
        final_gradient_norm: fit.gradient_norm,
        loglik: fit.loglik,
    })
}
