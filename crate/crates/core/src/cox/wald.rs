use libm::erfc;
use serde::{Deserialize, Serialize};

use super::CoxModel;
use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldRow {
    pub covariate: String,
    pub beta: f64,
    pub se: f64,
    pub hazard_ratio: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub z: f64,
    pub p: f64,
}

impl WaldRow {
    pub fn from_estimate(covariate: impl Into<String>, beta: f64, se: f64) -> Self {
        let z = beta / se;
        WaldRow {
            covariate: covariate.into(),
            beta,
            se,
            hazard_ratio: beta.exp(),
            ci95_low: (beta - Z95 * se).exp(),
            ci95_high: (beta + Z95 * se).exp(),
            z,
            p: two_sided_p(z),
        }
    }
}

/// P(|Z| ≥ |z|) for a standard normal Z.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Hazard ratios, 95% intervals and Wald tests for every coefficient.
pub fn wald_report(model: &CoxModel) -> Result<Vec<WaldRow>> {
    if !model.converged {
        return Err(Error::NotConverged);
    }
    Ok(model
        .covariates
        .names()
        .into_iter()
        .enumerate()
        .map(|(j, name)| WaldRow::from_estimate(name, model.beta[j], model.info_inverse[(j, j)].sqrt()))
        .collect())
}

/// Plain-text table in the layout of a multivariate hazard-ratio summary.
pub fn format_wald_table(rows: &[WaldRow]) -> String {
    let mut out = format!(
        "{:<18} {:>10} {:>21} {:>9}\n",
        "variable", "hazard", "95% CI", "p-value"
    );
    for r in rows {
        let p = if r.p < 0.001 {
            "<.001".to_string()
        } else {
            format!("{:.3}", r.p)
        };
        out.push_str(&format!(
            "{:<18} {:>10.2} {:>21} {:>9}\n",
            r.covariate,
            r.hazard_ratio,
            format!("{:.2}-{:.2}", r.ci95_low, r.ci95_high),
            p
        ));
    }
    out
}
