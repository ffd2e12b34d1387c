use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::CoxModel;
use crate::cohort::{Cohort, Endpoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineKnot {
    pub t: f64,
    pub s0: f64,
}

/// Baseline survival S₀(t) of a subject with all covariates zero, as a
/// right-continuous step function with a knot at each distinct event time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BaselineSurvival {
    pub knots: Vec<BaselineKnot>,
}

impl BaselineSurvival {
    pub fn from_knots(knots: Vec<BaselineKnot>) -> Result<Self> {
        let ok = knots.iter().all(|k| k.t.is_finite() && k.s0 > 0.0 && k.s0 <= 1.0)
            && knots.windows(2).all(|w| w[0].t < w[1].t && w[1].s0 <= w[0].s0);
        if !ok {
            return Err(Error::InvalidInput(
                "baseline knots must have ascending times and nonincreasing survival in (0, 1]".into(),
            ));
        }
        Ok(BaselineSurvival { knots })
    }

    pub fn last_time(&self) -> Option<f64> {
        self.knots.last().map(|k| k.t)
    }

    /// S₀(t), right-continuous; 1 before the first knot.
    pub fn survival_at(&self, t: f64) -> f64 {
        let idx = self.knots.partition_point(|k| k.t <= t);
        if idx == 0 {
            1.0
        } else {
            self.knots[idx - 1].s0
        }
    }

    /// H₀(t) = −ln S₀(t).
    pub fn cumulative_hazard_at(&self, t: f64) -> f64 {
        -self.survival_at(t).ln()
    }
}

/// Breslow estimate of the baseline survival for coefficients `beta` on
/// design `x`: H₀(t) = Σ_{t_k ≤ t} d_k / Σ_{j ∈ R(t_k)} exp(x_j'β).
pub fn breslow_estimate(beta: &[f64], x: &DMatrix<f64>, times: &[f64], events: &[bool]) -> Result<BaselineSurvival> {
    if x.ncols() != beta.len() {
        return Err(Error::ModelDataMismatch(format!(
            "model has {} coefficients, design has {} columns",
            beta.len(),
            x.ncols()
        )));
    }
    let n = x.nrows();
    if times.len() != n || events.len() != n {
        return Err(Error::LengthMismatch(format!(
            "{n} design rows, {} times, {} event flags",
            times.len(),
            events.len()
        )));
    }
    let eta: Vec<f64> = (0..n)
        .map(|i| x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum())
        .collect();
    let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[b].total_cmp(&times[a]));

    // Walk times descending, accumulating the risk set; collect increments.
    let mut increments = Vec::new();
    let mut risk = 0.0;
    let mut i = 0;
    while i < n {
        let t = times[order[i]];
        let mut d = 0usize;
        while i < n && times[order[i]] == t {
            risk += (eta[order[i]] - shift).exp();
            d += usize::from(events[order[i]]);
            i += 1;
        }
        if d > 0 {
            increments.push((t, d as f64 * (-shift).exp() / risk));
        }
    }

    let mut cumulative = 0.0;
    let knots = increments
        .into_iter()
        .rev()
        .map(|(t, dh)| {
            cumulative += dh;
            BaselineKnot {
                t,
                s0: (-cumulative).exp(),
            }
        })
        .collect();
    Ok(BaselineSurvival { knots })
}

/// Breslow baseline for a model fitted on `train`.
pub fn breslow_baseline(model: &CoxModel, train: &Cohort, endpoint: Endpoint) -> Result<BaselineSurvival> {
    let x = model
        .covariates
        .design_matrix(train, &model.normalization)
        .map_err(|e| Error::ModelDataMismatch(e.to_string()))?;
    let (times, events) = train.outcomes(endpoint)?;
    breslow_estimate(&model.beta, &x, &times, &events)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Probability of progression by the horizon.
    pub probability: f64,
    /// The horizon lies beyond the last baseline knot.
    pub extrapolated: bool,
}

/// 1 − S₀(t)^exp(η) for a linear predictor η.
pub fn progression_probability(baseline: &BaselineSurvival, eta: f64, horizon_years: f64) -> Result<Prediction> {
    if !horizon_years.is_finite() || horizon_years < 0.0 {
        return Err(Error::InvalidInput(format!("horizon {horizon_years} must be ≥ 0")));
    }
    let h0 = baseline.cumulative_hazard_at(horizon_years);
    Ok(Prediction {
        probability: -(-h0 * eta.exp()).exp_m1(),
        extrapolated: baseline.last_time().is_some_and(|last| horizon_years > last),
    })
}

/// Progression probability for an already encoded (and standardized)
/// covariate row.
pub fn predict_survival(
    model: &CoxModel,
    baseline: &BaselineSurvival,
    covariates: &[f64],
    horizon_years: f64,
) -> Result<Prediction> {
    let eta = model.linear_predictor(covariates)?;
    progression_probability(baseline, eta, horizon_years)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn three_events() -> BaselineSurvival {
        let x = DMatrix::from_column_slice(3, 1, &[0.4, -0.2, 1.3]);
        breslow_estimate(&[0.0], &x, &[1.0, 2.0, 3.0], &[true; 3]).unwrap()
    }

    #[test]
    fn hand_computed_steps_at_zero_beta() {
        let b = three_events();
        let expected: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0 + 0.5, 1.0 / 3.0 + 0.5 + 1.0];
        for (k, h) in b.knots.iter().zip(expected) {
            assert_relative_eq!(k.s0, (-h).exp(), epsilon = 1e-15);
        }
        assert_eq!(b.survival_at(0.5), 1.0);
        assert_eq!(b.survival_at(2.0), b.knots[1].s0);
        assert_eq!(b.survival_at(2.5), b.knots[1].s0);
    }

    #[test]
    fn zero_predictor_is_baseline_identity() {
        let b = three_events();
        let p = progression_probability(&b, 0.0, 2.0).unwrap();
        assert_relative_eq!(p.probability, 1.0 - b.survival_at(2.0), epsilon = 1e-15);
        assert_eq!(progression_probability(&b, 1.7, 0.0).unwrap().probability, 0.0);
        assert!(progression_probability(&b, 0.0, 10.0).unwrap().extrapolated);
        assert!(progression_probability(&b, 0.0, -1.0).is_err());
    }

    #[test]
    fn doubled_hazard_squares_survival() {
        let b = BaselineSurvival::from_knots(vec![BaselineKnot { t: 1.0, s0: 0.9 }]).unwrap();
        let p = progression_probability(&b, 2f64.ln(), 5.0).unwrap();
        assert_relative_eq!(p.probability, 0.19, epsilon = 1e-14);
    }

    #[test]
    fn mismatched_design() {
        let x = DMatrix::zeros(2, 2);
        assert!(matches!(
            breslow_estimate(&[0.0], &x, &[1.0, 2.0], &[true, false]),
            Err(Error::ModelDataMismatch(_))
        ));
    }

    #[test]
    fn invalid_knots_rejected() {
        let bad = vec![BaselineKnot { t: 1.0, s0: 0.8 }, BaselineKnot { t: 2.0, s0: 0.9 }];
        assert!(BaselineSurvival::from_knots(bad).is_err());
    }
}
