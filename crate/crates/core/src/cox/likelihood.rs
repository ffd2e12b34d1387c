use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convention for events sharing a recorded time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieMethod {
    Breslow,
    #[default]
    Efron,
}

impl fmt::Display for TieMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieMethod::Breslow => "breslow",
            TieMethod::Efron => "efron",
        })
    }
}

impl FromStr for TieMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "breslow" => Ok(TieMethod::Breslow),
            "efron" => Ok(TieMethod::Efron),
            other => Err(format!("unknown tie method `{other}`")),
        }
    }
}

/// Log partial likelihood with its gradient and hessian in β.
#[derive(Debug, Clone)]
pub struct PartialLikelihood {
    pub loglik: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// Log partial likelihood with per-subject derivatives in the linear
/// predictor η: `score[i] = ∂ℓ/∂η_i`, `curvature[i] = −∂²ℓ/∂η_i²`.
#[derive(Debug, Clone)]
pub struct EtaDerivatives {
    pub loglik: f64,
    pub score: Vec<f64>,
    pub curvature: Vec<f64>,
}

/// Subjects sharing one distinct time.
#[derive(Debug, Clone)]
struct TimeGroup {
    members: Vec<usize>,
    events: Vec<usize>,
}

/// Survival data sorted into risk sets once, reusable across evaluations.
#[derive(Debug, Clone)]
pub struct CoxProblem<'a> {
    x: &'a DMatrix<f64>,
    /// Distinct times, descending.
    groups: Vec<TimeGroup>,
    n_events: usize,
    tie_method: TieMethod,
}

impl<'a> CoxProblem<'a> {
    pub fn new(x: &'a DMatrix<f64>, times: &[f64], events: &[bool], tie_method: TieMethod) -> Result<Self> {
        let n = x.nrows();
        if times.len() != n || events.len() != n {
            return Err(Error::LengthMismatch(format!(
                "{n} design rows, {} times, {} event flags",
                times.len(),
                events.len()
            )));
        }
        if let Some(i) = times.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFiniteInput(format!("time of subject {i}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("design matrix".into()));
        }
        let n_events = events.iter().filter(|&&e| e).count();
        if n_events == 0 {
            return Err(Error::NoEvents);
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| times[b].total_cmp(&times[a]).then(a.cmp(&b)));
        let mut groups: Vec<TimeGroup> = Vec::new();
        let mut last = f64::NAN;
        for i in order {
            if groups.is_empty() || times[i] != last {
                groups.push(TimeGroup {
                    members: Vec::new(),
                    events: Vec::new(),
                });
                last = times[i];
            }
            let g = groups.last_mut().unwrap();
            g.members.push(i);
            if events[i] {
                g.events.push(i);
            }
        }
        Ok(CoxProblem {
            x,
            groups,
            n_events,
            tie_method,
        })
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }

    pub fn n_covariates(&self) -> usize {
        self.x.ncols()
    }

    pub fn tie_method(&self) -> TieMethod {
        self.tie_method
    }

    fn weight_fraction(&self, l: usize, d: usize) -> f64 {
        match self.tie_method {
            TieMethod::Breslow => 0.0,
            TieMethod::Efron => l as f64 / d as f64,
        }
    }

    /// Log partial likelihood, gradient and hessian at `beta`.
    pub fn evaluate(&self, beta: &DVector<f64>) -> Result<PartialLikelihood> {
        let p = self.x.ncols();
        if beta.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: beta.len(),
            });
        }
        let eta = self.x * beta;
        // Shifting η by a constant leaves every risk-set ratio unchanged.
        let shift = eta.max();
        let w: Vec<f64> = eta.iter().map(|e| (e - shift).exp()).collect();

        let mut s0 = 0.0;
        let mut s1 = DVector::<f64>::zeros(p);
        let mut s2 = DMatrix::<f64>::zeros(p, p);
        let mut loglik = 0.0;
        let mut gradient = DVector::<f64>::zeros(p);
        let mut hessian = DMatrix::<f64>::zeros(p, p);

        for g in &self.groups {
            for &i in &g.members {
                let xi = self.x.row(i).transpose();
                s0 += w[i];
                s1.axpy(w[i], &xi, 1.0);
                s2.ger(w[i], &xi, &xi, 1.0);
            }
            let d = g.events.len();
            if d == 0 {
                continue;
            }
            let mut a0 = 0.0;
            let mut a1 = DVector::<f64>::zeros(p);
            let mut a2 = DMatrix::<f64>::zeros(p, p);
            for &i in &g.events {
                let xi = self.x.row(i).transpose();
                loglik += eta[i];
                gradient += &xi;
                if self.tie_method == TieMethod::Efron && d > 1 {
                    a0 += w[i];
                    a1.axpy(w[i], &xi, 1.0);
                    a2.ger(w[i], &xi, &xi, 1.0);
                }
            }
            for l in 0..d {
                let f = self.weight_fraction(l, d);
                let (r0, r1, r2) = if f == 0.0 {
                    (s0, s1.clone(), s2.clone())
                } else {
                    (s0 - f * a0, &s1 - &a1 * f, &s2 - &a2 * f)
                };
                loglik -= r0.ln() + shift;
                let mean = r1 / r0;
                gradient -= &mean;
                hessian -= r2 / r0;
                hessian.ger(1.0, &mean, &mean, 1.0);
            }
        }
        Ok(PartialLikelihood {
            loglik,
            gradient,
            hessian,
        })
    }

    /// Log partial likelihood only.
    pub fn loglik(&self, beta: &DVector<f64>) -> Result<f64> {
        let eta = self.x * beta;
        self.eta_derivatives(eta.as_slice()).map(|d| d.loglik)
    }

    /// Likelihood and its per-subject derivatives in η, in O(n) after sorting.
    pub fn eta_derivatives(&self, eta: &[f64]) -> Result<EtaDerivatives> {
        let n = self.x.nrows();
        if eta.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: eta.len(),
            });
        }
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = eta.iter().map(|e| (e - shift).exp()).collect();

        // Per distinct time: Σ_l 1/s0, Σ_l 1/s0², and the event-member
        // versions weighted by (1 − l/d) and (1 − l/d)².
        let ng = self.groups.len();
        let mut a = vec![0.0; ng];
        let mut b = vec![0.0; ng];
        let mut ae = vec![0.0; ng];
        let mut be = vec![0.0; ng];
        let mut loglik = 0.0;
        let mut s0 = 0.0;
        for (k, g) in self.groups.iter().enumerate() {
            s0 += g.members.iter().map(|&i| w[i]).sum::<f64>();
            let d = g.events.len();
            if d == 0 {
                continue;
            }
            let a0: f64 = g.events.iter().map(|&i| w[i]).sum();
            loglik += g.events.iter().map(|&i| eta[i]).sum::<f64>();
            for l in 0..d {
                let f = self.weight_fraction(l, d);
                let r0 = s0 - f * a0;
                loglik -= r0.ln() + shift;
                a[k] += 1.0 / r0;
                b[k] += 1.0 / (r0 * r0);
                ae[k] += (1.0 - f) / r0;
                be[k] += (1.0 - f) * (1.0 - f) / (r0 * r0);
            }
        }

        let mut score = vec![0.0; n];
        let mut curvature = vec![0.0; n];
        let (mut cum_a, mut cum_b) = (0.0, 0.0);
        // Ascending time: a subject at time t belongs to every risk set at or before t.
        for (k, g) in self.groups.iter().enumerate().rev() {
            cum_a += a[k];
            cum_b += b[k];
            let (prev_a, prev_b) = (cum_a - a[k], cum_b - b[k]);
            for &i in &g.members {
                let is_event = !g.events.is_empty() && g.events.contains(&i);
                let (sa, sb) = if is_event {
                    (prev_a + ae[k], prev_b + be[k])
                } else {
                    (cum_a, cum_b)
                };
                score[i] = f64::from(u8::from(is_event)) - w[i] * sa;
                curvature[i] = w[i] * sa - w[i] * w[i] * sb;
            }
        }
        Ok(EtaDerivatives {
            loglik,
            score,
            curvature,
        })
    }
}

/// The hessian of −ℓ in η at a fixed point, applied to vectors in O(n).
pub(crate) struct EtaHessian<'p, 'a> {
    problem: &'p CoxProblem<'a>,
    w: Vec<f64>,
    /// Risk-set weight sums and tied-event weight sums per distinct time.
    s0: Vec<f64>,
    a0: Vec<f64>,
    /// Σ over the risk sets containing each subject of the Efron-adjusted 1/r0.
    sa: Vec<f64>,
}

impl<'p, 'a> EtaHessian<'p, 'a> {
    pub(crate) fn new(problem: &'p CoxProblem<'a>, eta: &[f64]) -> Self {
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = eta.iter().map(|e| (e - shift).exp()).collect();
        let ng = problem.groups.len();
        let (mut s0, mut a0) = (vec![0.0; ng], vec![0.0; ng]);
        let mut running = 0.0;
        for (k, g) in problem.groups.iter().enumerate() {
            running += g.members.iter().map(|&i| w[i]).sum::<f64>();
            s0[k] = running;
            a0[k] = g.events.iter().map(|&i| w[i]).sum();
        }
        let mut h = EtaHessian {
            problem,
            w,
            s0,
            a0,
            sa: Vec::new(),
        };
        let (a, ae) = h.group_sums(|_, _| 1.0);
        h.sa = h.accumulate(&a, &ae);
        h
    }

    /// Per distinct time, Σ_l c(k, l)/r0 over all risk-set members and
    /// Σ_l (1 − f)·c(k, l)/r0 for the tied events themselves.
    fn group_sums(&self, c: impl Fn(usize, f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let ng = self.problem.groups.len();
        let (mut a, mut ae) = (vec![0.0; ng], vec![0.0; ng]);
        for (k, g) in self.problem.groups.iter().enumerate() {
            let d = g.events.len();
            for l in 0..d {
                let f = self.problem.weight_fraction(l, d);
                let r0 = self.s0[k] - f * self.a0[k];
                let v = c(k, f) / r0;
                a[k] += v;
                ae[k] += (1.0 - f) * v;
            }
        }
        (a, ae)
    }

    /// Per subject, the sum of group values over the risk sets it belongs to.
    fn accumulate(&self, a: &[f64], ae: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.w.len()];
        let mut cum = 0.0;
        for (k, g) in self.problem.groups.iter().enumerate().rev() {
            cum += a[k];
            for &i in &g.members {
                out[i] = cum;
            }
            for &i in &g.events {
                out[i] = cum - a[k] + ae[k];
            }
        }
        out
    }

    /// (−∇²ℓ)·v.
    pub(crate) fn apply(&self, v: &[f64]) -> Vec<f64> {
        let ng = self.problem.groups.len();
        let (mut s1, mut a1) = (vec![0.0; ng], vec![0.0; ng]);
        let mut running = 0.0;
        for (k, g) in self.problem.groups.iter().enumerate() {
            running += g.members.iter().map(|&i| self.w[i] * v[i]).sum::<f64>();
            s1[k] = running;
            a1[k] = g.events.iter().map(|&i| self.w[i] * v[i]).sum();
        }
        let (b, be) = self.group_sums(|k, f| {
            let r0 = self.s0[k] - f * self.a0[k];
            (s1[k] - f * a1[k]) / r0
        });
        let sb = self.accumulate(&b, &be);
        (0..v.len()).map(|i| self.w[i] * (v[i] * self.sa[i] - sb[i])).collect()
    }
}

/// Log partial likelihood with exact gradient and hessian.
pub fn partial_loglik(
    beta: &DVector<f64>,
    x: &DMatrix<f64>,
    times: &[f64],
    events: &[bool],
    tie_method: TieMethod,
) -> Result<PartialLikelihood> {
    CoxProblem::new(x, times, events, tie_method)?.evaluate(beta)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn distinct_events_at_zero() {
        let x = DMatrix::from_column_slice(3, 1, &[0.3, -1.0, 2.0]);
        let r = partial_loglik(&DVector::zeros(1), &x, &[1.0, 2.0, 3.0], &[true; 3], TieMethod::Efron).unwrap();
        assert_relative_eq!(r.loglik, -(6.0f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn score_at_zero_is_event_minus_risk_set_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 15;
        let x = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
        let times: Vec<f64> = (0..n).map(|_| rng.random_range(1..6) as f64).collect();
        let events: Vec<bool> = (0..n).map(|_| rng.random_bool(0.6)).collect();
        // Breslow: each event contributes x_i minus the mean of its risk set.
        let r = partial_loglik(&DVector::zeros(2), &x, &times, &events, TieMethod::Breslow).unwrap();
        let mut expected = DVector::<f64>::zeros(2);
        for i in (0..n).filter(|&i| events[i]) {
            let risk: Vec<usize> = (0..n).filter(|&j| times[j] >= times[i]).collect();
            let mean = risk
                .iter()
                .fold(DVector::zeros(2), |acc, &j| acc + x.row(j).transpose())
                / risk.len() as f64;
            expected += x.row(i).transpose() - mean;
        }
        assert_relative_eq!(r.gradient, expected, epsilon = 1e-12);
    }

    #[test]
    fn no_events() {
        let x = DMatrix::zeros(2, 1);
        assert!(matches!(
            partial_loglik(&DVector::zeros(1), &x, &[1.0, 2.0], &[false, false], TieMethod::Efron),
            Err(Error::NoEvents)
        ));
    }

    #[test]
    fn non_finite_time() {
        let x = DMatrix::zeros(2, 1);
        assert!(matches!(
            partial_loglik(
                &DVector::zeros(1),
                &x,
                &[1.0, f64::NAN],
                &[true, false],
                TieMethod::Efron
            ),
            Err(Error::NonFiniteInput(_))
        ));
    }

    #[test]
    fn eta_derivatives_agree_with_beta_derivatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for tie in [TieMethod::Breslow, TieMethod::Efron] {
            let n = 12;
            // Identity design: β = η, so the hessian diagonal is −curvature.
            let x = DMatrix::<f64>::identity(n, n);
            let times: Vec<f64> = (0..n).map(|_| rng.random_range(1..5) as f64).collect();
            let mut events: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
            events[0] = true;
            let eta: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let problem = CoxProblem::new(&x, &times, &events, tie).unwrap();
            let full = problem.evaluate(&DVector::from_vec(eta.clone())).unwrap();
            let d = problem.eta_derivatives(&eta).unwrap();
            assert_relative_eq!(d.loglik, full.loglik, epsilon = 1e-12);
            for i in 0..n {
                assert_relative_eq!(d.score[i], full.gradient[i], epsilon = 1e-12);
                assert_relative_eq!(d.curvature[i], -full.hessian[(i, i)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eta_hessian_matches_dense_hessian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for tie in [TieMethod::Breslow, TieMethod::Efron] {
            let n = 15;
            let x = DMatrix::<f64>::identity(n, n);
            let times: Vec<f64> = (0..n).map(|_| rng.random_range(1..5) as f64).collect();
            let mut events: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
            events[0] = true;
            let eta: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let problem = CoxProblem::new(&x, &times, &events, tie).unwrap();
            let full = problem.evaluate(&DVector::from_vec(eta.clone())).unwrap();
            let expected = -(&full.hessian * DVector::from_vec(v.clone()));
            let got = EtaHessian::new(&problem, &eta).apply(&v);
            for i in 0..n {
                assert_relative_eq!(got[i], expected[i], epsilon = 1e-12);
            }
        }
    }
}
