use nalgebra::{DMatrix, DVector};

use super::likelihood::{CoxProblem, PartialLikelihood, TieMethod};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoxOptions {
    pub tie_method: TieMethod,
    pub max_iter: usize,
    /// Convergence threshold on ‖gradient‖∞.
    pub tol: f64,
    pub max_step_halvings: usize,
    /// ‖β‖∞ beyond this is treated as monotone likelihood.
    pub max_coefficient: f64,
}

impl Default for CoxOptions {
    fn default() -> Self {
        CoxOptions {
            tie_method: TieMethod::Efron,
            max_iter: 100,
            tol: 1e-8,
            max_step_halvings: 20,
            max_coefficient: 50.0,
        }
    }
}

/// Result of a Newton fit on a design matrix.
#[derive(Debug, Clone)]
pub struct CoxFit {
    pub beta: DVector<f64>,
    /// Inverse of the observed information (−hessian) at `beta`.
    pub info_inverse: DMatrix<f64>,
    pub loglik: f64,
    /// Log partial likelihood at every accepted iterate, starting at β = 0.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

/// Columns that take a single value across all rows.
pub fn constant_columns(x: &DMatrix<f64>) -> Vec<usize> {
    (0..x.ncols())
        .filter(|&j| {
            let col = x.column(j);
            col.iter().all(|v| *v == col[0])
        })
        .collect()
}

/// Maximizes the Cox partial likelihood by Newton iteration from β = 0.
///
/// Each step is halved (up to `max_step_halvings` times) until the
/// likelihood does not decrease.
pub fn fit_cox(x: &DMatrix<f64>, times: &[f64], events: &[bool], opts: &CoxOptions) -> Result<CoxFit> {
    let problem = CoxProblem::new(x, times, events, opts.tie_method)?;
    if let Some(j) = constant_columns(x).first() {
        return Err(Error::SingularInformation(format!("covariate column {j} is constant")));
    }
    newton(&problem, opts)
}

fn invert_information(ev: &PartialLikelihood) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, DMatrix<f64>)> {
    let info = -&ev.hessian;
    let chol = info.clone().cholesky().ok_or_else(|| {
        Error::SingularInformation("information matrix is not positive definite (collinear covariates?)".into())
    })?;
    let inv = chol.inverse();
    Ok((chol, inv))
}

pub(crate) fn newton(problem: &CoxProblem<'_>, opts: &CoxOptions) -> Result<CoxFit> {
    let p = problem.n_covariates();
    let mut beta = DVector::<f64>::zeros(p);
    let mut ev = problem.evaluate(&beta)?;
    let mut trace = vec![ev.loglik];
    let mut iterations = 0;

    loop {
        let gnorm = ev.gradient.amax();
        if gnorm < opts.tol {
            // A finite maximizer of the strictly concave likelihood lies
            // above every other point of the ray through it; under
            // separation the likelihood keeps rising towards its supremum.
            let norm = beta.amax();
            if norm >= 1.0 && problem.evaluate(&(&beta * 2.0))?.loglik >= ev.loglik {
                return Err(Error::MonotoneLikelihood {
                    norm,
                    bound: opts.max_coefficient,
                });
            }
            let (_, info_inverse) = invert_information(&ev)?;
            return Ok(CoxFit {
                beta,
                info_inverse,
                loglik: ev.loglik,
                loglik_trace: trace,
                iterations,
                gradient_norm: gnorm,
                converged: true,
            });
        }
        if iterations >= opts.max_iter {
            return Err(Error::Nonconvergence {
                iterations,
                gradient_norm: gnorm,
            });
        }
        iterations += 1;

        let (chol, _) = invert_information(&ev)?;
        let step = chol.solve(&ev.gradient);
        // Predicted gain of the full step; below rounding noise the
        // likelihood comparison itself is meaningless.
        let predicted = 0.5 * ev.gradient.dot(&step);
        let noise = 64.0 * f64::EPSILON * (1.0 + ev.loglik.abs());

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_step_halvings {
            let candidate = &beta + &step * scale;
            let cand = problem.evaluate(&candidate)?;
            let ok = cand.loglik.is_finite()
                && (cand.loglik >= ev.loglik || (predicted < noise && cand.loglik >= ev.loglik - noise));
            if ok {
                accepted = Some((candidate, cand));
                break;
            }
            scale *= 0.5;
        }
        let Some((candidate, cand)) = accepted else {
            return Err(Error::Nonconvergence {
                iterations,
                gradient_norm: gnorm,
            });
        };
        beta = candidate;
        ev = cand;
        trace.push(ev.loglik);

        let norm = beta.amax();
        if norm > opts.max_coefficient {
            return Err(Error::MonotoneLikelihood {
                norm,
                bound: opts.max_coefficient,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn constant_covariate_is_singular() {
        let x = DMatrix::from_column_slice(4, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 5.0, 5.0, 5.0]);
        let err = fit_cox(
            &x,
            &[1.0, 2.0, 3.0, 4.0],
            &[true, true, false, true],
            &CoxOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SingularInformation(_)));
    }

    #[test]
    fn collinear_covariates_are_singular() {
        let a = [0.5, -1.0, 2.0, 0.1, 0.7, -0.3];
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        let x = DMatrix::from_iterator(6, 2, a.iter().copied().chain(b));
        let times = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let err = fit_cox(
            &x,
            &times,
            &[true, false, true, true, false, true],
            &CoxOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SingularInformation(_)), "{err:?}");
    }

    #[test]
    fn perfect_separation_is_monotone_likelihood() {
        // The exposed group always fails first; a small covariate scale
        // pushes β past the bound before the score underflows the tolerance.
        let x = DMatrix::from_column_slice(6, 1, &[0.1, 0.1, 0.1, 0.0, 0.0, 0.0]);
        let times = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let err = fit_cox(&x, &times, &[true; 6], &CoxOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MonotoneLikelihood { .. }), "{err:?}");
    }

    #[test]
    fn score_vanishes_at_optimum() {
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 1.0, 0.0]);
        let times = [1.0, 2.0, 3.0, 4.0];
        let events = [true, true, false, true];
        let fit = fit_cox(&x, &times, &events, &CoxOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.gradient_norm < 1e-8);
        let ev = CoxProblem::new(&x, &times, &events, TieMethod::Efron)
            .unwrap()
            .evaluate(&fit.beta)
            .unwrap();
        assert_relative_eq!(ev.gradient[0], 0.0, epsilon = 1e-8);
    }
}
