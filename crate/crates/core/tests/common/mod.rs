//! Independent reference implementations used as test oracles. Each one
//! follows the textbook definition literally and shares no code with the
//! library.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact pair counts: (twice the concordant count, comparable pairs).
///
/// With a horizon, events after it become censored at the horizon first.
pub fn brute_concordance(risk: &[f64], times: &[f64], events: &[bool], horizon: Option<f64>) -> (u64, u64) {
    let n = risk.len();
    let (t, e): (Vec<f64>, Vec<bool>) = (0..n)
        .map(|i| match horizon {
            Some(h) if times[i] > h => (h, false),
            _ => (times[i], events[i]),
        })
        .unzip();
    let mut halves = 0u64;
    let mut pairs = 0u64;
    for i in 0..n {
        for j in 0..n {
            if i == j || !e[i] {
                continue;
            }
            // i has the earlier event; j must outlast it.
            let comparable = t[j] > t[i] || (t[j] == t[i] && !e[j]);
            if !comparable {
                continue;
            }
            pairs += 1;
            if risk[i] > risk[j] {
                halves += 2;
            } else if risk[i] == risk[j] {
                halves += 1;
            }
        }
    }
    (halves, pairs)
}

/// C from the brute-force counts; 0.5 when nothing is comparable.
pub fn brute_c(risk: &[f64], times: &[f64], events: &[bool], horizon: Option<f64>) -> f64 {
    let (halves, pairs) = brute_concordance(risk, times, events, horizon);
    if pairs == 0 {
        0.5
    } else {
        halves as f64 / (2.0 * pairs as f64)
    }
}

/// Censoring survival G(s), or G(s⁻) when `left` is set, by a literal
/// product over distinct censoring times.
pub fn censoring_survival(times: &[f64], events: &[bool], s: f64, left: bool) -> f64 {
    let mut distinct: Vec<f64> = times
        .iter()
        .zip(events)
        .filter(|(_, e)| !**e)
        .map(|(t, _)| *t)
        .collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut g = 1.0;
    for u in distinct {
        if (left && u >= s) || (!left && u > s) {
            break;
        }
        let at_risk = times.iter().filter(|&&t| t >= u).count() as f64;
        let censored = times.iter().zip(events).filter(|(t, e)| **t == u && !**e).count() as f64;
        g *= 1.0 - censored / at_risk;
    }
    g
}

/// Graf's censoring-weighted Brier score at one time, by direct summation.
pub fn graf_brier(survival: &dyn Fn(usize, f64) -> f64, times: &[f64], events: &[bool], t: f64) -> f64 {
    let n = times.len();
    let mut sum = 0.0;
    for i in 0..n {
        let s = survival(i, t);
        if times[i] <= t && events[i] {
            sum += (0.0 - s).powi(2) / censoring_survival(times, events, times[i], true);
        } else if times[i] > t {
            sum += (1.0 - s).powi(2) / censoring_survival(times, events, t, false);
        }
    }
    sum / n as f64
}

/// Log partial likelihood by direct summation over risk sets.
///
/// Breslow: Σ_k [Σ_{i∈D_k} η_i − d_k log Σ_{j∈R_k} e^{η_j}].
/// Efron: the tied-event block is removed fractionally, l/d_k for l = 0..d_k.
pub fn reference_loglik(beta: &[f64], x: &DMatrix<f64>, times: &[f64], events: &[bool], efron: bool) -> f64 {
    let n = times.len();
    let eta: Vec<f64> = (0..n)
        .map(|i| (0..beta.len()).map(|j| x[(i, j)] * beta[j]).sum())
        .collect();
    let mut event_times: Vec<f64> = (0..n).filter(|&i| events[i]).map(|i| times[i]).collect();
    event_times.sort_by(f64::total_cmp);
    event_times.dedup();
    let mut ll = 0.0;
    for t in event_times {
        let dead: Vec<usize> = (0..n).filter(|&i| events[i] && times[i] == t).collect();
        let risk: f64 = (0..n).filter(|&i| times[i] >= t).map(|i| eta[i].exp()).sum();
        let tied: f64 = dead.iter().map(|&i| eta[i].exp()).sum();
        let d = dead.len() as f64;
        for (l, &i) in dead.iter().enumerate() {
            ll += eta[i];
            let f = if efron { l as f64 / d } else { 0.0 };
            ll -= (risk - f * tied).ln();
        }
    }
    ll
}

/// A small random survival instance, with ties when `tied_times` is set.
pub struct Instance {
    pub x: DMatrix<f64>,
    pub times: Vec<f64>,
    pub events: Vec<bool>,
}

pub fn random_instance(seed: u64, n: usize, p: usize, tied_times: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.5..1.5));
    let times: Vec<f64> = (0..n)
        .map(|_| {
            if tied_times {
                f64::from(rng.random_range(1..=6))
            } else {
                rng.random_range(0.01..10.0)
            }
        })
        .collect();
    let mut events: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
    events[0] = true;
    Instance { x, times, events }
}

pub fn relative_error(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(got.abs()).max(1e-3)
}
