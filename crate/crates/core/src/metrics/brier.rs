use serde::{Deserialize, Serialize};

use super::km::kaplan_meier;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrierCurve {
    pub grid: Vec<f64>,
    pub scores: Vec<f64>,
    /// First requested grid time dropped because the censoring survival
    /// reached zero; later grid points are dropped too.
    pub truncated_at: Option<f64>,
}

/// Censoring-weighted Brier score at each grid time.
///
/// `predicted_survival(i, t)` is the model's Ŝᵢ(t). Subjects with an event
/// by t contribute Ŝᵢ(t)² / G(Tᵢ⁻); subjects still under observation
/// beyond t contribute (1 − Ŝᵢ(t))² / G(t); those censored by t contribute
/// nothing. G is the Kaplan–Meier estimate of the censoring distribution.
pub fn brier_curve<F>(predicted_survival: F, times: &[f64], events: &[bool], grid: &[f64]) -> Result<BrierCurve>
where
    F: Fn(usize, f64) -> f64,
{
    let n = times.len();
    if events.len() != n {
        return Err(Error::LengthMismatch(format!(
            "{n} times, {} event flags",
            events.len()
        )));
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let max = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for &t in grid {
        if !(0.0..=max).contains(&t) {
            return Err(Error::GridOutOfRange { t, max });
        }
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("Brier grid must be strictly ascending".into()));
    }

    let censored: Vec<bool> = events.iter().map(|e| !e).collect();
    let g = kaplan_meier(times, &censored)?;
    let weight_event: Vec<f64> = times.iter().map(|&t| g.survival_before(t)).collect();

    let mut out = BrierCurve {
        grid: Vec::with_capacity(grid.len()),
        scores: Vec::with_capacity(grid.len()),
        truncated_at: None,
    };
    for &t in grid {
        let g_t = g.survival_at(t);
        let mut total = 0.0;
        let mut zero_weight = g_t <= 0.0;
        for i in 0..n {
            let s = predicted_survival(i, t);
            if times[i] <= t && events[i] {
                if weight_event[i] <= 0.0 {
                    zero_weight = true;
                    break;
                }
                total += s * s / weight_event[i];
            } else if times[i] > t {
                total += (1.0 - s) * (1.0 - s) / g_t;
            }
        }
        if zero_weight {
            out.truncated_at = Some(t);
            break;
        }
        out.grid.push(t);
        out.scores.push(total / n as f64);
    }
    Ok(out)
}
