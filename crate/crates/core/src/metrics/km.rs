use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmKnot {
    pub t: f64,
    pub survival: f64,
    pub at_risk: usize,
    pub events: usize,
}

/// Kaplan–Meier estimate, one knot per distinct event time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    pub knots: Vec<KmKnot>,
}

impl KmCurve {
    /// Ŝ(t), right-continuous.
    pub fn survival_at(&self, t: f64) -> f64 {
        let idx = self.knots.partition_point(|k| k.t <= t);
        if idx == 0 {
            1.0
        } else {
            self.knots[idx - 1].survival
        }
    }

    /// Ŝ(t⁻), the left limit.
    pub fn survival_before(&self, t: f64) -> f64 {
        let idx = self.knots.partition_point(|k| k.t < t);
        if idx == 0 {
            1.0
        } else {
            self.knots[idx - 1].survival
        }
    }
}

/// Product-limit estimator; `events[i]` marks an observed event at `times[i]`.
pub fn kaplan_meier(times: &[f64], events: &[bool]) -> Result<KmCurve> {
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
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFiniteInput("times must be finite".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));

    let mut knots = Vec::new();
    let mut survival = 1.0;
    let mut at_risk = n;
    let mut i = 0;
    while i < n {
        let t = times[order[i]];
        let mut d = 0;
        let mut leaving = 0;
        while i < n && times[order[i]] == t {
            d += usize::from(events[order[i]]);
            leaving += 1;
            i += 1;
        }
        if d > 0 {
            survival *= (at_risk - d) as f64 / at_risk as f64;
            knots.push(KmKnot {
                t,
                survival,
                at_risk,
                events: d,
            });
        }
        at_risk -= leaving;
    }
    Ok(KmCurve { knots })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn uncensored_is_empirical() {
        let km = kaplan_meier(&[1.0, 2.0, 3.0, 4.0], &[true; 4]).unwrap();
        let s: Vec<f64> = km.knots.iter().map(|k| k.survival).collect();
        assert_eq!(s, vec![0.75, 0.5, 0.25, 0.0]);
        assert_eq!(km.survival_at(2.5), 0.5);
        assert_eq!(km.survival_before(2.0), 0.75);
    }

    #[test]
    fn censoring_between_events() {
        // Events at 1 and 3, censoring at 2: S = 3/4, then 3/4 · 1/2.
        let km = kaplan_meier(&[1.0, 2.0, 3.0, 4.0], &[true, false, true, false]).unwrap();
        assert_eq!(km.knots.len(), 2);
        assert_relative_eq!(km.survival_at(3.0), 0.375, epsilon = 1e-15);
        assert_eq!(km.knots[1].at_risk, 2);
    }

    #[test]
    fn all_censored() {
        let km = kaplan_meier(&[1.0, 2.0], &[false, false]).unwrap();
        assert!(km.knots.is_empty());
        assert_eq!(km.survival_at(5.0), 1.0);
        assert!(matches!(kaplan_meier(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn censored_at_event_time_stays_in_risk_set() {
        let km = kaplan_meier(&[1.0, 1.0, 2.0], &[true, false, true]).unwrap();
        assert_relative_eq!(km.knots[0].survival, 2.0 / 3.0, epsilon = 1e-15);
    }
}
