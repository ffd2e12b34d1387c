use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Harrell's C with exact pair counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceResult {
    pub c: f64,
    pub comparable_pairs: u64,
    /// Concordant pairs, tied risks counted as one half.
    pub concordant: f64,
    pub horizon_years: Option<f64>,
}

impl ConcordanceResult {
    /// No comparable pair existed; `c` was set to 0.5.
    pub fn is_degenerate(&self) -> bool {
        self.comparable_pairs == 0
    }

    /// Twice the concordant count, an exact integer.
    pub fn concordant_halves(&self) -> u64 {
        (2.0 * self.concordant).round() as u64
    }
}

/// Administrative truncation: events after `horizon` become censored at it.
pub fn truncate_at_horizon(times: &[f64], events: &[bool], horizon: f64) -> (Vec<f64>, Vec<bool>) {
    times
        .iter()
        .zip(events)
        .map(|(&t, &e)| if t > horizon { (horizon, false) } else { (t, e) })
        .unzip()
}

struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick { tree: vec![0; n + 1] }
    }

    fn add(&mut self, i: usize) {
        let mut i = i + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Count of inserted ranks < `i`.
    fn prefix(&self, i: usize) -> u64 {
        let mut i = i;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Concordance of `risk` (higher = earlier progression) with observed
/// times and events, optionally truncated at a horizon.
///
/// A pair is comparable when the shorter time is an event and the other
/// subject's time is strictly longer, or equal but censored. Tied risks
/// count one half. With no comparable pair, C is reported as 0.5.
pub fn concordance(
    risk: &[f64],
    times: &[f64],
    events: &[bool],
    horizon_years: Option<f64>,
) -> Result<ConcordanceResult> {
    let n = risk.len();
    if times.len() != n || events.len() != n {
        return Err(Error::LengthMismatch(format!(
            "{n} risk scores, {} times, {} event flags",
            times.len(),
            events.len()
        )));
    }
    if risk.iter().chain(times).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("risk scores and times must be finite".into()));
    }
    let (times, events) = match horizon_years {
        Some(h) => truncate_at_horizon(times, events, h),
        None => (times.to_vec(), events.to_vec()),
    };

    let mut levels: Vec<f64> = risk.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let rank: Vec<usize> = risk.iter().map(|r| levels.partition_point(|l| l < r)).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[b].total_cmp(&times[a]));

    let mut tree = Fenwick::new(levels.len());
    let mut inserted = 0u64;
    let mut comparable = 0u64;
    let mut halves = 0u64;
    let mut start = 0;
    while start < n {
        let t = times[order[start]];
        let mut end = start;
        while end < n && times[order[end]] == t {
            end += 1;
        }
        let group = &order[start..end];
        // Censored at the same time count as surviving longer.
        for &i in group.iter().filter(|&&i| !events[i]) {
            tree.add(rank[i]);
            inserted += 1;
        }
        for &i in group.iter().filter(|&&i| events[i]) {
            let lower = tree.prefix(rank[i]);
            let tied = tree.prefix(rank[i] + 1) - lower;
            comparable += inserted;
            halves += 2 * lower + tied;
        }
        for &i in group.iter().filter(|&&i| events[i]) {
            tree.add(rank[i]);
            inserted += 1;
        }
        start = end;
    }

    let concordant = halves as f64 / 2.0;
    Ok(ConcordanceResult {
        c: if comparable == 0 {
            0.5
        } else {
            concordant / comparable as f64
        },
        comparable_pairs: comparable,
        concordant,
        horizon_years,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn perfect_ordering() {
        let r = concordance(&[3.0, 2.0, 1.0], &[1.0, 2.0, 3.0], &[true; 3], None).unwrap();
        assert_eq!(r.c, 1.0);
        assert_eq!(r.comparable_pairs, 3);
    }

    #[test]
    fn reversed_ordering() {
        let r = concordance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &[true; 3], None).unwrap();
        assert_eq!(r.c, 0.0);
    }

    #[test]
    fn all_tied_risks() {
        let r = concordance(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0], &[true, false, true, false], None).unwrap();
        assert_eq!(r.c, 0.5);
        assert_eq!(r.comparable_pairs, 4);
    }

    #[test]
    fn tied_times() {
        // Two events at t=1 are not comparable with each other; the
        // censored subject at t=1 is comparable with both.
        let r = concordance(&[2.0, 1.0, 0.0], &[1.0, 1.0, 1.0], &[true, true, false], None).unwrap();
        assert_eq!(r.comparable_pairs, 2);
        assert_eq!(r.c, 1.0);
    }

    #[test]
    fn no_comparable_pairs() {
        let r = concordance(&[1.0, 2.0], &[1.0, 2.0], &[false, false], None).unwrap();
        assert!(r.is_degenerate());
        assert_eq!(r.c, 0.5);
    }

    #[test]
    fn horizon_censors_late_events() {
        let r = concordance(&[3.0, 2.0, 1.0], &[1.0, 6.0, 7.0], &[true, true, true], Some(5.0)).unwrap();
        // Only the t=1 event remains; it is compared with both others.
        assert_eq!(r.comparable_pairs, 2);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            concordance(&[1.0], &[1.0, 2.0], &[true, true], None),
            Err(Error::LengthMismatch(_))
        ));
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<bool>)> {
        (2usize..60).prop_flat_map(|n| {
            (
                prop::collection::vec(-1000.0f64..1000.0, n),
                prop::collection::vec(0.1f64..20.0, n),
                prop::collection::vec(any::<bool>(), n),
            )
        })
    }

    proptest! {
        #[test]
        fn complement_without_ties((risk, times, events) in instance()) {
            let a = concordance(&risk, &times, &events, None).unwrap();
            let neg: Vec<f64> = risk.iter().map(|r| -r).collect();
            let b = concordance(&neg, &times, &events, None).unwrap();
            prop_assume!(a.comparable_pairs > 0);
            prop_assert!((a.c + b.c - 1.0).abs() < 1e-12);
        }

        #[test]
        fn invariant_to_increasing_transform((risk, times, events) in instance()) {
            let a = concordance(&risk, &times, &events, None).unwrap();
            let t: Vec<f64> = risk.iter().map(|r| (r / 100.0).exp() * 3.0 + 1.0).collect();
            let b = concordance(&t, &times, &events, None).unwrap();
            prop_assert_eq!(a.comparable_pairs, b.comparable_pairs);
            prop_assert_eq!(a.concordant_halves(), b.concordant_halves());
        }

        #[test]
        fn long_horizon_matches_unrestricted((risk, times, events) in instance()) {
            let max = times.iter().copied().fold(0.0, f64::max);
            let a = concordance(&risk, &times, &events, None).unwrap();
            let b = concordance(&risk, &times, &events, Some(max)).unwrap();
            prop_assert_eq!(a.comparable_pairs, b.comparable_pairs);
            prop_assert_eq!(a.c, b.c);
        }
    }
}
