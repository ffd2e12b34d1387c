use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resample attempts before giving up on a degenerate replicate.
pub const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub point: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub replicates: Vec<f64>,
    /// Resamples redrawn because the metric was undefined on them.
    pub redraws: usize,
}

/// Generator for resample `index`: one ChaCha stream per resample, so
/// results do not depend on scheduling or thread count.
pub fn resample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws `n` indices with replacement.
pub fn resample_indices(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Sample quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap interval for `metric` over `n` subjects.
///
/// `metric` receives row indices (with repeats) and returns `None` when
/// undefined on that sample; such resamples are redrawn from the same
/// stream up to [`MAX_REDRAWS`] times.
pub fn bootstrap_ci<F>(n: usize, resamples: usize, seed: u64, metric: F) -> Result<BootstrapCi>
where
    F: Fn(&[usize]) -> Option<f64> + Sync,
{
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if resamples < 2 {
        return Err(Error::InvalidConfig("bootstrap needs at least two resamples".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    let point = metric(&all).ok_or_else(|| Error::InvalidInput("metric undefined on the full sample".into()))?;

    let draws: Vec<(f64, usize)> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = resample_rng(seed, b);
            for attempt in 0..=MAX_REDRAWS {
                let idx = resample_indices(&mut rng, n);
                if let Some(v) = metric(&idx) {
                    return Ok((v, attempt));
                }
            }
            Err(Error::DegenerateResample {
                resample: b,
                attempts: MAX_REDRAWS + 1,
            })
        })
        .collect::<Result<_>>()?;

    let redraws = draws.iter().map(|d| d.1).sum();
    let replicates: Vec<f64> = draws.into_iter().map(|d| d.0).collect();
    let mut sorted = replicates.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BootstrapCi {
        point,
        lo95: quantile_sorted(&sorted, 0.025),
        hi95: quantile_sorted(&sorted, 0.975),
        replicates,
        redraws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolated_quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 0.5), 3.0);
        assert_eq!(quantile_sorted(&s, 0.625), 3.5);
        assert_eq!(quantile_sorted(&s, 1.0), 5.0);
    }

    #[test]
    fn bounded_mean() {
        let x = [1.0, 2.0, 3.0];
        let mean = |idx: &[usize]| Some(idx.iter().map(|&i| x[i]).sum::<f64>() / idx.len() as f64);
        let r = bootstrap_ci(3, 200, 7, mean).unwrap();
        assert_eq!(r.point, 2.0);
        assert!(1.0 <= r.lo95 && r.hi95 <= 3.0);
        let flat = bootstrap_ci(5, 200, 7, |_: &[usize]| Some(0.4)).unwrap();
        assert_eq!(flat.hi95 - flat.lo95, 0.0);
    }

    #[test]
    fn deterministic_for_seed() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let mean = |idx: &[usize]| Some(idx.iter().map(|&i| x[i]).sum::<f64>() / idx.len() as f64);
        let a = bootstrap_ci(x.len(), 64, 9, mean).unwrap();
        let b = bootstrap_ci(x.len(), 64, 9, mean).unwrap();
        assert_eq!(a, b);
        assert!(a.lo95 <= a.point && a.point <= a.hi95);
        let c = bootstrap_ci(x.len(), 64, 10, mean).unwrap();
        assert_ne!(a.replicates, c.replicates);
    }

    #[test]
    fn degenerate_resamples_are_redrawn() {
        // Undefined when subject 0 is absent.
        let metric = |idx: &[usize]| idx.contains(&0).then_some(1.0);
        let r = bootstrap_ci(3, 50, 1, metric).unwrap();
        assert!(r.redraws > 0);
        let identity: Vec<usize> = (0..20).collect();
        let only_full = |idx: &[usize]| (idx == identity.as_slice()).then_some(0.0);
        assert!(matches!(
            bootstrap_ci(20, 5, 1, only_full),
            Err(Error::DegenerateResample { .. })
        ));
    }
}
