use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Cohort;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.70,
            dev: 0.10,
            test: 0.20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CohortSplit {
    pub train: Cohort,
    pub dev: Cohort,
    pub test: Cohort,
}

/// Participant-level partition: seeded uniform shuffle, then contiguous
/// cuts of sizes ⌊train·n⌋, ⌊dev·n⌋ and the remainder.
pub fn split_cohort(cohort: &Cohort, ratios: SplitRatios, seed: u64) -> Result<CohortSplit> {
    let SplitRatios { train, dev, test } = ratios;
    if [train, dev, test].iter().any(|r| !(0.0..=1.0).contains(r)) || (train + dev + test - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "split ratios ({train}, {dev}, {test}) must be in [0,1] and sum to 1"
        )));
    }
    if cohort.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let n = cohort.len();
    // The small epsilon keeps e.g. 0.7 * 10 from flooring to 6.
    let n_train = ((train * n as f64) + 1e-9).floor() as usize;
    let n_dev = (((dev * n as f64) + 1e-9).floor() as usize).min(n - n_train);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    Ok(CohortSplit {
        train: cohort.subset(&order[..n_train])?,
        dev: cohort.subset(&order[n_train..n_train + n_dev])?,
        test: cohort.subset(&order[n_train + n_dev..])?,
    })
}
