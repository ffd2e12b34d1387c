use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::km::{kaplan_meier, KmCurve};
use crate::cohort::{Cohort, Endpoint, Participant};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub t: f64,
    /// Kaplan–Meier progression, 1 − Ŝ(t).
    pub observed: f64,
    /// Mean predicted progression probability.
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCalibration<K> {
    pub group: K,
    pub size: usize,
    pub km: KmCurve,
    pub points: Vec<CalibrationPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable<K> {
    pub groups: Vec<GroupCalibration<K>>,
    /// Requested groups with no members, skipped.
    pub empty_groups: Vec<K>,
}

/// Observed versus mean predicted progression per group.
///
/// `labels[i]` assigns subject i to a group (`None` leaves it out).
/// `predicted_progression(i, t)` is the model's probability for subject i
/// by time t. Every group in `expected` appears either in `groups` or in
/// `empty_groups`; groups present in `labels` but not in `expected` are
/// reported as well.
pub fn calibration_by_group<K, F>(
    labels: &[Option<K>],
    expected: &[K],
    times: &[f64],
    events: &[bool],
    predicted_progression: F,
    grid: &[f64],
) -> Result<CalibrationTable<K>>
where
    K: Ord + Clone,
    F: Fn(usize, f64) -> f64,
{
    let n = labels.len();
    if times.len() != n || events.len() != n {
        return Err(Error::LengthMismatch(format!(
            "{n} group labels, {} times, {} event flags",
            times.len(),
            events.len()
        )));
    }
    let mut members: BTreeMap<K, Vec<usize>> = expected.iter().map(|k| (k.clone(), Vec::new())).collect();
    for (i, label) in labels.iter().enumerate() {
        if let Some(k) = label {
            members.entry(k.clone()).or_default().push(i);
        }
    }

    let mut table = CalibrationTable {
        groups: Vec::new(),
        empty_groups: Vec::new(),
    };
    for (group, idx) in members {
        if idx.is_empty() {
            table.empty_groups.push(group);
            continue;
        }
        let t_g: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
        let e_g: Vec<bool> = idx.iter().map(|&i| events[i]).collect();
        let km = kaplan_meier(&t_g, &e_g)?;
        let points = grid
            .iter()
            .map(|&t| CalibrationPoint {
                t,
                observed: 1.0 - km.survival_at(t),
                predicted: idx.iter().map(|&i| predicted_progression(i, t)).sum::<f64>() / idx.len() as f64,
            })
            .collect();
        table.groups.push(GroupCalibration {
            group,
            size: idx.len(),
            km,
            points,
        });
    }
    Ok(table)
}

/// [`calibration_by_group`] over a cohort, grouping participants with
/// `group_of` and reading outcomes for `endpoint`.
pub fn calibrate_cohort<K, G, F>(
    cohort: &Cohort,
    endpoint: Endpoint,
    group_of: G,
    expected: &[K],
    predicted_progression: F,
    grid: &[f64],
) -> Result<CalibrationTable<K>>
where
    K: Ord + Clone,
    G: Fn(&Participant) -> Option<K>,
    F: Fn(usize, f64) -> f64,
{
    let labels: Vec<Option<K>> = cohort.participants().iter().map(group_of).collect();
    let (times, events) = cohort.outcomes(endpoint)?;
    calibration_by_group(&labels, expected, &times, &events, predicted_progression, grid)
}
