//! End-to-end workflow on in-memory cohorts: split, standardize, select
//! features, fit, and evaluate on held-out participants.

use serde::{Deserialize, Serialize};

use crate::cohort::{
    split_cohort, zscore_apply, zscore_fit, Cohort, CohortSplit, Endpoint, Normalization, SplitRatios,
};
use crate::covariates::{CovariateSpec, GenotypeMode};
use crate::cox::{breslow_baseline, cox_fit, progression_probability, wald_report, CoxOptions, TieMethod, WaldRow};
use crate::error::{Error, Result};
use crate::featsel::{
    choose_lambda_by_concordance, feature_matrix, lasso_cox_path, select_features, LambdaChoice, LassoOptions,
    RegularizationPath,
};
use crate::metrics::{bootstrap_ci, brier_curve, calibrate_cohort, concordance, BrierCurve, CalibrationTable};
use crate::model::{cohort_fingerprint, FeatureMode, TrainedModel};
use crate::predict::Horizon;
use crate::report::{CstatRow, HorizonLabel};
use crate::scales::{sss_score, RiskTable};

/// Number of deep features kept for the final model.
pub const DEFAULT_TOP_K: usize = 16;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub feature_mode: FeatureMode,
    pub genotype_mode: GenotypeMode,
    pub tie_method: TieMethod,
    pub seed: u64,
    pub split: SplitRatios,
    /// Fixed λ for feature selection instead of the development-set choice.
    pub lambda: Option<f64>,
    pub top_k: usize,
    pub lasso: LassoOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            feature_mode: FeatureMode::DeepFeatures,
            genotype_mode: GenotypeMode::None,
            tie_method: TieMethod::Efron,
            seed: 42,
            split: SplitRatios::default(),
            lambda: None,
            top_k: DEFAULT_TOP_K,
            lasso: LassoOptions::default(),
        }
    }
}

/// Feature-selection trace of a deep-feature fit.
#[derive(Debug, Clone)]
pub struct Selection {
    pub path: RegularizationPath,
    pub lambda_index: usize,
    /// Chosen feature indices, strongest first.
    pub features: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub wald: Vec<WaldRow>,
    pub selection: Option<Selection>,
    pub split_sizes: (usize, usize, usize),
}

/// Splits `cohort` by participant and fits a model for `endpoint` on the
/// training part. Deep-feature models standardize on the training part,
/// run the lasso path, choose λ by development-set concordance (unless
/// fixed) and keep the top-k features.
pub fn train(cohort: &Cohort, endpoint: Endpoint, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if !cfg.feature_mode.is_trainable() {
        return Err(Error::InvalidConfig(
            "the severity scale is a fixed score with a published risk table; there is nothing to train. \
             Evaluate it directly with `--features sss`"
                .into(),
        ));
    }
    let split = split_cohort(cohort, cfg.split, cfg.seed)?;
    let (spec, normalization, selection) = match cfg.feature_mode {
        FeatureMode::DeepFeatures => {
            let (spec, norm, sel) = select_deep_features(&split, endpoint, cfg)?;
            (spec, norm, Some(sel))
        }
        _ => (
            CovariateSpec::grading(cfg.genotype_mode),
            Normalization::default(),
            None,
        ),
    };
    let opts = CoxOptions {
        tie_method: cfg.tie_method,
        ..CoxOptions::default()
    };
    let cox = cox_fit(&split.train, &spec, normalization, endpoint, &opts)?;
    let baseline = breslow_baseline(&cox, &split.train, endpoint)?;
    let wald = wald_report(&cox)?;
    Ok(TrainOutcome {
        model: TrainedModel {
            cox,
            baseline,
            feature_mode: cfg.feature_mode,
            genotype_mode: cfg.genotype_mode,
            train_fingerprint: cohort_fingerprint(&split.train),
        },
        wald,
        selection,
        split_sizes: (split.train.len(), split.dev.len(), split.test.len()),
    })
}

fn select_deep_features(
    split: &CohortSplit,
    endpoint: Endpoint,
    cfg: &TrainConfig,
) -> Result<(CovariateSpec, Normalization, Selection)> {
    let norm = zscore_fit(&split.train)?;
    let train_std = zscore_apply(&norm, &split.train)?;
    let lasso = LassoOptions {
        tie_method: cfg.tie_method,
        ..cfg.lasso
    };
    let path = lasso_cox_path(&train_std, endpoint, &lasso)?;
    let lambda_index = match cfg.lambda {
        Some(v) => LambdaChoice::Value(v).resolve(&path)?,
        None if split.dev.is_empty() => LambdaChoice::Last.resolve(&path)?,
        None => {
            let dev_std = zscore_apply(&norm, &split.dev)?;
            let (times, events) = dev_std.outcomes(endpoint)?;
            choose_lambda_by_concordance(&path, &feature_matrix(&dev_std)?, &times, &events)?
        }
    };
    let features = select_features(&path, LambdaChoice::Index(lambda_index), cfg.top_k)?;
    let spec = CovariateSpec::deep_features(&features, cfg.genotype_mode);
    Ok((
        spec,
        norm,
        Selection {
            path,
            lambda_index,
            features,
        },
    ))
}

/// What produces risks during evaluation.
#[derive(Debug, Clone, Copy)]
pub enum Predictor<'a> {
    Model(&'a TrainedModel),
    /// Severity score as the risk ranking; its five-year risk spread over
    /// time at a constant hazard for absolute predictions.
    Sss {
        table: &'a RiskTable,
        bilateral_medium: bool,
    },
}

impl Predictor<'_> {
    pub fn label(&self) -> String {
        match self {
            Predictor::Model(m) if m.genotype_mode == GenotypeMode::None => m.feature_mode.to_string(),
            Predictor::Model(m) => format!("{}+{}", m.feature_mode, genotype_label(m.genotype_mode)),
            Predictor::Sss { .. } => FeatureMode::Sss.to_string(),
        }
    }

    /// Per-participant (risk score, scale parameter) in cohort order:
    /// the linear predictor for a model, the score and its five-year risk
    /// for the scale.
    fn score(&self, cohort: &Cohort) -> Result<Vec<(f64, f64)>> {
        cohort
            .participants()
            .iter()
            .map(|p| match self {
                Predictor::Model(m) => Ok((m.linear_predictor(p).map_err(mismatch)?, 0.0)),
                Predictor::Sss {
                    table,
                    bilateral_medium,
                } => {
                    let s = sss_score(p.left_eye, p.right_eye, *bilateral_medium);
                    Ok((f64::from(s), table.risks()[s as usize]))
                }
            })
            .collect()
    }

    fn progression(&self, score: (f64, f64), t: f64) -> Result<f64> {
        match self {
            Predictor::Model(m) => Ok(progression_probability(&m.baseline, score.0, t)?.probability),
            Predictor::Sss { .. } => Ok(1.0 - (1.0 - score.1).powf(t / 5.0)),
        }
    }
}

fn mismatch(e: Error) -> Error {
    match e {
        Error::ModelDataMismatch(_) => e,
        other => Error::ModelDataMismatch(other.to_string()),
    }
}

fn genotype_label(mode: GenotypeMode) -> &'static str {
    match mode {
        GenotypeMode::None => "none",
        GenotypeMode::Snps => "snps",
        GenotypeMode::Grs => "grs",
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub horizons: Vec<Horizon>,
    pub bootstrap: usize,
    pub seed: u64,
    /// Brier grid; half-year steps over the follow-up when `None`.
    pub brier_grid: Option<Vec<f64>>,
    /// Severity-score rule used to form calibration groups.
    pub bilateral_medium: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            horizons: Horizon::all(),
            bootstrap: 200,
            seed: 42,
            brier_grid: None,
            bilateral_medium: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub endpoint: Endpoint,
    pub model: String,
    pub n: usize,
    pub events: usize,
    pub cstat: Vec<CstatRow>,
    pub brier: BrierCurve,
    pub calibration: CalibrationTable<u8>,
    pub bootstrap_redraws: usize,
}

/// C-statistics with bootstrap intervals at each horizon and without
/// truncation, a Brier curve, and calibration by severity score.
pub fn evaluate(predictor: Predictor<'_>, cohort: &Cohort, endpoint: Endpoint, cfg: &EvalConfig) -> Result<EvalReport> {
    if cohort.is_empty() {
        return Err(Error::EmptyCohort);
    }
    if let Predictor::Model(m) = predictor {
        if m.endpoint() != endpoint {
            return Err(Error::ModelDataMismatch(format!(
                "model predicts `{}`, evaluation asked for `{endpoint}`",
                m.endpoint()
            )));
        }
    }
    let scores = predictor.score(cohort)?;
    let risk: Vec<f64> = scores.iter().map(|s| s.0).collect();
    let (times, events) = cohort.outcomes(endpoint)?;

    let mut columns: Vec<HorizonLabel> = cfg.horizons.iter().map(|h| HorizonLabel::Years(h.years())).collect();
    columns.push(HorizonLabel::All);
    let mut cstat = Vec::with_capacity(columns.len());
    let mut redraws = 0;
    for (k, label) in columns.iter().enumerate() {
        let horizon = label.horizon_years();
        let metric = |idx: &[usize]| {
            let r: Vec<f64> = idx.iter().map(|&i| risk[i]).collect();
            let t: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
            let e: Vec<bool> = idx.iter().map(|&i| events[i]).collect();
            concordance(&r, &t, &e, horizon)
                .ok()
                .filter(|c| !c.is_degenerate())
                .map(|c| c.c)
        };
        let point = concordance(&risk, &times, &events, horizon)?;
        let row = if point.is_degenerate() {
            CstatRow {
                horizon: *label,
                c: point.c,
                lo95: f64::NAN,
                hi95: f64::NAN,
            }
        } else {
            // Each column gets its own resampling seed, derived from the run seed.
            let ci = bootstrap_ci(cohort.len(), cfg.bootstrap, cfg.seed.wrapping_add(k as u64), metric)?;
            redraws += ci.redraws;
            CstatRow {
                horizon: *label,
                c: ci.point,
                lo95: ci.lo95,
                hi95: ci.hi95,
            }
        };
        cstat.push(row);
    }

    let max_time = times.iter().copied().fold(0.0, f64::max);
    let grid = match &cfg.brier_grid {
        Some(g) => g.clone(),
        None => (1..)
            .map(|k| 0.5 * k as f64)
            .take_while(|t| *t <= max_time.min(f64::from(crate::predict::MAX_HORIZON)))
            .collect(),
    };
    let survival = |i: usize, t: f64| 1.0 - predictor.progression(scores[i], t).unwrap_or(f64::NAN);
    let brier = brier_curve(survival, &times, &events, &grid)?;

    let grid_cal: Vec<f64> = cfg.horizons.iter().map(|h| f64::from(h.years())).collect();
    let calibration = calibrate_cohort(
        cohort,
        endpoint,
        |p| Some(sss_score(p.left_eye, p.right_eye, cfg.bilateral_medium)),
        &[0, 1, 2, 3, 4],
        |i, t| predictor.progression(scores[i], t).unwrap_or(f64::NAN),
        &grid_cal,
    )?;

    Ok(EvalReport {
        endpoint,
        model: predictor.label(),
        n: cohort.len(),
        events: events.iter().filter(|e| **e).count(),
        cstat,
        brier,
        calibration,
        bootstrap_redraws: redraws,
    })
}

/// The held-out test part of `cohort` under the split used for training,
/// and whether its training part matches the model's fingerprint.
pub fn test_split(
    cohort: &Cohort,
    ratios: SplitRatios,
    seed: u64,
    model: Option<&TrainedModel>,
) -> Result<(Cohort, Option<bool>)> {
    let split = split_cohort(cohort, ratios, seed)?;
    let matches = model.map(|m| cohort_fingerprint(&split.train) == m.train_fingerprint);
    Ok((split.test, matches))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::AmdDesign;

    #[test]
    fn sss_mode_refuses_training() {
        let s = AmdDesign {
            n: 30,
            with_features: false,
            ..AmdDesign::default()
        }
        .generate(1)
        .unwrap();
        let cfg = TrainConfig {
            feature_mode: FeatureMode::Sss,
            ..TrainConfig::default()
        };
        let err = train(&s.cohort, Endpoint::LateAmd, &cfg).unwrap_err();
        assert!(err.to_string().contains("nothing to train"));
    }

    #[test]
    fn grading_model_round_trip_through_evaluation() {
        let s = AmdDesign {
            n: 300,
            with_features: false,
            ..AmdDesign::default()
        }
        .generate(2)
        .unwrap();
        let cfg = TrainConfig {
            feature_mode: FeatureMode::Calculator,
            genotype_mode: GenotypeMode::Snps,
            ..TrainConfig::default()
        };
        let out = train(&s.cohort, Endpoint::LateAmd, &cfg).unwrap();
        assert_eq!(out.split_sizes, (210, 30, 60));
        assert_eq!(out.model.cox.beta.len(), 9);
        let (test, matches) = test_split(&s.cohort, cfg.split, cfg.seed, Some(&out.model)).unwrap();
        assert_eq!(matches, Some(true));
        let eval_cfg = EvalConfig {
            horizons: vec![Horizon::try_from(5).unwrap()],
            bootstrap: 20,
            ..EvalConfig::default()
        };
        let report = evaluate(Predictor::Model(&out.model), &test, Endpoint::LateAmd, &eval_cfg).unwrap();
        assert_eq!(report.cstat.len(), 2);
        assert!(report.cstat[0].c > 0.6);
        assert!(evaluate(Predictor::Model(&out.model), &test, Endpoint::Ga, &eval_cfg).is_err());
    }
}
