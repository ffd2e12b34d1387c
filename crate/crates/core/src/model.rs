//! Trained models and their JSON file format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cohort::{Cohort, Endpoint, Normalization};
use crate::covariates::{CovariateSource, CovariateSpec, GenotypeMode};
use crate::cox::{progression_probability, BaselineKnot, BaselineSurvival, CoxModel, Prediction, TieMethod};
use crate::error::{Error, Result};

pub const MODEL_SCHEMA_VERSION: &str = "1";

/// What a model reads from each subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Selected image-derived features plus demographics.
    DeepFeatures,
    /// Per-eye drusen and pigment grades from an automated grader.
    DlGrading,
    /// The same grades as entered into a clinical calculator.
    Calculator,
    /// The fixed severity scale; nothing to train.
    Sss,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::DeepFeatures => "deep_features",
            FeatureMode::DlGrading => "dl_grading",
            FeatureMode::Calculator => "calculator",
            FeatureMode::Sss => "sss",
        }
    }

    pub fn is_trainable(self) -> bool {
        self != FeatureMode::Sss
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "deep" | "deep_features" => Ok(FeatureMode::DeepFeatures),
            "grading" | "dl_grading" => Ok(FeatureMode::DlGrading),
            "calculator" => Ok(FeatureMode::Calculator),
            "sss" => Ok(FeatureMode::Sss),
            other => Err(format!("unknown feature mode `{other}`")),
        }
    }
}

/// SHA-256 of the canonical CSV form of a cohort.
pub fn cohort_fingerprint(cohort: &Cohort) -> String {
    hex::encode(Sha256::digest(cohort.to_csv().as_bytes()))
}

/// A Cox model with its baseline survival: everything needed to predict.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub cox: CoxModel,
    pub baseline: BaselineSurvival,
    pub feature_mode: FeatureMode,
    pub genotype_mode: GenotypeMode,
    pub train_fingerprint: String,
}

impl TrainedModel {
    pub fn endpoint(&self) -> Endpoint {
        self.cox.endpoint
    }

    pub fn linear_predictor<S: CovariateSource + ?Sized>(&self, subject: &S) -> Result<f64> {
        self.cox.linear_predictor_for(subject)
    }

    /// Probability of progression by `horizon_years`.
    pub fn predict<S: CovariateSource + ?Sized>(&self, subject: &S, horizon_years: f64) -> Result<Prediction> {
        progression_probability(&self.baseline, self.linear_predictor(subject)?, horizon_years)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelDocument::from(self)).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: ModelDocument = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::InvalidInput(format!("model file: {} at `{}`", e.inner(), e.path())))?;
        doc.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    schema_version: String,
    endpoint: Endpoint,
    tie_method: TieMethod,
    feature_mode: FeatureMode,
    genotype_mode: GenotypeMode,
    covariate_names: Vec<String>,
    beta: Vec<f64>,
    normalization: Normalization,
    baseline: BaselineDocument,
    diagnostics: Diagnostics,
    info_inverse: Vec<Vec<f64>>,
    train_fingerprint: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaselineDocument {
    t: Vec<f64>,
    s0: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Diagnostics {
    iterations: usize,
    gradient_norm: f64,
    converged: bool,
    loglik: f64,
}

impl From<&TrainedModel> for ModelDocument {
    fn from(m: &TrainedModel) -> Self {
        let p = m.cox.beta.len();
        ModelDocument {
            schema_version: MODEL_SCHEMA_VERSION.into(),
            endpoint: m.cox.endpoint,
            tie_method: m.cox.tie_method,
            feature_mode: m.feature_mode,
            genotype_mode: m.genotype_mode,
            covariate_names: m.cox.covariate_names(),
            beta: m.cox.beta.clone(),
            normalization: m.cox.normalization.clone(),
            baseline: BaselineDocument {
                t: m.baseline.knots.iter().map(|k| k.t).collect(),
                s0: m.baseline.knots.iter().map(|k| k.s0).collect(),
            },
            diagnostics: Diagnostics {
                iterations: m.cox.iterations,
                gradient_norm: m.cox.final_gradient_norm,
                converged: m.cox.converged,
                loglik: m.cox.loglik,
            },
            info_inverse: (0..p)
                .map(|i| (0..p).map(|j| m.cox.info_inverse[(i, j)]).collect())
                .collect(),
            train_fingerprint: m.train_fingerprint.clone(),
        }
    }
}

impl TryFrom<ModelDocument> for TrainedModel {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        if doc.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "model schema version `{}` is not supported (expected `{MODEL_SCHEMA_VERSION}`)",
                doc.schema_version
            )));
        }
        let covariates = CovariateSpec::from_names(&doc.covariate_names)?;
        let p = covariates.len();
        if doc.beta.len() != p {
            return Err(Error::InvalidInput(format!(
                "model has {} covariate names but {} coefficients",
                p,
                doc.beta.len()
            )));
        }
        if doc.info_inverse.len() != p || doc.info_inverse.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidInput(format!("info_inverse must be {p} × {p}")));
        }
        let norm = &doc.normalization;
        if norm.sd.len() != norm.dim() || norm.constant.len() != norm.dim() {
            return Err(Error::InvalidInput("normalization vectors differ in length".into()));
        }
        if covariates.uses_features() && norm.is_empty() {
            return Err(Error::InvalidInput("feature covariates require a normalization".into()));
        }
        if doc.baseline.t.len() != doc.baseline.s0.len() {
            return Err(Error::InvalidInput("baseline t and s0 differ in length".into()));
        }
        let knots = doc
            .baseline
            .t
            .iter()
            .zip(&doc.baseline.s0)
            .map(|(&t, &s0)| BaselineKnot { t, s0 })
            .collect();
        let info_inverse = DMatrix::from_fn(p, p, |i, j| doc.info_inverse[i][j]);
        Ok(TrainedModel {
            cox: CoxModel {
                endpoint: doc.endpoint,
                covariates,
                beta: doc.beta,
                tie_method: doc.tie_method,
                normalization: doc.normalization,
                info_inverse,
                converged: doc.diagnostics.converged,
                iterations: doc.diagnostics.iterations,
                final_gradient_norm: doc.diagnostics.gradient_norm,
                loglik: doc.diagnostics.loglik,
            },
            baseline: BaselineSurvival::from_knots(knots)?,
            feature_mode: doc.feature_mode,
            genotype_mode: doc.genotype_mode,
            train_fingerprint: doc.train_fingerprint,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> TrainedModel {
        TrainedModel {
            cox: CoxModel {
                endpoint: Endpoint::Ga,
                covariates: CovariateSpec::demographics(GenotypeMode::None),
                beta: vec![0.048790164169432, 0.1, -1.0 / 3.0],
                tie_method: TieMethod::Efron,
                normalization: Normalization::default(),
                info_inverse: DMatrix::from_fn(3, 3, |i, j| if i == j { 0.01 * (i + 1) as f64 } else { 1e-17 }),
                converged: true,
                iterations: 6,
                final_gradient_norm: 3.2e-12,
                loglik: -1234.5678901234567,
            },
            baseline: BaselineSurvival::from_knots(vec![
                BaselineKnot { t: 0.5, s0: 0.999 },
                BaselineKnot {
                    t: 1.0,
                    s0: 0.9876543210987654,
                },
            ])
            .unwrap(),
            feature_mode: FeatureMode::Calculator,
            genotype_mode: GenotypeMode::None,
            train_fingerprint: "ab".repeat(32),
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = model();
        let back = TrainedModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn field_layout() {
        let v: serde_json::Value = serde_json::from_str(&model().to_json()).unwrap();
        for key in [
            "schema_version",
            "endpoint",
            "tie_method",
            "covariate_names",
            "beta",
            "normalization",
            "baseline",
            "diagnostics",
            "train_fingerprint",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["endpoint"], "ga");
        assert_eq!(v["tie_method"], "efron");
        assert_eq!(v["feature_mode"], "calculator");
        assert!(v["normalization"].get("constant_flags").is_some());
        assert_eq!(v["baseline"]["t"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn rejects_inconsistent_documents() {
        let text = model().to_json();
        let short_beta = text.replace("-0.3333333333333333", "-0.3333333333333333, 1.0");
        assert!(TrainedModel::from_json(&short_beta).is_err());
        let bad_version = text.replace("\"schema_version\": \"1\"", "\"schema_version\": \"9\"");
        assert!(TrainedModel::from_json(&bad_version).is_err());
        let err = TrainedModel::from_json(&text.replace("\"ga\"", "\"xx\"")).unwrap_err();
        assert!(err.to_string().contains("endpoint"), "{err}");
    }

    #[test]
    fn feature_mode_names() {
        assert_eq!("deep".parse::<FeatureMode>().unwrap(), FeatureMode::DeepFeatures);
        assert_eq!("grading".parse::<FeatureMode>().unwrap(), FeatureMode::DlGrading);
        assert_eq!("dl_grading".parse::<FeatureMode>().unwrap(), FeatureMode::DlGrading);
        assert!(!FeatureMode::Sss.is_trainable());
    }
}
