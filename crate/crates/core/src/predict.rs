//! Subject-level risk profiles across endpoints and horizons.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cohort::{Endpoint, EyeGrade, Genotype, Participant, Smoking};
use crate::covariates::CovariateSource;
use crate::error::{Error, Result};
use crate::model::{FeatureMode, TrainedModel};
use crate::scales::{RiskTable, SssResult};

pub const MAX_HORIZON: u32 = 12;

/// Whole-year prediction horizon in 1..=12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Horizon(u32);

impl Horizon {
    pub fn years(self) -> u32 {
        self.0
    }

    /// 1 through 12.
    pub fn all() -> Vec<Horizon> {
        (1..=MAX_HORIZON).map(Horizon).collect()
    }
}

impl TryFrom<u32> for Horizon {
    type Error = String;

    fn try_from(years: u32) -> Result<Self, String> {
        if (1..=MAX_HORIZON).contains(&years) {
            Ok(Horizon(years))
        } else {
            Err(format!("horizon {years} is outside 1..={MAX_HORIZON}"))
        }
    }
}

impl From<Horizon> for u32 {
    fn from(h: Horizon) -> u32 {
        h.0
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parses `1-12`, `1,3,5` or a mix such as `1-3,5`.
pub fn parse_horizons(text: &str) -> Result<Vec<Horizon>> {
    let bad = |part: &str| Error::InvalidConfig(format!("cannot read horizons `{part}`"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (a.trim().parse::<u32>(), b.trim().parse::<u32>()),
            None => (part.parse::<u32>(), part.parse::<u32>()),
        };
        let (lo, hi) = (lo.map_err(|_| bad(part))?, hi.map_err(|_| bad(part))?);
        if lo > hi {
            return Err(bad(part));
        }
        for y in lo..=hi {
            out.push(Horizon::try_from(y).map_err(Error::InvalidConfig)?);
        }
    }
    if out.is_empty() {
        return Err(bad(text));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grades {
    pub left: EyeGrade,
    pub right: EyeGrade,
}

/// One subject entered for prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub age: f64,
    pub smoking: Smoking,
    #[serde(default)]
    pub genotype: Genotype,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grades: Option<Grades>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deep_features: Option<Vec<f64>>,
}

impl From<&Participant> for SubjectInput {
    fn from(p: &Participant) -> Self {
        SubjectInput {
            id: Some(p.id.clone()),
            age: p.age,
            smoking: p.smoking,
            genotype: p.genotype,
            grades: Some(Grades {
                left: p.left_eye,
                right: p.right_eye,
            }),
            deep_features: p.deep_features.clone(),
        }
    }
}

impl CovariateSource for SubjectInput {
    fn age(&self) -> f64 {
        self.age
    }
    fn smoking(&self) -> Smoking {
        self.smoking
    }
    fn genotype(&self) -> Genotype {
        self.genotype
    }
    fn grades(&self) -> Option<(EyeGrade, EyeGrade)> {
        self.grades.map(|g| (g.left, g.right))
    }
    fn deep_features(&self) -> Option<&[f64]> {
        self.deep_features.as_deref()
    }
    fn label(&self) -> Option<&str> {
        self.id.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonRisk {
    pub horizon_years: u32,
    pub progression_probability: f64,
    /// Beyond the last event time seen in training.
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskProfile {
    pub endpoints: BTreeMap<Endpoint, Vec<HorizonRisk>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sss: Option<SssResult>,
}

/// Risk at each horizon under one model.
pub fn risk_curve<S: CovariateSource + ?Sized>(
    model: &TrainedModel,
    subject: &S,
    horizons: &[Horizon],
) -> Result<Vec<HorizonRisk>> {
    let eta = model.linear_predictor(subject)?;
    horizons
        .iter()
        .map(|h| {
            let p = crate::cox::progression_probability(&model.baseline, eta, f64::from(h.years()))?;
            Ok(HorizonRisk {
                horizon_years: h.years(),
                progression_probability: p.probability,
                extrapolated: p.extrapolated,
            })
        })
        .collect()
}

/// At most one model per endpoint, sharing a feature mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    models: BTreeMap<Endpoint, TrainedModel>,
    pub risk_table: RiskTable,
    pub bilateral_medium: bool,
}

impl ModelSet {
    pub fn new(models: Vec<TrainedModel>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for m in models {
            if let Some(first) = map.values().next().map(|f: &TrainedModel| f.feature_mode) {
                if first != m.feature_mode {
                    return Err(Error::InvalidConfig(format!(
                        "model set mixes feature modes `{first}` and `{}`",
                        m.feature_mode
                    )));
                }
            }
            let endpoint = m.endpoint();
            if map.insert(endpoint, m).is_some() {
                return Err(Error::InvalidConfig(format!("two models for endpoint `{endpoint}`")));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidConfig("model set is empty".into()));
        }
        Ok(ModelSet {
            models: map,
            risk_table: RiskTable::default(),
            bilateral_medium: true,
        })
    }

    /// Reads `{"late_amd": "a.json", "ga": "b.json", "nv": "c.json"}`;
    /// relative paths resolve against the manifest's directory.
    pub fn load_manifest(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries: BTreeMap<Endpoint, PathBuf> = serde_json::from_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let models = entries
            .into_iter()
            .map(|(endpoint, file)| {
                let m = TrainedModel::load(&dir.join(file))?;
                if m.endpoint() != endpoint {
                    return Err(Error::InvalidConfig(format!(
                        "manifest lists a `{}` model under `{endpoint}`",
                        m.endpoint()
                    )));
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(models)
    }

    pub fn write_manifest(entries: &BTreeMap<Endpoint, PathBuf>, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(entries)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn get(&self, endpoint: Endpoint) -> Option<&TrainedModel> {
        self.models.get(&endpoint)
    }

    pub fn endpoints(&self) -> Vec<Endpoint> {
        self.models.keys().copied().collect()
    }

    pub fn models(&self) -> impl Iterator<Item = &TrainedModel> {
        self.models.values()
    }

    pub fn feature_mode(&self) -> FeatureMode {
        self.models.values().next().expect("model set is nonempty").feature_mode
    }

    /// Risks for `endpoints` (all loaded when empty) at `horizons`, plus
    /// the severity score when the subject has grades.
    pub fn predict(&self, subject: &SubjectInput, endpoints: &[Endpoint], horizons: &[Horizon]) -> Result<RiskProfile> {
        let wanted = if endpoints.is_empty() {
            self.endpoints()
        } else {
            endpoints.to_vec()
        };
        let mut out = BTreeMap::new();
        for endpoint in wanted {
            let model = self
                .get(endpoint)
                .ok_or_else(|| Error::ModelDataMismatch(format!("no model loaded for endpoint `{endpoint}`")))?;
            out.insert(endpoint, risk_curve(model, subject, horizons)?);
        }
        Ok(RiskProfile {
            endpoints: out,
            sss: subject
                .grades
                .map(|g| SssResult::from_grades(g.left, g.right, self.bilateral_medium, &self.risk_table)),
        })
    }
}
