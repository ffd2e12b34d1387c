//! Participant data model, CSV ingestion, participant-level splitting and
//! feature standardization.

mod csv_io;
mod normalize;
mod split;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{parse_cohort, read_cohort, ColumnMap, FEATURE_DIM};
pub use normalize::{zscore_apply, zscore_fit, Normalization};
pub use split::{split_cohort, CohortSplit, SplitRatios};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drusen {
    NoneSmall,
    Medium,
    Large,
}

impl Drusen {
    pub const ALL: [Drusen; 3] = [Drusen::NoneSmall, Drusen::Medium, Drusen::Large];

    /// Ordinal code 0/1/2.
    pub fn level(self) -> u8 {
        match self {
            Drusen::NoneSmall => 0,
            Drusen::Medium => 1,
            Drusen::Large => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Drusen::NoneSmall => "none_small",
            Drusen::Medium => "medium",
            Drusen::Large => "large",
        }
    }
}

impl FromStr for Drusen {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "none_small" | "nonesmall" | "none" | "small" => Ok(Drusen::NoneSmall),
            "1" | "medium" => Ok(Drusen::Medium),
            "2" | "large" => Ok(Drusen::Large),
            other => Err(format!("unknown drusen grade `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pigment {
    Absent,
    Present,
}

impl Pigment {
    pub const ALL: [Pigment; 2] = [Pigment::Absent, Pigment::Present];

    pub fn level(self) -> u8 {
        match self {
            Pigment::Absent => 0,
            Pigment::Present => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pigment::Absent => "absent",
            Pigment::Present => "present",
        }
    }
}

impl FromStr for Pigment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "absent" | "no" | "false" => Ok(Pigment::Absent),
            "1" | "present" | "yes" | "true" => Ok(Pigment::Present),
            other => Err(format!("unknown pigmentary grade `{other}`")),
        }
    }
}

/// Per-eye grading of the two risk features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EyeGrade {
    pub drusen: Drusen,
    pub pigment: Pigment,
}

impl EyeGrade {
    pub fn new(drusen: Drusen, pigment: Pigment) -> Self {
        EyeGrade { drusen, pigment }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoking {
    Never,
    Former,
    Current,
}

impl Smoking {
    pub fn name(self) -> &'static str {
        match self {
            Smoking::Never => "never",
            Smoking::Former => "former",
            Smoking::Current => "current",
        }
    }
}

impl FromStr for Smoking {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "never" => Ok(Smoking::Never),
            "1" | "former" => Ok(Smoking::Former),
            "2" | "current" => Ok(Smoking::Current),
            other => Err(format!("unknown smoking status `{other}`")),
        }
    }
}

/// CFH rs1061170; C is the risk allele.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cfh {
    TT,
    CT,
    CC,
}

impl Cfh {
    pub fn risk_alleles(self) -> u8 {
        match self {
            Cfh::TT => 0,
            Cfh::CT => 1,
            Cfh::CC => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Cfh::TT => "TT",
            Cfh::CT => "CT",
            Cfh::CC => "CC",
        }
    }
}

impl FromStr for Cfh {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "0" | "TT" => Ok(Cfh::TT),
            "1" | "CT" | "TC" => Ok(Cfh::CT),
            "2" | "CC" => Ok(Cfh::CC),
            other => Err(format!("unknown CFH genotype `{other}`")),
        }
    }
}

/// ARMS2 rs10490924; T is the risk allele.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arms2 {
    GG,
    GT,
    TT,
}

impl Arms2 {
    pub fn risk_alleles(self) -> u8 {
        match self {
            Arms2::GG => 0,
            Arms2::GT => 1,
            Arms2::TT => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arms2::GG => "GG",
            Arms2::GT => "GT",
            Arms2::TT => "TT",
        }
    }
}

impl FromStr for Arms2 {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "0" | "GG" => Ok(Arms2::GG),
            "1" | "GT" | "TG" => Ok(Arms2::GT),
            "2" | "TT" => Ok(Arms2::TT),
            other => Err(format!("unknown ARMS2 genotype `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Genotype {
    #[serde(default)]
    pub cfh: Option<Cfh>,
    #[serde(default)]
    pub arms2: Option<Arms2>,
    /// Weighted genetic risk score.
    #[serde(default)]
    pub grs: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    LateAmd,
    Ga,
    Nv,
}

impl Endpoint {
    pub const ALL: [Endpoint; 3] = [Endpoint::LateAmd, Endpoint::Ga, Endpoint::Nv];

    pub fn as_str(self) -> &'static str {
        match self {
            Endpoint::LateAmd => "late_amd",
            Endpoint::Ga => "ga",
            Endpoint::Nv => "nv",
        }
    }

    /// Suffix used by the CSV outcome columns (`time_lateamd`, ...).
    pub fn column_suffix(self) -> &'static str {
        match self {
            Endpoint::LateAmd => "lateamd",
            Endpoint::Ga => "ga",
            Endpoint::Nv => "nv",
        }
    }

    /// The competing subtype whose occurrence censors this endpoint.
    pub fn competitor(self) -> Option<Endpoint> {
        match self {
            Endpoint::LateAmd => None,
            Endpoint::Ga => Some(Endpoint::Nv),
            Endpoint::Nv => Some(Endpoint::Ga),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "late_amd" | "lateamd" => Ok(Endpoint::LateAmd),
            "ga" => Ok(Endpoint::Ga),
            "nv" => Ok(Endpoint::Nv),
            other => Err(format!("unknown endpoint `{other}`")),
        }
    }
}

/// Time to event (years from baseline) or to censoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub time_years: f64,
    pub event: bool,
}

impl Outcome {
    pub fn new(time_years: f64, event: bool) -> Self {
        Outcome { time_years, event }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Participant {
    pub id: String,
    pub age: f64,
    pub smoking: Smoking,
    pub genotype: Genotype,
    pub left_eye: EyeGrade,
    pub right_eye: EyeGrade,
    pub deep_features: Option<Vec<f64>>,
    pub outcomes: BTreeMap<Endpoint, Outcome>,
}

impl Participant {
    /// Outcome for `endpoint` as used for model fitting.
    ///
    /// GA and NV are modeled separately; the occurrence of the other
    /// subtype censors the endpoint at that time.
    pub fn outcome(&self, endpoint: Endpoint) -> Result<Outcome> {
        let own = *self.outcomes.get(&endpoint).ok_or_else(|| Error::MissingOutcome {
            id: self.id.clone(),
            endpoint,
        })?;
        let competing = endpoint
            .competitor()
            .and_then(|c| self.outcomes.get(&c))
            .filter(|o| o.event);
        Ok(match competing {
            Some(c) if c.time_years < own.time_years => Outcome::new(c.time_years, false),
            _ => own,
        })
    }
}

/// An ordered, validated collection of participants.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    participants: Vec<Participant>,
    pub schema_version: String,
}

impl Cohort {
    /// Builds a cohort, checking id uniqueness and that every participant
    /// shares the same deep-feature and endpoint pattern.
    pub fn new(participants: Vec<Participant>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(participants.len());
        for (row, p) in participants.iter().enumerate() {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: p.id.clone(),
                    row: row + 1,
                });
            }
        }
        if let Some(first) = participants.first() {
            let dim = first.deep_features.as_ref().map(Vec::len);
            let endpoints: Vec<_> = first.outcomes.keys().copied().collect();
            for p in &participants[1..] {
                let d = p.deep_features.as_ref().map(Vec::len);
                if d != dim {
                    return Err(Error::InvalidInput(format!(
                        "participant `{}` deep-feature pattern differs from the rest of the cohort",
                        p.id
                    )));
                }
                if !p.outcomes.keys().copied().eq(endpoints.iter().copied()) {
                    return Err(Error::InvalidInput(format!(
                        "participant `{}` endpoint set differs from the rest of the cohort",
                        p.id
                    )));
                }
            }
        }
        Ok(Cohort {
            participants,
            schema_version: SCHEMA_VERSION.to_string(),
        })
    }

    pub fn participants(&self) -> &[Participant] {
        &self.participants
    }

    pub fn into_participants(self) -> Vec<Participant> {
        self.participants
    }

    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.participants
            .first()
            .and_then(|p| p.deep_features.as_ref().map(Vec::len))
    }

    pub fn endpoints(&self) -> Vec<Endpoint> {
        self.participants
            .first()
            .map(|p| p.outcomes.keys().copied().collect())
            .unwrap_or_default()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.participants.iter().map(|p| p.id.as_str())
    }

    /// Times and event flags for `endpoint`, in cohort order.
    pub fn outcomes(&self, endpoint: Endpoint) -> Result<(Vec<f64>, Vec<bool>)> {
        let mut times = Vec::with_capacity(self.len());
        let mut events = Vec::with_capacity(self.len());
        for p in &self.participants {
            let o = p.outcome(endpoint)?;
            times.push(o.time_years);
            events.push(o.event);
        }
        Ok((times, events))
    }

    /// Sub-cohort made of the participants at `indices` (duplicates allowed
    /// only if ids stay unique, so callers pass a permutation subset).
    pub fn subset(&self, indices: &[usize]) -> Result<Cohort> {
        Cohort::new(indices.iter().map(|&i| self.participants[i].clone()).collect())
    }
}
