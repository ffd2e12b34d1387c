//! The Simplified Severity Scale: a 0–4 person-level score from drusen size
//! and pigmentary abnormalities in both eyes, with a five-year risk lookup.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cohort::{Drusen, EyeGrade, Normalization, Pigment};
use crate::covariates::{CovariateSource, CovariateSpec, GenotypeMode};
use crate::error::{Error, Result};

pub const MAX_SCORE: u8 = 4;

/// Person-level score.
///
/// One point per eye with large drusen and one per eye with pigmentary
/// abnormalities. With `bilateral_medium` set, medium drusen in both eyes
/// (and large drusen in neither) add one point. The total is capped at 4.
pub fn sss_score(left: EyeGrade, right: EyeGrade, bilateral_medium: bool) -> u8 {
    let eye = |g: EyeGrade| u8::from(g.drusen == Drusen::Large) + u8::from(g.pigment == Pigment::Present);
    let mut score = eye(left) + eye(right);
    if bilateral_medium && left.drusen == Drusen::Medium && right.drusen == Drusen::Medium {
        score += 1;
    }
    score.min(MAX_SCORE)
}

/// Five-year late-AMD risk by score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskTable {
    risks: [f64; 5],
}

impl Default for RiskTable {
    fn default() -> Self {
        RiskTable {
            risks: [0.005, 0.03, 0.12, 0.25, 0.50],
        }
    }
}

impl RiskTable {
    /// Probabilities in [0, 1], strictly increasing in score.
    pub fn new(risks: [f64; 5]) -> Result<Self> {
        if risks.iter().any(|r| !(0.0..=1.0).contains(r)) || risks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "risk table entries must lie in [0, 1] and increase strictly with score".into(),
            ));
        }
        Ok(RiskTable { risks })
    }

    pub fn risks(&self) -> [f64; 5] {
        self.risks
    }

    /// Parses `{"0":0.005,"1":0.03,...,"4":0.5}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let map: BTreeMap<String, f64> = serde_json::from_str(text)?;
        let mut risks = [f64::NAN; 5];
        for (key, value) in &map {
            let score: usize = key
                .parse()
                .ok()
                .filter(|s| *s <= MAX_SCORE as usize)
                .ok_or_else(|| Error::InvalidConfig(format!("risk table key `{key}` is not a score 0-4")))?;
            risks[score] = *value;
        }
        if let Some(missing) = risks.iter().position(|r| r.is_nan()) {
            return Err(Error::InvalidConfig(format!(
                "risk table has no entry for score {missing}"
            )));
        }
        Self::new(risks)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let map: BTreeMap<String, f64> = self
            .risks
            .iter()
            .enumerate()
            .map(|(k, r)| (k.to_string(), *r))
            .collect();
        serde_json::to_string(&map).expect("string-keyed map serializes")
    }
}

/// Table lookup; `score` must lie in 0..=4.
pub fn sss_risk(score: i64, table: &RiskTable) -> Result<f64> {
    usize::try_from(score)
        .ok()
        .and_then(|s| table.risks.get(s).copied())
        .ok_or(Error::ScoreOutOfRange(score))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SssResult {
    pub score: u8,
    pub five_year_risk: f64,
}

impl SssResult {
    pub fn from_grades(left: EyeGrade, right: EyeGrade, bilateral_medium: bool, table: &RiskTable) -> Self {
        let score = sss_score(left, right, bilateral_medium);
        SssResult {
            score,
            five_year_risk: table.risks[score as usize],
        }
    }
}

/// Calculator-style covariate vector: drusen levels (left, right), pigment
/// (left, right), age, former and current smoking indicators, then CFH and
/// ARMS2 risk-allele counts when `with_genotype`.
pub fn calculator_covariates<S: CovariateSource + ?Sized>(subject: &S, with_genotype: bool) -> Result<Vec<f64>> {
    let genotype = if with_genotype {
        GenotypeMode::Snps
    } else {
        GenotypeMode::None
    };
    CovariateSpec::grading(genotype).row(subject, &Normalization::default())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::cohort::{Arms2, Cfh, Genotype, Smoking};

    fn eye(drusen: Drusen, pigment: Pigment) -> EyeGrade {
        EyeGrade::new(drusen, pigment)
    }

    #[test]
    fn score_examples() {
        let max = eye(Drusen::Large, Pigment::Present);
        assert_eq!(sss_score(max, max, true), 4);
        let none = eye(Drusen::NoneSmall, Pigment::Absent);
        assert_eq!(sss_score(none, none, true), 0);
        let medium = eye(Drusen::Medium, Pigment::Absent);
        assert_eq!(sss_score(medium, medium, true), 1);
        assert_eq!(sss_score(medium, medium, false), 0);
    }

    #[test]
    fn risk_lookup() {
        let t = RiskTable::default();
        assert_eq!(sss_risk(4, &t).unwrap(), 0.50);
        assert_eq!(sss_risk(0, &t).unwrap(), 0.005);
        assert!(matches!(sss_risk(5, &t), Err(Error::ScoreOutOfRange(5))));
        assert!(matches!(sss_risk(-1, &t), Err(Error::ScoreOutOfRange(-1))));
        let custom = RiskTable::new([0.1, 0.2, 0.3, 0.4, 0.9]).unwrap();
        assert_eq!(sss_risk(2, &custom).unwrap(), 0.3);
    }

    #[test]
    fn table_json() {
        let t = RiskTable::from_json(r#"{"0":0.005,"1":0.03,"2":0.12,"3":0.25,"4":0.50}"#).unwrap();
        assert_eq!(t, RiskTable::default());
        assert_eq!(RiskTable::from_json(&t.to_json()).unwrap(), t);
        assert!(RiskTable::from_json(r#"{"0":0.1,"1":0.1,"2":0.2,"3":0.3,"4":0.4}"#).is_err());
        assert!(RiskTable::from_json(r#"{"0":0.1,"1":0.2,"2":0.3,"3":0.4}"#).is_err());
        assert!(RiskTable::from_json(r#"{"0":0.1,"1":0.2,"2":0.3,"3":0.4,"5":0.5}"#).is_err());
    }

    struct Subject {
        genotype: Genotype,
    }

    impl CovariateSource for Subject {
        fn age(&self) -> f64 {
            73.0
        }
        fn smoking(&self) -> Smoking {
            Smoking::Current
        }
        fn genotype(&self) -> Genotype {
            self.genotype
        }
        fn grades(&self) -> Option<(EyeGrade, EyeGrade)> {
            let g = EyeGrade::new(Drusen::Large, Pigment::Present);
            Some((g, g))
        }
        fn deep_features(&self) -> Option<&[f64]> {
            None
        }
    }

    #[test]
    fn calculator_vector() {
        let mut s = Subject {
            genotype: Genotype::default(),
        };
        assert_eq!(
            calculator_covariates(&s, false).unwrap(),
            vec![2.0, 2.0, 1.0, 1.0, 73.0, 0.0, 1.0]
        );
        assert!(matches!(
            calculator_covariates(&s, true),
            Err(Error::MissingGenotype { .. })
        ));
        s.genotype.cfh = Some(Cfh::CC);
        s.genotype.arms2 = Some(Arms2::TT);
        let v = calculator_covariates(&s, true).unwrap();
        assert_eq!(&v[7..], &[2.0, 2.0]);
    }

    fn grade() -> impl Strategy<Value = EyeGrade> {
        (0u8..3, any::<bool>()).prop_map(|(d, p)| {
            let drusen = [Drusen::NoneSmall, Drusen::Medium, Drusen::Large][d as usize];
            EyeGrade::new(drusen, if p { Pigment::Present } else { Pigment::Absent })
        })
    }

    proptest! {
        #[test]
        fn symmetric_under_eye_swap(l in grade(), r in grade(), m in any::<bool>()) {
            prop_assert_eq!(sss_score(l, r, m), sss_score(r, l, m));
        }

        #[test]
        fn monotone_in_each_input(l in grade(), r in grade(), m in any::<bool>()) {
            let base = sss_score(l, r, m);
            let up_drusen = |g: EyeGrade| match g.drusen {
                Drusen::NoneSmall => EyeGrade::new(Drusen::Medium, g.pigment),
                _ => EyeGrade::new(Drusen::Large, g.pigment),
            };
            let up_pigment = |g: EyeGrade| EyeGrade::new(g.drusen, Pigment::Present);
            prop_assert!(sss_score(up_drusen(l), r, m) >= base);
            prop_assert!(sss_score(l, up_drusen(r), m) >= base);
            prop_assert!(sss_score(up_pigment(l), r, m) >= base);
            prop_assert!(sss_score(l, up_pigment(r), m) >= base);
        }
    }
}
