//! Covariate encoding shared by model fitting and prediction.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cohort::{Cohort, EyeGrade, Genotype, Normalization, Participant, Smoking};
use crate::error::{Error, Result};

/// Anything covariates can be read from: a cohort participant or a single
/// subject entered for prediction.
pub trait CovariateSource {
    fn age(&self) -> f64;
    fn smoking(&self) -> Smoking;
    fn genotype(&self) -> Genotype;
    /// (left, right) grades, when known.
    fn grades(&self) -> Option<(EyeGrade, EyeGrade)>;
    fn deep_features(&self) -> Option<&[f64]>;
    fn label(&self) -> Option<&str> {
        None
    }
}

impl CovariateSource for Participant {
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
        Some((self.left_eye, self.right_eye))
    }
    fn deep_features(&self) -> Option<&[f64]> {
        self.deep_features.as_deref()
    }
    fn label(&self) -> Option<&str> {
        Some(&self.id)
    }
}

/// One model covariate.
///
/// Smoking enters as two indicators against never-smokers; genotypes as
/// risk-allele counts; grades as ordinal levels; age and GRS on their raw
/// scale. `Feature(k)` is deep feature `k` after standardization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Covariate {
    Age,
    SmokingFormer,
    SmokingCurrent,
    Cfh,
    Arms2,
    Grs,
    DrusenLeft,
    DrusenRight,
    PigmentLeft,
    PigmentRight,
    Feature(usize),
}

impl Covariate {
    pub fn name(&self) -> String {
        match self {
            Covariate::Age => "age".into(),
            Covariate::SmokingFormer => "smoking_former".into(),
            Covariate::SmokingCurrent => "smoking_current".into(),
            Covariate::Cfh => "cfh".into(),
            Covariate::Arms2 => "arms2".into(),
            Covariate::Grs => "grs".into(),
            Covariate::DrusenLeft => "drusen_le".into(),
            Covariate::DrusenRight => "drusen_re".into(),
            Covariate::PigmentLeft => "pig_le".into(),
            Covariate::PigmentRight => "pig_re".into(),
            Covariate::Feature(k) => format!("f{k}"),
        }
    }

    pub fn needs_grades(&self) -> bool {
        matches!(
            self,
            Covariate::DrusenLeft | Covariate::DrusenRight | Covariate::PigmentLeft | Covariate::PigmentRight
        )
    }

    /// Reads the covariate value. Deep features are standardized with
    /// `norm` when it is non-empty.
    pub fn value<S: CovariateSource + ?Sized>(&self, s: &S, norm: &Normalization) -> Result<f64> {
        let missing_genotype = |column| Error::MissingGenotype {
            column,
            id: s.label().map(str::to_string),
        };
        Ok(match self {
            Covariate::Age => s.age(),
            Covariate::SmokingFormer => f64::from(u8::from(s.smoking() == Smoking::Former)),
            Covariate::SmokingCurrent => f64::from(u8::from(s.smoking() == Smoking::Current)),
            Covariate::Cfh => f64::from(s.genotype().cfh.ok_or_else(|| missing_genotype("cfh"))?.risk_alleles()),
            Covariate::Arms2 => f64::from(
                s.genotype()
                    .arms2
                    .ok_or_else(|| missing_genotype("arms2"))?
                    .risk_alleles(),
            ),
            Covariate::Grs => s.genotype().grs.ok_or_else(|| missing_genotype("grs"))?,
            Covariate::DrusenLeft => f64::from(s.grades().ok_or(Error::MissingGrades)?.0.drusen.level()),
            Covariate::DrusenRight => f64::from(s.grades().ok_or(Error::MissingGrades)?.1.drusen.level()),
            Covariate::PigmentLeft => f64::from(s.grades().ok_or(Error::MissingGrades)?.0.pigment.level()),
            Covariate::PigmentRight => f64::from(s.grades().ok_or(Error::MissingGrades)?.1.pigment.level()),
            Covariate::Feature(k) => {
                let f = s.deep_features().ok_or(Error::NoFeatures)?;
                let x = *f.get(*k).ok_or(Error::DimensionMismatch {
                    expected: k + 1,
                    found: f.len(),
                })?;
                if norm.is_empty() {
                    x
                } else {
                    if f.len() != norm.dim() {
                        return Err(Error::DimensionMismatch {
                            expected: norm.dim(),
                            found: f.len(),
                        });
                    }
                    norm.apply_one(*k, x)
                }
            }
        })
    }
}

impl fmt::Display for Covariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Covariate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "age" => Covariate::Age,
            "smoking_former" => Covariate::SmokingFormer,
            "smoking_current" => Covariate::SmokingCurrent,
            "cfh" => Covariate::Cfh,
            "arms2" => Covariate::Arms2,
            "grs" => Covariate::Grs,
            "drusen_le" => Covariate::DrusenLeft,
            "drusen_re" => Covariate::DrusenRight,
            "pig_le" => Covariate::PigmentLeft,
            "pig_re" => Covariate::PigmentRight,
            other => match other.strip_prefix('f').and_then(|k| k.parse().ok()) {
                Some(k) => Covariate::Feature(k),
                None => return Err(format!("unknown covariate `{other}`")),
            },
        })
    }
}

impl Serialize for Covariate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Covariate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which genotype covariates a model uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenotypeMode {
    #[default]
    None,
    /// CFH and ARMS2 risk-allele counts.
    Snps,
    /// The genetic risk score alone.
    Grs,
}

impl GenotypeMode {
    pub fn covariates(self) -> &'static [Covariate] {
        match self {
            GenotypeMode::None => &[],
            GenotypeMode::Snps => &[Covariate::Cfh, Covariate::Arms2],
            GenotypeMode::Grs => &[Covariate::Grs],
        }
    }
}

impl FromStr for GenotypeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(GenotypeMode::None),
            "snps" => Ok(GenotypeMode::Snps),
            "grs" => Ok(GenotypeMode::Grs),
            other => Err(format!("unknown genotype mode `{other}`")),
        }
    }
}

/// Ordered covariate list of a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CovariateSpec(pub Vec<Covariate>);

impl CovariateSpec {
    /// Per-eye drusen and pigment levels, age and smoking, then genotype.
    pub fn grading(genotype: GenotypeMode) -> Self {
        let mut v = vec![
            Covariate::DrusenLeft,
            Covariate::DrusenRight,
            Covariate::PigmentLeft,
            Covariate::PigmentRight,
        ];
        v.extend(Self::demographics(genotype).0);
        CovariateSpec(v)
    }

    /// Selected deep features, then age, smoking and genotype.
    pub fn deep_features(features: &[usize], genotype: GenotypeMode) -> Self {
        let mut v: Vec<Covariate> = features.iter().map(|&k| Covariate::Feature(k)).collect();
        v.extend(Self::demographics(genotype).0);
        CovariateSpec(v)
    }

    pub fn demographics(genotype: GenotypeMode) -> Self {
        let mut v = vec![Covariate::Age, Covariate::SmokingFormer, Covariate::SmokingCurrent];
        v.extend_from_slice(genotype.covariates());
        CovariateSpec(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(Covariate::name).collect()
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        names
            .iter()
            .map(|n| n.as_ref().parse().map_err(Error::InvalidInput))
            .collect::<Result<Vec<_>>>()
            .map(CovariateSpec)
    }

    pub fn uses_grades(&self) -> bool {
        self.0.iter().any(Covariate::needs_grades)
    }

    pub fn uses_features(&self) -> bool {
        self.0.iter().any(|c| matches!(c, Covariate::Feature(_)))
    }

    pub fn row<S: CovariateSource + ?Sized>(&self, s: &S, norm: &Normalization) -> Result<Vec<f64>> {
        self.0.iter().map(|c| c.value(s, norm)).collect()
    }

    /// n × p design matrix for a cohort, rows in cohort order.
    pub fn design_matrix(&self, cohort: &Cohort, norm: &Normalization) -> Result<DMatrix<f64>> {
        let n = cohort.len();
        let p = self.len();
        let mut x = DMatrix::zeros(n, p);
        for (i, participant) in cohort.participants().iter().enumerate() {
            for (j, c) in self.0.iter().enumerate() {
                x[(i, j)] = c.value(participant, norm)?;
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        let spec = CovariateSpec::deep_features(&[335, 79], GenotypeMode::Snps);
        let names = spec.names();
        assert_eq!(
            names,
            [
                "f335",
                "f79",
                "age",
                "smoking_former",
                "smoking_current",
                "cfh",
                "arms2"
            ]
        );
        assert_eq!(CovariateSpec::from_names(&names).unwrap(), spec);
        assert!(CovariateSpec::from_names(&["fx"]).is_err());
    }
}
