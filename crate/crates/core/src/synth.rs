//! Seeded synthetic data with known generating parameters, for examples,
//! tests and benchmarking.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::cohort::{
    Arms2, Cfh, Cohort, Drusen, Endpoint, EyeGrade, Genotype, Outcome, Participant, Pigment, Smoking, FEATURE_DIM,
};
use crate::error::Result;

/// Survival data drawn from a proportional-hazards model.
#[derive(Debug, Clone)]
pub struct SurvivalSample {
    pub x: DMatrix<f64>,
    pub times: Vec<f64>,
    pub events: Vec<bool>,
    /// True linear predictor x'β of each row.
    pub linear_predictor: Vec<f64>,
}

impl SurvivalSample {
    pub fn censored_fraction(&self) -> f64 {
        self.events.iter().filter(|e| !**e).count() as f64 / self.events.len() as f64
    }
}

/// Weibull proportional-hazards simulation.
///
/// Covariates are standard normal; H(t | x) = scale · t^shape · exp(x'β).
/// Independent exponential censoring at `censoring_rate`.
#[derive(Debug, Clone)]
pub struct WeibullDesign {
    pub beta: Vec<f64>,
    pub shape: f64,
    pub scale: f64,
    pub censoring_rate: f64,
}

impl Default for WeibullDesign {
    /// Five covariates, about 30% censored.
    fn default() -> Self {
        WeibullDesign {
            beta: vec![0.5, -0.5, 1.0, 0.0, 0.25],
            shape: 1.5,
            scale: 0.1,
            censoring_rate: 0.08,
        }
    }
}

impl WeibullDesign {
    pub fn sample(&self, n: usize, seed: u64) -> SurvivalSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.beta.len();
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let censor = Exp::new(self.censoring_rate).expect("positive censoring rate");
        let mut times = Vec::with_capacity(n);
        let mut events = Vec::with_capacity(n);
        let mut linear_predictor = Vec::with_capacity(n);
        for i in 0..n {
            let eta: f64 = (0..p).map(|j| x[(i, j)] * self.beta[j]).sum();
            let t = weibull_time(&mut rng, self.scale, self.shape, eta);
            let c = censor.sample(&mut rng);
            times.push(t.min(c));
            events.push(t <= c);
            linear_predictor.push(eta);
        }
        SurvivalSample {
            x,
            times,
            events,
            linear_predictor,
        }
    }
}

/// Inverse-transform draw from H(t) = scale · t^shape · exp(η).
fn weibull_time(rng: &mut ChaCha8Rng, scale: f64, shape: f64, eta: f64) -> f64 {
    let u: f64 = rng.random::<f64>();
    // 1 − u lies in (0, 1]; guard the log against exactly zero.
    let e = -(1.0 - u).max(f64::MIN_POSITIVE).ln();
    (e / (scale * eta.exp())).powf(1.0 / shape)
}

/// Parameters of the synthetic AMD cohort.
///
/// A latent severity score drives both eyes' grades and the planted deep
/// feature, which equals `signal_sd` × severity. The hazard of late AMD is
/// `signal_hazard_ratio` per raw unit of that feature, with smaller effects
/// of age, smoking and genotype. The remaining features are pure noise.
#[derive(Debug, Clone)]
pub struct AmdDesign {
    pub n: usize,
    pub signal_feature: usize,
    pub signal_sd: f64,
    pub signal_hazard_ratio: f64,
    /// Log hazard ratio per year of age above 70.
    pub age_log_hr: f64,
    pub current_smoker_log_hr: f64,
    pub cfh_log_hr: f64,
    pub arms2_log_hr: f64,
    pub weibull_shape: f64,
    pub weibull_scale: f64,
    /// Share of late-AMD events that are geographic atrophy.
    pub ga_share: f64,
    /// Administrative follow-up drawn uniformly from this range (years).
    pub follow_up: (f64, f64),
    pub dropout_rate: f64,
    /// Round observed times up to the next visit (e.g. 0.5 years).
    pub visit_interval: Option<f64>,
    pub with_features: bool,
    pub with_genotype: bool,
}

impl Default for AmdDesign {
    fn default() -> Self {
        AmdDesign {
            n: 2000,
            signal_feature: 7,
            signal_sd: 1.5,
            signal_hazard_ratio: 3.0,
            age_log_hr: 0.05,
            current_smoker_log_hr: 0.4,
            cfh_log_hr: 0.2,
            arms2_log_hr: 0.3,
            weibull_shape: 1.2,
            weibull_scale: 0.03,
            ga_share: 0.45,
            follow_up: (4.0, 12.0),
            dropout_rate: 0.03,
            visit_interval: None,
            with_features: true,
            with_genotype: true,
        }
    }
}

/// A synthetic cohort with its generating truth.
#[derive(Debug, Clone)]
pub struct SyntheticCohort {
    pub cohort: Cohort,
    /// Log relative hazard of each participant under the generator.
    pub true_risk: Vec<f64>,
    /// Latent severity of each participant.
    pub severity: Vec<f64>,
}

impl AmdDesign {
    pub fn generate(&self, seed: u64) -> Result<SyntheticCohort> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut participants = Vec::with_capacity(self.n);
        let mut true_risk = Vec::with_capacity(self.n);
        let mut severity = Vec::with_capacity(self.n);
        let dropout = Exp::new(self.dropout_rate).expect("positive dropout rate");
        for i in 0..self.n {
            let z: f64 = rng.sample(StandardNormal);
            let age = (70.0 + 5.0 * rng.sample::<f64, _>(StandardNormal)).clamp(55.0, 85.0);
            let smoking = match rng.random::<f64>() {
                u if u < 0.45 => Smoking::Never,
                u if u < 0.9 => Smoking::Former,
                _ => Smoking::Current,
            };
            let cfh = [Cfh::TT, Cfh::CT, Cfh::CC][allele_count(&mut rng, 0.4)];
            let arms2 = [Arms2::GG, Arms2::GT, Arms2::TT][allele_count(&mut rng, 0.25)];
            let grs = 0.4 * f64::from(cfh.risk_alleles())
                + 0.5 * f64::from(arms2.risk_alleles())
                + rng.sample::<f64, _>(StandardNormal);

            let features = self.with_features.then(|| {
                let mut f: Vec<f64> = (0..FEATURE_DIM).map(|_| rng.sample(StandardNormal)).collect();
                f[self.signal_feature] = self.signal_sd * z;
                f
            });

            let mut eta = self.signal_hazard_ratio.ln() * self.signal_sd * z + self.age_log_hr * (age - 70.0);
            if smoking == Smoking::Current {
                eta += self.current_smoker_log_hr;
            }
            eta +=
                self.cfh_log_hr * f64::from(cfh.risk_alleles()) + self.arms2_log_hr * f64::from(arms2.risk_alleles());

            let left_eye = eye_grade(&mut rng, z);
            let right_eye = eye_grade(&mut rng, z);

            let t = weibull_time(&mut rng, self.weibull_scale, self.weibull_shape, eta);
            let end = rng.random_range(self.follow_up.0..=self.follow_up.1);
            let c = dropout.sample(&mut rng).min(end);
            let is_ga = rng.random::<f64>() < self.ga_share;
            let (mut time, event) = if t <= c { (t, true) } else { (c, false) };
            if let Some(step) = self.visit_interval {
                time = (time / step).ceil() * step;
            }
            let mut outcomes = BTreeMap::new();
            outcomes.insert(Endpoint::LateAmd, Outcome::new(time, event));
            outcomes.insert(Endpoint::Ga, Outcome::new(time, event && is_ga));
            outcomes.insert(Endpoint::Nv, Outcome::new(time, event && !is_ga));

            participants.push(Participant {
                id: format!("S{:05}", i + 1),
                age: (age * 10.0).round() / 10.0,
                smoking,
                genotype: if self.with_genotype {
                    Genotype {
                        cfh: Some(cfh),
                        arms2: Some(arms2),
                        grs: Some((grs * 1e4).round() / 1e4),
                    }
                } else {
                    Genotype::default()
                },
                left_eye,
                right_eye,
                deep_features: features,
                outcomes,
            });
            true_risk.push(eta);
            severity.push(z);
        }
        Ok(SyntheticCohort {
            cohort: Cohort::new(participants)?,
            true_risk,
            severity,
        })
    }
}

fn allele_count(rng: &mut ChaCha8Rng, freq: f64) -> usize {
    usize::from(rng.random::<f64>() < freq) + usize::from(rng.random::<f64>() < freq)
}

fn eye_grade(rng: &mut ChaCha8Rng, severity: f64) -> EyeGrade {
    let d = severity + 0.5 * rng.sample::<f64, _>(StandardNormal);
    let drusen = if d < 0.0 {
        Drusen::NoneSmall
    } else if d < 0.9 {
        Drusen::Medium
    } else {
        Drusen::Large
    };
    let p = severity + 0.7 * rng.sample::<f64, _>(StandardNormal);
    let pigment = if p > 0.8 { Pigment::Present } else { Pigment::Absent };
    EyeGrade::new(drusen, pigment)
}
