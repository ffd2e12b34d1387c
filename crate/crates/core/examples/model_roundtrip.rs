//! Trains a grading-based model, saves it, loads it back and predicts a
//! risk curve for one subject.

use prognos::cohort::{Drusen, Endpoint, EyeGrade, Pigment, Smoking};
use prognos::covariates::GenotypeMode;
use prognos::model::{FeatureMode, TrainedModel};
use prognos::pipeline::{train, TrainConfig};
use prognos::predict::{risk_curve, Grades, Horizon, SubjectInput};
use prognos::synth::AmdDesign;

fn main() -> prognos::Result<()> {
    let cohort = AmdDesign {
        n: 1500,
        with_features: false,
        ..AmdDesign::default()
    }
    .generate(5)?
    .cohort;
    let cfg = TrainConfig {
        feature_mode: FeatureMode::Calculator,
        genotype_mode: GenotypeMode::Snps,
        ..TrainConfig::default()
    };
    let model = train(&cohort, Endpoint::LateAmd, &cfg)?.model;

    let dir = std::env::temp_dir().join("prognos-example");
    std::fs::create_dir_all(&dir).expect("temp dir is writable");
    let path = dir.join("late_amd.json");
    model.save(&path)?;
    let loaded = TrainedModel::load(&path)?;
    println!(
        "saved and reloaded {} ({} covariates)",
        path.display(),
        loaded.cox.beta.len()
    );

    let subject = SubjectInput {
        id: Some("example".into()),
        age: 74.0,
        smoking: Smoking::Former,
        genotype: cohort.participants()[0].genotype,
        grades: Some(Grades {
            left: EyeGrade::new(Drusen::Large, Pigment::Absent),
            right: EyeGrade::new(Drusen::Medium, Pigment::Present),
        }),
        deep_features: None,
    };
    let before = risk_curve(&model, &subject, &Horizon::all())?;
    let after = risk_curve(&loaded, &subject, &Horizon::all())?;
    println!("{:>7} {:>12}", "years", "late AMD");
    for (a, b) in before.iter().zip(&after) {
        assert_eq!(a.progression_probability, b.progression_probability);
        println!("{:>7} {:>11.2}%", a.horizon_years, 100.0 * a.progression_probability);
    }
    Ok(())
}
