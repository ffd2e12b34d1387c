//! Observed Kaplan–Meier progression against mean predicted progression
//! within severity-score groups.

use prognos::cohort::Endpoint;
use prognos::metrics::calibrate_cohort;
use prognos::model::FeatureMode;
use prognos::pipeline::{test_split, train, TrainConfig};
use prognos::report::calibration_csv;
use prognos::scales::sss_score;
use prognos::synth::AmdDesign;

fn main() -> prognos::Result<()> {
    let cohort = AmdDesign {
        n: 3000,
        with_features: false,
        ..AmdDesign::default()
    }
    .generate(6)?
    .cohort;
    let cfg = TrainConfig {
        feature_mode: FeatureMode::DlGrading,
        ..TrainConfig::default()
    };
    let model = train(&cohort, Endpoint::LateAmd, &cfg)?.model;
    let (test, _) = test_split(&cohort, cfg.split, cfg.seed, None)?;

    let subjects = test.participants();
    let table = calibrate_cohort(
        &test,
        Endpoint::LateAmd,
        |p| Some(sss_score(p.left_eye, p.right_eye, true)),
        &[0, 1, 2, 3, 4],
        |i, t| model.predict(&subjects[i], t).map_or(f64::NAN, |p| p.probability),
        &[1.0, 2.0, 3.0, 4.0, 5.0],
    )?;
    for g in &table.groups {
        let five = g.points.last().unwrap();
        println!(
            "score {}: n {:>3}, five-year observed {:>5.1}%, predicted {:>5.1}%",
            g.group,
            g.size,
            100.0 * five.observed,
            100.0 * five.predicted
        );
    }
    if !table.empty_groups.is_empty() {
        println!("groups without participants: {:?}", table.empty_groups);
    }
    print!("\n{}", calibration_csv(&table)?);
    Ok(())
}
