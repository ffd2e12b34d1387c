use std::collections::BTreeMap;
use std::path::Path;

use clap::Parser;

use prognos::cli::{run, Cli};
use prognos::cohort::{Cohort, Endpoint, Outcome};
use prognos::report::{parse_cstat_csv, parse_summary_csv, HorizonLabel};
use prognos::scales::sss_score;
use prognos::synth::AmdDesign;
use prognos::Error;

fn prognos(args: &[&str]) -> Result<String, Error> {
    let cli = Cli::try_parse_from(std::iter::once("prognos").chain(args.iter().copied())).expect("arguments parse");
    let mut out = Vec::new();
    run(cli, &mut out)?;
    Ok(String::from_utf8(out).unwrap())
}

fn write_cohort(dir: &Path, n: usize, with_features: bool, seed: u64) -> String {
    let cohort = AmdDesign {
        n,
        with_features,
        ..AmdDesign::default()
    }
    .generate(seed)
    .unwrap()
    .cohort;
    let path = dir.join("cohort.csv");
    std::fs::write(&path, cohort.to_csv()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn grading_train_eval_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_cohort(dir.path(), 800, false, 3);
    let model = dir.path().join("model.json");
    let text = prognos(&[
        "train",
        "--data",
        &data,
        "--features",
        "grading",
        "--out",
        model.to_str().unwrap(),
    ])
    .unwrap();
    assert!(text.contains("train 560, dev 80, test 160"), "{text}");
    let eval_dir = dir.path().join("eval");
    prognos(&[
        "eval",
        "--data",
        &data,
        "--model",
        model.to_str().unwrap(),
        "--horizons",
        "1-5",
        "--bootstrap",
        "20",
        "--out-dir",
        eval_dir.to_str().unwrap(),
    ])
    .unwrap();
    let cstat = parse_cstat_csv(&std::fs::read_to_string(eval_dir.join("cstat.csv")).unwrap()).unwrap();
    let labels: Vec<HorizonLabel> = cstat.iter().map(|r| r.horizon).collect();
    let mut expected: Vec<HorizonLabel> = (1..=5).map(HorizonLabel::Years).collect();
    expected.push(HorizonLabel::All);
    assert_eq!(labels, expected);
    for r in &cstat {
        assert!(r.lo95 <= r.c && r.c <= r.hi95);
    }
    for f in ["brier.csv", "calibration.csv", "summary.csv"] {
        assert!(eval_dir.join(f).exists(), "{f}");
    }
    let report = prognos(&["report", eval_dir.to_str().unwrap()]).unwrap();
    assert!(report.starts_with("model"));
    assert!(report.contains("all years") && report.contains("Late AMD"));
}

#[test]
fn every_command_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_cohort(dir.path(), 500, false, 4);
    let mut runs = Vec::new();
    for k in 0..2 {
        let model = dir.path().join(format!("m{k}.json"));
        let out = dir.path().join(format!("e{k}"));
        prognos(&[
            "train",
            "--data",
            &data,
            "--features",
            "grading",
            "--out",
            model.to_str().unwrap(),
        ])
        .unwrap();
        let printed = prognos(&[
            "eval",
            "--data",
            &data,
            "--model",
            model.to_str().unwrap(),
            "--bootstrap",
            "30",
            "--out-dir",
            out.to_str().unwrap(),
        ])
        .unwrap();
        let files: Vec<String> = ["cstat.csv", "brier.csv", "calibration.csv", "summary.csv"]
            .iter()
            .map(|f| std::fs::read_to_string(out.join(f)).unwrap())
            .collect();
        runs.push((std::fs::read_to_string(&model).unwrap(), printed, files));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn severity_scale_separates_perfectly_ordered_cohort() {
    let dir = tempfile::tempdir().unwrap();
    let base = AmdDesign {
        n: 300,
        with_features: false,
        ..AmdDesign::default()
    }
    .generate(8)
    .unwrap()
    .cohort;
    // Event time falls with the score; equal scores share a time.
    let participants = base
        .into_participants()
        .into_iter()
        .map(|mut p| {
            let s = sss_score(p.left_eye, p.right_eye, true);
            p.outcomes = BTreeMap::from([(Endpoint::LateAmd, Outcome::new(1.0 - 0.2 * f64::from(s), true))]);
            p
        })
        .collect();
    let cohort = Cohort::new(participants).unwrap();
    let path = dir.path().join("ordered.csv");
    std::fs::write(&path, cohort.to_csv()).unwrap();
    let out = dir.path().join("sss");
    prognos(&[
        "eval",
        "--data",
        path.to_str().unwrap(),
        "--features",
        "sss",
        "--no-split",
        "--horizons",
        "1",
        "--bootstrap",
        "10",
        "--out-dir",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let rows = parse_summary_csv(&std::fs::read_to_string(out.join("summary.csv")).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.c == 1.0 && r.model == "sss"), "{rows:?}");
}

#[test]
fn deep_feature_models_for_all_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_cohort(dir.path(), 600, true, 5);
    let models = dir.path().join("models");
    prognos(&[
        "train",
        "--data",
        &data,
        "--endpoint",
        "all",
        "--out",
        models.to_str().unwrap(),
    ])
    .unwrap();
    for f in ["late_amd.json", "ga.json", "nv.json", "manifest.json"] {
        assert!(models.join(f).exists(), "{f}");
    }
    let manifest = models.join("manifest.json");
    let eval_dir = dir.path().join("eval");
    prognos(&[
        "eval",
        "--data",
        &data,
        "--models",
        manifest.to_str().unwrap(),
        "--horizons",
        "5",
        "--bootstrap",
        "10",
        "--out-dir",
        eval_dir.to_str().unwrap(),
    ])
    .unwrap();
    for ep in ["late_amd", "ga", "nv"] {
        assert!(eval_dir.join(ep).join("cstat.csv").exists(), "{ep}");
    }
    let subject = r#"{"age": 72, "smoking": "former", "deep_features": [0.0]}"#;
    let err = prognos(&["predict", "--models", manifest.to_str().unwrap(), "--subject", subject]).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn eval_refuses_a_model_trained_on_other_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_cohort(dir.path(), 300, false, 6);
    let model = dir.path().join("model.json");
    prognos(&[
        "train",
        "--data",
        &data,
        "--features",
        "grading",
        "--out",
        model.to_str().unwrap(),
    ])
    .unwrap();
    let err = prognos(&[
        "eval",
        "--data",
        &data,
        "--model",
        model.to_str().unwrap(),
        "--seed",
        "7",
        "--bootstrap",
        "10",
        "--out-dir",
        dir.path().join("e").to_str().unwrap(),
    ])
    .unwrap_err();
    assert!(matches!(err, Error::ModelDataMismatch(_)), "{err}");
}

#[test]
fn argument_errors() {
    assert!(Cli::try_parse_from(["prognos", "eval", "--data", "x", "--bootstrap", "1", "--out-dir", "o"]).is_err());
    assert!(Cli::try_parse_from(["prognos", "train", "--data", "x", "--endpoint", "dry", "--out", "o"]).is_err());
    let err = prognos(&["train", "--data", "/nonexistent.csv", "--out", "/tmp/never.json"]).unwrap_err();
    assert_eq!(err.exit_code(), 4);
}
