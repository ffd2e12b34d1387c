//! The full workflow on a synthetic cohort: split, select deep features,
//! fit, and evaluate against the severity scale on held-out participants.

use prognos::cohort::{Endpoint, SplitRatios};
use prognos::metrics::concordance;
use prognos::pipeline::{evaluate, test_split, train, EvalConfig, Predictor, TrainConfig};
use prognos::predict::parse_horizons;
use prognos::report::{format_summary, SummaryRow};
use prognos::scales::RiskTable;
use prognos::synth::AmdDesign;

fn main() -> prognos::Result<()> {
    let synthetic = AmdDesign::default().generate(1)?;
    let cohort = &synthetic.cohort;
    let cfg = TrainConfig::default();
    let eval_cfg = EvalConfig {
        horizons: parse_horizons("1-5")?,
        ..EvalConfig::default()
    };
    let table = RiskTable::default();

    let mut rows = Vec::new();
    for endpoint in Endpoint::ALL {
        let outcome = train(cohort, endpoint, &cfg)?;
        let selected = outcome
            .selection
            .as_ref()
            .map(|s| s.features.clone())
            .unwrap_or_default();
        println!("{endpoint}: selected features {selected:?}");
        let (test, same_split) = test_split(cohort, SplitRatios::default(), cfg.seed, Some(&outcome.model))?;
        assert_eq!(same_split, Some(true));

        let predictors = [
            Predictor::Model(&outcome.model),
            Predictor::Sss {
                table: &table,
                bilateral_medium: true,
            },
        ];
        for predictor in predictors {
            let report = evaluate(predictor, &test, endpoint, &eval_cfg)?;
            rows.extend(report.cstat.iter().map(|c| SummaryRow {
                endpoint,
                model: report.model.clone(),
                horizon: c.horizon,
                c: c.c,
                lo95: c.lo95,
                hi95: c.hi95,
            }));
        }
    }
    println!("\n{}", format_summary(&rows));

    // What the generator itself achieves on the same participants.
    let (test, _) = test_split(cohort, SplitRatios::default(), cfg.seed, None)?;
    let index: std::collections::HashMap<&str, usize> = cohort
        .participants()
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id.as_str(), i))
        .collect();
    let truth: Vec<f64> = test
        .participants()
        .iter()
        .map(|p| synthetic.true_risk[index[p.id.as_str()]])
        .collect();
    let (times, events) = test.outcomes(Endpoint::LateAmd)?;
    let oracle = concordance(&truth, &times, &events, Some(5.0))?;
    println!("generator oracle, late AMD at 5 years: {:.1}", 100.0 * oracle.c);
    Ok(())
}
