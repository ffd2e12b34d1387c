//! Lasso Cox regularization path over 512 standardized features, one of
//! which carries the signal.

use prognos::cohort::{split_cohort, zscore_apply, zscore_fit, Endpoint, SplitRatios};
use prognos::featsel::{
    choose_lambda_by_concordance, feature_matrix, lasso_cox_path, select_features, LambdaChoice, LassoOptions,
};
use prognos::synth::AmdDesign;

fn main() -> prognos::Result<()> {
    let synthetic = AmdDesign::default().generate(2)?;
    let split = split_cohort(&synthetic.cohort, SplitRatios::default(), 42)?;
    let norm = zscore_fit(&split.train)?;
    let train = zscore_apply(&norm, &split.train)?;
    let dev = zscore_apply(&norm, &split.dev)?;

    let start = std::time::Instant::now();
    let path = lasso_cox_path(&train, Endpoint::LateAmd, &LassoOptions::default())?;
    println!("{} penalties in {:.2?}", path.len(), start.elapsed());
    for k in (0..path.len()).step_by(11) {
        println!(
            "  lambda {:>9.5}  nonzero {:>3}",
            path.lambdas[k], path.nonzero_counts[k]
        );
    }

    let (dev_times, dev_events) = dev.outcomes(Endpoint::LateAmd)?;
    let best = choose_lambda_by_concordance(&path, &feature_matrix(&dev)?, &dev_times, &dev_events)?;
    let features = select_features(&path, LambdaChoice::Index(best), 16)?;
    println!(
        "development-set choice: lambda {:.5}, features {features:?}",
        path.lambdas[best]
    );

    let first = path.nonzero_counts.iter().position(|&c| c > 0).unwrap();
    let entered: Vec<usize> = (0..path.n_features())
        .filter(|&j| path.coefficients[first][j] != 0.0)
        .collect();
    println!("first feature to enter: {entered:?}");

    let out = std::env::temp_dir().join("lasso_path.csv");
    std::fs::write(&out, path.to_csv()).expect("path file is writable");
    println!("path written to {}", out.display());
    Ok(())
}
