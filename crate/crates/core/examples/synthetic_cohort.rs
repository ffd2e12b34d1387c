//! Writes a seeded synthetic cohort CSV with a planted prognostic feature.
//!
//! ```text
//! cargo run --example synthetic_cohort -- cohort.csv [n] [seed]
//! ```

use prognos::cohort::Endpoint;
use prognos::synth::AmdDesign;

fn main() -> prognos::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "cohort.csv".into());
    let n = args.next().map_or(2000, |s| s.parse().expect("n is an integer"));
    let seed = args.next().map_or(1, |s| s.parse().expect("seed is an integer"));

    let design = AmdDesign {
        n,
        ..AmdDesign::default()
    };
    let synthetic = design.generate(seed)?;
    std::fs::write(&path, synthetic.cohort.to_csv()).expect("cohort file is writable");

    let (_, events) = synthetic.cohort.outcomes(Endpoint::LateAmd)?;
    let n_events = events.iter().filter(|e| **e).count();
    println!("wrote {n} participants ({n_events} late AMD events) to {path}");
    println!("planted signal: feature {}", design.signal_feature);
    Ok(())
}
