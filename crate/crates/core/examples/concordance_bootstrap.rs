//! Harrell's C at several horizons with percentile bootstrap intervals.

use prognos::metrics::{bootstrap_ci, concordance};
use prognos::synth::WeibullDesign;

fn main() -> prognos::Result<()> {
    let sample = WeibullDesign::default().sample(1000, 3);
    let risk = &sample.linear_predictor;
    let (times, events) = (&sample.times, &sample.events);

    println!("{:<8} {:>7} {:>7} {:>7} {:>9}", "horizon", "c", "lo95", "hi95", "pairs");
    for horizon in [Some(1.0), Some(2.0), Some(5.0), None] {
        let full = concordance(risk, times, events, horizon)?;
        let ci = bootstrap_ci(times.len(), 200, 42, |idx| {
            let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
            let e: Vec<bool> = idx.iter().map(|&i| events[i]).collect();
            concordance(&pick(risk), &pick(times), &e, horizon)
                .ok()
                .filter(|c| !c.is_degenerate())
                .map(|c| c.c)
        })?;
        let label = horizon.map_or("all".to_string(), |h| h.to_string());
        println!(
            "{label:<8} {:>7.4} {:>7.4} {:>7.4} {:>9}",
            full.c, ci.lo95, ci.hi95, full.comparable_pairs
        );
    }
    Ok(())
}
