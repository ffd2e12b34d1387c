//! Kaplan–Meier survival and the censoring-weighted Brier score of a
//! correctly specified model against an uninformative one.

use prognos::cox::{breslow_estimate, fit_cox, progression_probability, CoxOptions};
use prognos::metrics::{brier_curve, kaplan_meier};
use prognos::synth::WeibullDesign;

fn main() -> prognos::Result<()> {
    let sample = WeibullDesign::default().sample(2000, 4);
    let (times, events) = (&sample.times, &sample.events);

    let km = kaplan_meier(times, events)?;
    for t in [1.0, 2.0, 3.0, 5.0] {
        println!("KM S({t}) = {:.4}", km.survival_at(t));
    }

    let fit = fit_cox(&sample.x, times, events, &CoxOptions::default())?;
    let beta: Vec<f64> = fit.beta.iter().copied().collect();
    let baseline = breslow_estimate(&beta, &sample.x, times, events)?;
    let eta: Vec<f64> = (0..sample.x.nrows())
        .map(|i| (0..beta.len()).map(|j| sample.x[(i, j)] * beta[j]).sum())
        .collect();

    let grid: Vec<f64> = (1..=10).map(|k| 0.5 * k as f64).collect();
    let model = brier_curve(
        |i, t| 1.0 - progression_probability(&baseline, eta[i], t).map_or(f64::NAN, |p| p.probability),
        times,
        events,
        &grid,
    )?;
    let marginal = brier_curve(|_, t| km.survival_at(t), times, events, &grid)?;
    println!("\n{:>5} {:>9} {:>9}", "t", "cox", "km");
    for (k, t) in grid.iter().enumerate() {
        println!("{t:>5.1} {:>9.4} {:>9.4}", model.scores[k], marginal.scores[k]);
    }
    Ok(())
}
