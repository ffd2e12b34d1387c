//! Fits a Cox model to simulated Weibull survival data and compares the
//! estimates with the generating coefficients.

use prognos::cox::{fit_cox, format_wald_table, two_sided_p, CoxOptions, TieMethod, WaldRow};
use prognos::synth::WeibullDesign;

fn main() -> prognos::Result<()> {
    let design = WeibullDesign::default();
    let sample = design.sample(5000, 1);
    println!("n = 5000, censored {:.1}%", 100.0 * sample.censored_fraction());

    for tie_method in [TieMethod::Efron, TieMethod::Breslow] {
        let opts = CoxOptions {
            tie_method,
            ..CoxOptions::default()
        };
        let fit = fit_cox(&sample.x, &sample.times, &sample.events, &opts)?;
        println!(
            "\n{tie_method}: {} Newton iterations, log partial likelihood {:.3}",
            fit.iterations, fit.loglik
        );
        println!("{:>4} {:>8} {:>8} {:>8} {:>7}", "j", "true", "beta", "se", "z(true)");
        for (j, truth) in design.beta.iter().enumerate() {
            let se = fit.info_inverse[(j, j)].sqrt();
            let z = (fit.beta[j] - truth) / se;
            println!("{j:>4} {truth:>8.3} {:>8.4} {se:>8.4} {z:>7.2}", fit.beta[j]);
        }
    }

    let fit = fit_cox(&sample.x, &sample.times, &sample.events, &CoxOptions::default())?;
    let rows: Vec<WaldRow> = (0..fit.beta.len())
        .map(|j| WaldRow::from_estimate(format!("x{j}"), fit.beta[j], fit.info_inverse[(j, j)].sqrt()))
        .collect();
    println!("\n{}", format_wald_table(&rows));
    println!("p-value of z = 1.96: {:.4}", two_sided_p(1.96));
    Ok(())
}
