//! Correlating a utility metric with human judgments, with the t-test
//! p-value, and measuring run-to-run spread.
//!
//! ```text
//! cargo run --example significance
//! ```

use seper::stats::{correlate, dispersion, p_value_two_sided, t_statistic, TStatistic};

pub fn run_example() -> Result<f64, Box<dyn std::error::Error>> {
    let gold = [0.0, 0.2, 0.5, 0.4, 0.9, 1.0, 0.1, 0.7];
    let metric = [0.05, 0.1, 0.6, 0.3, 0.8, 0.95, 0.2, 0.5];
    let c = correlate(&metric, &gold)?;
    println!(
        "n = {}, r = {:.4}, t = {:?}, p = {:.3e}",
        c.n, c.r, c.t, c.p_two_sided
    );

    if let TStatistic::Finite(t) = t_statistic(0.5, 102)? {
        println!(
            "r = 0.5 over 102 pairs: t = {t:.6}, p = {:.3e}",
            p_value_two_sided(t, 100)?
        );
    }

    let repetitions = [0.412, 0.398, 0.405, 0.420, 0.401];
    let d = dispersion(&repetitions)?;
    println!(
        "mean = {:.4}, std = {:.4}, cv = {:.4}",
        d.mean,
        d.std,
        d.coefficient_of_variation.unwrap_or(f64::NAN)
    );
    Ok(c.r)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
