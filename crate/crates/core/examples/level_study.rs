//! Rejection frequencies of both tests on one simulation cell.
//!
//! cargo run --release --example level_study -- MODEL CONT N1 N2 [REPS] [joint|factorized] [H]
//!
//! e.g. `-- MA1 C4 100 100 1000` for the fixed alternative under one-sample
//! contamination. A fixed bandwidth `H` skips cross-validation.

use robust_curves::ecf::CovarianceForm;
use robust_curves::pipeline::BandwidthRule;
use robust_curves::simulation::{level_band, run_level_power, ScenarioConfig, BAND_GAMMA};

fn main() -> robust_curves::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let n1 = arg(2, "100").parse().unwrap_or(100);
    let n2 = arg(3, "100").parse().unwrap_or(100);
    let mut sc = ScenarioConfig::new(arg(0, "M1").parse()?, arg(1, "C0").parse()?, [n1, n2]);
    sc.replications = arg(4, "200").parse().unwrap_or(200);
    if arg(5, "joint") == "factorized" {
        sc.covariance = CovarianceForm::Factorized;
    }
    if let Ok(h) = arg(6, "cv").parse() {
        sc.bandwidth = BandwidthRule::Fixed(h);
    }
    sc.n_draws = 2000;

    let start = std::time::Instant::now();
    let table = run_level_power(&sc)?;
    print!("{}", table.to_pretty());
    let (lo, hi) = level_band(sc.alpha, sc.replications, BAND_GAMMA);
    println!("level band [{lo:.4}, {hi:.4}], {:.1?}", start.elapsed());
    Ok(())
}
