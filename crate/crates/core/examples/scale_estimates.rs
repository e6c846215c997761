//! Difference-based and residual-based scale estimates under contamination.
//!
//! The tau column carries no consistency factor; only its ratios across
//! rows are comparable with the other columns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use robust_curves::robust::{diff_median_scale, diff_rms_scale, mad_scale, tau_scale};
use robust_curves::smoothing::Sample;

fn main() -> robust_curves::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 500;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "rate", "diff-med", "diff-rms", "mad", "tau");
    for rate in [0.0, 0.05, 0.10, 0.20] {
        let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let e: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                if rng.random::<f64>() < rate { 10.0 + 0.1 * z } else { 0.5 * z }
            })
            .collect();
        let y: Vec<f64> = x.iter().zip(&e).map(|(x, e)| x.exp() + e).collect();
        let s = Sample::new("s", x, y)?;
        println!(
            "{rate:>6.2} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            diff_median_scale(&s)?.sigma,
            diff_rms_scale(&s)?.sigma,
            mad_scale(&e)?.sigma,
            tau_scale(&e)?.sigma
        );
    }
    println!("true clean scale: 0.5");
    Ok(())
}
