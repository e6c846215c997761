//! Local M-smoothing against Nadaraya-Watson on data with a cluster of outliers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use robust_curves::robust::{diff_median_scale, RhoFunction, TUKEY_C};
use robust_curves::smoothing::{evaluate, FitMethod, Kernel, Sample};

fn main() -> robust_curves::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 200;
    let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&x| {
            let e: f64 = StandardNormal.sample(&mut rng);
            let bump = if (0.4..0.5).contains(&x) && rng.random::<f64>() < 0.5 { 8.0 } else { 0.0 };
            (2.0 * std::f64::consts::PI * x).sin() + 0.3 * e + bump
        })
        .collect();
    let sample = Sample::new("sine", x, y)?;
    let sigma = diff_median_scale(&sample)?;
    let rho = RhoFunction::tukey(TUKEY_C)?;
    let grid: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
    let h = 0.08;
    let nw = evaluate(&sample, FitMethod::Classical, sigma, Kernel::Epanechnikov, h, &grid);
    let lm = evaluate(&sample, FitMethod::Robust(rho), sigma, Kernel::Epanechnikov, h, &grid);

    println!("sigma_hat = {:.4}", sigma.sigma);
    println!("{:>5} {:>8} {:>8} {:>8}", "x", "truth", "NW", "local-M");
    for ((x, a), b) in grid.iter().zip(&nw).zip(&lm) {
        let truth = (2.0 * std::f64::consts::PI * x).sin();
        let show = |p: &robust_curves::smoothing::PointFit| p.get().map_or("-".into(), |v| format!("{v:.3}"));
        println!("{x:>5.2} {truth:>8.3} {:>8} {:>8}", show(a), show(b));
    }
    Ok(())
}
