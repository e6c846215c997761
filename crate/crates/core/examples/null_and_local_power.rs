//! Estimated null law of nT and asymptotic power under a local drift.

use robust_curves::ecf::{local_power, local_shift};
use robust_curves::pipeline::{run_test, BandwidthRule, TestConfig, TestMethod};
use robust_curves::simulation::{generate, ContaminationKind, Model, ScenarioConfig};

fn main() -> robust_curves::Result<()> {
    let sc = ScenarioConfig::new(Model::M2, ContaminationKind::C0, [100, 100]);
    let samples = generate(&sc, 0);
    let cfg = TestConfig {
        bandwidth: vec![BandwidthRule::Fixed(0.15)],
        ..TestConfig::default().with_method(TestMethod::Robust)
    };
    let out = run_test(&samples, &cfg)?;
    let null = &out.result.null;
    println!("A diagonal: {:?}", null.a_hat);
    println!("Sigma:      {:?}", null.sigma_hat);
    println!("gammas:     {:?}", null.gammas);
    println!("95% quantile of nT: {:.4}", null.quantile(0.95));

    let sigmas: Vec<f64> = out.fits.iter().map(|f| f.sigma_hat.sigma).collect();
    let zero = |_: f64| 0.0;
    for delta in [0.0, 2.0, 4.0, 6.0, 8.0] {
        let drift = move |x: f64| delta * x;
        let shift = local_shift(&samples, &out.pooled, &out.residuals, &sigmas, &[&zero, &drift])?;
        let p = local_power(null, &shift, 50_000, 1)?;
        println!("Delta = {delta}: shift = [{:.3}, {:.3}], power = {p:.3}", shift[0], shift[1]);
    }
    Ok(())
}
