//! Leave-one-out cross-validation curves for the classical and robust fits.

use robust_curves::bandwidth::{cv_curve, cv_select, default_grid, BandwidthSpec, CvCriterion};
use robust_curves::robust::{diff_median_scale, RhoFunction, TUKEY_C};
use robust_curves::simulation::{generate, ContaminationKind, Model, ScenarioConfig};
use robust_curves::smoothing::{FitMethod, Kernel};

fn main() -> robust_curves::Result<()> {
    let sc = ScenarioConfig::new(Model::M3, ContaminationKind::C2, [150, 150]);
    let sample = &generate(&sc, 0)[0];
    let sigma = diff_median_scale(sample)?;
    let grid = default_grid(&sample.x);
    let robust = FitMethod::Robust(RhoFunction::tukey(TUKEY_C)?);
    let ls = cv_curve(sample, &grid, CvCriterion::LeastSquares, FitMethod::Classical, Kernel::Epanechnikov, &sigma);
    let tau = cv_curve(sample, &grid, CvCriterion::TauScale, robust, Kernel::Epanechnikov, &sigma);

    println!("{:>8} {:>12} {:>12}", "h", "LS (NW)", "tau (M)");
    for ((h, a), b) in grid.iter().zip(&ls).zip(&tau) {
        let f = |v: &Option<f64>| v.map_or("-".into(), |v| format!("{v:.5}"));
        println!("{h:>8.4} {:>12} {:>12}", f(a), f(b));
    }
    for (name, method, criterion) in [
        ("classical", FitMethod::Classical, CvCriterion::LeastSquares),
        ("robust", robust, CvCriterion::TauScale),
    ] {
        let spec = BandwidthSpec::GridCv { grid: grid.clone(), criterion };
        let h = cv_select(sample, &spec, method, Kernel::Epanechnikov, &sigma)?;
        println!("{name} selects h = {h:.4}");
    }
    Ok(())
}
