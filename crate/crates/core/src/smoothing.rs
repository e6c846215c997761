//! Kernel smoothing: density estimates, Nadaraya-Watson regression, local
//! M-regression and the pooled regression estimate under the null.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::robust::{RhoFunction, ScaleEstimate};

/// Iteration cap of the local IRLS.
pub const IRLS_MAX_ITER: usize = 100;
/// Convergence tolerance on `|delta a| / sigma`.
pub const IRLS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    Epanechnikov,
    Triweight,
}

impl Kernel {
    /// Kernel on its support `[-1, 1]`.
    pub fn eval(&self, u: f64) -> f64 {
        if u.abs() > 1.0 {
            return 0.0;
        }
        let v = 1.0 - u * u;
        match self {
            Kernel::Epanechnikov => 0.75 * v,
            Kernel::Triweight => 35.0 / 32.0 * v * v * v,
        }
    }

    /// `K_h(u) = K(u / h) / h`.
    pub fn scaled(&self, u: f64, h: f64) -> f64 {
        self.eval(u / h) / h
    }
}

/// One population's paired observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Sample {
    pub fn new(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let label = label.into();
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "population '{label}': {} covariates but {} responses",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "population '{label}' has {} observations",
                x.len()
            )));
        }
        if let Some(i) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "population '{label}': non-finite value at position {}",
                i % x.len()
            )));
        }
        Ok(Self { label, x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Same covariates, responses mapped through `f`.
    pub fn map_y(&self, f: impl Fn(f64) -> f64) -> Sample {
        Sample {
            label: self.label.clone(),
            x: self.x.clone(),
            y: self.y.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    NoConvergence,
    EmptyNeighborhood,
}

/// Regression estimate at a single query point. `value` is NaN when the
/// neighborhood is empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointFit {
    pub value: f64,
    pub status: FitStatus,
}

impl PointFit {
    const EMPTY: PointFit = PointFit {
        value: f64::NAN,
        status: FitStatus::EmptyNeighborhood,
    };

    pub fn get(&self) -> Option<f64> {
        (self.status != FitStatus::EmptyNeighborhood).then_some(self.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "rho")]
pub enum FitMethod {
    Classical,
    Robust(RhoFunction),
}

/// Per-population smoother output evaluated at the population's own covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub fits: Vec<PointFit>,
    pub sigma_hat: ScaleEstimate,
    pub bandwidth: f64,
    pub kernel: Kernel,
    pub method: FitMethod,
}

impl FitResult {
    pub fn m_hat(&self) -> Vec<f64> {
        self.fits.iter().map(|p| p.value).collect()
    }

    pub fn count(&self, status: FitStatus) -> usize {
        self.fits.iter().filter(|p| p.status == status).count()
    }

    /// Evaluates the same estimator at arbitrary points.
    pub fn evaluate(&self, sample: &Sample, at: &[f64]) -> Vec<PointFit> {
        evaluate(sample, self.method, self.sigma_hat, self.kernel, self.bandwidth, at)
    }
}

/// Covariate-sorted copy of a sample for windowed queries.
#[derive(Debug, Clone)]
pub(crate) struct SortedSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Original index of each sorted position.
    pub order: Vec<usize>,
}

impl SortedSample {
    pub fn new(sample: &Sample) -> Self {
        let mut order: Vec<usize> = (0..sample.len()).collect();
        order.sort_by(|&a, &b| sample.x[a].total_cmp(&sample.x[b]));
        Self {
            x: order.iter().map(|&i| sample.x[i]).collect(),
            y: order.iter().map(|&i| sample.y[i]).collect(),
            order,
        }
    }

    /// Sorted positions with `|x - x0| <= h`.
    pub fn window(&self, x0: f64, h: f64) -> std::ops::Range<usize> {
        let lo = self.x.partition_point(|&v| v < x0 - h);
        let hi = self.x.partition_point(|&v| v <= x0 + h);
        lo..hi.max(lo)
    }

    /// Kernel weights and responses of the window, skipping sorted position `skip`.
    pub fn local(
        &self,
        kernel: Kernel,
        x0: f64,
        h: f64,
        skip: Option<usize>,
    ) -> (Vec<f64>, Vec<f64>) {
        let range = self.window(x0, h);
        let mut k = Vec::with_capacity(range.len());
        let mut y = Vec::with_capacity(range.len());
        for i in range {
            if Some(i) == skip {
                continue;
            }
            let w = kernel.scaled(x0 - self.x[i], h);
            if w > 0.0 {
                k.push(w);
                y.push(self.y[i]);
            }
        }
        (k, y)
    }
}

/// Kernel density estimate `(1/n) sum K_h(x - X_i)` at each query point.
pub fn kde(sample: &Sample, kernel: Kernel, h: f64, at: &[f64]) -> Vec<f64> {
    let sorted = SortedSample::new(sample);
    let n = sample.len() as f64;
    at.iter()
        .map(|&x0| {
            sorted
                .window(x0, h)
                .map(|i| kernel.scaled(x0 - sorted.x[i], h))
                .sum::<f64>()
                / n
        })
        .collect()
}

fn weighted_mean(k: &[f64], y: &[f64]) -> PointFit {
    let total: f64 = k.iter().sum();
    if k.is_empty() || total <= 0.0 {
        return PointFit::EMPTY;
    }
    let num: f64 = k.iter().zip(y).map(|(w, v)| w * v).sum();
    PointFit {
        value: num / total,
        status: FitStatus::Converged,
    }
}

/// Weighted median: the smallest `y` whose cumulative weight reaches half the
/// total, averaged with the next order statistic on an exact tie.
pub fn weighted_median(k: &[f64], y: &[f64]) -> Option<f64> {
    if k.is_empty() {
        return None;
    }
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    let half = 0.5 * k.iter().sum::<f64>();
    let mut cum = 0.0;
    for (pos, &i) in idx.iter().enumerate() {
        cum += k[i];
        if cum >= half {
            if (cum - half).abs() <= 1e-14 * half && pos + 1 < idx.len() {
                return Some(0.5 * (y[i] + y[idx[pos + 1]]));
            }
            return Some(y[i]);
        }
    }
    idx.last().map(|&i| y[i])
}

fn local_m(k: &[f64], y: &[f64], rho: &RhoFunction, sigma: f64) -> PointFit {
    let Some(mut a) = weighted_median(k, y) else {
        return PointFit::EMPTY;
    };
    for _ in 0..IRLS_MAX_ITER {
        let (mut num, mut den) = (0.0, 0.0);
        for (kw, &yi) in k.iter().zip(y) {
            let w = kw * rho.weight((yi - a) / sigma);
            num += w * yi;
            den += w;
        }
        if den <= 0.0 {
            return PointFit {
                value: a,
                status: FitStatus::NoConvergence,
            };
        }
        let next = num / den;
        let step = (next - a).abs() / sigma;
        a = next;
        if step < IRLS_TOL {
            return PointFit {
                value: a,
                status: FitStatus::Converged,
            };
        }
    }
    PointFit {
        value: a,
        status: FitStatus::NoConvergence,
    }
}

/// Nadaraya-Watson estimate at each query point.
pub fn nadaraya_watson(sample: &Sample, kernel: Kernel, h: f64, at: &[f64]) -> Vec<PointFit> {
    let sorted = SortedSample::new(sample);
    at.iter()
        .map(|&x0| {
            let (k, y) = sorted.local(kernel, x0, h, None);
            weighted_mean(&k, &y)
        })
        .collect()
}

/// Local M-estimate: root of `sum K_h(x - X_i) psi((Y_i - a) / sigma)` reached
/// by IRLS from the local weighted median.
pub fn local_m_fit(
    sample: &Sample,
    rho: &RhoFunction,
    sigma: &ScaleEstimate,
    kernel: Kernel,
    h: f64,
    at: &[f64],
) -> Vec<PointFit> {
    let sorted = SortedSample::new(sample);
    at.iter()
        .map(|&x0| {
            let (k, y) = sorted.local(kernel, x0, h, None);
            local_m(&k, &y, rho, sigma.sigma)
        })
        .collect()
}

/// Dispatches to the classical or robust smoother.
pub fn evaluate(
    sample: &Sample,
    method: FitMethod,
    sigma: ScaleEstimate,
    kernel: Kernel,
    h: f64,
    at: &[f64],
) -> Vec<PointFit> {
    match method {
        FitMethod::Classical => nadaraya_watson(sample, kernel, h, at),
        FitMethod::Robust(rho) => local_m_fit(sample, &rho, &sigma, kernel, h, at),
    }
}

/// Leave-one-out fits at every observation, in original order.
pub(crate) fn leave_one_out(
    sorted: &SortedSample,
    method: FitMethod,
    sigma: f64,
    kernel: Kernel,
    h: f64,
) -> Vec<PointFit> {
    let mut out = vec![PointFit::EMPTY; sorted.x.len()];
    for pos in 0..sorted.x.len() {
        let (k, y) = sorted.local(kernel, sorted.x[pos], h, Some(pos));
        out[sorted.order[pos]] = match method {
            FitMethod::Classical => weighted_mean(&k, &y),
            FitMethod::Robust(rho) => local_m(&k, &y, &rho, sigma),
        };
    }
    out
}

/// Fits a population at its own covariates.
pub fn fit(
    sample: &Sample,
    method: FitMethod,
    sigma: ScaleEstimate,
    kernel: Kernel,
    h: f64,
) -> Result<FitResult> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("bandwidth must be positive, got {h}")));
    }
    Ok(FitResult {
        fits: evaluate(sample, method, sigma, kernel, h, &sample.x),
        sigma_hat: sigma,
        bandwidth: h,
        kernel,
        method,
    })
}

/// Pooled estimate of the common regression curve, evaluated at every
/// observation of every population.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledFit {
    /// `mu0_hat[s][l]`: pooled curve at `X_{s l}`; `None` where undefined.
    pub mu0_hat: Vec<Vec<Option<f64>>>,
    /// `f_hat_j[s][j][l]`: density estimate of population `j` at `X_{s l}`.
    pub f_hat_j: Vec<Vec<Vec<f64>>>,
    /// `f_hat[s][l]`: mixture density at `X_{s l}`.
    pub f_hat: Vec<Vec<f64>>,
    /// Mixture proportions `n_j / n`.
    pub proportions: Vec<f64>,
}

/// Density-weighted mixture of the per-population fits.
///
/// `density_h` overrides the bandwidth of each `f_hat_j`; by default each
/// population's regression bandwidth is reused.
pub fn pooled_mu0(
    samples: &[Sample],
    fits: &[FitResult],
    density_h: Option<&[f64]>,
) -> Result<PooledFit> {
    let k = samples.len();
    if k == 0 || fits.len() != k {
        return Err(Error::InvalidInput(format!(
            "{} samples but {} fits",
            k,
            fits.len()
        )));
    }
    if let Some(dh) = density_h {
        if dh.len() != k || dh.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::InvalidInput("density bandwidths must be k positive values".into()));
        }
    }
    let n: usize = samples.iter().map(Sample::len).sum();
    let proportions: Vec<f64> = samples.iter().map(|s| s.len() as f64 / n as f64).collect();

    let mut mu0_hat = Vec::with_capacity(k);
    let mut f_hat_j = Vec::with_capacity(k);
    let mut f_hat = Vec::with_capacity(k);
    for target in samples {
        let at = &target.x;
        let dens: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                let h = density_h.map_or(fits[j].bandwidth, |d| d[j]);
                kde(&samples[j], fits[j].kernel, h, at)
            })
            .collect();
        let curves: Vec<Vec<PointFit>> =
            (0..k).map(|j| fits[j].evaluate(&samples[j], at)).collect();
        let mix: Vec<f64> = (0..at.len())
            .map(|l| (0..k).map(|j| proportions[j] * dens[j][l]).sum())
            .collect();
        let mu: Vec<Option<f64>> = (0..at.len())
            .map(|l| {
                if mix[l] <= 0.0 {
                    return None;
                }
                let mut acc = 0.0;
                for j in 0..k {
                    if dens[j][l] > 0.0 {
                        acc += proportions[j] * dens[j][l] / mix[l] * curves[j][l].get()?;
                    }
                }
                Some(acc)
            })
            .collect();
        mu0_hat.push(mu);
        f_hat_j.push(dens);
        f_hat.push(mix);
    }
    Ok(PooledFit {
        mu0_hat,
        f_hat_j,
        f_hat,
        proportions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robust::{RhoFunction, ScaleMethod, TUKEY_C};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit_sigma() -> ScaleEstimate {
        ScaleEstimate::new(1.0, ScaleMethod::DiffMedian).unwrap()
    }

    fn grid_sample(n: usize, f: impl Fn(f64) -> f64) -> Sample {
        let x: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let y = x.iter().map(|&v| f(v)).collect();
        Sample::new("g", x, y).unwrap()
    }

    #[test]
    fn kernels_integrate_to_one() {
        for k in [Kernel::Epanechnikov, Kernel::Triweight] {
            let m = 20_000;
            let step = 2.0 / m as f64;
            let integral: f64 = (0..=m)
                .map(|i| {
                    let u = -1.0 + i as f64 * step;
                    let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                    w * k.eval(u)
                })
                .sum::<f64>()
                * step;
            assert_abs_diff_eq!(integral, 1.0, epsilon = 1e-8);
            assert_eq!(k.eval(1.0001), 0.0);
            assert_eq!(k.eval(0.3), k.eval(-0.3));
        }
    }

    #[test]
    fn kde_single_point() {
        let s = Sample {
            label: "one".into(),
            x: vec![0.0],
            y: vec![0.0],
        };
        let f = kde(&s, Kernel::Epanechnikov, 1.0, &[0.0, 1.5, -2.0]);
        assert_eq!(f, vec![0.75, 0.0, 0.0]);
    }

    #[test]
    fn kde_integrates_to_one() {
        let s = grid_sample(50, |x| x);
        let m = 40_000;
        let (lo, hi) = (-1.0, 2.0);
        let step = (hi - lo) / m as f64;
        let at: Vec<f64> = (0..=m).map(|i| lo + i as f64 * step).collect();
        let f = kde(&s, Kernel::Epanechnikov, 0.1, &at);
        let integral: f64 = f.windows(2).map(|w| 0.5 * (w[0] + w[1]) * step).sum();
        assert!((integral - 1.0).abs() < 1e-3);
        assert!(f.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn nw_constant_response() {
        let s = grid_sample(30, |_| 7.0);
        let out = nadaraya_watson(&s, Kernel::Epanechnikov, 0.1, &[0.2, 0.5, 5.0]);
        assert_abs_diff_eq!(out[0].value, 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1].value, 7.0, epsilon = 1e-12);
        assert_eq!(out[2].status, FitStatus::EmptyNeighborhood);
        assert!(out[2].get().is_none());
    }

    #[test]
    fn nw_single_and_symmetric() {
        let s = Sample::new("s", vec![0.0, 10.0], vec![3.0, 9.0]).unwrap();
        let out = nadaraya_watson(&s, Kernel::Epanechnikov, 1.0, &[0.2]);
        assert_abs_diff_eq!(out[0].value, 3.0, epsilon = 1e-14);
        let s = Sample::new("s", vec![-0.5, 0.5], vec![0.0, 2.0]).unwrap();
        let out = nadaraya_watson(&s, Kernel::Epanechnikov, 1.0, &[0.0]);
        assert_abs_diff_eq!(out[0].value, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn local_m_symmetric_window() {
        let x = vec![-0.2, -0.1, 0.0, 0.1, 0.2];
        let y = vec![3.0, 2.5, 2.0, 1.5, 1.0];
        // responses symmetric about 2 with symmetric kernel weights
        let s = Sample::new("s", x, y).unwrap();
        let rho = RhoFunction::tukey(TUKEY_C).unwrap();
        let out = local_m_fit(&s, &rho, &unit_sigma(), Kernel::Epanechnikov, 1.0, &[0.0]);
        assert_abs_diff_eq!(out[0].value, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn local_m_ignores_gross_outlier() {
        let mut x: Vec<f64> = (0..20).map(|i| -0.5 + i as f64 / 20.0).collect();
        let mut y = vec![5.0; 20];
        x.push(0.01);
        y.push(500.0);
        let s = Sample::new("s", x, y).unwrap();
        let rho = RhoFunction::tukey(TUKEY_C).unwrap();
        let out = local_m_fit(&s, &rho, &unit_sigma(), Kernel::Epanechnikov, 1.0, &[0.0]);
        let k: Vec<f64> = s.x.iter().map(|&xi| Kernel::Epanechnikov.scaled(-xi, 1.0)).collect();
        assert_eq!(weighted_median(&k, &s.y), Some(5.0));
        assert_abs_diff_eq!(out[0].value, 5.0, epsilon = 1e-6);
        assert_eq!(out[0].status, FitStatus::Converged);
    }

    #[test]
    fn huber_large_c_equals_nadaraya_watson() {
        let s = grid_sample(80, |x| (6.0 * x).sin() + 0.3 * ((x * 97.0).fract() - 0.5));
        let at: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let rho = RhoFunction::huber(1e6).unwrap();
        let sig = ScaleEstimate::new(0.2, ScaleMethod::DiffMedian).unwrap();
        let a = local_m_fit(&s, &rho, &sig, Kernel::Epanechnikov, 0.1, &at);
        let b = nadaraya_watson(&s, Kernel::Epanechnikov, 0.1, &at);
        for (p, q) in a.iter().zip(&b) {
            assert!((p.value - q.value).abs() <= 1e-6);
        }
    }

    #[test]
    fn weighted_median_tie_averages() {
        assert_eq!(weighted_median(&[1.0, 1.0], &[0.0, 2.0]), Some(1.0));
        assert_eq!(weighted_median(&[1.0, 3.0], &[0.0, 2.0]), Some(2.0));
        assert_eq!(weighted_median(&[], &[]), None);
    }

    #[test]
    fn local_m_score_is_balanced() {
        let s = grid_sample(120, |x| x * x + 0.4 * ((x * 31.0).fract() - 0.5) + if (x * 120.0) as usize % 17 == 0 { 8.0 } else { 0.0 });
        let rho = RhoFunction::tukey(TUKEY_C).unwrap();
        let sig = ScaleEstimate::new(0.15, ScaleMethod::DiffMedian).unwrap();
        let h = 0.12;
        let out = local_m_fit(&s, &rho, &sig, Kernel::Epanechnikov, h, &s.x);
        for (p, &x0) in out.iter().zip(&s.x) {
            assert_eq!(p.status, FitStatus::Converged);
            let (mut score, mut mass) = (0.0, 0.0);
            for (&xi, &yi) in s.x.iter().zip(&s.y) {
                let k = Kernel::Epanechnikov.scaled(x0 - xi, h);
                score += k * rho.psi((yi - p.value) / sig.sigma);
                mass += k;
            }
            assert!(score.abs() <= 1e-8 * mass * rho.psi_sup(), "score {score}");
        }
    }

    fn sigma_of(v: f64) -> ScaleEstimate {
        ScaleEstimate::new(v, ScaleMethod::DiffMedian).unwrap()
    }

    #[test]
    fn pooled_single_population_is_identity() {
        let s = grid_sample(40, |x| x.sin());
        let f = fit(&s, FitMethod::Classical, sigma_of(1.0), Kernel::Epanechnikov, 0.15).unwrap();
        let p = pooled_mu0(std::slice::from_ref(&s), std::slice::from_ref(&f), None).unwrap();
        for (a, b) in p.mu0_hat[0].iter().zip(f.m_hat()) {
            assert_abs_diff_eq!(a.unwrap(), b, epsilon = 1e-12);
        }
    }

    #[test]
    fn pooled_identical_populations() {
        let s = grid_sample(40, |x| (3.0 * x).cos());
        let rho = RhoFunction::tukey(TUKEY_C).unwrap();
        let f = fit(&s, FitMethod::Robust(rho), sigma_of(0.3), Kernel::Epanechnikov, 0.15).unwrap();
        let samples = vec![s.clone(), s.clone()];
        let fits = vec![f.clone(), f.clone()];
        let p = pooled_mu0(&samples, &fits, None).unwrap();
        for pop in &p.mu0_hat {
            for (a, b) in pop.iter().zip(f.m_hat()) {
                assert_abs_diff_eq!(a.unwrap(), b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn pooled_disjoint_support() {
        let s1 = Sample::new("a", vec![0.0, 0.1, 0.2], vec![1.0, 1.0, 1.0]).unwrap();
        let s2 = Sample::new("b", vec![5.0, 5.1, 5.2], vec![9.0, 9.0, 9.0]).unwrap();
        let f1 = fit(&s1, FitMethod::Classical, sigma_of(1.0), Kernel::Epanechnikov, 0.5).unwrap();
        let f2 = fit(&s2, FitMethod::Classical, sigma_of(1.0), Kernel::Epanechnikov, 0.5).unwrap();
        let p = pooled_mu0(&[s1, s2], &[f1, f2], None).unwrap();
        assert!(p.mu0_hat[0].iter().all(|v| (v.unwrap() - 1.0).abs() < 1e-14));
        assert!(p.mu0_hat[1].iter().all(|v| (v.unwrap() - 9.0).abs() < 1e-14));
        assert!(p.f_hat_j[0][1].iter().all(|v| *v == 0.0));
    }

    proptest! {
        #[test]
        fn nw_within_window_range(ys in proptest::collection::vec(-50.0f64..50.0, 10..40), x0 in 0.0f64..1.0) {
            let n = ys.len();
            let x: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
            let s = Sample::new("p", x.clone(), ys.clone()).unwrap();
            let h = 0.2;
            let out = nadaraya_watson(&s, Kernel::Epanechnikov, h, &[x0]);
            if let Some(v) = out[0].get() {
                let inwin: Vec<f64> = x.iter().zip(&ys).filter(|(xi, _)| (x0 - **xi).abs() < h).map(|(_, y)| *y).collect();
                let lo = inwin.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = inwin.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
            }
        }

        #[test]
        fn mixture_identity_and_affine_equivariance(
            y1 in proptest::collection::vec(-5.0f64..5.0, 25),
            y2 in proptest::collection::vec(-5.0f64..5.0, 30),
            a in 0.5f64..3.0,
            b in -10.0f64..10.0,
        ) {
            let x1: Vec<f64> = (0..25).map(|i| (i as f64 * 0.618).fract()).collect();
            let x2: Vec<f64> = (0..30).map(|i| (i as f64 * 0.414 + 0.1).fract()).collect();
            let s1 = Sample::new("a", x1, y1).unwrap();
            let s2 = Sample::new("b", x2, y2).unwrap();
            let rho = RhoFunction::tukey(TUKEY_C).unwrap();
            for method in [FitMethod::Classical, FitMethod::Robust(rho)] {
                let sig = [sigma_of(1.3), sigma_of(0.9)];
                let samples = [s1.clone(), s2.clone()];
                let fits: Vec<FitResult> = samples.iter().zip(sig).map(|(s, g)| fit(s, method, g, Kernel::Epanechnikov, 0.3).unwrap()).collect();
                let p = pooled_mu0(&samples, &fits, None).unwrap();
                for s in 0..2 {
                    for l in 0..p.f_hat[s].len() {
                        let mix: f64 = (0..2).map(|j| p.proportions[j] * p.f_hat_j[s][j][l]).sum();
                        prop_assert!((mix - p.f_hat[s][l]).abs() <= 1e-15 * (1.0 + mix));
                        prop_assert!(p.f_hat[s][l] >= 0.0);
                    }
                }
                let tsamples = [s1.map_y(|v| a * v + b), s2.map_y(|v| a * v + b)];
                let tfits: Vec<FitResult> = tsamples.iter().zip(sig).map(|(s, g)| fit(s, method, sigma_of(a * g.sigma), Kernel::Epanechnikov, 0.3).unwrap()).collect();
                let tp = pooled_mu0(&tsamples, &tfits, None).unwrap();
                for j in 0..2 {
                    for (u, v) in fits[j].m_hat().iter().zip(tfits[j].m_hat()) {
                        if u.is_finite() {
                            prop_assert!((a * u + b - v).abs() <= 1e-8 * (1.0 + v.abs()));
                        }
                    }
                    for (u, v) in p.mu0_hat[j].iter().zip(&tp.mu0_hat[j]) {
                        if let (Some(u), Some(v)) = (u, v) {
                            prop_assert!((a * u + b - v).abs() <= 1e-8 * (1.0 + v.abs()));
                        }
                    }
                }
            }
        }
    }
}
