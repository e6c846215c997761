//! Score functions and robust scale estimators.
//!
//! A [`RhoFunction`] bundles a loss `rho`, its score `psi` and the first two
//! derivatives of the score. The bisquare loss is normalized so that its
//! supremum is 1; its score is kept in the conventional polynomial form
//! `u (1 - (u/c)^2)^2`, which is `rho'` up to the positive constant returned
//! by [`RhoFunction::psi_scale`]. Every quantity the test uses (the M-root,
//! `tau / nu^2`) is invariant to that constant.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::smoothing::Sample;

/// Default bisquare tuning constant (95% Gaussian efficiency).
pub const TUKEY_C: f64 = 4.685;
/// Default tuning constant of the bisquare loss inside the tau-scale.
pub const TAU_C: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoFamily {
    TukeyBisquare,
    Huber,
}

/// A rho/psi family with its tuning constant.
///
/// `Huber` with `c = +inf` is least squares: `psi(u) = u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoFunction {
    pub family: RhoFamily,
    pub c: f64,
}

impl RhoFunction {
    pub fn new(family: RhoFamily, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tuning constant must be positive, got {c}"
            )));
        }
        Ok(Self { family, c })
    }

    pub fn tukey(c: f64) -> Result<Self> {
        Self::new(RhoFamily::TukeyBisquare, c)
    }

    pub fn huber(c: f64) -> Result<Self> {
        Self::new(RhoFamily::Huber, c)
    }

    pub fn least_squares() -> Self {
        Self {
            family: RhoFamily::Huber,
            c: f64::INFINITY,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.family == RhoFamily::TukeyBisquare
    }

    pub fn rho(&self, u: f64) -> f64 {
        let c = self.c;
        match self.family {
            RhoFamily::TukeyBisquare => {
                if u.abs() >= c {
                    1.0
                } else {
                    let v = 1.0 - (u / c).powi(2);
                    1.0 - v * v * v
                }
            }
            RhoFamily::Huber => {
                let a = u.abs();
                if a <= c {
                    0.5 * u * u
                } else {
                    c * a - 0.5 * c * c
                }
            }
        }
    }

    pub fn psi(&self, u: f64) -> f64 {
        let c = self.c;
        match self.family {
            RhoFamily::TukeyBisquare => {
                if u.abs() >= c {
                    0.0
                } else {
                    let v = 1.0 - (u / c).powi(2);
                    u * v * v
                }
            }
            RhoFamily::Huber => u.clamp(-c, c),
        }
    }

    pub fn psi_prime(&self, u: f64) -> f64 {
        let c = self.c;
        match self.family {
            RhoFamily::TukeyBisquare => {
                if u.abs() >= c {
                    0.0
                } else {
                    let v = (u / c).powi(2);
                    (1.0 - v) * (1.0 - 5.0 * v)
                }
            }
            RhoFamily::Huber => {
                if u.abs() <= c {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn psi_second(&self, u: f64) -> f64 {
        let c = self.c;
        match self.family {
            RhoFamily::TukeyBisquare => {
                if u.abs() >= c {
                    0.0
                } else {
                    let v = (u / c).powi(2);
                    2.0 * u / (c * c) * (10.0 * v - 6.0)
                }
            }
            RhoFamily::Huber => 0.0,
        }
    }

    /// IRLS weight `psi(u) / u`, with the limit `psi'(0)` at zero.
    pub fn weight(&self, u: f64) -> f64 {
        if u == 0.0 {
            return self.psi_prime(0.0);
        }
        match self.family {
            RhoFamily::TukeyBisquare => {
                if u.abs() >= self.c {
                    0.0
                } else {
                    let v = 1.0 - (u / self.c).powi(2);
                    v * v
                }
            }
            RhoFamily::Huber => {
                let a = u.abs();
                if a <= self.c {
                    1.0
                } else {
                    self.c / a
                }
            }
        }
    }

    /// Constant `k` with `psi = k * rho'`.
    pub fn psi_scale(&self) -> f64 {
        match self.family {
            RhoFamily::TukeyBisquare => self.c * self.c / 6.0,
            RhoFamily::Huber => 1.0,
        }
    }

    /// `sup |psi|`.
    pub fn psi_sup(&self) -> f64 {
        match self.family {
            RhoFamily::TukeyBisquare => self.c / 5f64.sqrt() * 16.0 / 25.0,
            RhoFamily::Huber => self.c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMethod {
    /// Median of absolute successive differences along the sorted covariate.
    DiffMedian,
    /// Root mean square of successive differences (non-robust counterpart).
    DiffRms,
    Mad,
    TauScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleEstimate {
    pub sigma: f64,
    pub method: ScaleMethod,
}

impl ScaleEstimate {
    pub fn new(sigma: f64, method: ScaleMethod) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::DegenerateScale(format!("sigma = {sigma}")));
        }
        Ok(Self { sigma, method })
    }
}

/// Standard normal quantile function.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Consistency constant `Phi^{-1}(3/4)` of the MAD at the normal.
pub fn mad_consistency() -> f64 {
    normal_quantile(0.75)
}

/// Median of a slice; midpoint of the two central order statistics for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Unnormalized median absolute deviation about the median.
pub fn mad(values: &[f64]) -> Option<f64> {
    let m = median(values)?;
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    median(&dev)
}

/// Responses reordered by ascending covariate; ties keep their original order.
fn responses_by_covariate(sample: &Sample) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..sample.len()).collect();
    idx.sort_by(|&a, &b| sample.x[a].total_cmp(&sample.x[b]));
    idx.into_iter().map(|i| sample.y[i]).collect()
}

fn successive_differences(sample: &Sample) -> Result<Vec<f64>> {
    if sample.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "difference-based scale needs n >= 2, got {}",
            sample.len()
        )));
    }
    let y = responses_by_covariate(sample);
    Ok(y.windows(2).map(|w| (w[1] - w[0]).abs()).collect())
}

/// Robust difference-based scale: `median |dY| / (sqrt(2) Phi^{-1}(3/4))`.
pub fn diff_median_scale(sample: &Sample) -> Result<ScaleEstimate> {
    let diffs = successive_differences(sample)?;
    let med = median(&diffs).unwrap_or(0.0);
    if med <= 0.0 {
        return Err(Error::DegenerateScale(format!(
            "population '{}': median successive difference is zero",
            sample.label
        )));
    }
    ScaleEstimate::new(
        med / (std::f64::consts::SQRT_2 * mad_consistency()),
        ScaleMethod::DiffMedian,
    )
}

/// Rice-type scale `sqrt(sum dY^2 / (2 (n - 1)))`, used by the classical test.
pub fn diff_rms_scale(sample: &Sample) -> Result<ScaleEstimate> {
    let diffs = successive_differences(sample)?;
    let ss: f64 = diffs.iter().map(|d| d * d).sum();
    let sigma = (ss / (2.0 * diffs.len() as f64)).sqrt();
    if sigma <= 0.0 {
        return Err(Error::DegenerateScale(format!(
            "population '{}': all successive differences are zero",
            sample.label
        )));
    }
    ScaleEstimate::new(sigma, ScaleMethod::DiffRms)
}

/// Normalized MAD of residuals.
pub fn mad_scale(residuals: &[f64]) -> Result<ScaleEstimate> {
    let m = mad(residuals)
        .ok_or_else(|| Error::InsufficientData("empty residual vector".into()))?;
    if m <= 0.0 {
        return Err(Error::DegenerateScale("MAD is zero".into()));
    }
    ScaleEstimate::new(m / mad_consistency(), ScaleMethod::Mad)
}

/// Tau-scale with bisquare loss at [`TAU_C`].
pub fn tau_scale(residuals: &[f64]) -> Result<ScaleEstimate> {
    tau_scale_with(residuals, TAU_C)
}

/// Tau-scale: `s^2 * mean(rho_c(r / s))` with `s` the normalized MAD.
///
/// No normal-consistency factor is applied, so at the normal this sits
/// below `sigma` by a constant that depends on `c` only.
pub fn tau_scale_with(residuals: &[f64], c: f64) -> Result<ScaleEstimate> {
    let s = mad_scale(residuals)?.sigma;
    let rho = RhoFunction::tukey(c)?;
    let mean_rho =
        residuals.iter().map(|r| rho.rho(r / s)).sum::<f64>() / residuals.len() as f64;
    ScaleEstimate::new(s * mean_rho.sqrt(), ScaleMethod::TauScale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sample(x: Vec<f64>, y: Vec<f64>) -> Sample {
        Sample::new("t", x, y).unwrap()
    }

    #[test]
    fn tukey_values() {
        let t = RhoFunction::tukey(TUKEY_C).unwrap();
        assert_eq!(t.psi(0.0), 0.0);
        assert_eq!(t.rho(0.0), 0.0);
        assert_eq!(t.psi(TUKEY_C), 0.0);
        assert_eq!(t.rho(TUKEY_C), 1.0);
        // (1 - (1/4.685)^2)^2 evaluated by hand
        let expected = {
            let q = 1.0 / 4.685f64;
            let v = 1.0 - q * q;
            v * v
        };
        assert_abs_diff_eq!(t.psi(1.0), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(t.psi(1.0), 0.910956, epsilon = 1e-6);
    }

    #[test]
    fn huber_values() {
        let h = RhoFunction::huber(1.345).unwrap();
        assert_eq!(h.psi(3.0), 1.345);
        assert_eq!(h.psi(-3.0), -1.345);
        assert_eq!(h.psi(0.5), 0.5);
        let ls = RhoFunction::least_squares();
        assert_eq!(ls.psi(1e9), 1e9);
        assert_eq!(ls.psi_prime(-7.0), 1.0);
    }

    #[test]
    fn rejects_nonpositive_c() {
        assert!(RhoFunction::tukey(0.0).is_err());
        assert!(RhoFunction::huber(-1.0).is_err());
    }

    #[test]
    fn psi_matches_finite_difference_of_rho() {
        for rho in [RhoFunction::tukey(TUKEY_C).unwrap(), RhoFunction::huber(1.345).unwrap()] {
            let k = rho.psi_scale();
            let h = 1e-5;
            let mut u = -2.0 * rho.c;
            while u < 2.0 * rho.c {
                let fd = (rho.rho(u + h) - rho.rho(u - h)) / (2.0 * h);
                assert!((rho.psi(u) - k * fd).abs() < 1e-6, "u = {u}");
                u += 0.0137;
            }
        }
    }

    #[test]
    fn psi_derivatives_match_finite_differences() {
        let t = RhoFunction::tukey(TUKEY_C).unwrap();
        let h = 1e-6;
        for i in -460..460 {
            let u = i as f64 * 0.01 + 0.003;
            let fd1 = (t.psi(u + h) - t.psi(u - h)) / (2.0 * h);
            let fd2 = (t.psi_prime(u + h) - t.psi_prime(u - h)) / (2.0 * h);
            assert!((t.psi_prime(u) - fd1).abs() < 1e-6, "psi' at {u}");
            assert!((t.psi_second(u) - fd2).abs() < 1e-5, "psi'' at {u}");
        }
    }

    #[test]
    fn bounded_zeta_witnesses() {
        // sup over [-100c, 100c] of |u psi'(u)| and |u psi''(u)| is finite and lies in [-c, c]
        let t = RhoFunction::tukey(TUKEY_C).unwrap();
        let (mut best1, mut arg1, mut best2, mut arg2) = (0.0f64, 0.0, 0.0f64, 0.0);
        let n = 200_000;
        for i in 0..=n {
            let u = -100.0 * t.c + 200.0 * t.c * i as f64 / n as f64;
            let z1 = (u * t.psi_prime(u)).abs();
            let z2 = (u * t.psi_second(u)).abs();
            if z1 > best1 {
                best1 = z1;
                arg1 = u;
            }
            if z2 > best2 {
                best2 = z2;
                arg2 = u;
            }
        }
        assert!(best1.is_finite() && best2.is_finite());
        assert!(arg1.abs() <= t.c && arg2.abs() <= t.c);
    }

    #[test]
    fn sup_psi() {
        let t = RhoFunction::tukey(TUKEY_C).unwrap();
        let grid_max = (0..100_000)
            .map(|i| t.psi(i as f64 * TUKEY_C / 100_000.0))
            .fold(0.0, f64::max);
        assert_abs_diff_eq!(grid_max, t.psi_sup(), epsilon = 1e-8);
    }

    #[test]
    fn mad_constant() {
        assert_abs_diff_eq!(mad_consistency(), 0.674_489_750_196_081_7, epsilon = 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn diff_median_constant_is_degenerate() {
        let s = sample(vec![0.0, 1.0, 2.0, 3.0], vec![5.0; 4]);
        assert!(matches!(diff_median_scale(&s), Err(Error::DegenerateScale(_))));
    }

    #[test]
    fn diff_median_alternating() {
        // x deliberately unsorted; along sorted x the responses alternate 0,1,0,1
        let s = sample(vec![3.0, 0.0, 2.0, 1.0], vec![1.0, 0.0, 0.0, 1.0]);
        let est = diff_median_scale(&s).unwrap();
        assert_abs_diff_eq!(est.sigma, 1.0 / (2f64.sqrt() * 0.674_489_750_196_081_7), epsilon = 1e-12);
        assert_abs_diff_eq!(est.sigma, 1.048358, epsilon = 1e-6);
    }

    #[test]
    fn diff_median_tie_order_is_stable() {
        // equal covariates keep input order: y sequence 0, 2, 0
        let s = sample(vec![1.0, 1.0, 1.0], vec![0.0, 2.0, 0.0]);
        let est = diff_median_scale(&s).unwrap();
        assert_abs_diff_eq!(est.sigma * 2f64.sqrt() * mad_consistency(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn diff_median_needs_two_points() {
        let s = Sample {
            label: "one".into(),
            x: vec![0.0],
            y: vec![1.0],
        };
        assert!(matches!(diff_median_scale(&s), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn diff_median_consistent_at_normal() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let x: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let est = diff_median_scale(&sample(x, y)).unwrap();
        assert!((0.97..=1.03).contains(&est.sigma), "sigma = {}", est.sigma);
    }

    #[test]
    fn tau_zero_residuals_degenerate() {
        assert!(matches!(tau_scale(&[0.0; 10]), Err(Error::DegenerateScale(_))));
    }

    #[test]
    fn tau_two_point() {
        let r: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let s: f64 = 1.0 / 0.674_489_750_196_081_7;
        // both points have |r/s| = 0.6744897..., rho = 1 - (1 - (u/3)^2)^3
        let u = 1.0 / s;
        let rho: f64 = 1.0 - (1.0 - (u / 3.0).powi(2)).powi(3);
        let expected = s * rho.sqrt();
        assert_abs_diff_eq!(tau_scale(&r).unwrap().sigma, expected, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn psi_is_odd(u in -50.0f64..50.0, c in 0.5f64..10.0) {
            for rho in [RhoFunction::tukey(c).unwrap(), RhoFunction::huber(c).unwrap()] {
                prop_assert_eq!(rho.psi(-u), -rho.psi(u));
                prop_assert_eq!(rho.rho(-u), rho.rho(u));
                prop_assert!(rho.rho(u) >= 0.0);
            }
        }

        #[test]
        fn diff_median_location_scale(
            ys in proptest::collection::vec(-10.0f64..10.0, 5..40),
            b in -100.0f64..100.0,
            a in 0.1f64..20.0,
        ) {
            let n = ys.len();
            let x: Vec<f64> = (0..n).map(|i| ((i * 7) % n) as f64).collect();
            let base = diff_median_scale(&sample(x.clone(), ys.clone()));
            prop_assume!(base.is_ok());
            let base = base.unwrap().sigma;
            let shifted = diff_median_scale(&sample(x.clone(), ys.iter().map(|y| y + b).collect())).unwrap().sigma;
            let scaled = diff_median_scale(&sample(x, ys.iter().map(|y| a * y).collect())).unwrap().sigma;
            prop_assert!((shifted - base).abs() <= 1e-9 * (1.0 + base));
            prop_assert!((scaled - a * base).abs() <= 1e-9 * a * (1.0 + base));
        }

        #[test]
        fn tau_scale_equivariant(
            r in proptest::collection::vec(-10.0f64..10.0, 5..40),
            a in 0.1f64..20.0,
        ) {
            let base = tau_scale(&r);
            prop_assume!(base.is_ok());
            let base = base.unwrap().sigma;
            let scaled = tau_scale(&r.iter().map(|v| a * v).collect::<Vec<_>>()).unwrap().sigma;
            prop_assert!((scaled - a * base).abs() <= 1e-9 * a * base);
        }
    }
}
