//! Residual empirical characteristic functions, the weighted L2 statistic and
//! its plug-in asymptotic null distribution.
//!
//! For each population two residual samples are formed: standardized
//! residuals from the population's own fit and from the pooled fit. The
//! statistic compares their covariate-weighted empirical characteristic
//! functions in `L2(w)`. Under the null, `n T` behaves like `Z' A Z` with
//! `Z ~ N(0, Sigma)` and `A` diagonal, so its law is a weighted sum of
//! independent chi-square(1) variables with weights the eigenvalues of
//! `A Sigma`; that law is simulated.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::robust::RhoFunction;
use crate::smoothing::{FitResult, PooledFit, Sample};

/// Floor applied to density estimates inside the weighted support.
pub const DENSITY_FLOOR: f64 = 1e-12;
/// Threshold below which the mean score derivative counts as zero.
pub const NU_MIN: f64 = 1e-10;
/// Draws generated per keyed chunk of the null simulation.
const DRAW_CHUNK: usize = 4096;

/// Covariate weight `W_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightFunction {
    Indicator { lo: f64, hi: f64 },
    /// Linear ramps of width `ramp` inside `[lo, hi]`, flat at 1 between them.
    SmoothTrapezoid { lo: f64, hi: f64, ramp: f64 },
}

impl WeightFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            WeightFunction::Indicator { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            WeightFunction::SmoothTrapezoid { lo, hi, ramp } => {
                if x <= lo || x >= hi {
                    0.0
                } else {
                    ((x - lo) / ramp).min((hi - x) / ramp).min(1.0)
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            WeightFunction::Indicator { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            WeightFunction::SmoothTrapezoid { lo, hi, ramp } => {
                lo.is_finite() && hi.is_finite() && ramp > 0.0 && 2.0 * ramp <= hi - lo
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid weight function {self:?}")))
        }
    }

    /// Indicator of `[q_lo, q_hi]` quantiles of `x`.
    pub fn indicator_from_quantiles(x: &[f64], q_lo: f64, q_hi: f64) -> Result<Self> {
        let (lo, hi) = quantile_pair(x, q_lo, q_hi)?;
        let w = WeightFunction::Indicator { lo, hi };
        w.validate()?;
        Ok(w)
    }

    /// Trapezoid over the same quantile range with ramp `0.02 * range(x)`.
    pub fn trapezoid_from_quantiles(x: &[f64], q_lo: f64, q_hi: f64) -> Result<Self> {
        let (lo, hi) = quantile_pair(x, q_lo, q_hi)?;
        let min = x.iter().copied().fold(f64::INFINITY, f64::min);
        let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w = WeightFunction::SmoothTrapezoid {
            lo,
            hi,
            ramp: 0.02 * (max - min),
        };
        w.validate()?;
        Ok(w)
    }
}

/// Linear-interpolation sample quantile.
pub fn quantile(x: &[f64], q: f64) -> Option<f64> {
    if x.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    Some(if i + 1 < v.len() {
        v[i] + frac * (v[i + 1] - v[i])
    } else {
        v[i]
    })
}

fn quantile_pair(x: &[f64], q_lo: f64, q_hi: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&q_lo) || !(q_lo < q_hi && q_hi <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "weight quantiles must satisfy 0 <= lo < hi <= 1, got {q_lo}, {q_hi}"
        )));
    }
    match (quantile(x, q_lo), quantile(x, q_hi)) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::InsufficientData("no covariates for weight quantiles".into())),
    }
}

/// Integration weight `w` of the `L2(w)` norm.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum IntegrationWeight {
    #[default]
    StdNormalDensity,
    /// Tabulated weight, integrated by the trapezoid rule over `grid`.
    Custom { grid: Vec<f64>, values: Vec<f64> },
}

impl IntegrationWeight {
    /// Standard normal density tabulated on `points` equispaced nodes of `[lo, hi]`.
    pub fn tabulated_normal(lo: f64, hi: f64, points: usize) -> Self {
        let grid: Vec<f64> = (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect();
        let values = grid
            .iter()
            .map(|t| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt())
            .collect();
        IntegrationWeight::Custom { grid, values }
    }

    pub fn validate(&self) -> Result<()> {
        if let IntegrationWeight::Custom { grid, values } = self {
            if grid.len() < 2 || grid.len() != values.len() {
                return Err(Error::InvalidInput(
                    "custom integration weight needs matching grid and values of length >= 2".into(),
                ));
            }
            if grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidInput("integration grid must be increasing".into()));
            }
            if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidInput(
                    "integration weight must be finite and non-negative".into(),
                ));
            }
            let m0 = trapezoid(grid, values.iter().copied());
            let m2 = trapezoid(grid, grid.iter().zip(values).map(|(t, v)| t * t * v));
            if !m0.is_finite() || !m2.is_finite() || m0 <= 0.0 {
                return Err(Error::InvalidInput(
                    "integration weight must have finite positive mass and finite second moment".into(),
                ));
            }
        }
        Ok(())
    }
}

fn trapezoid(grid: &[f64], f: impl Iterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = f.collect();
    grid.windows(2)
        .zip(vals.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Standardized residuals of every population under its own fit and under the
/// pooled fit, with the covariate weights. Entries where the fit is undefined
/// (necessarily with zero weight) are NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSet {
    pub eps_hat: Vec<Vec<f64>>,
    pub eps0_hat: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
}

impl ResidualSet {
    pub fn populations(&self) -> usize {
        self.eps_hat.len()
    }
}

pub fn residuals(
    samples: &[Sample],
    fits: &[FitResult],
    pooled: &PooledFit,
    weights: &[WeightFunction],
) -> Result<ResidualSet> {
    let k = samples.len();
    if fits.len() != k || weights.len() != k || pooled.mu0_hat.len() != k {
        return Err(Error::InvalidInput(
            "samples, fits, pooled fit and weights must cover the same populations".into(),
        ));
    }
    let mut out = ResidualSet {
        eps_hat: Vec::with_capacity(k),
        eps0_hat: Vec::with_capacity(k),
        weights: Vec::with_capacity(k),
    };
    for j in 0..k {
        let s = &samples[j];
        let sigma = fits[j].sigma_hat.sigma;
        let mut e = Vec::with_capacity(s.len());
        let mut e0 = Vec::with_capacity(s.len());
        let mut wv = Vec::with_capacity(s.len());
        for l in 0..s.len() {
            let w = weights[j].eval(s.x[l]);
            let m = fits[j].fits[l].get();
            let mu = pooled.mu0_hat[j][l];
            if w > 0.0 && (m.is_none() || mu.is_none()) {
                return Err(Error::FlaggedInsideSupport {
                    population: j,
                    index: l,
                });
            }
            e.push(m.map_or(f64::NAN, |m| (s.y[l] - m) / sigma));
            e0.push(mu.map_or(f64::NAN, |m| (s.y[l] - m) / sigma));
            wv.push(w);
        }
        out.eps_hat.push(e);
        out.eps0_hat.push(e0);
        out.weights.push(wv);
    }
    Ok(out)
}

/// Weighted points `(W, eps)` with positive weight.
fn support(eps: &[f64], weights: &[f64]) -> Vec<(f64, f64)> {
    eps.iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(e, w)| (*w, *e))
        .collect()
}

/// `(1/n) sum_l W_l (cos(t e_l), sin(t e_l))`.
fn weighted_ecf(points: &[(f64, f64)], n: f64, t: f64) -> (f64, f64) {
    let (mut re, mut im) = (0.0, 0.0);
    for &(w, e) in points {
        let (s, c) = (t * e).sin_cos();
        re += w * c;
        im += w * s;
    }
    (re / n, im / n)
}

/// `|| phi_a - phi_b ||^2_w` for the weighted empirical characteristic
/// functions of two residual samples sharing covariate weights.
pub fn ecf_norm_sq(eps_a: &[f64], eps_b: &[f64], weights: &[f64], w: &IntegrationWeight) -> f64 {
    let n = eps_a.len() as f64;
    let a = support(eps_a, weights);
    let b = support(eps_b, weights);
    match w {
        IntegrationWeight::StdNormalDensity => {
            let kernel = |u: f64| (-0.5 * u * u).exp();
            let mut total = 0.0;
            for &(wl, al) in &a {
                for (&(wm, am), &(_, bm)) in a.iter().zip(&b) {
                    total += wl * wm * (kernel(al - am) - 2.0 * kernel(al - bm));
                }
            }
            for &(wl, bl) in &b {
                for &(wm, bm) in &b {
                    total += wl * wm * kernel(bl - bm);
                }
            }
            (total / (n * n)).max(0.0)
        }
        IntegrationWeight::Custom { grid, values } => trapezoid(
            grid,
            grid.iter().zip(values).map(|(&t, &v)| {
                let (ar, ai) = weighted_ecf(&a, n, t);
                let (br, bi) = weighted_ecf(&b, n, t);
                ((ar - br).powi(2) + (ai - bi).powi(2)) * v
            }),
        ),
    }
}

/// `|| t phi(t) ||^2_w` for one weighted empirical characteristic function.
pub fn derivative_norm_sq(eps: &[f64], weights: &[f64], w: &IntegrationWeight) -> f64 {
    let n = eps.len() as f64;
    let pts = support(eps, weights);
    match w {
        IntegrationWeight::StdNormalDensity => {
            let mut total = 0.0;
            for &(wl, el) in &pts {
                for &(wm, em) in &pts {
                    let d2 = (el - em).powi(2);
                    total += wl * wm * (1.0 - d2) * (-0.5 * d2).exp();
                }
            }
            (total / (n * n)).max(0.0)
        }
        IntegrationWeight::Custom { grid, values } => trapezoid(
            grid,
            grid.iter().zip(values).map(|(&t, &v)| {
                let (r, i) = weighted_ecf(&pts, n, t);
                t * t * (r * r + i * i) * v
            }),
        ),
    }
}

/// `T = sum_j (n_j / n) || phi_j - phi_0j ||^2_w` and the per-population norms.
pub fn test_statistic(res: &ResidualSet, w: &IntegrationWeight) -> (f64, Vec<f64>) {
    let n: usize = res.eps_hat.iter().map(Vec::len).sum();
    let norms: Vec<f64> = (0..res.populations())
        .map(|j| ecf_norm_sq(&res.eps_hat[j], &res.eps0_hat[j], &res.weights[j], w))
        .collect();
    let t = norms
        .iter()
        .zip(&res.eps_hat)
        .map(|(v, e)| e.len() as f64 / n as f64 * v)
        .sum();
    (t, norms)
}

/// How the covariance of the limiting Gaussian vector is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceForm {
    /// Product moments `omega_l * beta_j^(l)` and `omega_j^2`, with `A` from
    /// the weighted characteristic function.
    Factorized,
    /// Joint moments `E_l[W_l W_j f_j / f]` and `E_j[W_j^2]`, with `A` from
    /// the weight-normalized characteristic function. Exact for any `W_j`.
    #[default]
    Joint,
}

/// Plug-in moments entering the null covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullIngredients {
    pub nu: Vec<f64>,
    pub tau: Vec<f64>,
    pub efficiency: Vec<f64>,
    pub omega: Vec<f64>,
    pub proportions: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// `beta[j][s]`: mean over population `s` of `W_j f_j / f`.
    pub beta: Vec<Vec<f64>>,
    /// `alpha[s][j][l]`: mean over population `s` of `W_j W_l f_j f_l / f^2`.
    pub alpha: Vec<Vec<Vec<f64>>>,
}

/// Plug-in weighted chi-square null law of `n T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullDistribution {
    /// Diagonal of `A_hat`.
    pub a_hat: Vec<f64>,
    pub sigma_hat: Vec<Vec<f64>>,
    /// Eigenvalues of `A_hat Sigma_hat`, descending, clipped at zero.
    pub gammas: Vec<f64>,
    pub null_draws: Vec<f64>,
    pub n_draws: usize,
    pub form: CovarianceForm,
    pub ingredients: Option<NullIngredients>,
}

impl NullDistribution {
    /// Builds the null law directly from `A` (diagonal) and `Sigma`.
    pub fn from_matrices(
        a_hat: Vec<f64>,
        sigma_hat: Vec<Vec<f64>>,
        n_draws: usize,
        seed: u64,
    ) -> Result<Self> {
        let k = a_hat.len();
        if k == 0 || sigma_hat.len() != k || sigma_hat.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput("A and Sigma must be k x k".into()));
        }
        if a_hat.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::InvalidInput("A must have non-negative diagonal".into()));
        }
        if n_draws == 0 {
            return Err(Error::InvalidInput("need at least one null draw".into()));
        }
        let gammas = eigen_weights(&a_hat, &sigma_hat)?;
        let null_draws = simulate_weighted_chisq(&gammas, n_draws, seed);
        Ok(Self {
            a_hat,
            sigma_hat,
            gammas,
            null_draws,
            n_draws,
            form: CovarianceForm::Joint,
            ingredients: None,
        })
    }

    /// Empirical `p`-quantile of the simulated draws.
    pub fn quantile(&self, p: f64) -> f64 {
        let mut v = self.null_draws.clone();
        v.sort_by(f64::total_cmp);
        let idx = ((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
        v[idx]
    }
}

/// Eigenvalues of `A^{1/2} Sigma A^{1/2}`, clipped at 0 and sorted descending.
pub fn eigen_weights(a_hat: &[f64], sigma_hat: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = a_hat.len();
    let m = DMatrix::from_fn(k, k, |i, j| {
        a_hat[i].sqrt() * 0.5 * (sigma_hat[i][j] + sigma_hat[j][i]) * a_hat[j].sqrt()
    });
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in A^(1/2) Sigma A^(1/2)".into()));
    }
    let mut g: Vec<f64> = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0))
        .collect();
    g.sort_by(|a, b| b.total_cmp(a));
    Ok(g)
}

/// Draws of `sum_j gamma_j chi2_1`, generated in keyed chunks.
pub fn simulate_weighted_chisq(gammas: &[f64], n_draws: usize, seed: u64) -> Vec<f64> {
    let chunks = n_draws.div_ceil(DRAW_CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = rng::stream(seed, c as u64, 0, Purpose::NullDraws);
            let len = DRAW_CHUNK.min(n_draws - c * DRAW_CHUNK);
            (0..len)
                .map(|_| {
                    gammas
                        .iter()
                        .map(|g| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            g * z * z
                        })
                        .sum::<f64>()
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn floored(v: f64) -> f64 {
    v.max(DENSITY_FLOOR)
}

/// Plug-in estimate of the null law of `n T`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_null(
    samples: &[Sample],
    res: &ResidualSet,
    fits: &[FitResult],
    pooled: &PooledFit,
    rhos: &[RhoFunction],
    weights: &[WeightFunction],
    w: &IntegrationWeight,
    n_draws: usize,
    seed: u64,
    form: CovarianceForm,
) -> Result<NullDistribution> {
    let k = samples.len();
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "the null distribution needs k >= 2 populations, got {k}"
        )));
    }
    if rhos.len() != k || fits.len() != k || weights.len() != k || res.populations() != k {
        return Err(Error::InvalidInput("one score function and fit per population".into()));
    }
    if n_draws == 0 {
        return Err(Error::InvalidInput("need at least one null draw".into()));
    }
    let pi = pooled.proportions.clone();
    let sig: Vec<f64> = fits.iter().map(|f| f.sigma_hat.sigma).collect();

    let mut nu = vec![0.0; k];
    let mut tau = vec![0.0; k];
    for j in 0..k {
        let e: Vec<f64> = res.eps_hat[j].iter().copied().filter(|v| v.is_finite()).collect();
        let m = e.len() as f64;
        nu[j] = e.iter().map(|&u| rhos[j].psi_prime(u)).sum::<f64>() / m;
        tau[j] = e.iter().map(|&u| rhos[j].psi(u).powi(2)).sum::<f64>() / m;
        if nu[j].abs() < NU_MIN {
            return Err(Error::SingularScore { population: j, nu: nu[j] });
        }
    }
    let eff: Vec<f64> = (0..k).map(|j| tau[j] / (nu[j] * nu[j])).collect();

    // wts[s][j][l]: W_j at the l-th covariate of population s
    let wts: Vec<Vec<Vec<f64>>> = (0..k)
        .map(|s| {
            (0..k)
                .map(|j| samples[s].x.iter().map(|&x| weights[j].eval(x)).collect())
                .collect()
        })
        .collect();
    let ratio = |s: usize, j: usize, l: usize| {
        floored(pooled.f_hat_j[s][j][l]) / floored(pooled.f_hat[s][l])
    };
    let wt = |s: usize, j: usize, l: usize| wts[s][j][l];

    let omega: Vec<f64> = (0..k).map(|j| mean(&res.weights[j])).collect();
    let omega_sq: Vec<f64> = (0..k)
        .map(|j| mean(&res.weights[j].iter().map(|w| w * w).collect::<Vec<_>>()))
        .collect();
    let beta: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            (0..k)
                .map(|s| {
                    let n_s = samples[s].len();
                    (0..n_s)
                        .map(|l| {
                            let w = wt(s, j, l);
                            if w > 0.0 {
                                w * ratio(s, j, l)
                            } else {
                                0.0
                            }
                        })
                        .sum::<f64>()
                        / n_s as f64
                })
                .collect()
        })
        .collect();
    let alpha: Vec<Vec<Vec<f64>>> = (0..k)
        .map(|s| {
            let n_s = samples[s].len();
            (0..k)
                .map(|j| {
                    (0..k)
                        .map(|m| {
                            (0..n_s)
                                .map(|l| {
                                    let w = wt(s, j, l) * wt(s, m, l);
                                    if w > 0.0 {
                                        w * ratio(s, j, l) * ratio(s, m, l)
                                    } else {
                                        0.0
                                    }
                                })
                                .sum::<f64>()
                                / n_s as f64
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    // cross[j][l]: moment pairing population l's own weight with W_j f_j / f
    let cross: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            (0..k)
                .map(|l| match form {
                    CovarianceForm::Factorized => omega[l] * beta[j][l],
                    CovarianceForm::Joint => {
                        let n_l = samples[l].len();
                        (0..n_l)
                            .map(|i| {
                                let w = wt(l, l, i) * wt(l, j, i);
                                if w > 0.0 {
                                    w * ratio(l, j, i)
                                } else {
                                    0.0
                                }
                            })
                            .sum::<f64>()
                            / n_l as f64
                    }
                })
                .collect()
        })
        .collect();
    let diag_moment: Vec<f64> = match form {
        CovarianceForm::Factorized => omega.iter().map(|o| o * o).collect(),
        CovarianceForm::Joint => omega_sq,
    };

    let mut sigma_hat = vec![vec![0.0; k]; k];
    for j in 0..k {
        for l in 0..k {
            let root = (pi[j] * pi[l]).sqrt();
            let pooled_term: f64 = (0..k)
                .map(|s| eff[s] * pi[s] * sig[s] * sig[s] * alpha[s][j][l])
                .sum::<f64>()
                * root
                / (sig[j] * sig[l]);
            let mut v = pooled_term
                - sig[l] / sig[j] * root * eff[l] * cross[j][l]
                - sig[j] / sig[l] * root * eff[j] * cross[l][j];
            if j == l {
                v += eff[j] * diag_moment[j];
            }
            sigma_hat[j][l] = v;
        }
    }
    // enforce exact symmetry against rounding
    for j in 0..k {
        for l in (j + 1)..k {
            let avg = 0.5 * (sigma_hat[j][l] + sigma_hat[l][j]);
            sigma_hat[j][l] = avg;
            sigma_hat[l][j] = avg;
        }
    }

    let a_hat: Vec<f64> = (0..k)
        .map(|j| {
            let raw = derivative_norm_sq(&res.eps_hat[j], &res.weights[j], w);
            match form {
                CovarianceForm::Factorized => raw,
                CovarianceForm::Joint => raw / (omega[j] * omega[j]),
            }
        })
        .collect();
    if a_hat.iter().any(|a| !a.is_finite()) {
        return Err(Error::Numerical("non-finite diagonal of A".into()));
    }

    let gammas = eigen_weights(&a_hat, &sigma_hat)?;
    let null_draws = simulate_weighted_chisq(&gammas, n_draws, seed);
    Ok(NullDistribution {
        a_hat,
        sigma_hat,
        gammas,
        null_draws,
        n_draws,
        form,
        ingredients: Some(NullIngredients {
            nu,
            tau,
            efficiency: eff,
            omega,
            proportions: pi,
            sigmas: sig,
            beta,
            alpha,
        }),
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Add-one Monte Carlo p-value `(1 + #{draws >= n T}) / (1 + n_draws)`.
pub fn p_value(t: f64, null: &NullDistribution, n_total: usize) -> f64 {
    let nt = n_total as f64 * t;
    let exceed = null.null_draws.iter().filter(|&&d| d >= nt).count();
    (1 + exceed) as f64 / (1 + null.null_draws.len()) as f64
}

/// Asymptotic power under a root-n local alternative with shift vector `b`:
/// `P((Z + b)' A (Z + b) > c_0.95)`, `Z ~ N(0, Sigma)`.
pub fn local_power(null: &NullDistribution, shift: &[f64], n_draws: usize, seed: u64) -> Result<f64> {
    let k = null.a_hat.len();
    if shift.len() != k || shift.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidInput(format!("shift must have {k} finite entries")));
    }
    if n_draws == 0 {
        return Err(Error::InvalidInput("need at least one draw".into()));
    }
    let sym = DMatrix::from_fn(k, k, |i, j| 0.5 * (null.sigma_hat[i][j] + null.sigma_hat[j][i]));
    let eig = SymmetricEigen::new(sym);
    let root = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    let crit = null.quantile(0.95);
    let chunks = n_draws.div_ceil(DRAW_CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, c as u64, 0, Purpose::PowerDraws);
            let len = DRAW_CHUNK.min(n_draws - c * DRAW_CHUNK);
            let mut z = vec![0.0; k];
            (0..len)
                .filter(|_| {
                    for v in z.iter_mut() {
                        *v = StandardNormal.sample(&mut rng);
                    }
                    let stat: f64 = (0..k)
                        .map(|i| {
                            let zi: f64 = (0..k).map(|m| root[(i, m)] * z[m]).sum();
                            null.a_hat[i] * (zi + shift[i]).powi(2)
                        })
                        .sum();
                    stat > crit
                })
                .count()
        })
        .sum();
    Ok(hits as f64 / n_draws as f64)
}

/// Local-alternative shift
/// `b_j = pi_j^{1/2} / sigma_j * mean_l W_j(X_jl) [Delta_0 - Delta_j](X_jl)`
/// with `Delta_0 = sum_s pi_s Delta_s f_s / f`.
pub fn local_shift(
    samples: &[Sample],
    pooled: &PooledFit,
    res: &ResidualSet,
    sigmas: &[f64],
    deltas: &[&dyn Fn(f64) -> f64],
) -> Result<Vec<f64>> {
    let k = samples.len();
    if deltas.len() != k || sigmas.len() != k {
        return Err(Error::InvalidInput("one drift and scale per population".into()));
    }
    Ok((0..k)
        .map(|j| {
            let n_j = samples[j].len();
            let total: f64 = (0..n_j)
                .map(|l| {
                    let w = res.weights[j][l];
                    if w == 0.0 {
                        return 0.0;
                    }
                    let x = samples[j].x[l];
                    let f = floored(pooled.f_hat[j][l]);
                    let d0: f64 = (0..k)
                        .map(|s| pooled.proportions[s] * deltas[s](x) * pooled.f_hat_j[j][s][l] / f)
                        .sum();
                    w * (d0 - deltas[j](x))
                })
                .sum();
            pooled.proportions[j].sqrt() / sigmas[j] * total / n_j as f64
        })
        .collect())
}
