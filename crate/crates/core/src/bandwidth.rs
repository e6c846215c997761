//! Leave-one-out cross-validated bandwidth selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::robust::{tau_scale, ScaleEstimate};
use crate::smoothing::{leave_one_out, FitMethod, FitStatus, Kernel, Sample, SortedSample};

/// Largest fraction of undefined leave-one-out fits tolerated at a grid point.
pub const MAX_FLAGGED_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvCriterion {
    /// Mean squared leave-one-out residual.
    LeastSquares,
    /// Squared tau-scale of the leave-one-out residuals.
    TauScale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthSpec {
    Fixed(f64),
    GridCv {
        grid: Vec<f64>,
        criterion: CvCriterion,
    },
}

impl BandwidthSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            BandwidthSpec::Fixed(h) => {
                if !(*h > 0.0) || !h.is_finite() {
                    return Err(Error::InvalidInput(format!("bandwidth must be positive, got {h}")));
                }
            }
            BandwidthSpec::GridCv { grid, .. } => {
                if grid.is_empty() {
                    return Err(Error::InvalidInput("bandwidth grid is empty".into()));
                }
                if grid.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
                    return Err(Error::InvalidInput("bandwidth grid must be positive".into()));
                }
                if grid.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidInput(
                        "bandwidth grid must be strictly increasing".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Normal-reference pilot `1.06 sd(x) n^{-1/5}`.
pub fn reference_bandwidth(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    1.06 * var.sqrt() * n.powf(-0.2)
}

/// `points` log-spaced bandwidths from `lo_mult` to `hi_mult` times `h_ref`.
pub fn log_grid(h_ref: f64, lo_mult: f64, hi_mult: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![h_ref * lo_mult];
    }
    let (a, b) = ((h_ref * lo_mult).ln(), (h_ref * hi_mult).ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Default cross-validation grid: 20 points from `0.5 h_ref` to `3 h_ref`.
pub fn default_grid(x: &[f64]) -> Vec<f64> {
    log_grid(reference_bandwidth(x), 0.5, 3.0, 20)
}

/// Warns when `n h^4 > 1`, i.e. the bandwidth is too wide for the bias to vanish.
pub fn check_admissible(n: usize, h: f64) -> bool {
    let ok = n as f64 * h.powi(4) <= 1.0;
    if !ok {
        log::warn!("bandwidth {h} is large for n = {n}: n h^4 = {:.3} > 1", n as f64 * h.powi(4));
    }
    ok
}

/// Leave-one-out criterion value at every grid point; `None` marks grid points
/// with more than 5% undefined fits.
pub fn cv_curve(
    sample: &Sample,
    grid: &[f64],
    criterion: CvCriterion,
    method: FitMethod,
    kernel: Kernel,
    sigma: &ScaleEstimate,
) -> Vec<Option<f64>> {
    let sorted = SortedSample::new(sample);
    let n = sample.len();
    let loo: Vec<_> = grid
        .iter()
        .map(|&h| leave_one_out(&sorted, method, sigma.sigma, kernel, h))
        .collect();
    let valid: Vec<bool> = loo
        .iter()
        .map(|fits| {
            let flagged = fits
                .iter()
                .filter(|p| p.status == FitStatus::EmptyNeighborhood)
                .count();
            flagged as f64 <= MAX_FLAGGED_FRACTION * n as f64
        })
        .collect();
    // drop the union of empty windows over admissible grid points
    let keep: Vec<bool> = (0..n)
        .map(|i| {
            loo.iter()
                .zip(&valid)
                .filter(|(_, v)| **v)
                .all(|(fits, _)| fits[i].get().is_some())
        })
        .collect();
    loo.iter()
        .zip(&valid)
        .map(|(fits, &ok)| {
            if !ok {
                return None;
            }
            let r: Vec<f64> = (0..n)
                .filter(|&i| keep[i])
                .map(|i| sample.y[i] - fits[i].value)
                .collect();
            if r.is_empty() {
                return None;
            }
            Some(match criterion {
                CvCriterion::LeastSquares => r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64,
                CvCriterion::TauScale => tau_scale(&r).map_or(0.0, |s| s.sigma * s.sigma),
            })
        })
        .collect()
}

/// Returns the fixed bandwidth, or the grid minimizer of the
/// cross-validation criterion (ties go to the smaller bandwidth).
pub fn cv_select(
    sample: &Sample,
    spec: &BandwidthSpec,
    method: FitMethod,
    kernel: Kernel,
    sigma: &ScaleEstimate,
) -> Result<f64> {
    spec.validate()?;
    let h = match spec {
        BandwidthSpec::Fixed(h) => *h,
        BandwidthSpec::GridCv { grid, criterion } => {
            if grid.len() == 1 {
                grid[0]
            } else {
                let curve = cv_curve(sample, grid, *criterion, method, kernel, sigma);
                let mut best: Option<(f64, f64)> = None;
                for (&h, c) in grid.iter().zip(curve) {
                    if let Some(c) = c {
                        if best.is_none_or(|(_, b)| c < b) {
                            best = Some((h, c));
                        }
                    }
                }
                best.ok_or(Error::AllDegenerate)?.0
            }
        }
    };
    check_admissible(sample.len(), h);
    Ok(h)
}
