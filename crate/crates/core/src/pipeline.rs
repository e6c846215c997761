//! End-to-end test: scale, bandwidth, fits, pooled curve, residuals,
//! statistic, null law, p-value.

use serde::{Deserialize, Serialize};

use crate::bandwidth::{cv_select, default_grid, BandwidthSpec, CvCriterion};
use crate::ecf::{
    estimate_null, p_value, residuals, test_statistic, CovarianceForm, IntegrationWeight,
    NullDistribution, ResidualSet, WeightFunction,
};
use crate::error::{Error, Result};
use crate::robust::{diff_median_scale, diff_rms_scale, RhoFunction, ScaleEstimate, TUKEY_C};
use crate::smoothing::{fit, pooled_mu0, FitMethod, FitResult, FitStatus, Kernel, PooledFit, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    /// Nadaraya-Watson fits, Rice-type scale, least-squares score.
    Classical,
    /// Local M-fits, median difference scale, bounded score.
    Robust,
}

impl TestMethod {
    pub fn name(&self) -> &'static str {
        match self {
            TestMethod::Classical => "classical",
            TestMethod::Robust => "robust",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    Fixed(f64),
    /// Leave-one-out CV over the default normal-reference grid.
    CrossValidate,
    /// Leave-one-out CV over an explicit grid.
    Grid(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightShape {
    #[default]
    Indicator,
    Trapezoid,
}

/// `W_j` built from quantiles of the pooled covariates, shared by all populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub shape: WeightShape,
    pub q_lo: f64,
    pub q_hi: f64,
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self {
            shape: WeightShape::Indicator,
            q_lo: 0.05,
            q_hi: 0.95,
        }
    }
}

impl WeightSpec {
    pub fn build(&self, pooled_x: &[f64]) -> Result<WeightFunction> {
        match self.shape {
            WeightShape::Indicator => {
                WeightFunction::indicator_from_quantiles(pooled_x, self.q_lo, self.q_hi)
            }
            WeightShape::Trapezoid => {
                WeightFunction::trapezoid_from_quantiles(pooled_x, self.q_lo, self.q_hi)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub method: TestMethod,
    /// Score function of the robust fits.
    pub rho: RhoFunction,
    pub kernel: Kernel,
    /// One rule shared by all populations, or one per population.
    pub bandwidth: Vec<BandwidthRule>,
    /// Density bandwidths; the regression bandwidths are reused when absent.
    pub density_bandwidth: Option<Vec<f64>>,
    pub weight: WeightSpec,
    pub integration: IntegrationWeight,
    pub n_draws: usize,
    pub seed: u64,
    pub covariance: CovarianceForm,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            method: TestMethod::Robust,
            rho: RhoFunction {
                family: crate::robust::RhoFamily::TukeyBisquare,
                c: TUKEY_C,
            },
            kernel: Kernel::Epanechnikov,
            bandwidth: vec![BandwidthRule::CrossValidate],
            density_bandwidth: None,
            weight: WeightSpec::default(),
            integration: IntegrationWeight::StdNormalDensity,
            n_draws: 10_000,
            seed: 1,
            covariance: CovarianceForm::default(),
        }
    }
}

impl TestConfig {
    pub fn with_method(mut self, method: TestMethod) -> Self {
        self.method = method;
        self
    }

    pub fn fit_method(&self) -> FitMethod {
        match self.method {
            TestMethod::Classical => FitMethod::Classical,
            TestMethod::Robust => FitMethod::Robust(self.rho),
        }
    }

    /// Score function entering the null covariance.
    pub fn score(&self) -> RhoFunction {
        match self.method {
            TestMethod::Classical => RhoFunction::least_squares(),
            TestMethod::Robust => self.rho,
        }
    }

    pub fn criterion(&self) -> CvCriterion {
        match self.method {
            TestMethod::Classical => CvCriterion::LeastSquares,
            TestMethod::Robust => CvCriterion::TauScale,
        }
    }

    fn rule(&self, j: usize) -> &BandwidthRule {
        if self.bandwidth.len() == 1 {
            &self.bandwidth[0]
        } else {
            &self.bandwidth[j]
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.bandwidth.len() != 1 && self.bandwidth.len() != k {
            return Err(Error::InvalidInput(format!(
                "need 1 or {k} bandwidth rules, got {}",
                self.bandwidth.len()
            )));
        }
        if let Some(d) = &self.density_bandwidth {
            if d.len() != k {
                return Err(Error::InvalidInput(format!(
                    "need {k} density bandwidths, got {}",
                    d.len()
                )));
            }
        }
        if self.n_draws == 0 {
            return Err(Error::InvalidInput("n_draws must be positive".into()));
        }
        self.integration.validate()
    }
}

/// Statistic, null law and p-value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub t: f64,
    pub n_t: f64,
    pub n_total: usize,
    pub p_value: f64,
    pub per_population_norms: Vec<f64>,
    pub null: NullDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationDiagnostics {
    pub label: String,
    pub n: usize,
    pub sigma_hat: f64,
    pub bandwidth: f64,
    pub omega_hat: f64,
    pub empty_windows: usize,
    pub not_converged: usize,
}

/// Everything produced by one run of the test.
#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub result: TestResult,
    pub diagnostics: Vec<PopulationDiagnostics>,
    pub fits: Vec<FitResult>,
    pub pooled: PooledFit,
    pub residuals: ResidualSet,
    pub weights: Vec<WeightFunction>,
}

pub fn scale_for(method: TestMethod, sample: &Sample) -> Result<ScaleEstimate> {
    match method {
        TestMethod::Classical => diff_rms_scale(sample),
        TestMethod::Robust => diff_median_scale(sample),
    }
}

/// Resolves one population's bandwidth.
pub fn select_bandwidth(
    cfg: &TestConfig,
    rule: &BandwidthRule,
    sample: &Sample,
    sigma: &ScaleEstimate,
) -> Result<f64> {
    let spec = match rule {
        BandwidthRule::Fixed(h) => BandwidthSpec::Fixed(*h),
        BandwidthRule::CrossValidate => BandwidthSpec::GridCv {
            grid: default_grid(&sample.x),
            criterion: cfg.criterion(),
        },
        BandwidthRule::Grid(g) => BandwidthSpec::GridCv {
            grid: g.clone(),
            criterion: cfg.criterion(),
        },
    };
    cv_select(sample, &spec, cfg.fit_method(), cfg.kernel, sigma)
}

/// Runs the full test on `k >= 2` populations.
pub fn run_test(samples: &[Sample], cfg: &TestConfig) -> Result<TestOutcome> {
    let k = samples.len();
    if k < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 populations, got {k}")));
    }
    cfg.validate(k)?;
    let mut fits = Vec::with_capacity(k);
    for (j, s) in samples.iter().enumerate() {
        let sigma = scale_for(cfg.method, s)?;
        let h = select_bandwidth(cfg, cfg.rule(j), s, &sigma)?;
        fits.push(fit(s, cfg.fit_method(), sigma, cfg.kernel, h)?);
    }
    let pooled = pooled_mu0(samples, &fits, cfg.density_bandwidth.as_deref())?;
    let pooled_x: Vec<f64> = samples.iter().flat_map(|s| s.x.iter().copied()).collect();
    let w = cfg.weight.build(&pooled_x)?;
    let weights = vec![w; k];
    let res = residuals(samples, &fits, &pooled, &weights)?;
    let (t, norms) = test_statistic(&res, &cfg.integration);
    let rhos = vec![cfg.score(); k];
    let null = estimate_null(
        samples,
        &res,
        &fits,
        &pooled,
        &rhos,
        &weights,
        &cfg.integration,
        cfg.n_draws,
        cfg.seed,
        cfg.covariance,
    )?;
    let n_total: usize = samples.iter().map(Sample::len).sum();
    let p = p_value(t, &null, n_total);
    let diagnostics = samples
        .iter()
        .zip(&fits)
        .zip(&res.weights)
        .map(|((s, f), wv)| PopulationDiagnostics {
            label: s.label.clone(),
            n: s.len(),
            sigma_hat: f.sigma_hat.sigma,
            bandwidth: f.bandwidth,
            omega_hat: wv.iter().sum::<f64>() / wv.len() as f64,
            empty_windows: f.count(FitStatus::EmptyNeighborhood),
            not_converged: f.count(FitStatus::NoConvergence),
        })
        .collect();
    Ok(TestOutcome {
        result: TestResult {
            t,
            n_t: n_total as f64 * t,
            n_total,
            p_value: p,
            per_population_norms: norms,
            null,
        },
        diagnostics,
        fits,
        pooled,
        residuals: res,
        weights,
    })
}
