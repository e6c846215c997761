//! Monte Carlo level and power studies.
//!
//! Covariates are uniform on `[0, 1]`, responses are `m_j(X) + sigma_j eps`
//! with `eps` drawn from a (possibly contaminated) normal law. Every random
//! quantity comes from a keyed stream, so a replication's data depend only on
//! `(seed, replication, population)` and not on the model, the contamination
//! or the order in which replications run.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ecf::CovarianceForm;
use crate::error::{Error, Result};
use crate::pipeline::{run_test, BandwidthRule, TestConfig, TestMethod, WeightSpec};
use crate::rng::{self, Purpose};
use crate::robust::normal_quantile;
use crate::smoothing::Sample;

/// Default error scales `sqrt(0.25)` and `sqrt(0.5)`.
pub const DEFAULT_SIGMAS: [f64; 2] = [0.5, std::f64::consts::FRAC_1_SQRT_2];
/// Confidence level of the level band.
pub const BAND_GAMMA: f64 = 0.01;
/// Standard deviation of the contaminating normal components.
pub const OUTLIER_SD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseCurve {
    One,
    Identity,
    Sine,
    Exp,
    /// Coefficients in increasing degree.
    Polynomial(Vec<f64>),
}

impl BaseCurve {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            BaseCurve::One => 1.0,
            BaseCurve::Identity => x,
            BaseCurve::Sine => (2.0 * std::f64::consts::PI * x).sin(),
            BaseCurve::Exp => x.exp(),
            BaseCurve::Polynomial(c) => c.iter().rev().fold(0.0, |acc, a| acc * x + a),
        }
    }
}

/// `base(x) + slope * x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub base: BaseCurve,
    pub slope: f64,
}

impl Curve {
    pub fn eval(&self, x: f64) -> f64 {
        self.base.eval(x) + self.slope * x
    }
}

/// Null models M1-M4 and fixed alternatives MA1-MA4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    M1,
    M2,
    M3,
    M4,
    MA1,
    MA2,
    MA3,
    MA4,
}

impl Model {
    pub const ALL: [Model; 8] = [
        Model::M1,
        Model::M2,
        Model::M3,
        Model::M4,
        Model::MA1,
        Model::MA2,
        Model::MA3,
        Model::MA4,
    ];

    fn base(&self) -> BaseCurve {
        match self {
            Model::M1 | Model::MA1 => BaseCurve::One,
            Model::M2 | Model::MA2 => BaseCurve::Identity,
            Model::M3 | Model::MA3 => BaseCurve::Sine,
            Model::M4 | Model::MA4 => BaseCurve::Exp,
        }
    }

    pub fn is_alternative(&self) -> bool {
        matches!(self, Model::MA1 | Model::MA2 | Model::MA3 | Model::MA4)
    }

    /// Curves of both populations; under an alternative the second gains `0.5 x`.
    pub fn curves(&self) -> Vec<Curve> {
        let slope2 = if self.is_alternative() { 0.5 } else { 0.0 };
        vec![
            Curve { base: self.base(), slope: 0.0 },
            Curve { base: self.base(), slope: slope2 },
        ]
    }

    /// Null model sharing the same base curve.
    pub fn null_counterpart(&self) -> Model {
        match self {
            Model::M1 | Model::MA1 => Model::M1,
            Model::M2 | Model::MA2 => Model::M2,
            Model::M3 | Model::MA3 => Model::M3,
            Model::M4 | Model::MA4 => Model::M4,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown model '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContaminationKind {
    C0,
    C1,
    C2,
    C3,
    C4,
    CustomMixture,
}

impl fmt::Display for ContaminationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ContaminationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [Self::C0, Self::C1, Self::C2, Self::C3, Self::C4]
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown contamination '{s}'")))
    }
}

/// Per-population normal mixture `(1 - rate_j) N(0, 1) + rate_j N(mean_j, sd^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub kind: ContaminationKind,
    pub rates: Vec<f64>,
    pub means: Vec<f64>,
    pub sd: f64,
}

impl ContaminationSpec {
    pub fn preset(kind: ContaminationKind) -> Result<Self> {
        let (rates, means) = match kind {
            ContaminationKind::C0 => (vec![0.0, 0.0], vec![0.0, 0.0]),
            // outliers centred at j * 5
            ContaminationKind::C1 => (vec![0.05, 0.05], vec![5.0, 10.0]),
            // (-1)^j * 5
            ContaminationKind::C2 => (vec![0.05, 0.05], vec![-5.0, 5.0]),
            // (-1)^j * 10
            ContaminationKind::C3 => (vec![0.05, 0.05], vec![-10.0, 10.0]),
            ContaminationKind::C4 => (vec![0.10, 0.0], vec![10.0, 0.0]),
            ContaminationKind::CustomMixture => {
                return Err(Error::InvalidInput(
                    "custom mixtures need explicit rates and means".into(),
                ))
            }
        };
        Ok(Self { kind, rates, means, sd: OUTLIER_SD })
    }

    pub fn custom(rates: Vec<f64>, means: Vec<f64>, sd: f64) -> Result<Self> {
        let spec = Self { kind: ContaminationKind::CustomMixture, rates, means, sd };
        spec.validate(spec.rates.len())?;
        Ok(spec)
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.rates.len() != k || self.means.len() != k {
            return Err(Error::InvalidInput(format!(
                "contamination needs {k} rates and means"
            )));
        }
        if self.rates.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(Error::InvalidInput("contamination rates must lie in [0, 1)".into()));
        }
        if !(self.sd > 0.0) || self.means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidInput("invalid contamination component".into()));
        }
        if self.kind == ContaminationKind::C0 && self.rates.iter().any(|r| *r != 0.0) {
            return Err(Error::InvalidInput("C0 must have zero contamination".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSelection {
    Classical,
    Robust,
    Both,
}

impl TestSelection {
    pub fn methods(&self) -> Vec<TestMethod> {
        match self {
            TestSelection::Classical => vec![TestMethod::Classical],
            TestSelection::Robust => vec![TestMethod::Robust],
            TestSelection::Both => vec![TestMethod::Classical, TestMethod::Robust],
        }
    }
}

/// One simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub model: Option<Model>,
    pub curves: Vec<Curve>,
    pub sigmas: Vec<f64>,
    pub contamination: ContaminationSpec,
    pub sizes: Vec<usize>,
    pub alpha: f64,
    pub replications: usize,
    pub seed: u64,
    pub bandwidth: BandwidthRule,
    pub test: TestSelection,
    pub n_draws: usize,
    pub weight: WeightSpec,
    pub covariance: CovarianceForm,
}

impl ScenarioConfig {
    /// Paper-style cell: model, contamination and sizes, other settings default.
    pub fn new(model: Model, contamination: ContaminationKind, sizes: [usize; 2]) -> Self {
        Self {
            model: Some(model),
            curves: model.curves(),
            sigmas: DEFAULT_SIGMAS.to_vec(),
            contamination: ContaminationSpec::preset(contamination)
                .expect("preset contaminations are valid"),
            sizes: sizes.to_vec(),
            alpha: 0.05,
            replications: 1000,
            seed: 20_240_601,
            bandwidth: BandwidthRule::CrossValidate,
            test: TestSelection::Both,
            n_draws: 5000,
            weight: WeightSpec::default(),
            covariance: CovarianceForm::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.sizes.len();
        if k < 2 || self.curves.len() != k || self.sigmas.len() != k {
            return Err(Error::InvalidInput(
                "need matching curves, sigmas and sizes for k >= 2 populations".into(),
            ));
        }
        if self.sizes.iter().any(|n| *n < 20) {
            return Err(Error::InvalidInput("every sample size must be at least 20".into()));
        }
        if self.sigmas.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidInput("error scales must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.replications == 0 || self.n_draws == 0 {
            return Err(Error::InvalidInput("replications and n_draws must be positive".into()));
        }
        self.contamination.validate(k)
    }

    pub fn test_config(&self, method: TestMethod, replication: usize) -> TestConfig {
        TestConfig {
            method,
            bandwidth: vec![self.bandwidth.clone()],
            weight: self.weight,
            n_draws: self.n_draws,
            seed: rng::derive(self.seed, replication as u64),
            covariance: self.covariance,
            ..TestConfig::default()
        }
    }
}

/// Draws the populations of one replication.
pub fn generate(sc: &ScenarioConfig, replication: usize) -> Vec<Sample> {
    let rep = replication as u64;
    (0..sc.sizes.len())
        .map(|j| {
            let pop = j as u64;
            let n = sc.sizes[j];
            let mut xr = rng::stream(sc.seed, rep, pop, Purpose::Covariates);
            let mut er = rng::stream(sc.seed, rep, pop, Purpose::Errors);
            let mut cr = rng::stream(sc.seed, rep, pop, Purpose::Contamination);
            let rate = sc.contamination.rates[j];
            let x: Vec<f64> = (0..n).map(|_| xr.random::<f64>()).collect();
            let y = x
                .iter()
                .map(|&xi| {
                    let base: f64 = StandardNormal.sample(&mut er);
                    let u: f64 = cr.random();
                    let alt: f64 = StandardNormal.sample(&mut cr);
                    let eps = if u < rate {
                        sc.contamination.means[j] + sc.contamination.sd * alt
                    } else {
                        base
                    };
                    sc.curves[j].eval(xi) + sc.sigmas[j] * eps
                })
                .collect();
            Sample { label: format!("pop{}", j + 1), x, y }
        })
        .collect()
}

/// Binomial band `[L1, L2]` around `alpha` for `replications` trials.
pub fn level_band(alpha: f64, replications: usize, gamma: f64) -> (f64, f64) {
    let z = normal_quantile(1.0 - gamma / 2.0);
    let half = z * (alpha * (1.0 - alpha) / replications as f64).sqrt();
    (alpha - half, alpha + half)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandFlag {
    Inside,
    Conservative,
    Liberal,
}

impl BandFlag {
    pub fn classify(freq: f64, band: (f64, f64)) -> Self {
        if freq < band.0 {
            BandFlag::Conservative
        } else if freq > band.1 {
            BandFlag::Liberal
        } else {
            BandFlag::Inside
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRow {
    pub contamination: String,
    pub model: String,
    pub sizes: Vec<usize>,
    pub test: TestMethod,
    pub delta: Option<f64>,
    pub replications: usize,
    pub rejections: usize,
    pub failed: usize,
    pub frequency: f64,
    pub band: BandFlag,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RejectionTable {
    pub rows: Vec<RejectionRow>,
}

impl RejectionTable {
    pub fn find(&self, test: TestMethod) -> Option<&RejectionRow> {
        self.rows.iter().find(|r| r.test == test)
    }

    pub fn total_failed(&self) -> usize {
        self.rows.iter().map(|r| r.failed).sum()
    }

    /// CSV with 17 significant digits for floating-point fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "contamination,model,sizes,test,delta,replications,rejections,failed,frequency,band\n",
        );
        for r in &self.rows {
            let sizes: Vec<String> = r.sizes.iter().map(usize::to_string).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.contamination,
                r.model,
                sizes.join("x"),
                r.test.name(),
                r.delta.map(fmt_exact).unwrap_or_default(),
                r.replications,
                r.rejections,
                r.failed,
                fmt_exact(r.frequency),
                match r.band {
                    BandFlag::Inside => "",
                    BandFlag::Conservative => "conservative",
                    BandFlag::Liberal => "liberal",
                }
            ));
        }
        out
    }

    /// Aligned text with a star on frequencies outside the level band.
    pub fn to_pretty(&self) -> String {
        let mut out = format!(
            "{:<6} {:<6} {:<9} {:<10} {:>6} {:>10} {:>6}\n",
            "cont", "model", "sizes", "test", "delta", "freq", "failed"
        );
        for r in &self.rows {
            let sizes: Vec<String> = r.sizes.iter().map(usize::to_string).collect();
            let star = if r.band == BandFlag::Inside { "" } else { "*" };
            out.push_str(&format!(
                "{:<6} {:<6} {:<9} {:<10} {:>6} {:>9.3}{:<1} {:>6}\n",
                r.contamination,
                r.model,
                sizes.join("x"),
                r.test.name(),
                r.delta.map(|d| format!("{d}")).unwrap_or_else(|| "-".into()),
                r.frequency,
                star,
                r.failed
            ));
        }
        out
    }
}

/// Shortest decimal that round-trips to the same `f64`.
pub fn fmt_exact(v: f64) -> String {
    format!("{v:?}")
}

/// Per-replication p-values of every selected test; `None` marks a failure.
pub fn replicate_p_values(sc: &ScenarioConfig) -> Result<Vec<(TestMethod, Vec<Option<f64>>)>> {
    sc.validate()?;
    let methods = sc.test.methods();
    let per_rep: Vec<Vec<Option<f64>>> = (0..sc.replications)
        .into_par_iter()
        .map(|rep| {
            let samples = generate(sc, rep);
            methods
                .iter()
                .map(|&m| {
                    let cfg = sc.test_config(m, rep);
                    match run_test(&samples, &cfg) {
                        Ok(o) => Some(o.result.p_value),
                        Err(e) => {
                            log::debug!("replication {rep} ({}) failed: {e}", m.name());
                            None
                        }
                    }
                })
                .collect()
        })
        .collect();
    Ok(methods
        .iter()
        .enumerate()
        .map(|(i, &m)| (m, per_rep.iter().map(|r| r[i]).collect()))
        .collect())
}

fn label_of(sc: &ScenarioConfig) -> String {
    sc.model.map_or_else(|| "custom".to_string(), |m| m.to_string())
}

/// Rejection frequencies `#{p <= alpha} / NR` of every selected test.
pub fn run_level_power(sc: &ScenarioConfig) -> Result<RejectionTable> {
    run_cell(sc, None)
}

fn run_cell(sc: &ScenarioConfig, delta: Option<f64>) -> Result<RejectionTable> {
    let band = level_band(sc.alpha, sc.replications, BAND_GAMMA);
    let rows = replicate_p_values(sc)?
        .into_iter()
        .map(|(test, ps)| {
            let rejections = ps.iter().filter(|p| p.is_some_and(|p| p <= sc.alpha)).count();
            let failed = ps.iter().filter(|p| p.is_none()).count();
            let frequency = rejections as f64 / sc.replications as f64;
            RejectionRow {
                contamination: sc.contamination.kind.to_string(),
                model: label_of(sc),
                sizes: sc.sizes.clone(),
                test,
                delta,
                replications: sc.replications,
                rejections,
                failed,
                frequency,
                band: BandFlag::classify(frequency, band),
            }
        })
        .collect();
    Ok(RejectionTable { rows })
}

/// Grid of drifts for `m_2 = m_1 + Delta x / sqrt(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContiguousSpec {
    pub delta_grid: Vec<f64>,
}

impl Default for ContiguousSpec {
    fn default() -> Self {
        Self { delta_grid: vec![0.0, 2.0, 4.0, 6.0, 8.0] }
    }
}

impl ContiguousSpec {
    pub fn validate(&self) -> Result<()> {
        if self.delta_grid.windows(2).any(|w| w[1] < w[0]) || !self.delta_grid.contains(&0.0) {
            return Err(Error::InvalidInput(
                "delta grid must be sorted ascending and contain 0".into(),
            ));
        }
        Ok(())
    }
}

/// Power curve under contiguous alternatives; one table row per `(Delta, test)`.
///
/// The scenario's curves give `m_1`; the second population's curve becomes
/// `m_1 + Delta x / sqrt(n_1 + n_2)`. Random streams are shared across the
/// grid, so `Delta = 0` reproduces the level run on the null model exactly.
pub fn run_contiguous(sc: &ScenarioConfig, cs: &ContiguousSpec) -> Result<RejectionTable> {
    if sc.sizes.len() != 2 {
        return Err(Error::InvalidInput("contiguous alternatives need k = 2".into()));
    }
    cs.validate()?;
    let n: usize = sc.sizes.iter().sum();
    let mut table = RejectionTable::default();
    for &delta in &cs.delta_grid {
        let mut cell = sc.clone();
        cell.model = sc.model.map(|m| m.null_counterpart());
        let m1 = sc.curves[0].clone();
        cell.curves = vec![
            m1.clone(),
            Curve { base: m1.base, slope: m1.slope + delta / (n as f64).sqrt() },
        ];
        table.rows.extend(run_cell(&cell, Some(delta))?.rows);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_errors_are_standard_normal() {
        let mut sc = ScenarioConfig::new(Model::M1, ContaminationKind::C0, [100_000, 20]);
        sc.sigmas = vec![1.0, 1.0];
        let s = generate(&sc, 0);
        let e: Vec<f64> = s[0].y.iter().map(|y| y - 1.0).collect();
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / e.len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
        assert!(s[0].x.iter().all(|x| (0.0..1.0).contains(x)));
    }

    #[test]
    fn c4_leaves_second_population_clean() {
        let clean = ScenarioConfig::new(Model::M1, ContaminationKind::C0, [500, 500]);
        let c4 = ScenarioConfig::new(Model::M1, ContaminationKind::C4, [500, 500]);
        let a = generate(&clean, 3);
        let b = generate(&c4, 3);
        assert_eq!(a[1], b[1]);
        let outliers = a[0].y.iter().zip(&b[0].y).filter(|(u, v)| u != v).count();
        assert!(outliers > 25 && outliers < 80, "{outliers}");
        // contaminated points sit near 1 + 0.5 * 10
        assert!(a[0].y.iter().zip(&b[0].y).filter(|(u, v)| u != v).all(|(_, v)| (v - 6.0).abs() < 1.0));
    }

    #[test]
    fn zero_rate_mixture_equals_clean() {
        let clean = ScenarioConfig::new(Model::M3, ContaminationKind::C0, [60, 40]);
        let mut custom = clean.clone();
        custom.contamination = ContaminationSpec::custom(vec![0.0, 0.0], vec![3.0, -3.0], 0.5).unwrap();
        assert_eq!(generate(&clean, 9), generate(&custom, 9));
    }

    #[test]
    fn contamination_presets_follow_stated_percentages() {
        let c1 = ContaminationSpec::preset(ContaminationKind::C1).unwrap();
        assert_eq!(c1.rates, vec![0.05, 0.05]);
        assert_eq!(c1.means, vec![5.0, 10.0]);
        let c2 = ContaminationSpec::preset(ContaminationKind::C2).unwrap();
        assert_eq!(c2.means, vec![-5.0, 5.0]);
        let c3 = ContaminationSpec::preset(ContaminationKind::C3).unwrap();
        assert_eq!(c3.means, vec![-10.0, 10.0]);
        let c4 = ContaminationSpec::preset(ContaminationKind::C4).unwrap();
        assert_eq!(c4.rates, vec![0.10, 0.0]);
    }

    #[test]
    fn models_match_definitions() {
        let x = 0.3;
        assert_eq!(Model::M1.curves()[1].eval(x), 1.0);
        assert_eq!(Model::M2.curves()[0].eval(x), x);
        assert!((Model::M3.curves()[0].eval(0.25) - 1.0).abs() < 1e-15);
        assert_eq!(Model::M4.curves()[1].eval(x), x.exp());
        assert_eq!(Model::MA1.curves()[1].eval(x), 1.0 + 0.5 * x);
        assert_eq!(Model::MA3.curves()[0].eval(x), Model::M3.curves()[0].eval(x));
        assert_eq!("ma2".parse::<Model>().unwrap(), Model::MA2);
    }

    #[test]
    fn band_matches_formula() {
        let (l1, l2) = level_band(0.05, 1000, 0.01);
        let half = 2.5758293035489 * (0.05f64 * 0.95 / 1000.0).sqrt();
        assert!((l1 - (0.05 - half)).abs() < 1e-10);
        assert!((l2 - (0.05 + half)).abs() < 1e-10);
        assert_eq!(BandFlag::classify(0.074, (l1, l2)), BandFlag::Liberal);
        assert_eq!(BandFlag::classify(0.055, (l1, l2)), BandFlag::Inside);
        assert_eq!(BandFlag::classify(0.02, (l1, l2)), BandFlag::Conservative);
    }

    #[test]
    fn validation() {
        let mut sc = ScenarioConfig::new(Model::M1, ContaminationKind::C0, [10, 100]);
        assert!(sc.validate().is_err());
        sc.sizes = vec![100, 100];
        sc.alpha = 0.0;
        assert!(sc.validate().is_err());
        sc.alpha = 1.0;
        assert!(sc.validate().is_ok());
        assert!(ContiguousSpec { delta_grid: vec![2.0, 4.0] }.validate().is_err());
        assert!(ContiguousSpec { delta_grid: vec![0.0, 4.0, 2.0] }.validate().is_err());
    }
}
