//! Data ingestion, scenario files and report serialization.

use std::collections::HashMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bandwidth::{cv_curve, default_grid};
use crate::ecf::{CovarianceForm, IntegrationWeight};
use crate::error::{Error, Result};
use crate::pipeline::{
    run_test, scale_for, select_bandwidth, BandwidthRule, PopulationDiagnostics, TestConfig,
    TestMethod, WeightShape, WeightSpec,
};
use crate::robust::{RhoFunction, TUKEY_C};
use crate::simulation::{
    fmt_exact, run_contiguous, run_level_power, BaseCurve, ContaminationKind, ContaminationSpec,
    ContiguousSpec, Curve, Model, RejectionTable, ScenarioConfig, TestSelection, DEFAULT_SIGMAS,
};
use crate::smoothing::{Kernel, Sample};

/// Minimum number of rows per group.
pub const MIN_GROUP_SIZE: usize = 20;
/// Current scenario file version.
pub const SCENARIO_VERSION: u32 = 1;

/// Caveats attached to every report.
pub const FIDELITY_NOTES: [&str; 2] = [
    "the statistic uses the squared weighted L2 distance between residual characteristic functions",
    "contaminated errors are (1 - r) N(0,1) + r N(mu, 0.1^2) with r the stated outlier percentage",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub group_col: String,
    pub x_col: String,
    pub y_col: String,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            group_col: "group".into(),
            x_col: "x".into(),
            y_col: "y".into(),
        }
    }
}

/// Long-format data, groups in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn groups(&self) -> Vec<&str> {
        self.samples.iter().map(|s| s.label.as_str()).collect()
    }

    /// Serializes as long-format CSV with the default schema.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,x,y\n");
        for s in &self.samples {
            for (x, y) in s.x.iter().zip(&s.y) {
                out.push_str(&format!("{},{},{}\n", s.label, fmt_exact(*x), fmt_exact(*y)));
            }
        }
        out
    }
}

pub fn ingest_csv(path: &Path, schema: &Schema) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ingest_reader(file, schema)
}

pub fn ingest_reader(reader: impl Read, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
    };
    let (gi, xi, yi) = (col(&schema.group_col)?, col(&schema.x_col)?, col(&schema.y_col)?);

    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut data: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("{name} value '{raw}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { line, message: format!("{name} value '{raw}' is not finite") });
            }
            Ok(v)
        };
        let x = field(xi, &schema.x_col)?;
        let y = field(yi, &schema.y_col)?;
        let g = rec.get(gi).unwrap_or("").to_string();
        let j = *index.entry(g.clone()).or_insert_with(|| {
            order.push(g);
            data.push((Vec::new(), Vec::new()));
            data.len() - 1
        });
        data[j].0.push(x);
        data[j].1.push(y);
    }
    if order.len() < 2 {
        return Err(Error::TooFewGroups(order.len()));
    }
    let samples = order
        .into_iter()
        .zip(data)
        .map(|(g, (x, y))| {
            if x.len() < MIN_GROUP_SIZE {
                return Err(Error::InsufficientData(format!(
                    "group '{g}' has {} rows, need at least {MIN_GROUP_SIZE}",
                    x.len()
                )));
            }
            Sample::new(g, x, y)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { samples })
}

/// Converts wide data with column pairs `<group>_x, <group>_y` to long format.
/// Empty cells end a group's column.
pub fn wide_to_long(reader: impl Read) -> Result<String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .clone();
    let mut pairs = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if let Some(g) = h.strip_suffix("_x") {
            let yi = headers
                .iter()
                .position(|c| c == format!("{g}_y"))
                .ok_or_else(|| Error::Schema(format!("column '{g}_x' has no '{g}_y'")))?;
            pairs.push((g.to_string(), i, yi));
        }
    }
    if pairs.is_empty() {
        return Err(Error::Schema("no '<group>_x' columns".into()));
    }
    let mut rows: Vec<Vec<(String, String)>> = vec![Vec::new(); pairs.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        for (p, (_, xi, yi)) in pairs.iter().enumerate() {
            let (x, y) = (rec.get(*xi).unwrap_or(""), rec.get(*yi).unwrap_or(""));
            if !x.is_empty() && !y.is_empty() {
                rows[p].push((x.to_string(), y.to_string()));
            }
        }
    }
    let mut out = String::from("group,x,y\n");
    for ((g, _, _), r) in pairs.iter().zip(rows) {
        for (x, y) in r {
            out.push_str(&format!("{g},{x},{y}\n"));
        }
    }
    Ok(out)
}

/// Options of a single data analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOptions {
    pub methods: TestSelection,
    /// One rule for all groups or one per group.
    pub bandwidth: Vec<BandwidthRule>,
    pub weight: WeightSpec,
    pub integration: IntegrationWeight,
    pub rho: RhoFunction,
    pub kernel: Kernel,
    pub n_draws: usize,
    pub seed: u64,
    pub covariance: CovarianceForm,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self {
            methods: TestSelection::Robust,
            bandwidth: vec![BandwidthRule::CrossValidate],
            weight: WeightSpec::default(),
            integration: IntegrationWeight::StdNormalDensity,
            rho: RhoFunction::tukey(TUKEY_C).expect("valid constant"),
            kernel: Kernel::Epanechnikov,
            n_draws: 10_000,
            seed: 1,
            covariance: CovarianceForm::default(),
        }
    }
}

impl TestOptions {
    pub fn config(&self, method: TestMethod) -> TestConfig {
        TestConfig {
            method,
            rho: self.rho,
            kernel: self.kernel,
            bandwidth: self.bandwidth.clone(),
            density_bandwidth: None,
            weight: self.weight,
            integration: self.integration.clone(),
            n_draws: self.n_draws,
            seed: self.seed,
            covariance: self.covariance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportResult {
    pub t: f64,
    pub n_t: f64,
    pub n_total: usize,
    pub p_value: f64,
    pub per_population_norms: Vec<f64>,
    pub a_hat: Vec<f64>,
    pub sigma_hat: Vec<Vec<f64>>,
    pub gammas: Vec<f64>,
    pub null_quantile_95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: TestMethod,
    pub config: TestConfig,
    pub result: ReportResult,
    pub diagnostics: Vec<PopulationDiagnostics>,
    pub fidelity_notes: Vec<String>,
}

impl RunReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} test: T = {:.6e}, nT = {:.4}, p = {:.4}\n",
            self.method.name(),
            self.result.t,
            self.result.n_t,
            self.result.p_value
        );
        for d in &self.diagnostics {
            s.push_str(&format!(
                "  {:<12} n = {:<5} sigma = {:.4}  h = {:.4}  omega = {:.3}  empty = {}  unconverged = {}\n",
                d.label, d.n, d.sigma_hat, d.bandwidth, d.omega_hat, d.empty_windows, d.not_converged
            ));
        }
        s
    }
}

/// Runs every selected test on the dataset.
pub fn cmd_test(data: &Dataset, opts: &TestOptions) -> Result<Vec<RunReport>> {
    opts.methods
        .methods()
        .into_iter()
        .map(|m| {
            let cfg = opts.config(m);
            let out = run_test(&data.samples, &cfg)?;
            let r = out.result;
            Ok(RunReport {
                method: m,
                result: ReportResult {
                    t: r.t,
                    n_t: r.n_t,
                    n_total: r.n_total,
                    p_value: r.p_value,
                    per_population_norms: r.per_population_norms,
                    null_quantile_95: r.null.quantile(0.95),
                    a_hat: r.null.a_hat,
                    sigma_hat: r.null.sigma_hat,
                    gammas: r.null.gammas,
                },
                config: cfg,
                diagnostics: out.diagnostics,
                fidelity_notes: FIDELITY_NOTES.iter().map(|s| s.to_string()).collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub reports: Vec<RunReport>,
}

pub fn reports_to_json(reports: &[RunReport]) -> Result<String> {
    serde_json::to_string_pretty(&ReportFile { reports: reports.to_vec() })
        .map_err(|e| Error::Numerical(format!("cannot serialize report: {e}")))
}

pub fn reports_from_json(s: &str) -> Result<Vec<RunReport>> {
    serde_json::from_str::<ReportFile>(s)
        .map(|f| f.reports)
        .map_err(|e| Error::Parse { line: e.line() as u64, message: e.to_string() })
}

/// p-values over a grid of bandwidth pairs for two groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueSurface {
    pub method: TestMethod,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    /// `p[i][j]` at `(h1[i], h2[j])`.
    pub p: Vec<Vec<f64>>,
}

impl PValueSurface {
    /// Matrix CSV: first column `h1`, one column per `h2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h1\\h2");
        for h in &self.h2 {
            out.push(',');
            out.push_str(&fmt_exact(*h));
        }
        out.push('\n');
        for (h, row) in self.h1.iter().zip(&self.p) {
            out.push_str(&fmt_exact(*h));
            for v in row {
                out.push(',');
                out.push_str(&fmt_exact(*v));
            }
            out.push('\n');
        }
        out
    }
}

pub fn cmd_power_surface(
    data: &Dataset,
    opts: &TestOptions,
    method: TestMethod,
    h1: &[f64],
    h2: &[f64],
) -> Result<PValueSurface> {
    if data.samples.len() != 2 {
        return Err(Error::InvalidInput("the p-value surface needs exactly 2 groups".into()));
    }
    if h1.is_empty() || h2.is_empty() || h1.iter().chain(h2).any(|h| !(*h > 0.0)) {
        return Err(Error::InvalidInput("bandwidth grids must be non-empty and positive".into()));
    }
    let p = h1
        .iter()
        .map(|&a| {
            h2.iter()
                .map(|&b| {
                    let mut o = opts.clone();
                    o.bandwidth = vec![BandwidthRule::Fixed(a), BandwidthRule::Fixed(b)];
                    run_test(&data.samples, &o.config(method)).map(|r| r.result.p_value)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PValueSurface { method, h1: h1.to_vec(), h2: h2.to_vec(), p })
}

/// Cross-validation curve of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthReport {
    pub group: String,
    pub method: TestMethod,
    pub grid: Vec<f64>,
    pub criterion: Vec<Option<f64>>,
    pub selected: f64,
}

pub fn cmd_bandwidth(data: &Dataset, opts: &TestOptions) -> Result<Vec<BandwidthReport>> {
    let mut out = Vec::new();
    for m in opts.methods.methods() {
        let cfg = opts.config(m);
        cfg.validate(data.samples.len())?;
        for (j, s) in data.samples.iter().enumerate() {
            let sigma = scale_for(m, s)?;
            let rule = if cfg.bandwidth.len() == 1 { &cfg.bandwidth[0] } else { &cfg.bandwidth[j] };
            let grid = match rule {
                BandwidthRule::Fixed(h) => vec![*h],
                BandwidthRule::CrossValidate => default_grid(&s.x),
                BandwidthRule::Grid(g) => g.clone(),
            };
            let criterion = cv_curve(s, &grid, cfg.criterion(), cfg.fit_method(), cfg.kernel, &sigma);
            let selected = select_bandwidth(&cfg, rule, s, &sigma)?;
            out.push(BandwidthReport { group: s.label.clone(), method: m, grid, criterion, selected });
        }
    }
    Ok(out)
}

pub fn bandwidth_csv(reports: &[BandwidthReport]) -> String {
    let mut out = String::from("group,method,h,criterion,selected\n");
    for r in reports {
        for (h, c) in r.grid.iter().zip(&r.criterion) {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.group,
                r.method.name(),
                fmt_exact(*h),
                c.map(fmt_exact).unwrap_or_default(),
                u8::from(*h == r.selected)
            ));
        }
    }
    out
}

/// Bandwidth entry of a scenario file: a number or `"cv"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthEntry {
    Fixed(f64),
    Named(String),
}

impl BandwidthEntry {
    pub fn rule(&self) -> Result<BandwidthRule> {
        match self {
            BandwidthEntry::Fixed(h) if *h > 0.0 => Ok(BandwidthRule::Fixed(*h)),
            BandwidthEntry::Named(s) if s == "cv" => Ok(BandwidthRule::CrossValidate),
            other => Err(Error::Config {
                path: "bandwidth".into(),
                message: format!("expected a positive number or \"cv\", got {other:?}"),
            }),
        }
    }
}

/// Polynomial regression curve for custom scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomCurves {
    /// Per-population coefficients in increasing degree.
    pub polynomials: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomContamination {
    pub rates: Vec<f64>,
    pub means: Vec<f64>,
    #[serde(default = "default_outlier_sd")]
    pub sd: f64,
}

fn default_outlier_sd() -> f64 {
    crate::simulation::OUTLIER_SD
}

/// Simulation scenario file.
///
/// ```toml
/// version = 1
/// models = ["M1", "MA1"]
/// contaminations = ["C0", "C4"]
/// sizes = [[100, 100]]
/// replications = 1000
/// seed = 7
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default)]
    pub models: Vec<Model>,
    pub custom_curves: Option<CustomCurves>,
    #[serde(default)]
    pub contaminations: Vec<ContaminationKind>,
    pub custom_contamination: Option<CustomContamination>,
    pub sizes: Vec<Vec<usize>>,
    pub sigmas: Option<Vec<f64>>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: BandwidthEntry,
    #[serde(default = "default_test")]
    pub test: TestSelection,
    #[serde(default = "default_draws")]
    pub n_draws: usize,
    #[serde(default = "default_quantiles")]
    pub weight_quantiles: [f64; 2],
    #[serde(default)]
    pub covariance: CovarianceForm,
    pub delta: Option<Vec<f64>>,
}

fn default_alpha() -> f64 {
    0.05
}
fn default_replications() -> usize {
    1000
}
fn default_bandwidth() -> BandwidthEntry {
    BandwidthEntry::Named("cv".into())
}
fn default_test() -> TestSelection {
    TestSelection::Both
}
fn default_draws() -> usize {
    5000
}
fn default_quantiles() -> [f64; 2] {
    [0.05, 0.95]
}

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let f: ScenarioFile = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].lines().count().max(1));
            config_err(
                &line.map_or_else(|| "scenario".to_string(), |l| format!("scenario line {l}")),
                e.message().to_string(),
            )
        })?;
        if f.version != SCENARIO_VERSION {
            return Err(config_err(
                "version",
                format!("unsupported version {}, expected {SCENARIO_VERSION}", f.version),
            ));
        }
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Expands the file into simulation cells, ordered by contamination, model, sizes.
    pub fn cells(&self) -> Result<Vec<ScenarioConfig>> {
        if self.sizes.is_empty() {
            return Err(config_err("sizes", "at least one size pair is required"));
        }
        let mut curves: Vec<(Option<Model>, Vec<Curve>)> =
            self.models.iter().map(|m| (Some(*m), m.curves())).collect();
        if let Some(c) = &self.custom_curves {
            curves.push((
                None,
                c.polynomials
                    .iter()
                    .map(|p| Curve { base: BaseCurve::Polynomial(p.clone()), slope: 0.0 })
                    .collect(),
            ));
        }
        if curves.is_empty() {
            return Err(config_err("models", "give models or custom_curves"));
        }
        let mut conts: Vec<ContaminationSpec> = self
            .contaminations
            .iter()
            .map(|k| ContaminationSpec::preset(*k).map_err(|e| config_err("contaminations", e.to_string())))
            .collect::<Result<_>>()?;
        if let Some(c) = &self.custom_contamination {
            conts.push(
                ContaminationSpec::custom(c.rates.clone(), c.means.clone(), c.sd)
                    .map_err(|e| config_err("custom_contamination", e.to_string()))?,
            );
        }
        if conts.is_empty() {
            conts.push(ContaminationSpec::preset(ContaminationKind::C0)?);
        }
        let bandwidth = self.bandwidth.rule()?;
        let [q_lo, q_hi] = self.weight_quantiles;
        let mut out = Vec::new();
        for cont in &conts {
            for (model, cv) in &curves {
                for (i, sizes) in self.sizes.iter().enumerate() {
                    let k = sizes.len();
                    let sc = ScenarioConfig {
                        model: *model,
                        curves: cv.clone(),
                        sigmas: self.sigmas.clone().unwrap_or_else(|| DEFAULT_SIGMAS.to_vec()),
                        contamination: cont.clone(),
                        sizes: sizes.clone(),
                        alpha: self.alpha,
                        replications: self.replications,
                        seed: self.seed,
                        bandwidth: bandwidth.clone(),
                        test: self.test,
                        n_draws: self.n_draws,
                        weight: WeightSpec { shape: WeightShape::Indicator, q_lo, q_hi },
                        covariance: self.covariance,
                    };
                    if self.alpha >= 1.0 {
                        return Err(config_err("alpha", "must lie in (0, 1)"));
                    }
                    sc.validate()
                        .map_err(|e| config_err(&format!("sizes[{i}] (k = {k})"), e.to_string()))?;
                    out.push(sc);
                }
            }
        }
        Ok(out)
    }

    pub fn contiguous(&self) -> Result<ContiguousSpec> {
        let cs = self.delta.clone().map_or_else(ContiguousSpec::default, |d| ContiguousSpec { delta_grid: d });
        cs.validate().map_err(|e| config_err("delta", e.to_string()))?;
        Ok(cs)
    }
}

pub fn cmd_simulate(file: &ScenarioFile) -> Result<RejectionTable> {
    let mut table = RejectionTable::default();
    for sc in file.cells()? {
        table.rows.extend(run_level_power(&sc)?.rows);
    }
    Ok(table)
}

pub fn cmd_contiguous(file: &ScenarioFile) -> Result<RejectionTable> {
    let cs = file.contiguous()?;
    let mut table = RejectionTable::default();
    for sc in file.cells()? {
        table.rows.extend(run_contiguous(&sc, &cs)?.rows);
    }
    Ok(table)
}

/// Writes `contents` to `dir/name`, creating `dir`.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
