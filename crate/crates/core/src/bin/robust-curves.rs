use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use robust_curves::io::{
    bandwidth_csv, cmd_bandwidth, cmd_contiguous, cmd_power_surface, cmd_simulate, cmd_test,
    ingest_csv, reports_to_json, wide_to_long, write_output, Dataset, ScenarioFile, Schema,
    TestOptions,
};
use robust_curves::pipeline::{BandwidthRule, TestMethod, WeightSpec};
use robust_curves::simulation::TestSelection;
use robust_curves::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Robust test for equality of nonparametric regression curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test equality of the group curves in a long-format CSV.
    Test {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Level and power table for a scenario file.
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Power under root-n local alternatives for a scenario file.
    Contiguous {
        scenario: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// p-values over a grid of bandwidth pairs (two groups).
    PowerSurface {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        h1: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        h2: Vec<f64>,
    },
    /// Cross-validation curves and selected bandwidths.
    Bandwidth {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Convert wide `<group>_x,<group>_y` CSV to long format on stdout.
    ToLong { input: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Classical,
    Robust,
    Both,
}

impl From<MethodArg> for TestSelection {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Classical => TestSelection::Classical,
            MethodArg::Robust => TestSelection::Robust,
            MethodArg::Both => TestSelection::Both,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// Long-format CSV with group, x and y columns.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "group")]
    group_col: String,
    #[arg(long, default_value = "x")]
    x_col: String,
    #[arg(long, default_value = "y")]
    y_col: String,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let schema = Schema {
            group_col: self.group_col.clone(),
            x_col: self.x_col.clone(),
            y_col: self.y_col.clone(),
        };
        ingest_csv(&self.data, &schema)
    }
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long, value_enum, default_value = "robust")]
    method: MethodArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    /// Pooled-covariate quantiles bounding the weight support, as `lo,hi`.
    #[arg(long, value_parser = parse_pair, default_value = "0.05,0.95")]
    weight_quantiles: (f64, f64),
    /// `cv`, one bandwidth, or one per group separated by commas.
    #[arg(long, default_value = "cv")]
    bandwidth: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl CommonArgs {
    fn options(&self) -> Result<TestOptions> {
        Ok(TestOptions {
            methods: self.method.into(),
            bandwidth: parse_bandwidths(&self.bandwidth)?,
            weight: WeightSpec {
                q_lo: self.weight_quantiles.0,
                q_hi: self.weight_quantiles.1,
                ..WeightSpec::default()
            },
            n_draws: self.draws,
            seed: self.seed,
            ..TestOptions::default()
        })
    }
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_parser = parse_pair)]
    weight_quantiles: Option<(f64, f64)>,
    /// `cv` or a fixed bandwidth.
    #[arg(long)]
    bandwidth: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl SimArgs {
    fn apply(&self, mut f: ScenarioFile) -> Result<ScenarioFile> {
        if let Some(m) = self.method {
            f.test = m.into();
        }
        if let Some(s) = self.seed {
            f.seed = s;
        }
        if let Some(d) = self.draws {
            f.n_draws = d;
        }
        if let Some(a) = self.alpha {
            f.alpha = a;
        }
        if let Some((lo, hi)) = self.weight_quantiles {
            f.weight_quantiles = [lo, hi];
        }
        if let Some(b) = &self.bandwidth {
            f.bandwidth = match parse_bandwidths(b)?.as_slice() {
                [BandwidthRule::Fixed(h)] => robust_curves::io::BandwidthEntry::Fixed(*h),
                [BandwidthRule::CrossValidate] => robust_curves::io::BandwidthEntry::Named("cv".into()),
                _ => return Err(Error::InvalidInput("simulations take one bandwidth".into())),
            };
        }
        Ok(f)
    }
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn parse_bandwidths(s: &str) -> Result<Vec<BandwidthRule>> {
    s.split(',')
        .map(|t| match t.trim() {
            "cv" => Ok(BandwidthRule::CrossValidate),
            v => v
                .parse::<f64>()
                .ok()
                .filter(|h| *h > 0.0)
                .map(BandwidthRule::Fixed)
                .ok_or_else(|| Error::InvalidInput(format!("bad bandwidth '{v}'"))),
        })
        .collect()
}

fn single_method(m: MethodArg) -> Result<TestMethod> {
    match m {
        MethodArg::Classical => Ok(TestMethod::Classical),
        MethodArg::Robust => Ok(TestMethod::Robust),
        MethodArg::Both => Err(Error::InvalidInput("power-surface takes a single method".into())),
    }
}

fn write_table(out: &Path, table: &robust_curves::simulation::RejectionTable) -> Result<()> {
    write_output(out, "table.csv", &table.to_csv())?;
    write_output(out, "table.txt", &table.to_pretty())?;
    print!("{}", table.to_pretty());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Test { data, common } => {
            let reports = cmd_test(&data.load()?, &common.options()?)?;
            for r in &reports {
                print!("{}", r.summary());
            }
            write_output(&common.out, "report.json", &reports_to_json(&reports)?)
        }
        Command::Simulate { scenario, sim } => {
            let f = sim.apply(ScenarioFile::load(&scenario)?)?;
            write_table(&sim.out, &cmd_simulate(&f)?)
        }
        Command::Contiguous { scenario, sim } => {
            let f = sim.apply(ScenarioFile::load(&scenario)?)?;
            write_table(&sim.out, &cmd_contiguous(&f)?)
        }
        Command::PowerSurface { data, common, h1, h2 } => {
            let method = single_method(common.method)?;
            let s = cmd_power_surface(&data.load()?, &common.options()?, method, &h1, &h2)?;
            write_output(&common.out, "surface.csv", &s.to_csv())
        }
        Command::Bandwidth { data, common } => {
            let reports = cmd_bandwidth(&data.load()?, &common.options()?)?;
            for r in &reports {
                println!("{} ({}): h = {}", r.group, r.method.name(), r.selected);
            }
            write_output(&common.out, "bandwidth.csv", &bandwidth_csv(&reports))
        }
        Command::ToLong { input } => {
            let file = std::fs::File::open(&input)
                .map_err(|e| Error::Io(format!("{}: {e}", input.display())))?;
            print!("{}", wide_to_long(file)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
