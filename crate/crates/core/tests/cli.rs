use std::fs;
use std::path::Path;
use std::process::Command;

use robust_curves::io::{reports_from_json, Dataset};
use robust_curves::simulation::{generate, ContaminationKind, Model, ScenarioConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robust-curves"))
}

fn write_data(dir: &Path, model: Model) -> std::path::PathBuf {
    let data = Dataset { samples: generate(&ScenarioConfig::new(model, ContaminationKind::C0, [60, 80]), 0) };
    let path = dir.join("data.csv");
    fs::write(&path, data.to_csv()).unwrap();
    path
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let out = cmd.output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn test_command_writes_both_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path(), Model::MA2);
    let out = dir.path().join("out");
    let (code, stdout, stderr) = run(bin()
        .args(["test", "--method", "both", "--seed", "5", "--draws", "2000", "--bandwidth", "0.15,0.2"])
        .args(["--weight-quantiles", "0.1,0.9", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&out));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("classical test") && stdout.contains("robust test"));
    let reports = reports_from_json(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(reports.len(), 2);
    for r in &reports {
        assert_eq!(r.diagnostics[0].bandwidth, 0.15);
        assert_eq!(r.diagnostics[1].bandwidth, 0.2);
        assert_eq!(r.config.weight.q_lo, 0.1);
        assert!((0.0..=1.0).contains(&r.result.p_value));
    }
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(bin().args(["test", "--data"]).arg(dir.path().join("missing.csv")));
    assert_eq!(code, 2);

    let single = dir.path().join("single.csv");
    let mut text = String::from("group,x,y\n");
    for i in 0..30 {
        text.push_str(&format!("a,{},{}\n", i as f64 / 30.0, i % 7));
    }
    fs::write(&single, &text).unwrap();
    let (code, _, stderr) = run(bin().args(["test", "--data"]).arg(&single));
    assert_eq!(code, 2);
    assert!(stderr.contains("at least 2 groups"), "{stderr}");

    let (code, _, _) = run(bin().args(["test", "--bandwidth", "-1", "--data"]).arg(&single));
    assert_eq!(code, 2);
    let (code, _, _) = run(bin().args(["test", "--method", "neither"]));
    assert_eq!(code, 2);
}

#[test]
fn numeric_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.csv");
    let mut text = String::from("group,x,y\n");
    for g in ["a", "b"] {
        for i in 0..30 {
            text.push_str(&format!("{g},{},1\n", i as f64 / 30.0));
        }
    }
    fs::write(&path, text).unwrap();
    let (code, _, stderr) = run(bin().args(["test", "--bandwidth", "0.2", "--data"]).arg(&path));
    assert_eq!(code, 3, "{stderr}");
}

const SCENARIO: &str = r#"
version = 1
models = ["M1", "MA1"]
contaminations = ["C0", "C4"]
sizes = [[40, 40]]
replications = 12
seed = 99
bandwidth = 0.2
n_draws = 400
delta = [0, 4]
"#;

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scenario.toml");
    fs::write(&file, SCENARIO).unwrap();
    let mut tables = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let (code, _, stderr) = run(bin().arg("simulate").arg(&file).arg("--out").arg(&out));
        assert_eq!(code, 0, "{stderr}");
        tables.push(fs::read(out.join("table.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    let text = String::from_utf8(tables[0].clone()).unwrap();
    // header plus contamination x model x sizes x test
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn contiguous_writes_one_row_per_delta_and_test() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scenario.toml");
    fs::write(&file, SCENARIO.replace("\"M1\", \"MA1\"", "\"M2\"").replace("\"C0\", \"C4\"", "\"C0\"")).unwrap();
    let out = dir.path().join("o");
    let (code, _, stderr) = run(bin().arg("contiguous").arg(&file).args(["--method", "robust"]).arg("--out").arg(&out));
    assert_eq!(code, 0, "{stderr}");
    let text = fs::read_to_string(out.join("table.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2);
}

#[test]
fn bad_scenario_files_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scenario.toml");
    fs::write(&file, format!("{SCENARIO}\nreplicates = 3\n")).unwrap();
    let (code, _, stderr) = run(bin().arg("simulate").arg(&file));
    assert_eq!(code, 2);
    assert!(stderr.contains("replicates"), "{stderr}");
}

#[test]
fn power_surface_has_grid_shape() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path(), Model::M3);
    let out = dir.path().join("s");
    let (code, _, stderr) = run(bin()
        .args(["power-surface", "--h1", "0.1,0.2", "--h2", "0.15,0.3", "--draws", "500", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&out));
    assert_eq!(code, 0, "{stderr}");
    let text = fs::read_to_string(out.join("surface.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    let ps: Vec<f64> = rows[1..]
        .iter()
        .flat_map(|r| r.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()))
        .collect();
    assert_eq!(ps.len(), 4);
    assert!(ps.iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn bandwidth_command_reports_selection() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path(), Model::M4);
    let out = dir.path().join("b");
    let (code, stdout, stderr) = run(bin().args(["bandwidth", "--data"]).arg(&data).arg("--out").arg(&out));
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(stdout.lines().count(), 2);
    let text = fs::read_to_string(out.join("bandwidth.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with(",1")).count(), 2);
}

#[test]
fn wide_files_convert_to_long() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wide.csv");
    fs::write(&path, "a_x,a_y,b_x,b_y\n0.1,1,0.2,2\n").unwrap();
    let (code, stdout, _) = run(bin().arg("to-long").arg(&path));
    assert_eq!(code, 0);
    assert_eq!(stdout, "group,x,y\na,0.1,1\nb,0.2,2\n");
}
