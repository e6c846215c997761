//! Long-format CSV in, JSON report and p-value surface out.

use robust_curves::io::{cmd_power_surface, cmd_test, ingest_csv, reports_to_json, write_output, Schema, TestOptions};
use robust_curves::pipeline::TestMethod;
use robust_curves::simulation::{generate, ContaminationKind, Model, ScenarioConfig, TestSelection};
use robust_curves::io::Dataset;

fn main() -> robust_curves::Result<()> {
    let dir = std::env::temp_dir().join("robust-curves-csv-example");
    let sc = ScenarioConfig::new(Model::MA4, ContaminationKind::C2, [80, 120]);
    let data = Dataset { samples: generate(&sc, 0) };
    write_output(&dir, "data.csv", &data.to_csv())?;

    let data = ingest_csv(&dir.join("data.csv"), &Schema::default())?;
    let opts = TestOptions { methods: TestSelection::Both, ..TestOptions::default() };
    let reports = cmd_test(&data, &opts)?;
    for r in &reports {
        print!("{}", r.summary());
    }
    write_output(&dir, "report.json", &reports_to_json(&reports)?)?;

    let grid = [0.08, 0.12, 0.18, 0.27];
    let surface = cmd_power_surface(&data, &opts, TestMethod::Robust, &grid, &grid)?;
    write_output(&dir, "surface.csv", &surface.to_csv())?;
    print!("{}", surface.to_csv());
    println!("outputs in {}", dir.display());
    Ok(())
}
