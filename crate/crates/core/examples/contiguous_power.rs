//! Rejection frequencies along root-n local alternatives, clean and contaminated.
//!
//! cargo run --release --example contiguous_power -- [replications]

use robust_curves::simulation::{run_contiguous, ContaminationKind, ContiguousSpec, Model, ScenarioConfig};

fn main() -> robust_curves::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    for cont in [ContaminationKind::C0, ContaminationKind::C4] {
        let mut sc = ScenarioConfig::new(Model::M2, cont, [100, 100]);
        sc.replications = reps;
        sc.n_draws = 2000;
        let table = run_contiguous(&sc, &ContiguousSpec::default())?;
        print!("{}", table.to_pretty());
    }
    Ok(())
}
