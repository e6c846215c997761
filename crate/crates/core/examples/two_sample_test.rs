//! Classical and robust tests on clean and contaminated two-sample data.

use robust_curves::pipeline::{run_test, TestConfig, TestMethod};
use robust_curves::simulation::{generate, ContaminationKind, Model, ScenarioConfig};

fn main() -> robust_curves::Result<()> {
    for (model, cont) in [
        (Model::M2, ContaminationKind::C0),
        (Model::MA2, ContaminationKind::C0),
        (Model::M2, ContaminationKind::C3),
        (Model::MA2, ContaminationKind::C4),
    ] {
        let sc = ScenarioConfig::new(model, cont, [100, 100]);
        let samples = generate(&sc, 0);
        for method in [TestMethod::Classical, TestMethod::Robust] {
            let out = run_test(&samples, &TestConfig::default().with_method(method))?;
            let h: Vec<String> = out.diagnostics.iter().map(|d| format!("{:.3}", d.bandwidth)).collect();
            println!(
                "{model} {cont} {:<9}  nT = {:>8.4}  p = {:.4}  h = [{}]",
                method.name(),
                out.result.n_t,
                out.result.p_value,
                h.join(", ")
            );
        }
    }
    Ok(())
}
