use robust_curves::pipeline::{BandwidthRule, TestMethod};
use robust_curves::simulation::{
    run_contiguous, run_level_power, ContaminationKind, ContiguousSpec, Model, ScenarioConfig, TestSelection,
};

fn quick(model: Model, cont: ContaminationKind) -> ScenarioConfig {
    let mut sc = ScenarioConfig::new(model, cont, [60, 60]);
    sc.replications = 40;
    sc.n_draws = 500;
    sc.bandwidth = BandwidthRule::Fixed(0.2);
    sc
}

#[test]
fn tables_do_not_depend_on_thread_count() {
    let sc = quick(Model::MA3, ContaminationKind::C2);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_level_power(&sc).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a.to_csv(), run(3).to_csv());
}

#[test]
fn alpha_one_rejects_everything() {
    let mut sc = quick(Model::M1, ContaminationKind::C0);
    sc.alpha = 1.0;
    let t = run_level_power(&sc).unwrap();
    assert!(t.rows.iter().all(|r| r.frequency == 1.0 && r.failed == 0));
}

#[test]
fn zero_drift_reproduces_the_level_run() {
    let mut sc = quick(Model::M2, ContaminationKind::C0);
    sc.test = TestSelection::Robust;
    let level = run_level_power(&sc).unwrap();
    let curve = run_contiguous(&sc, &ContiguousSpec { delta_grid: vec![0.0, 8.0] }).unwrap();
    assert_eq!(curve.rows[0].rejections, level.rows[0].rejections);
    assert_eq!(curve.rows[0].delta, Some(0.0));
    assert_eq!(curve.rows.len(), 2);
    assert!(curve.rows[1].frequency >= curve.rows[0].frequency);
}

#[test]
fn csv_has_one_row_per_test() {
    let sc = quick(Model::MA1, ContaminationKind::C4);
    let t = run_level_power(&sc).unwrap();
    let csv = t.to_csv();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("C4,MA1,60x60,classical,"));
    assert!(t.find(TestMethod::Robust).is_some());
}
