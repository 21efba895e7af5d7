use std::collections::BTreeMap;

use regp_bench::config::parse_config;
use regp_bench::experiment::{
    median_evaluations, run_experiment, run_seed, summarize, write_outputs, Algorithm,
    ExperimentConfig, ProblemSpec, RunRecord,
};
use regp_bench::records::RunRow;
use regp_bench::targets::TargetSet;

fn record(problem: &str, algorithm: Algorithm, rep: usize, hit_at: Option<usize>, n_tot: usize) -> RunRecord {
    let rows = (1..=n_tot)
        .map(|i| {
            let best = if hit_at.is_some_and(|h| i >= h) { 0.0 } else { 10.0 };
            RunRow {
                run_id: format!("{problem}-{rep}"),
                iteration: i,
                x: vec![0.0],
                f: best,
                best_so_far: best,
                t0: None,
                t_selected: None,
                log_sigma2: None,
                log_rho: vec![],
                mean_const: None,
            }
        })
        .collect();
    RunRecord {
        run_id: format!("{problem}-{rep}"),
        problem: problem.into(),
        dimension: 1,
        algorithm,
        repetition: rep,
        seed: 0,
        rows,
        error: None,
    }
}

fn targets(problem: &str) -> BTreeMap<String, TargetSet> {
    BTreeMap::from([(
        problem.to_string(),
        TargetSet { quantile_levels: vec![0.01], target_values: vec![1.0], standard_errors: vec![0.0] },
    )])
}

#[test]
fn summary_arithmetic() {
    let all: Vec<_> = (0..4).map(|r| record("p", Algorithm::Ego, r, Some(5), 100)).collect();
    let s = summarize(&all, &targets("p"), 100);
    assert_eq!((s[0].success_fraction, s[0].mean_evaluations), (1.0, 5.0));

    let none: Vec<_> = (0..4).map(|r| record("p", Algorithm::Ego, r, None, 100)).collect();
    let s = summarize(&none, &targets("p"), 100);
    assert_eq!((s[0].success_fraction, s[0].mean_evaluations), (0.0, 100.0));

    let half: Vec<_> = (0..4)
        .map(|r| record("p", Algorithm::Ego, r, (r % 2 == 0).then_some(10), 100))
        .collect();
    let s = summarize(&half, &targets("p"), 100);
    assert_eq!((s[0].success_fraction, s[0].mean_evaluations), (0.5, 55.0));
    let refs: Vec<&RunRecord> = half.iter().collect();
    assert_eq!(median_evaluations(&refs, 1.0, 100), 55.0);
}

#[test]
fn failed_runs_are_left_out_of_the_summary() {
    let mut recs: Vec<_> = (0..2).map(|r| record("p", Algorithm::Ego, r, Some(3), 20)).collect();
    let mut bad = record("p", Algorithm::Ego, 2, None, 20);
    bad.error = Some("singular".into());
    recs.push(bad);
    let s = summarize(&recs, &targets("p"), 20);
    assert_eq!(s[0].success_fraction, 1.0);
}

#[test]
fn seeds_are_stable_and_distinct() {
    let a = run_seed(1, "branin", Algorithm::Ego, 0);
    assert_eq!(a, run_seed(1, "branin", Algorithm::Ego, 0));
    assert_ne!(a, run_seed(1, "branin", Algorithm::Ego, 1));
    assert_ne!(a, run_seed(1, "branin", Algorithm::EgoRConstant, 0));
    assert_ne!(a, run_seed(2, "branin", Algorithm::Ego, 0));
    assert_ne!(a, run_seed(1, "beale", Algorithm::Ego, 0));
}

fn smoke_config() -> ExperimentConfig {
    ExperimentConfig {
        problems: vec![ProblemSpec { name: "branin".into(), dimension: None }],
        algorithms: vec![Algorithm::EgoRConstant],
        budget: 10,
        n_rep: 2,
        n_mc: 100_000,
        seed: 3,
        ..ExperimentConfig::default()
    }
}

#[test]
fn smoke_experiment_writes_expected_files() {
    let out = run_experiment(&smoke_config()).unwrap();
    assert_eq!(out.records.len(), 2);
    for r in &out.records {
        assert!(r.succeeded(), "{:?}", r.error);
        assert_eq!(r.rows.len(), 10);
        assert!(r.rows.windows(2).all(|w| w[1].best_so_far <= w[0].best_so_far));
        assert!(r.rows[6..].iter().all(|row| row.t0.is_some() && row.log_rho.len() == 2));
    }
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(&out, dir.path()).unwrap();
    assert_eq!(written.len(), 4);
    let runs: Vec<_> = std::fs::read_dir(dir.path().join("runs")).unwrap().collect();
    assert_eq!(runs.len(), 2);
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("problem,algorithm,target_level,target_value,success_fraction,mean_evaluations"));
}

#[test]
fn batch_runs_are_byte_reproducible() {
    let mut cfg = smoke_config();
    cfg.algorithms = vec![Algorithm::Ego, Algorithm::Random];
    cfg.budget = 8;
    let bytes = |cfg: &ExperimentConfig| {
        let dir = tempfile::tempdir().unwrap();
        let files = write_outputs(&run_experiment(cfg).unwrap(), dir.path()).unwrap();
        files.iter().map(|p| std::fs::read(p).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(bytes(&cfg), bytes(&cfg));
}

#[test]
fn config_file_parsing() {
    let cfg = parse_config(
        r#"
        seed = 11
        algorithm = ["ego", "random"]
        problem.name = ["branin", "rosenbrock"]
        problem.dimension = 2
        kernel.smoothness = 1.5
        regp.alpha = 0.1
        bo.budget = 40
        bench.n_rep = 3
        bench.output_dir = "out"
        "#,
    )
    .unwrap();
    let e = &cfg.experiment;
    assert_eq!(e.seed, 11);
    assert_eq!(e.algorithms, vec![Algorithm::Ego, Algorithm::Random]);
    assert_eq!(e.problems.len(), 2);
    assert_eq!(e.smoothness, regp::Smoothness::ThreeHalves);
    assert_eq!((e.alpha, e.grid_size, e.n0_multiplier, e.budget, e.n_rep), (0.1, 10, 3, 40, 3));
    assert_eq!(cfg.output_dir.as_deref(), Some(std::path::Path::new("out")));

    let defaults = parse_config("problem.name = \"beale\"\nkernel.smoothness = \"inf\"").unwrap().experiment;
    assert_eq!((defaults.n_rep, defaults.budget), (10, 100));
    assert_eq!(defaults.algorithms.len(), 4);

    assert!(parse_config("bogus = 1").is_err());
    assert!(parse_config("algorithm = \"sa\"").is_err());
    assert!(parse_config("kernel.smoothness = 2.0").is_err());
    assert!(parse_config("problem.name = \"branin\"\nregp.alpha = 1.5").is_err());
}
