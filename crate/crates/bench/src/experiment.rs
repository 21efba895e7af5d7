//! Batch runner: every (problem, algorithm, repetition) triple is an
//! independent run with its own seed.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regp::ego::{self, OptimizationTrace, TraceRow};
use regp::{EgoConfig, HeuristicConfig, HeuristicKind, Smoothness, Strategy};

use crate::error::{io_err, BenchError, Result};
use crate::functions::{problem_by_name, BenchProblem};
use crate::records::{self, RunRow, SummaryRow};
use crate::targets::{self, TargetSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Ego,
    EgoRConstant,
    EgoRConcentration,
    Random,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Ego,
        Algorithm::EgoRConstant,
        Algorithm::EgoRConcentration,
        Algorithm::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ego => "ego",
            Algorithm::EgoRConstant => "ego-r-constant",
            Algorithm::EgoRConcentration => "ego-r-concentration",
            Algorithm::Random => "random",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| BenchError::UnknownAlgorithm(s.to_string()))
    }
}

/// A problem selected by name, with an optional dimension for the
/// scalable functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemSpec {
    pub name: String,
    pub dimension: Option<usize>,
}

impl ProblemSpec {
    pub fn resolve(&self) -> Result<BenchProblem> {
        problem_by_name(&self.name, self.dimension).ok_or_else(|| {
            BenchError::UnknownProblem(match self.dimension {
                Some(d) => format!("{} (dimension {d})", self.name),
                None => self.name.clone(),
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problems: Vec<ProblemSpec>,
    pub algorithms: Vec<Algorithm>,
    pub smoothness: Smoothness,
    pub alpha: f64,
    pub grid_size: usize,
    pub n0_multiplier: usize,
    /// Total evaluations per run, initial design included (`n_tot`).
    pub budget: usize,
    pub n_rep: usize,
    pub seed: u64,
    pub target_levels: Vec<f64>,
    pub n_mc: usize,
    /// Worker threads; `None` uses all available cores.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problems: vec![],
            algorithms: Algorithm::ALL.to_vec(),
            smoothness: Smoothness::FiveHalves,
            alpha: 0.25,
            grid_size: 10,
            n0_multiplier: 3,
            budget: 100,
            n_rep: 10,
            seed: 0,
            target_levels: vec![0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001],
            n_mc: 1_000_000,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    /// Optimizer settings for `algorithm`.
    pub fn ego_config(&self, algorithm: Algorithm) -> Result<EgoConfig> {
        let kind = match algorithm {
            Algorithm::EgoRConcentration => HeuristicKind::Concentration,
            Algorithm::EgoRConstant => HeuristicKind::Constant,
            Algorithm::Ego | Algorithm::Random => HeuristicKind::None,
        };
        let mut cfg = EgoConfig {
            heuristic: HeuristicConfig::new(kind, self.alpha, self.grid_size)?,
            n0_multiplier: self.n0_multiplier,
            ..EgoConfig::default()
        };
        cfg.fit.smoothness = self.smoothness;
        Ok(cfg)
    }
}

/// FNV-1a, used for stable seed derivation across platforms and releases.
fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one run, a hash of (master seed, problem, algorithm, repetition).
pub fn run_seed(master: u64, problem: &str, algorithm: Algorithm, repetition: usize) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325;
    h = fnv1a(&master.to_le_bytes(), h);
    h = fnv1a(problem.as_bytes(), h);
    h = fnv1a(&[0], h);
    h = fnv1a(algorithm.name().as_bytes(), h);
    h = fnv1a(&[0], h);
    h = fnv1a(&(repetition as u64).to_le_bytes(), h);
    splitmix64(h)
}

pub fn run_id(problem: &str, algorithm: Algorithm, repetition: usize) -> String {
    format!("{problem}-{algorithm}-{repetition:03}")
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: String,
    pub problem: String,
    pub dimension: usize,
    pub algorithm: Algorithm,
    pub repetition: usize,
    pub seed: u64,
    pub rows: Vec<RunRow>,
    /// Error that stopped the run early, if any.
    pub error: Option<String>,
}

impl RunRecord {
    pub fn best_so_far(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.best_so_far).collect()
    }

    /// 1-based evaluation count at which `best_so_far ≤ target` first holds.
    pub fn evaluations_to_target(&self, target: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.best_so_far <= target)
            .map(|r| r.iteration)
    }

    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

pub fn trace_rows(run_id: &str, trace: &OptimizationTrace<f64>) -> Vec<RunRow> {
    trace.rows.iter().map(|r| trace_row(run_id, r)).collect()
}

pub fn trace_row(run_id: &str, r: &TraceRow<f64>) -> RunRow {
    RunRow {
        run_id: run_id.to_string(),
        iteration: r.iteration,
        x: r.x.clone(),
        f: r.value,
        best_so_far: r.best_so_far,
        t0: r.t0,
        t_selected: r.t_selected,
        log_sigma2: r.params.as_ref().map(|p| p.variance.ln()),
        log_rho: r
            .params
            .as_ref()
            .map(|p| p.lengthscales.iter().map(|v| v.ln()).collect())
            .unwrap_or_default(),
        mean_const: r.params.as_ref().map(|p| p.mean_const),
    }
}

/// Pure random search: `budget` uniform points.
pub fn random_search<R: Rng + ?Sized>(
    problem: &BenchProblem,
    budget: usize,
    run_id: &str,
    rng: &mut R,
) -> Vec<RunRow> {
    let mut best = f64::INFINITY;
    let mut u = vec![0.0; problem.dimension];
    (1..=budget)
        .map(|iteration| {
            for v in u.iter_mut() {
                *v = rng.random::<f64>();
            }
            let x = problem.domain.from_unit(&u);
            let f = problem.evaluate(&x);
            best = best.min(f);
            RunRow {
                run_id: run_id.to_string(),
                iteration,
                x,
                f,
                best_so_far: best,
                t0: None,
                t_selected: None,
                log_sigma2: None,
                log_rho: vec![],
                mean_const: None,
            }
        })
        .collect()
}

/// Runs one repetition of `algorithm` on `problem`.
pub fn run_single(
    problem: &BenchProblem,
    algorithm: Algorithm,
    config: &ExperimentConfig,
    repetition: usize,
) -> RunRecord {
    let id = run_id(problem.name, algorithm, repetition);
    let seed = run_seed(config.seed, problem.name, algorithm, repetition);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, error) = match algorithm {
        Algorithm::Random => (random_search(problem, config.budget, &id, &mut rng), None),
        _ => {
            let strategy = if algorithm == Algorithm::Ego {
                Strategy::Ego
            } else {
                Strategy::EgoR
            };
            match config.ego_config(algorithm) {
                Err(e) => (vec![], Some(e.to_string())),
                Ok(cfg) => {
                    let mut objective = problem.evaluator();
                    match ego::optimize(strategy, &problem.domain, &cfg, &mut objective, config.budget, &mut rng) {
                        Ok(trace) => (trace_rows(&id, &trace), None),
                        Err(failure) => {
                            warn!("{id} stopped early: {failure}");
                            (trace_rows(&id, &failure.trace), Some(failure.error.to_string()))
                        }
                    }
                }
            }
        }
    };
    RunRecord {
        run_id: id,
        problem: problem.name.to_string(),
        dimension: problem.dimension,
        algorithm,
        repetition,
        seed,
        rows,
        error,
    }
}

/// Per problem × algorithm × target: success fraction and mean
/// evaluations-to-target, unsuccessful runs counted as `n_tot`. Runs that
/// stopped on an error are left out.
pub fn summarize(
    records: &[RunRecord],
    targets: &BTreeMap<String, TargetSet>,
    n_tot: usize,
) -> Vec<SummaryRow> {
    let mut groups: Vec<(String, Algorithm)> = Vec::new();
    for r in records {
        let key = (r.problem.clone(), r.algorithm);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    let mut out = Vec::new();
    for (problem, algorithm) in groups {
        let Some(ts) = targets.get(&problem) else {
            continue;
        };
        let runs: Vec<&RunRecord> = records
            .iter()
            .filter(|r| r.problem == problem && r.algorithm == algorithm && r.succeeded())
            .collect();
        if runs.is_empty() {
            continue;
        }
        for (&level, &value) in ts.quantile_levels.iter().zip(&ts.target_values) {
            let hits: Vec<Option<usize>> = runs.iter().map(|r| r.evaluations_to_target(value)).collect();
            let successes = hits.iter().filter(|h| h.is_some()).count();
            let total: usize = hits.iter().map(|h| h.unwrap_or(n_tot)).sum();
            out.push(SummaryRow {
                problem: problem.clone(),
                algorithm: algorithm.name().to_string(),
                target_level: level,
                target_value: value,
                success_fraction: successes as f64 / runs.len() as f64,
                mean_evaluations: total as f64 / runs.len() as f64,
            });
        }
    }
    out
}

/// Median evaluations-to-target, unsuccessful runs counted as `n_tot`.
pub fn median_evaluations(runs: &[&RunRecord], target: f64, n_tot: usize) -> f64 {
    let mut v: Vec<f64> = runs
        .iter()
        .map(|r| r.evaluations_to_target(target).unwrap_or(n_tot) as f64)
        .collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite counts"));
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub targets: BTreeMap<String, TargetSet>,
    pub summary: Vec<SummaryRow>,
}

/// Target seed of a problem, independent of the algorithms.
fn target_seed(master: u64, problem: &str) -> u64 {
    splitmix64(fnv1a(problem.as_bytes(), fnv1a(&master.to_le_bytes(), 0x51ed_270b_27a7_3c5d)))
}

/// Runs every configured (problem, algorithm, repetition) in a work pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    if config.problems.is_empty() || config.algorithms.is_empty() || config.n_rep == 0 {
        return Err(BenchError::Config(
            "at least one problem, one algorithm and one repetition are required".into(),
        ));
    }
    let problems = config
        .problems
        .iter()
        .map(ProblemSpec::resolve)
        .collect::<Result<Vec<_>>>()?;
    for p in &problems {
        if config.budget < config.n0_multiplier * p.dimension {
            return Err(BenchError::Config(format!(
                "budget {} is below the initial design size of {}",
                config.budget, p.name
            )));
        }
    }
    let mut targets = BTreeMap::new();
    for p in &problems {
        let mut rng = ChaCha8Rng::seed_from_u64(target_seed(config.seed, p.name));
        let ts = targets::spatial_quantile_targets(p, &config.target_levels, config.n_mc, &mut rng)?;
        targets.insert(p.name.to_string(), ts);
    }
    let jobs: Vec<(usize, Algorithm, usize)> = (0..problems.len())
        .flat_map(|i| {
            config
                .algorithms
                .iter()
                .flat_map(move |&a| (0..config.n_rep).map(move |r| (i, a, r)))
        })
        .collect();
    let work = || -> Vec<RunRecord> {
        jobs.par_iter()
            .map(|&(i, a, r)| {
                let rec = run_single(&problems[i], a, config, r);
                info!("{} done", rec.run_id);
                rec
            })
            .collect()
    };
    let records = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| BenchError::Config(e.to_string()))?
            .install(work),
        None => work(),
    };
    let summary = summarize(&records, &targets, config.budget);
    Ok(ExperimentOutput {
        records,
        targets,
        summary,
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Writes `runs/<run_id>.csv`, `summary.csv` and `targets.csv` under `dir`.
pub fn write_outputs(output: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    let runs = dir.join("runs");
    fs::create_dir_all(&runs).map_err(io_err(&runs))?;
    let mut written = Vec::new();
    for rec in &output.records {
        let mut buf = Vec::new();
        records::write_run_csv(&mut buf, rec.dimension, &rec.rows)?;
        let path = runs.join(format!("{}.csv", rec.run_id));
        write_atomic(&path, &buf)?;
        written.push(path);
    }
    let mut buf = Vec::new();
    records::write_summary_csv(&mut buf, &output.summary)?;
    let path = dir.join("summary.csv");
    write_atomic(&path, &buf)?;
    written.push(path);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["problem", "target_level", "target_value", "standard_error"])?;
    for (name, ts) in &output.targets {
        for i in 0..ts.len() {
            w.write_record([
                name.clone(),
                ts.quantile_levels[i].to_string(),
                ts.target_values[i].to_string(),
                ts.standard_errors[i].to_string(),
            ])?;
        }
    }
    let buf = w.into_inner().map_err(|e| BenchError::Config(e.to_string()))?;
    let path = dir.join("targets.csv");
    write_atomic(&path, &buf)?;
    written.push(path);
    Ok(written)
}
