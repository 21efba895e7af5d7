use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regp::{ego, FitConfig, GridKind, RelaxationSet};
use regp_bench::config::{self, parse_smoothness};
use regp_bench::experiment::{self, Algorithm, ExperimentConfig, ProblemSpec};
use regp_bench::records::{self, run_header};
use regp_bench::report::{self, RelaxationChoice};
use regp_bench::targets::spatial_quantile_targets;

#[derive(Parser)]
#[command(name = "regp", version, about = "Relaxed Gaussian process fitting and optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a CSV of observations.
    Fit(FitArgs),
    /// Score a stored model on held-out data.
    Score(ScoreArgs),
    /// Minimize one benchmark problem, streaming the trace as CSV.
    Optimize(OptimizeArgs),
    /// Run a benchmark described by a TOML file.
    Benchmark(BenchmarkArgs),
    /// Estimate spatial quantile targets of a benchmark problem.
    Targets(TargetsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RelaxMode {
    /// Plain interpolation.
    None,
    /// Relax values at or above `--threshold`.
    Above,
    /// Relax values with absolute value at least `--threshold`.
    TwoSided,
    /// Select the set for minimization, with range of interest (-inf, threshold).
    SelectMin,
    /// Select the set for excursions, with range of interest (-threshold, threshold).
    SelectExcursion,
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV: header, coordinate columns, value column.
    data: PathBuf,
    #[arg(long, value_enum, default_value = "none")]
    relax: RelaxMode,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 10)]
    grid_size: usize,
    #[arg(long, default_value = "5/2")]
    smoothness: String,
    /// Write the fitted model here.
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    model: PathBuf,
    data: PathBuf,
    /// all, below:T, above:T, abs-below:T or A,B.
    #[arg(long, default_value = "all")]
    range: String,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    problem: String,
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long, default_value = "ego-r-constant")]
    algorithm: String,
    #[arg(long, default_value_t = 100)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    #[arg(long, default_value_t = 10)]
    grid_size: usize,
    #[arg(long, default_value_t = 3)]
    n0_multiplier: usize,
    #[arg(long, default_value = "5/2")]
    smoothness: String,
    /// Trace file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    config: PathBuf,
    /// Overrides `bench.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct TargetsArgs {
    #[arg(long)]
    problem: String,
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.02,0.01,0.005,0.002,0.001")]
    levels: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    n_mc: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Fit(a) => fit(a),
        Command::Score(a) => score(a),
        Command::Optimize(a) => optimize(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Targets(a) => targets(a),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|t| format!("{t:.6}")).unwrap_or_else(|| "-".into())
}

fn fit(a: FitArgs) -> anyhow::Result<()> {
    let data = report::load_data_csv(&a.data)?;
    let need = || a.threshold.context("--threshold is required for this relaxation mode");
    let choice = match a.relax {
        RelaxMode::None => RelaxationChoice::None,
        RelaxMode::Above => RelaxationChoice::Fixed(RelaxationSet::above(need()?)),
        RelaxMode::TwoSided => RelaxationChoice::Fixed(RelaxationSet::two_sided(need()?)?),
        RelaxMode::SelectMin => RelaxationChoice::Select {
            kind: GridKind::OneSidedMin,
            t0: need()?,
            grid_size: a.grid_size,
        },
        RelaxMode::SelectExcursion => RelaxationChoice::Select {
            kind: GridKind::TwoSidedExcursion,
            t0: need()?,
            grid_size: a.grid_size,
        },
    };
    let cfg = FitConfig::with_smoothness(parse_smoothness(&a.smoothness)?);
    let rep = report::fit_report(&data, &choice, &cfg)?;
    let p = rep.model.params();
    let mut out = io::stdout().lock();
    writeln!(out, "n = {}, d = {}", data.len(), data.dim())?;
    writeln!(out, "smoothness = {}", p.smoothness)?;
    writeln!(out, "mean = {:.6}", p.mean_const)?;
    writeln!(out, "variance = {:.6}", p.variance)?;
    writeln!(
        out,
        "lengthscales = [{}]",
        p.lengthscales.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", ")
    )?;
    writeln!(out, "nll = {:.6}", rep.model.nll())?;
    if !rep.candidates.is_empty() {
        writeln!(out, "\ncandidate  threshold  loo_tcrps")?;
        for (g, c) in rep.candidates.iter().enumerate() {
            let mark = if Some(g) == rep.chosen { " *" } else { "" };
            writeln!(out, "{g:>9}  {:>9}  {:.6}{mark}", fmt_opt(c.threshold), c.loo_tcrps)?;
        }
    }
    writeln!(out, "\nrelaxation = {:?}", rep.model.relaxation().intervals())?;
    writeln!(out, "moved = {} of {}", rep.model.moved_count(), data.len())?;
    writeln!(out, "\n{:>5}  {:>14}  {:>14}", "i", "z", "z_relaxed")?;
    for (i, (z, zr)) in rep.values.iter().enumerate() {
        writeln!(out, "{:>5}  {z:>14.6}  {zr:>14.6}", i + 1)?;
    }
    if let Some(path) = a.model_out {
        report::save_model(&rep.model, &path)?;
    }
    Ok(())
}

fn score(a: ScoreArgs) -> anyhow::Result<()> {
    let model = report::load_model(&a.model)?;
    let test = report::load_data_csv(&a.data)?;
    let range = report::parse_score_range(&a.range)?;
    let rep = report::score_report(&model, &test, &range)?;
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    let d = test.dim();
    let mut header: Vec<String> = (1..=d).map(|j| format!("x_{j}")).collect();
    header.extend(["observed", "mean", "sd", "tcrps"].map(String::from));
    w.write_record(&header)?;
    for p in &rep.points {
        let mut r: Vec<String> = p.x.iter().map(|v| v.to_string()).collect();
        r.extend([p.observed, p.mean, p.sd, p.tcrps].map(|v| v.to_string()));
        w.write_record(&r)?;
    }
    w.flush()?;
    eprintln!("mean tcrps = {:.6}", rep.mean_tcrps);
    eprintln!("loo tcrps (training) = {:.6}", rep.loo_tcrps);
    Ok(())
}

fn optimize(a: OptimizeArgs) -> anyhow::Result<()> {
    let algorithm: Algorithm = a.algorithm.parse()?;
    let problem = ProblemSpec {
        name: a.problem.clone(),
        dimension: a.dimension,
    }
    .resolve()?;
    let exp = ExperimentConfig {
        smoothness: parse_smoothness(&a.smoothness)?,
        alpha: a.alpha,
        grid_size: a.grid_size,
        n0_multiplier: a.n0_multiplier,
        budget: a.budget,
        seed: a.seed,
        ..ExperimentConfig::default()
    };
    let id = experiment::run_id(problem.name, algorithm, 0);
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(run_header(problem.dimension))?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let d = problem.dimension;

    if algorithm == Algorithm::Random {
        for row in experiment::random_search(&problem, a.budget, &id, &mut rng) {
            w.write_record(row.to_fields(d))?;
        }
        w.flush()?;
        return Ok(());
    }
    let cfg = exp.ego_config(algorithm)?;
    let n0 = cfg.n0_multiplier * d;
    if a.budget < n0 {
        bail!("budget {} is below the initial design size {n0}", a.budget);
    }
    let mut objective = problem.evaluator();
    let (mut state, trace) = ego::initialize(&problem.domain, &cfg, &mut objective, &mut rng)
        .map_err(|f| anyhow::anyhow!("{f}"))?;
    for r in &trace.rows {
        w.write_record(experiment::trace_row(&id, r).to_fields(d))?;
    }
    w.flush()?;
    while state.evaluations.len() < a.budget {
        let row = match algorithm {
            Algorithm::Ego => ego::ego_step(&mut state, &problem.domain, &cfg, &mut objective, &mut rng),
            _ => ego::ego_r_step(&mut state, &problem.domain, &cfg, &mut objective, &mut rng),
        }
        .with_context(|| format!("after {} evaluations", state.evaluations.len()))?;
        w.write_record(experiment::trace_row(&id, &row).to_fields(d))?;
        w.flush()?;
    }
    eprintln!("best = {}", state.best_value);
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> anyhow::Result<()> {
    let file = config::load_config(&a.config)?;
    let mut exp = file.experiment;
    if a.threads.is_some() {
        exp.threads = a.threads;
    }
    let dir = a
        .out
        .or(file.output_dir)
        .context("no output directory: set bench.output_dir or pass --out")?;
    let output = experiment::run_experiment(&exp)?;
    let written = experiment::write_outputs(&output, &dir)?;
    let failed = output.records.iter().filter(|r| !r.succeeded()).count();
    eprintln!(
        "{} runs, {failed} stopped early, {} files under {}",
        output.records.len(),
        written.len(),
        dir.display()
    );
    records::write_summary_csv(io::stdout().lock(), &output.summary)?;
    Ok(())
}

fn targets(a: TargetsArgs) -> anyhow::Result<()> {
    let problem = ProblemSpec {
        name: a.problem,
        dimension: a.dimension,
    }
    .resolve()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let ts = spatial_quantile_targets(&problem, &a.levels, a.n_mc, &mut rng)?;
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["level", "target", "standard_error"])?;
    for i in 0..ts.len() {
        w.write_record([ts.quantile_levels[i], ts.target_values[i], ts.standard_errors[i]].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
