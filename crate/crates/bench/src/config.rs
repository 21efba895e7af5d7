//! TOML experiment files.
//!
//! ```toml
//! seed = 7
//! algorithm = ["ego", "ego-r-constant"]
//!
//! [problem]
//! name = "branin"
//!
//! [kernel]
//! smoothness = "5/2"
//!
//! [regp]
//! alpha = 0.25
//! grid_size = 10
//!
//! [bo]
//! n0_multiplier = 3
//! budget = 100
//!
//! [bench]
//! n_rep = 10
//! output_dir = "results"
//! ```

use std::path::{Path, PathBuf};

use regp::Smoothness;
use serde::Deserialize;

use crate::error::{io_err, BenchError, Result};
use crate::experiment::{Algorithm, ExperimentConfig, ProblemSpec};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum SmoothnessValue {
    Number(f64),
    Text(String),
}

/// Parses `0.5`, `1.5`, `2.5`, `1/2`, `3/2`, `5/2` or `inf`.
pub fn parse_smoothness(s: &str) -> Result<Smoothness> {
    s.parse().map_err(|e: regp::RegpError| BenchError::Config(e.to_string()))
}

fn smoothness_from_number(v: f64) -> Result<Smoothness> {
    if v.is_infinite() && v > 0.0 {
        return Ok(Smoothness::Infinite);
    }
    match v {
        x if x == 0.5 => Ok(Smoothness::Half),
        x if x == 1.5 => Ok(Smoothness::ThreeHalves),
        x if x == 2.5 => Ok(Smoothness::FiveHalves),
        _ => Err(BenchError::Config(format!(
            "unsupported smoothness {v} (expected 0.5, 1.5, 2.5 or inf)"
        ))),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemSection {
    name: Option<OneOrMany<String>>,
    dimension: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelSection {
    smoothness: Option<SmoothnessValue>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegpSection {
    alpha: Option<f64>,
    grid_size: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoSection {
    n0_multiplier: Option<usize>,
    budget: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchSection {
    n_rep: Option<usize>,
    target_levels: Option<Vec<f64>>,
    n_mc: Option<usize>,
    output_dir: Option<PathBuf>,
    threads: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    algorithm: Option<OneOrMany<String>>,
    #[serde(default)]
    problem: ProblemSection,
    #[serde(default)]
    kernel: KernelSection,
    #[serde(default)]
    regp: RegpSection,
    #[serde(default)]
    bo: BoSection,
    #[serde(default)]
    bench: BenchSection,
}

/// A parsed experiment file.
#[derive(Debug, Clone, PartialEq)]
pub struct FileConfig {
    pub experiment: ExperimentConfig,
    pub output_dir: Option<PathBuf>,
}

pub fn parse_config(text: &str) -> Result<FileConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
    let mut cfg = ExperimentConfig::default();
    if let Some(seed) = raw.seed {
        cfg.seed = seed;
    }
    if let Some(a) = raw.algorithm {
        cfg.algorithms = a
            .into_vec()
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Algorithm>>>()?;
    }
    if let Some(names) = raw.problem.name {
        cfg.problems = names
            .into_vec()
            .into_iter()
            .map(|name| ProblemSpec {
                name,
                dimension: raw.problem.dimension,
            })
            .collect();
        for p in &cfg.problems {
            p.resolve()?;
        }
    }
    if let Some(s) = raw.kernel.smoothness {
        cfg.smoothness = match s {
            SmoothnessValue::Number(v) => smoothness_from_number(v)?,
            SmoothnessValue::Text(t) => parse_smoothness(&t)?,
        };
    }
    if let Some(a) = raw.regp.alpha {
        cfg.alpha = a;
    }
    if let Some(g) = raw.regp.grid_size {
        cfg.grid_size = g;
    }
    if let Some(m) = raw.bo.n0_multiplier {
        cfg.n0_multiplier = m;
    }
    if let Some(b) = raw.bo.budget {
        cfg.budget = b;
    }
    if let Some(n) = raw.bench.n_rep {
        cfg.n_rep = n;
    }
    if let Some(t) = raw.bench.target_levels {
        cfg.target_levels = t;
    }
    if let Some(n) = raw.bench.n_mc {
        cfg.n_mc = n;
    }
    cfg.threads = raw.bench.threads;
    validate(&cfg)?;
    Ok(FileConfig {
        experiment: cfg,
        output_dir: raw.bench.output_dir,
    })
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(BenchError::Config(format!("regp.alpha = {} is outside (0, 1)", cfg.alpha)));
    }
    if cfg.grid_size == 0 {
        return Err(BenchError::Config("regp.grid_size must be positive".into()));
    }
    if cfg.n0_multiplier == 0 {
        return Err(BenchError::Config("bo.n0_multiplier must be positive".into()));
    }
    if cfg.n_rep == 0 {
        return Err(BenchError::Config("bench.n_rep must be positive".into()));
    }
    if cfg.algorithms.is_empty() {
        return Err(BenchError::Config("no algorithm selected".into()));
    }
    Ok(())
}

pub fn load_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_config(&text)
}
