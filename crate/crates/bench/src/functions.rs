//! Test-function corpus for the optimization benchmark.

use std::f64::consts::{E, PI};

use regp::{Domain, Objective, RegpError};

/// A named minimization problem on a box.
#[derive(Debug, Clone)]
pub struct BenchProblem {
    pub name: &'static str,
    pub dimension: usize,
    pub domain: Domain<f64>,
    f: fn(&[f64]) -> f64,
}

impl BenchProblem {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    /// Objective adapter for the optimizer.
    pub fn evaluator(&self) -> ProblemObjective<'_> {
        ProblemObjective { problem: self }
    }
}

pub struct ProblemObjective<'a> {
    problem: &'a BenchProblem,
}

impl Objective<f64> for ProblemObjective<'_> {
    fn evaluate(&mut self, x: &[f64]) -> regp::Result<f64> {
        if x.len() != self.problem.dimension {
            return Err(RegpError::Objective(format!(
                "{} expects {} coordinates, got {}",
                self.problem.name,
                self.problem.dimension,
                x.len()
            )));
        }
        Ok(self.problem.evaluate(x))
    }
}

pub fn branin(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

pub fn goldstein_price(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let a = 1.0
        + (x1 + x2 + 1.0).powi(2)
            * (19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2 * x2);
    let b = 30.0
        + (2.0 * x1 - 3.0 * x2).powi(2)
            * (18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2 * x2);
    a * b
}

pub fn log_goldstein_price(x: &[f64]) -> f64 {
    goldstein_price(x).ln()
}

pub fn six_hump_camel(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    (4.0 - 2.1 * x1 * x1 + x1.powi(4) / 3.0) * x1 * x1 + x1 * x2 + (-4.0 + 4.0 * x2 * x2) * x2 * x2
}

pub fn three_hump_camel(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    2.0 * x1 * x1 - 1.05 * x1.powi(4) + x1.powi(6) / 6.0 + x1 * x2 + x2 * x2
}

pub fn beale(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    (1.5 - x1 + x1 * x2).powi(2)
        + (2.25 - x1 + x1 * x2 * x2).powi(2)
        + (2.625 - x1 + x1 * x2.powi(3)).powi(2)
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
        .sum()
}

pub fn ackley(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
    -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
}

pub fn zakharov(x: &[f64]) -> f64 {
    let s1: f64 = x.iter().map(|v| v * v).sum();
    let s2: f64 = x.iter().enumerate().map(|(i, v)| 0.5 * (i + 1) as f64 * v).sum();
    s1 + s2.powi(2) + s2.powi(4)
}

/// Perm function `d, β` with `β = 0.5`; minimum 0 at `x_j = j`.
pub fn perm(x: &[f64]) -> f64 {
    const BETA: f64 = 0.5;
    let d = x.len();
    (1..=d)
        .map(|i| {
            let inner: f64 = (1..=d)
                .map(|j| {
                    let jf = j as f64;
                    (jf.powi(i as i32) + BETA) * ((x[j - 1] / jf).powi(i as i32) - 1.0)
                })
                .sum();
            inner * inner
        })
        .sum()
}

fn problem(name: &'static str, lower: Vec<f64>, upper: Vec<f64>, f: fn(&[f64]) -> f64) -> BenchProblem {
    let dimension = lower.len();
    BenchProblem {
        name,
        dimension,
        domain: Domain::new(lower, upper).expect("corpus domains are valid"),
        f,
    }
}

/// Names accepted by [`problem_by_name`].
pub const PROBLEM_NAMES: [&str; 10] = [
    "branin",
    "goldstein-price",
    "log-goldstein-price",
    "six-hump-camel",
    "three-hump-camel",
    "beale",
    "rosenbrock",
    "ackley",
    "zakharov",
    "perm",
];

/// Looks up a corpus problem. `dimension` applies to the scalable
/// functions (default 4) and must equal 2 for the others.
pub fn problem_by_name(name: &str, dimension: Option<usize>) -> Option<BenchProblem> {
    let fixed2 = |p: BenchProblem| match dimension {
        None | Some(2) => Some(p),
        Some(_) => None,
    };
    let d = dimension.unwrap_or(4);
    let key = name.to_ascii_lowercase().replace(['_', ' '], "-");
    match key.as_str() {
        "branin" => fixed2(problem("branin", vec![-5.0, 0.0], vec![10.0, 15.0], branin)),
        "goldstein-price" => fixed2(problem("goldstein-price", vec![-2.0; 2], vec![2.0; 2], goldstein_price)),
        "log-goldstein-price" => fixed2(problem(
            "log-goldstein-price",
            vec![-2.0; 2],
            vec![2.0; 2],
            log_goldstein_price,
        )),
        "six-hump-camel" => fixed2(problem("six-hump-camel", vec![-3.0, -2.0], vec![3.0, 2.0], six_hump_camel)),
        "three-hump-camel" => fixed2(problem("three-hump-camel", vec![-5.0; 2], vec![5.0; 2], three_hump_camel)),
        "beale" => fixed2(problem("beale", vec![-4.5; 2], vec![4.5; 2], beale)),
        "rosenbrock" if d >= 2 => Some(problem("rosenbrock", vec![-5.0; d], vec![10.0; d], rosenbrock)),
        "ackley" if d >= 1 => Some(problem("ackley", vec![-32.768; d], vec![32.768; d], ackley)),
        "zakharov" if d >= 1 => Some(problem("zakharov", vec![-5.0; d], vec![10.0; d], zakharov)),
        "perm" if d >= 1 => {
            let b = d as f64;
            Some(problem("perm", vec![-b; d], vec![b; d], perm))
        }
        _ => None,
    }
}

/// The ten corpus problems at their default dimensions.
pub fn corpus() -> Vec<BenchProblem> {
    PROBLEM_NAMES
        .iter()
        .map(|n| problem_by_name(n, None).expect("corpus names resolve"))
        .collect()
}
