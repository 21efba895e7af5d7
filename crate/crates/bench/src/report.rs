//! Data files, stored models and the reports of the `fit` and `score`
//! commands.

use std::io::Read;
use std::path::Path;

use regp::{
    build_candidate_grid, fast_loo, fit_regp, loo_tcrps, scoring, select_relaxation, CandidateGrid,
    Dataset, FitConfig, FittedRegp, GpParams, GridKind, RelaxationSet, ScoreRange, Smoothness,
};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, BenchError, Result};

/// Reads a CSV with a header row; every column but the last is an input
/// coordinate and the last one is the observed value.
pub fn read_data_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rd = csv::Reader::from_reader(reader);
    let ncol = rd.headers()?.len();
    if ncol < 2 {
        return Err(BenchError::Parse {
            row: 1,
            message: "expected at least one input column and a value column".into(),
        });
    }
    let d = ncol - 1;
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| BenchError::Parse {
                row,
                message: format!("column {}: `{field}` is not a number", j + 1),
            })?;
            if !v.is_finite() {
                return Err(BenchError::Parse {
                    row,
                    message: format!("column {}: value must be finite", j + 1),
                });
            }
            if j < d {
                points.push(v);
            } else {
                values.push(v);
            }
        }
    }
    Dataset::from_flat(d, points, values).map_err(BenchError::from)
}

pub fn load_data_csv(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_data_csv(file)
}

/// Parses a range of interest: `all`, `below:T`, `above:T`, `abs-below:T`
/// (for `(-T, T)`) or `A,B`.
pub fn parse_score_range(s: &str) -> Result<ScoreRange> {
    let s = s.trim();
    let num = |t: &str| -> Result<f64> {
        t.trim()
            .parse()
            .map_err(|_| BenchError::Config(format!("`{t}` is not a number")))
    };
    if s == "all" {
        return Ok(ScoreRange::real_line());
    }
    if let Some(t) = s.strip_prefix("below:") {
        return Ok(ScoreRange::below(num(t)?));
    }
    if let Some(t) = s.strip_prefix("above:") {
        return Ok(ScoreRange::above(num(t)?));
    }
    if let Some(t) = s.strip_prefix("abs-below:") {
        let t = num(t)?;
        return Ok(ScoreRange::interval(-t, t)?);
    }
    if let Some((a, b)) = s.split_once(',') {
        return Ok(ScoreRange::interval(num(a)?, num(b)?)?);
    }
    Err(BenchError::Config(format!(
        "range `{s}` is not one of all, below:T, above:T, abs-below:T or A,B"
    )))
}

/// How the relaxation set is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum RelaxationChoice {
    /// Plain interpolation.
    None,
    Fixed(RelaxationSet),
    /// Minimize the leave-one-out tCRPS over a candidate grid.
    Select {
        kind: GridKind,
        t0: f64,
        grid_size: usize,
    },
}

impl RelaxationChoice {
    fn range(&self) -> Result<Option<ScoreRange>> {
        match *self {
            RelaxationChoice::Select { kind, t0, .. } => Ok(Some(match kind {
                GridKind::OneSidedMin => ScoreRange::below(t0),
                GridKind::TwoSidedExcursion => ScoreRange::interval(-t0, t0)?,
            })),
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateScore {
    pub threshold: Option<f64>,
    pub loo_tcrps: f64,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub model: FittedRegp,
    /// `(z_i, z★_i)` per observation.
    pub values: Vec<(f64, f64)>,
    /// Filled when the relaxation was selected.
    pub candidates: Vec<CandidateScore>,
    pub chosen: Option<usize>,
}

pub fn fit_report(data: &Dataset, choice: &RelaxationChoice, config: &FitConfig) -> Result<FitReport> {
    let (model, candidates, chosen) = match choice {
        RelaxationChoice::None => (fit_regp(data, &RelaxationSet::empty(), config)?, vec![], None),
        RelaxationChoice::Fixed(set) => (fit_regp(data, set, config)?, vec![], None),
        RelaxationChoice::Select { kind, grid_size, .. } => {
            let q = choice.range()?.expect("selection has a range");
            let grid: CandidateGrid = build_candidate_grid(data.values(), &q, *kind, *grid_size)?;
            let sel = select_relaxation(data, &grid, &q, config)?;
            let candidates = grid
                .thresholds()
                .iter()
                .zip(&sel.scores)
                .map(|(&threshold, &loo_tcrps)| CandidateScore { threshold, loo_tcrps })
                .collect();
            (sel.fitted, candidates, Some(sel.chosen_index))
        }
    };
    let values = data
        .values()
        .iter()
        .copied()
        .zip(model.relaxed_values().iter().copied())
        .collect();
    Ok(FitReport {
        model,
        values,
        candidates,
        chosen,
    })
}

/// Serialized form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub smoothness: String,
    pub mean_const: f64,
    pub variance: f64,
    pub lengthscales: Vec<f64>,
    /// Relaxation intervals as `[lo, hi]`; endpoints may be `inf`.
    pub relaxation: Vec<[f64; 2]>,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub relaxed_values: Vec<f64>,
}

impl ModelFile {
    pub fn from_model(model: &FittedRegp) -> Self {
        let p = model.params();
        let data = model.data();
        Self {
            smoothness: p.smoothness.to_string(),
            mean_const: p.mean_const,
            variance: p.variance,
            lengthscales: p.lengthscales.clone(),
            relaxation: model.relaxation().intervals().iter().map(|&(a, b)| [a, b]).collect(),
            points: data.points().map(<[f64]>::to_vec).collect(),
            values: data.values().to_vec(),
            relaxed_values: model.relaxed_values().to_vec(),
        }
    }

    pub fn into_model(self) -> Result<FittedRegp> {
        let smoothness: Smoothness = self.smoothness.parse()?;
        let params = GpParams::new(self.mean_const, self.variance, self.lengthscales, smoothness)?;
        let data = Dataset::new(self.points, self.values)?;
        let relaxation = RelaxationSet::new(self.relaxation.into_iter().map(|[a, b]| (a, b)).collect())?;
        Ok(FittedRegp::from_parts(data, relaxation, params, self.relaxed_values)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }
}

pub fn save_model(model: &FittedRegp, path: &Path) -> Result<()> {
    let text = ModelFile::from_model(model).to_toml()?;
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn load_model(path: &Path) -> Result<FittedRegp> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    ModelFile::from_toml(&text)?.into_model()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointScore {
    pub x: Vec<f64>,
    pub observed: f64,
    pub mean: f64,
    pub sd: f64,
    pub tcrps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub points: Vec<PointScore>,
    /// Mean of `tcrps` over `points`.
    pub mean_tcrps: f64,
    /// Leave-one-out tCRPS of the training data.
    pub loo_tcrps: f64,
    /// Leave-one-out predictive `(mean, sd)` per training point.
    pub loo: Vec<(f64, f64)>,
}

pub fn score_report(model: &FittedRegp, test: &Dataset, range: &ScoreRange) -> Result<ScoreReport> {
    if test.dim() != model.data().dim() {
        return Err(BenchError::Config(format!(
            "test data has dimension {}, model has {}",
            test.dim(),
            model.data().dim()
        )));
    }
    let mut points = Vec::with_capacity(test.len());
    for (x, &z) in test.points().zip(test.values()) {
        let p = model.predict(x)?;
        let sd = p.sd();
        points.push(PointScore {
            x: x.to_vec(),
            observed: z,
            mean: p.mean,
            sd,
            tcrps: scoring::tcrps(p.mean, sd, range, z)?.value(),
        });
    }
    let mean_tcrps = if points.is_empty() {
        f64::NAN
    } else {
        points.iter().map(|p| p.tcrps).sum::<f64>() / points.len() as f64
    };
    let loo = fast_loo(model)?.as_slice().iter().map(|p| (p.mean, p.sd())).collect();
    Ok(ScoreReport {
        points,
        mean_tcrps,
        loo_tcrps: loo_tcrps(model, range, model.data().values())?,
        loo,
    })
}
