//! Per-run and summary records with their CSV encodings.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// One evaluation of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub run_id: String,
    pub iteration: usize,
    pub x: Vec<f64>,
    pub f: f64,
    pub best_so_far: f64,
    pub t0: Option<f64>,
    pub t_selected: Option<f64>,
    pub log_sigma2: Option<f64>,
    /// Empty when no model proposed the point.
    pub log_rho: Vec<f64>,
    pub mean_const: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Header of a run CSV for input dimension `d`.
pub fn run_header(d: usize) -> Vec<String> {
    let mut h = vec!["run_id".to_string(), "iteration".to_string()];
    h.extend((1..=d).map(|j| format!("x_{j}")));
    h.extend(["f", "best_so_far", "t0", "t_selected", "log_sigma2"].map(String::from));
    h.extend((1..=d).map(|j| format!("log_rho_{j}")));
    h.push("mean_const".to_string());
    h
}

impl RunRow {
    pub fn to_fields(&self, d: usize) -> Vec<String> {
        let mut r = vec![self.run_id.clone(), self.iteration.to_string()];
        r.extend(self.x.iter().map(|v| v.to_string()));
        r.push(self.f.to_string());
        r.push(self.best_so_far.to_string());
        r.push(opt(self.t0));
        r.push(opt(self.t_selected));
        r.push(opt(self.log_sigma2));
        if self.log_rho.is_empty() {
            r.extend(std::iter::repeat_n(String::new(), d));
        } else {
            r.extend(self.log_rho.iter().map(|v| v.to_string()));
        }
        r.push(opt(self.mean_const));
        r
    }
}

pub fn write_run_csv<W: Write>(writer: W, d: usize, rows: &[RunRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(run_header(d))?;
    for row in rows {
        w.write_record(row.to_fields(d))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn parse_f64(s: &str, row: usize, col: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| BenchError::Parse {
        row,
        message: format!("column {col}: `{s}` is not a number"),
    })
}

fn parse_opt(s: &str, row: usize, col: &str) -> Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(s, row, col).map(Some)
    }
}

/// Parses a run CSV written by [`write_run_csv`].
pub fn read_run_csv<R: Read>(reader: R) -> Result<(usize, Vec<RunRow>)> {
    let mut rd = csv::Reader::from_reader(reader);
    let header = rd.headers()?.clone();
    let ncol = header.len();
    if ncol < 10 || ncol % 2 != 0 {
        return Err(BenchError::Parse {
            row: 1,
            message: format!("unexpected run header with {ncol} columns"),
        });
    }
    let d = (ncol - 8) / 2;
    let expected = run_header(d);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(BenchError::Parse {
            row: 1,
            message: "run header does not match the run schema".into(),
        });
    }
    let mut rows = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let iteration = field(1).trim().parse().map_err(|_| BenchError::Parse {
            row,
            message: format!("column iteration: `{}` is not a count", field(1)),
        })?;
        let x = (0..d)
            .map(|j| parse_f64(field(2 + j), row, &expected[2 + j]))
            .collect::<Result<Vec<_>>>()?;
        let log_rho_raw: Vec<&str> = (0..d).map(|j| field(7 + d + j)).collect();
        let log_rho = if log_rho_raw.iter().all(|s| s.trim().is_empty()) {
            vec![]
        } else {
            log_rho_raw
                .iter()
                .enumerate()
                .map(|(j, s)| parse_f64(s, row, &expected[7 + d + j]))
                .collect::<Result<Vec<_>>>()?
        };
        rows.push(RunRow {
            run_id: field(0).to_string(),
            iteration,
            x,
            f: parse_f64(field(2 + d), row, "f")?,
            best_so_far: parse_f64(field(3 + d), row, "best_so_far")?,
            t0: parse_opt(field(4 + d), row, "t0")?,
            t_selected: parse_opt(field(5 + d), row, "t_selected")?,
            log_sigma2: parse_opt(field(6 + d), row, "log_sigma2")?,
            log_rho,
            mean_const: parse_opt(field(7 + 2 * d), row, "mean_const")?,
        });
    }
    Ok((d, rows))
}

/// One line of the long-format summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: String,
    pub algorithm: String,
    pub target_level: f64,
    pub target_value: f64,
    pub success_fraction: f64,
    pub mean_evaluations: f64,
}

pub fn write_summary_csv<W: Write>(writer: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "problem",
            "algorithm",
            "target_level",
            "target_value",
            "success_fraction",
            "mean_evaluations",
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_summary_csv<R: Read>(reader: R) -> Result<Vec<SummaryRow>> {
    let mut rd = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (k, rec) in rd.deserialize().enumerate() {
        out.push(rec.map_err(|e| BenchError::Parse {
            row: k + 2,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
