//! CSV emission for benchmark results.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{normalized_gap, proposer_label, BenchReport, GapCurve};
use crate::error::{Error, Result};

/// Mean gap and CI half-width at selected trials for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    /// `(trial, mean, ci95)`; `None` when the run was shorter than `trial`.
    pub at: Vec<(usize, Option<f64>, Option<f64>)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CurveRow {
    method: String,
    trial: usize,
    mean_gap: f64,
    ci95: f64,
    n_instances: usize,
}

/// One row per method and trial: `method,trial,mean_gap,ci95,n_instances`.
pub fn write_curves_csv(curves: &[GapCurve], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for c in curves {
        for (t, (m, ci)) in c.mean.iter().zip(&c.ci95).enumerate() {
            w.serialize(CurveRow {
                method: c.method.clone(),
                trial: t + 1,
                mean_gap: *m,
                ci95: *ci,
                n_instances: c.n_instances,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parses a file written by [`write_curves_csv`] back into curves.
pub fn read_curves_csv(path: impl AsRef<Path>) -> Result<Vec<GapCurve>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut curves: Vec<GapCurve> = Vec::new();
    for row in r.deserialize() {
        let row: CurveRow = row?;
        if curves.last().is_none_or(|c| c.method != row.method) {
            curves.push(GapCurve {
                method: row.method.clone(),
                mean: Vec::new(),
                ci95: Vec::new(),
                n_instances: row.n_instances,
            });
        }
        let c = curves.last_mut().expect("pushed above");
        if row.trial != c.mean.len() + 1 {
            return Err(Error::Malformed(format!(
                "{}: trial {} follows trial {}",
                row.method,
                row.trial,
                c.mean.len()
            )));
        }
        c.mean.push(row.mean_gap);
        c.ci95.push(row.ci95);
    }
    Ok(curves)
}

/// `method,gap_at_3,ci95_at_3,gap_at_20,ci95_at_20` (percent).
pub fn write_summary_csv(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["method".to_string()];
    if let Some(first) = rows.first() {
        for (t, _, _) in &first.at {
            header.push(format!("gap_pct_at_{t}"));
            header.push(format!("ci95_pct_at_{t}"));
        }
    }
    w.write_record(&header)?;
    let pct = |v: Option<f64>| v.map(|x| (100.0 * x).to_string()).unwrap_or_default();
    for r in rows {
        let mut rec = vec![r.method.clone()];
        for (_, m, c) in &r.at {
            rec.push(pct(*m));
            rec.push(pct(*c));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per evaluated trial of every run.
pub fn write_runs_csv(report: &BenchReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "method",
        "instance",
        "seed",
        "trial",
        "proposer",
        "a_raw",
        "a_norm",
        "p_f",
        "best_fitness",
        "best_so_far",
        "gap",
    ])?;
    for run in &report.runs {
        let reference = report
            .references
            .iter()
            .find(|r| r.0 == run.instance)
            .map(|r| r.1)
            .ok_or_else(|| Error::Malformed(format!("no reference for {}", run.instance)))?;
        for (t, (e, best)) in run.trace.entries.iter().zip(run.trace.best_so_far()).enumerate() {
            w.write_record([
                run.method.name().to_string(),
                run.instance.clone(),
                run.seed.to_string(),
                (t + 1).to_string(),
                proposer_label(e.proposer).to_string(),
                e.stats.a_raw.to_string(),
                e.a_norm.to_string(),
                e.stats.p_f.to_string(),
                e.stats.best_fitness.map(|v| v.to_string()).unwrap_or_default(),
                if best.is_finite() { best.to_string() } else { String::new() },
                normalized_gap(best, reference)?.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
