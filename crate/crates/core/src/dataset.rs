//! Training corpora: penalty sampling per instance and JSONL persistence.
//!
//! A corpus file starts with the header line `{"schema":1}` followed by one
//! [`DatasetRecord`] per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annealer::QuboSolver;
use crate::encoding::TspInstance;
use crate::error::{Error, Result};
use crate::seed;
use crate::surrogate::features::extract_features;
use crate::task::{BatchStats, PenaltyOracle, TspTask};

pub const CORPUS_SCHEMA: u32 = 1;

/// Halving/doubling steps allowed while looking for each plateau.
pub const MAX_BRACKET_STEPS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    #[serde(flatten)]
    pub stats: BatchStats,
    pub feature_vector: Vec<f64>,
    pub split: Split,
}

/// Finds `a_low` with `p_f = 0` and `a_high` with `p_f = 1` by halving and
/// doubling from `a0` (raw units). Returns every evaluation made.
pub fn bracket(oracle: &mut dyn PenaltyOracle, a0: f64) -> Result<(f64, f64, Vec<BatchStats>)> {
    let mut probes = Vec::new();
    let first = oracle.evaluate(a0)?;
    let (mut a_low, mut a_high) = (a0, a0);
    let (mut low_pf, mut high_pf) = (first.p_f, first.p_f);
    probes.push(first);

    let mut steps = 0;
    while low_pf > 0.0 && steps < MAX_BRACKET_STEPS {
        a_low /= 2.0;
        let s = oracle.evaluate(a_low)?;
        low_pf = s.p_f;
        probes.push(s);
        steps += 1;
    }
    if low_pf > 0.0 {
        warn!("no infeasible plateau found down to A = {a_low}");
    }
    steps = 0;
    while high_pf < 1.0 && steps < MAX_BRACKET_STEPS {
        a_high *= 2.0;
        let s = oracle.evaluate(a_high)?;
        high_pf = s.p_f;
        probes.push(s);
        steps += 1;
    }
    if high_pf < 1.0 {
        warn!("no feasible plateau found up to A = {a_high}");
    }
    Ok((a_low, a_high, probes))
}

/// `count` log-spaced bin midpoints in `[lo, hi]`.
fn log_strata(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(move |k| (a + (b - a) * (k as f64 + 0.5) / count as f64).exp())
}

/// Samples penalties covering both plateaus and the slope between them.
///
/// After bracketing from `a0`, `budget` further points are spread log-uniformly:
/// 60% inside `[a_low, a_high]`, 20% in `[a_low / 4, a_low]`, and the rest in
/// `[a_high, 4 a_high]`. Bracketing probes are returned as well.
pub fn sample_a_grid(oracle: &mut dyn PenaltyOracle, a0: f64, budget: usize) -> Result<Vec<BatchStats>> {
    if budget < 12 {
        return Err(Error::InvalidConfig(format!("budget {budget} < 12")));
    }
    let (a_low, a_high, mut out) = bracket(oracle, a0)?;
    let inside = (0.6 * budget as f64).round() as usize;
    let below = (0.2 * budget as f64).round() as usize;
    let above = budget - inside - below;
    let (lo, hi) = if a_high > a_low { (a_low, a_high) } else { (a_low / 2.0, a_low * 2.0) };
    let points: Vec<f64> = log_strata(lo / 4.0, lo, below)
        .chain(log_strata(lo, hi, inside))
        .chain(log_strata(hi, hi * 4.0, above))
        .collect();
    for a in points {
        out.push(oracle.evaluate(a)?);
    }
    Ok(out)
}

/// Runs [`sample_a_grid`] on every instance, starting from each instance's
/// mean original distance, and attaches feature vectors.
pub fn build_corpus(
    instances: &[(TspInstance, Split)],
    solver: &dyn QuboSolver,
    budget: usize,
    seed: u64,
) -> Result<Vec<DatasetRecord>> {
    let per_instance: Vec<Result<Vec<DatasetRecord>>> = instances
        .par_iter()
        .map(|(inst, split)| {
            let mut task = TspTask::new(inst, solver, seed::derive(seed, seed::hash_str(inst.name())))?;
            let samples = sample_a_grid(&mut task, inst.mean_original_distance(), budget)?;
            Ok(samples
                .into_iter()
                .map(|stats| DatasetRecord {
                    feature_vector: extract_features(inst, stats.a_norm),
                    stats,
                    split: *split,
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in per_instance {
        out.extend(r?);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: u32,
}

pub fn write_corpus(records: &[DatasetRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    serde_json::to_writer(&mut w, &Header { schema: CORPUS_SCHEMA })?;
    w.write_all(b"\n").map_err(io)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<DatasetRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records: Vec<DatasetRecord> = Vec::new();
    let mut header_seen = false;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            let header: Header = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: lineno,
                message: format!("expected schema header: {e}"),
            })?;
            if header.schema != CORPUS_SCHEMA {
                return Err(Error::Version {
                    found: header.schema.to_string(),
                    expected: CORPUS_SCHEMA.to_string(),
                });
            }
            header_seen = true;
            continue;
        }
        let record: DatasetRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        record
            .stats
            .validate()
            .map_err(|e| Error::Validation(format!("line {lineno}: {e}")))?;
        if let Some(first) = records.first() {
            if first.feature_vector.len() != record.feature_vector.len() {
                return Err(Error::Validation(format!(
                    "line {lineno}: feature_vector length {} differs from {}",
                    record.feature_vector.len(),
                    first.feature_vector.len()
                )));
            }
        }
        records.push(record);
    }
    Ok(records)
}
