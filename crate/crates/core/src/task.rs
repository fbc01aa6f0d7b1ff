//! Evaluating one penalty value on one instance: compose the QUBO, call the
//! solver, summarize the batch.

use serde::{Deserialize, Serialize};

use crate::annealer::QuboSolver;
use crate::encoding::{decode_and_score, encode_tsp, TspEncoding, TspInstance};
use crate::error::{Error, Result};
use crate::qubo::SolveBatch;
use crate::seed;

/// Summary of one solver call at one penalty value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub instance_id: String,
    pub a_raw: f64,
    pub a_norm: f64,
    pub p_f: f64,
    pub e_avg: f64,
    pub e_std: f64,
    pub best_fitness: Option<f64>,
    /// Number of solutions in the batch; `p_f * batch_size` is a count.
    pub batch_size: usize,
}

impl BatchStats {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_f) {
            return Err(Error::Validation(format!("p_f = {} is outside [0, 1]", self.p_f)));
        }
        if self.p_f == 0.0 && self.best_fitness.is_some() {
            return Err(Error::Validation("p_f = 0 but best_fitness is present".into()));
        }
        if self.p_f > 0.0 && self.best_fitness.is_none() {
            return Err(Error::Validation(format!("p_f = {} > 0 but best_fitness is absent", self.p_f)));
        }
        if !(self.e_std >= 0.0) {
            return Err(Error::Validation(format!("e_std = {} is negative", self.e_std)));
        }
        if !(self.a_raw > 0.0 && self.a_norm > 0.0) {
            return Err(Error::Validation(format!(
                "penalty must be positive (a_raw = {}, a_norm = {})",
                self.a_raw, self.a_norm
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Validation("batch_size = 0".into()));
        }
        Ok(())
    }

    /// Fitness for tuning: best feasible tour length, `+inf` when none.
    pub fn objective(&self) -> f64 {
        self.best_fitness.unwrap_or(f64::INFINITY)
    }
}

/// Feasibility, energy moments (population convention, over all solutions)
/// and the best feasible tour length of a batch solved at penalty `a`.
pub fn batch_stats(batch: &SolveBatch, encoding: &TspEncoding, instance: &TspInstance, a: f64) -> Result<BatchStats> {
    let b = batch.batch_size();
    if b == 0 {
        return Err(Error::EmptyBatch);
    }
    let mut feasible = 0usize;
    let mut best: Option<f64> = None;
    for s in batch.solutions() {
        if let Some(len) = decode_and_score(encoding, instance, &s.bits) {
            feasible += 1;
            best = Some(best.map_or(len, |cur: f64| cur.min(len)));
        }
    }
    let (e_avg, e_std) = mean_std(batch.energies());
    Ok(BatchStats {
        instance_id: instance.name().to_string(),
        a_raw: a,
        a_norm: instance.a_norm(a),
        p_f: feasible as f64 / b as f64,
        e_avg,
        e_std,
        best_fitness: best,
        batch_size: b,
    })
}

/// Mean and population standard deviation.
pub fn mean_std(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.into_iter().collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// One instance under tuning: maps a raw penalty to batch statistics.
///
/// Every call to [`evaluate`](PenaltyOracle::evaluate) is one solver call.
pub trait PenaltyOracle {
    fn evaluate(&mut self, a_raw: f64) -> Result<BatchStats>;

    /// Divisor turning raw penalties into normalized ones.
    fn a_scale(&self) -> f64;

    fn calls(&self) -> usize;
}

/// A TSP instance bound to a solver. Call `k` uses seed `derive(seed, k)`.
pub struct TspTask<'a> {
    pub instance: &'a TspInstance,
    pub encoding: TspEncoding,
    solver: &'a dyn QuboSolver,
    seed: u64,
    calls: usize,
}

impl<'a> TspTask<'a> {
    pub fn new(instance: &'a TspInstance, solver: &'a dyn QuboSolver, seed: u64) -> Result<Self> {
        Ok(Self {
            instance,
            encoding: encode_tsp(instance)?,
            solver,
            seed,
            calls: 0,
        })
    }
}

impl PenaltyOracle for TspTask<'_> {
    fn evaluate(&mut self, a_raw: f64) -> Result<BatchStats> {
        if !(a_raw.is_finite() && a_raw > 0.0) {
            return Err(Error::InvalidConfig(format!("penalty {a_raw} must be positive")));
        }
        let model = self.encoding.compose(a_raw)?;
        let batch = self.solver.solve(&model, seed::derive(self.seed, self.calls as u64))?;
        self.calls += 1;
        batch_stats(&batch, &self.encoding, self.instance, a_raw)
    }

    fn a_scale(&self) -> f64 {
        self.instance.a_scale()
    }

    fn calls(&self) -> usize {
        self.calls
    }
}
