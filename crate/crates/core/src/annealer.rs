//! Batch simulated annealing for QUBO models.
//!
//! Each replica starts from uniformly random bits and runs single-flip
//! Metropolis sweeps under a geometric temperature schedule. A per-variable
//! local field makes every flip proposal O(1) and every accepted flip
//! O(degree). The best state seen by each replica is returned.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{BinarySolution, QuboModel, SolveBatch, DEFAULT_BATCH_SIZE};
use crate::seed;

/// Something that turns a QUBO model into a batch of candidate solutions.
///
/// Implementations must return exactly [`batch_size`](QuboSolver::batch_size)
/// solutions and be a deterministic function of `(model, seed)`.
pub trait QuboSolver: Send + Sync {
    fn solve(&self, model: &QuboModel, seed: u64) -> Result<SolveBatch>;

    fn batch_size(&self) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    #[default]
    Geometric,
}

/// Ratio `t_final / t_initial` when temperatures are auto-scaled.
pub const AUTO_FINAL_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealConfig {
    pub batch_size: usize,
    pub sweeps: usize,
    /// `None` scales the start temperature to the largest flip cost seen on a
    /// short random walk.
    pub t_initial: Option<f64>,
    /// `None` means `AUTO_FINAL_RATIO * t_initial`.
    pub t_final: Option<f64>,
    pub schedule: Schedule,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            batch_size: DEFAULT_BATCH_SIZE,
            sweeps: 2000,
            t_initial: None,
            t_final: None,
            schedule: Schedule::Geometric,
            seed: 0,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.sweeps == 0 {
            return Err(Error::InvalidConfig("sweeps must be at least 1".into()));
        }
        for t in [self.t_initial, self.t_final].into_iter().flatten() {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidConfig(format!("temperature {t} must be positive")));
            }
        }
        if let (Some(ti), Some(tf)) = (self.t_initial, self.t_final) {
            if tf >= ti {
                return Err(Error::InvalidConfig(format!(
                    "t_initial ({ti}) must exceed t_final ({tf})"
                )));
            }
        }
        Ok(())
    }
}

/// Adjacency form of a [`QuboModel`] used by the sampler: diagonal plus a
/// compressed-row neighbour list holding each off-diagonal term twice.
#[derive(Debug, Clone)]
pub struct CompiledQubo {
    diag: Vec<f64>,
    row_start: Vec<usize>,
    col: Vec<u32>,
    weight: Vec<f64>,
    offset: f64,
}

impl CompiledQubo {
    pub fn new(model: &QuboModel) -> Self {
        let n = model.n_vars();
        let mut diag = vec![0.0; n];
        let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for ((i, j), q) in model.terms() {
            if i == j {
                diag[i] += q;
            } else {
                neighbors[i].push((j, q));
                neighbors[j].push((i, q));
            }
        }
        let mut row_start = Vec::with_capacity(n + 1);
        let (mut col, mut weight) = (Vec::new(), Vec::new());
        row_start.push(0);
        for row in neighbors {
            for (j, q) in row {
                col.push(j as u32);
                weight.push(q);
            }
            row_start.push(col.len());
        }
        Self {
            diag,
            row_start,
            col,
            weight,
            offset: model.offset(),
        }
    }

    #[inline]
    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.col[r.clone()].iter().map(|&j| j as usize).zip(self.weight[r].iter().copied())
    }

    pub fn n_vars(&self) -> usize {
        self.diag.len()
    }

    fn local_fields(&self, bits: &[u8]) -> Vec<f64> {
        (0..self.n_vars())
            .map(|i| {
                self.diag[i] + self.row(i).filter(|&(j, _)| bits[j] != 0).map(|(_, q)| q).sum::<f64>()
            })
            .collect()
    }

    fn energy_unchecked(&self, bits: &[u8]) -> f64 {
        let mut e = self.offset;
        for i in 0..self.n_vars() {
            if bits[i] != 0 {
                e += self.diag[i];
                for (j, q) in self.row(i) {
                    if j > i && bits[j] != 0 {
                        e += q;
                    }
                }
            }
        }
        e
    }
}

/// `energy(bits with bit k flipped) - energy(bits)`, in O(degree of k).
pub fn delta_energy(model: &CompiledQubo, bits: &[u8], k: usize) -> Result<f64> {
    if bits.len() != model.n_vars() {
        return Err(Error::Dimension {
            expected: model.n_vars(),
            actual: bits.len(),
        });
    }
    if k >= bits.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: bits.len(),
        });
    }
    let field = model.diag[k] + model.row(k).filter(|&(j, _)| bits[j] != 0).map(|(_, q)| q).sum::<f64>();
    Ok(if bits[k] != 0 { -field } else { field })
}

/// Runs `config.batch_size` independent replicas. Deterministic in
/// `config.seed`; replicas may run in parallel without changing the result.
pub fn anneal(model: &QuboModel, config: &AnnealConfig) -> Result<SolveBatch> {
    config.validate()?;
    let compiled = CompiledQubo::new(model);
    let n = compiled.n_vars();
    if n == 0 {
        let solutions = (0..config.batch_size)
            .map(|_| BinarySolution {
                bits: Vec::new(),
                energy: model.offset(),
            })
            .collect();
        return SolveBatch::new(solutions);
    }
    let (t_initial, t_final) = temperatures(&compiled, config);
    let steps = config.sweeps.max(2) - 1;
    let cooling = (t_final / t_initial).powf(1.0 / steps as f64);

    let solutions: Vec<Result<BinarySolution>> = (0..config.batch_size)
        .into_par_iter()
        .map(|r| {
            let bits = run_replica(&compiled, config.sweeps, t_initial, cooling, seed::derive(config.seed, r as u64));
            BinarySolution::evaluate(model, bits)
        })
        .collect();
    SolveBatch::new(solutions.into_iter().collect::<Result<Vec<_>>>()?)
}

fn temperatures(model: &CompiledQubo, config: &AnnealConfig) -> (f64, f64) {
    let t_initial = config.t_initial.unwrap_or_else(|| probe_max_delta(model, seed::derive(config.seed, u64::MAX)));
    let t_final = config.t_final.unwrap_or(t_initial * AUTO_FINAL_RATIO);
    (t_initial, t_final.min(t_initial))
}

/// Largest |flip cost| along a random walk of `4 n` flips from a random state.
fn probe_max_delta(model: &CompiledQubo, seed: u64) -> f64 {
    let n = model.n_vars();
    let mut rng = seed::rng(seed);
    let mut bits: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
    let mut fields = model.local_fields(&bits);
    let mut max_delta: f64 = 0.0;
    for _ in 0..4 * n {
        let k = rng.random_range(0..n);
        let delta = if bits[k] != 0 { -fields[k] } else { fields[k] };
        max_delta = max_delta.max(delta.abs());
        flip(model, &mut bits, &mut fields, k);
    }
    if max_delta > 0.0 && max_delta.is_finite() {
        max_delta
    } else {
        1.0
    }
}

#[inline]
fn flip(model: &CompiledQubo, bits: &mut [u8], fields: &mut [f64], k: usize) {
    let sign = if bits[k] != 0 { -1.0 } else { 1.0 };
    bits[k] ^= 1;
    let r = model.row_start[k]..model.row_start[k + 1];
    for (&j, &q) in model.col[r.clone()].iter().zip(&model.weight[r]) {
        fields[j as usize] += sign * q;
    }
}

fn run_replica(model: &CompiledQubo, sweeps: usize, t_initial: f64, cooling: f64, seed: u64) -> Vec<u8> {
    let n = model.n_vars();
    let mut rng = seed::rng(seed);
    let mut bits: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
    let mut fields = model.local_fields(&bits);
    let mut energy = model.energy_unchecked(&bits);
    let mut best_energy = energy;
    let mut best = bits.clone();
    let mut dirty = false;
    let mut temperature = t_initial;

    for _ in 0..sweeps {
        let beta = 1.0 / temperature;
        for k in 0..n {
            let delta = if bits[k] != 0 { -fields[k] } else { fields[k] };
            let x = delta * beta;
            // acceptance below e^-40 is treated as zero without drawing
            if x <= 0.0 || (x < 40.0 && rng.random::<f64>() < (-x).exp()) {
                // the current state is saved only when leaving a new best uphill
                if dirty && delta > 0.0 {
                    best.copy_from_slice(&bits);
                    dirty = false;
                }
                flip(model, &mut bits, &mut fields, k);
                energy += delta;
                if energy < best_energy {
                    best_energy = energy;
                    dirty = true;
                }
            }
        }
        temperature *= cooling;
    }
    if dirty {
        best.copy_from_slice(&bits);
    }
    best
}

/// The annealer behind the [`QuboSolver`] interface. Each call mixes the
/// caller's seed into `config.seed`.
#[derive(Debug, Clone, Default)]
pub struct SimulatedAnnealer {
    pub config: AnnealConfig,
}

impl SimulatedAnnealer {
    pub fn new(config: AnnealConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }
}

impl QuboSolver for SimulatedAnnealer {
    fn solve(&self, model: &QuboModel, seed: u64) -> Result<SolveBatch> {
        let config = AnnealConfig {
            seed: seed::derive(self.config.seed, seed),
            ..self.config.clone()
        };
        anneal(model, &config)
    }

    fn batch_size(&self) -> usize {
        self.config.batch_size
    }
}

/// Wraps a solver and counts calls.
#[derive(Debug, Default)]
pub struct CountingSolver<S> {
    inner: S,
    calls: AtomicUsize,
}

impl<S> CountingSolver<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<S: QuboSolver> QuboSolver for CountingSolver<S> {
    fn solve(&self, model: &QuboModel, seed: u64) -> Result<SolveBatch> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.solve(model, seed)
    }

    fn batch_size(&self) -> usize {
        self.inner.batch_size()
    }
}
