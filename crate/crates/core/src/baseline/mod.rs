//! Generic comparison tuners over the raw penalty: random search, TPE and
//! Gaussian-process Bayesian optimization. Each trial is exactly one solver
//! call and every tuner emits the same [`TuningTrace`].

mod gp;
mod tpe;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::task::PenaltyOracle;
use crate::trace::{Proposer, TuningTrace};
pub use gp::{gp_bo_suggest, GaussianProcess, GpHyper, EI_GRID_POINTS, HYPER_GRID_POINTS};
pub use tpe::{tpe_suggest, TPE_CANDIDATES, TPE_GAMMA};

/// Settings shared by the baseline tuners. `a_range` is in raw units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunerConfig {
    pub a_range: (f64, f64),
    /// Uniform random trials before the model-based tuners take over.
    pub n_init: usize,
    pub seed: u64,
    pub max_trials: usize,
}

impl Default for TunerConfig {
    fn default() -> Self {
        Self {
            a_range: (1.0, 100.0),
            n_init: 5,
            seed: 0,
            max_trials: 20,
        }
    }
}

impl TunerConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.a_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!("a_range [{lo}, {hi}] must satisfy 0 < lo < hi")));
        }
        if self.n_init >= self.max_trials {
            return Err(Error::InvalidConfig(format!(
                "n_init = {} must be below max_trials = {}",
                self.n_init, self.max_trials
            )));
        }
        Ok(())
    }

    pub(crate) fn uniform(&self, rng: &mut impl Rng) -> f64 {
        rng.random_range(self.a_range.0..self.a_range.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Random,
    Tpe,
    GpBo,
}

impl Baseline {
    fn proposer(self) -> Proposer {
        match self {
            Baseline::Random => Proposer::Random,
            Baseline::Tpe => Proposer::Tpe,
            Baseline::GpBo => Proposer::GpBo,
        }
    }
}

/// `(a_raw, objective)` pairs of a trace; infeasible trials carry `+inf`.
pub fn history(trace: &TuningTrace) -> Vec<(f64, f64)> {
    trace.entries.iter().map(|e| (e.stats.a_raw, e.stats.objective())).collect()
}

/// Runs `kind` for `config.max_trials` solver calls.
pub fn run_baseline(kind: Baseline, config: &TunerConfig, oracle: &mut dyn PenaltyOracle) -> Result<TuningTrace> {
    config.validate()?;
    let mut rng = seed::rng(config.seed);
    let mut trace = TuningTrace::new();
    for _ in 0..config.max_trials {
        let h = history(&trace);
        let a = match kind {
            Baseline::Random => config.uniform(&mut rng),
            Baseline::Tpe => tpe_suggest(&h, config, &mut rng),
            Baseline::GpBo => gp_bo_suggest(&h, config, &mut rng)?,
        };
        let proposer = if h.len() < config.n_init { Proposer::Random } else { kind.proposer() };
        trace.push(proposer, oracle.evaluate(a)?);
    }
    Ok(trace)
}

/// `max_trials` i.i.d. uniform draws from `a_range`.
pub fn random_search(config: &TunerConfig, oracle: &mut dyn PenaltyOracle) -> Result<TuningTrace> {
    run_baseline(Baseline::Random, config, oracle)
}

#[cfg(test)]
pub(crate) mod testing {
    use crate::error::Result;
    use crate::task::{BatchStats, PenaltyOracle};

    /// Objective `f(a)`, infeasible where `f` is infinite.
    pub struct FnOracle<F: Fn(f64) -> f64> {
        pub f: F,
        pub calls: usize,
    }

    impl<F: Fn(f64) -> f64> PenaltyOracle for FnOracle<F> {
        fn evaluate(&mut self, a_raw: f64) -> Result<BatchStats> {
            self.calls += 1;
            let v = (self.f)(a_raw);
            let feasible = v.is_finite();
            Ok(BatchStats {
                instance_id: "fn".into(),
                a_raw,
                a_norm: a_raw,
                p_f: if feasible { 1.0 } else { 0.0 },
                e_avg: 0.0,
                e_std: 0.0,
                best_fitness: feasible.then_some(v),
                batch_size: 1,
            })
        }

        fn a_scale(&self) -> f64 {
            1.0
        }

        fn calls(&self) -> usize {
            self.calls
        }
    }
}
