//! Per-instance tuning history shared by every tuner.

use serde::{Deserialize, Serialize};

use crate::task::BatchStats;

/// Which component proposed an evaluated penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposer {
    MinFitness,
    PfTarget,
    Bracket,
    OnlineFit,
    Random,
    Tpe,
    GpBo,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub a_norm: f64,
    pub proposer: Proposer,
    pub stats: BatchStats,
}

/// Evaluations in the order they were made, plus the current feasibility
/// bracket: `a_left` last observed with `p_f = 0`, `a_right` with `p_f = 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TuningTrace {
    pub entries: Vec<TraceEntry>,
    pub a_left: Option<f64>,
    pub a_right: Option<f64>,
}

impl TuningTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends an evaluation and moves the bracket inwards when the new
    /// point is a tighter plateau observation.
    pub fn push(&mut self, proposer: Proposer, stats: BatchStats) {
        let a = stats.a_norm;
        if stats.p_f == 0.0 && self.a_left.is_none_or(|l| a >= l) {
            self.a_left = Some(a);
        }
        if stats.p_f == 1.0 && self.a_right.is_none_or(|r| a <= r) {
            self.a_right = Some(a);
        }
        // a re-evaluated endpoint that no longer sits on its plateau is dropped
        if self.a_left == Some(a) && stats.p_f != 0.0 {
            self.a_left = None;
        }
        if self.a_right == Some(a) && stats.p_f != 1.0 {
            self.a_right = None;
        }
        self.entries.push(TraceEntry {
            a_norm: a,
            proposer,
            stats,
        });
    }

    /// Running minimum of the objective (`+inf` until a feasible batch).
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.entries
            .iter()
            .map(|e| {
                best = best.min(e.stats.objective());
                best
            })
            .collect()
    }

    /// Entry with the lowest objective; ties go to the earliest trial.
    pub fn best(&self) -> Option<&TraceEntry> {
        let mut best: Option<&TraceEntry> = None;
        for e in &self.entries {
            let obj = e.stats.objective();
            if obj.is_finite() && best.is_none_or(|b| obj < b.stats.objective()) {
                best = Some(e);
            }
        }
        best
    }

    /// `(a_norm, p_f)` history for curve fitting.
    pub fn pf_points(&self) -> Vec<(f64, f64)> {
        self.entries.iter().map(|e| (e.a_norm, e.stats.p_f)).collect()
    }
}
