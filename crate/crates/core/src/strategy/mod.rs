//! Penalty proposal strategies.
//!
//! - Minimum-fitness: minimize the surrogate's expected best fitness of a
//!   batch over `A`. No solver calls.
//! - Feasibility target: pick `A` whose predicted `p_f` is closest to a
//!   target probability. No solver calls.
//! - Online fitting: bracket the feasibility transition with real solver
//!   calls, fit a sigmoid to the observed `p_f`, and draw the next `A`
//!   uniformly on the fitted slope.
//! - [`composed_strategy`] chains them: one minimum-fitness trial, targets
//!   0.8 and 0.2, then online fitting.

mod min_fitness;
mod search;
mod sigmoid;

use rand::Rng;

use crate::error::{Error, Result};
use crate::qubo::DEFAULT_BATCH_SIZE;
use crate::surrogate::SolverSurrogate;
use crate::task::PenaltyOracle;
use crate::trace::{Proposer, TuningTrace};
pub use min_fitness::{adaptive_simpson, expected_min_fitness, REL_TOL, UPPER_SIGMAS};
pub use search::{grid_golden_minimize, Spacing, GRID_POINTS};
pub use sigmoid::{sigmoid, SigmoidFit};

/// Half-width of the excluded plateaus when drawing from the fitted slope.
pub const OFS_EPSILON: f64 = 0.01;
/// Halving / doubling steps allowed per side while bracketing.
pub const MAX_BRACKET_STEPS: usize = 12;
pub const PBS_HIGH: f64 = 0.8;
pub const PBS_LOW: f64 = 0.2;

fn check_range(a_range: (f64, f64)) -> Result<()> {
    if !(a_range.0 > 0.0 && a_range.1 > a_range.0 && a_range.1.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "penalty range [{}, {}] must satisfy 0 < lo < hi",
            a_range.0, a_range.1
        )));
    }
    Ok(())
}

/// Expected best fitness of a batch of `b` at `a_norm` under the surrogate.
pub fn predicted_min_fitness(model: &dyn SolverSurrogate, a_norm: f64, b: usize) -> f64 {
    let p = model.predict(a_norm);
    expected_min_fitness(p.p_f, p.e_avg, p.e_std, b).unwrap_or(f64::INFINITY)
}

/// Normalized penalty minimizing the predicted expected minimum fitness of a
/// batch of [`DEFAULT_BATCH_SIZE`] solutions.
pub fn mfs_propose(model: &dyn SolverSurrogate, a_range: (f64, f64)) -> Result<f64> {
    check_range(a_range)?;
    let (a, v) = grid_golden_minimize(
        |a| predicted_min_fitness(model, a, DEFAULT_BATCH_SIZE),
        a_range.0,
        a_range.1,
        Spacing::Log,
    )?;
    if !v.is_finite() {
        return Err(Error::NoFeasibleRegion {
            lo: a_range.0,
            hi: a_range.1,
        });
    }
    Ok(a)
}

/// Normalized penalty whose predicted `p_f` is closest to `p`.
pub fn pbs_propose(model: &dyn SolverSurrogate, p: f64, a_range: (f64, f64)) -> Result<f64> {
    check_range(a_range)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidConfig(format!("target probability {p} must lie in (0, 1)")));
    }
    let (a, _) = grid_golden_minimize(|a| (model.predict(a).p_f - p).abs(), a_range.0, a_range.1, Spacing::Log)?;
    Ok(a)
}

fn evaluate(oracle: &mut dyn PenaltyOracle, trace: &mut TuningTrace, a_norm: f64, proposer: Proposer) -> Result<()> {
    let stats = oracle.evaluate(a_norm * oracle.a_scale())?;
    trace.push(proposer, stats);
    Ok(())
}

/// Completes the feasibility bracket with real solver calls: halves from the
/// smallest evaluated penalty (or `a0_norm` on an empty trace) until
/// `p_f = 0`, doubles from the largest until `p_f = 1`. Stops early once the
/// trace holds `max_trials` entries.
pub fn ofs_bracket(
    trace: &mut TuningTrace,
    oracle: &mut dyn PenaltyOracle,
    a0_norm: f64,
    max_trials: usize,
) -> Result<()> {
    if !(a0_norm > 0.0) {
        return Err(Error::InvalidConfig(format!("initial penalty {a0_norm} must be positive")));
    }
    if trace.is_empty() && max_trials > 0 {
        evaluate(oracle, trace, a0_norm, Proposer::Bracket)?;
    }
    let mut steps = 0;
    while trace.a_left.is_none() && trace.len() < max_trials && steps < MAX_BRACKET_STEPS {
        let lowest = trace.entries.iter().map(|e| e.a_norm).fold(f64::INFINITY, f64::min);
        evaluate(oracle, trace, lowest / 2.0, Proposer::Bracket)?;
        steps += 1;
    }
    steps = 0;
    while trace.a_right.is_none() && trace.len() < max_trials && steps < MAX_BRACKET_STEPS {
        let highest = trace.entries.iter().map(|e| e.a_norm).fold(0.0, f64::max);
        evaluate(oracle, trace, highest * 2.0, Proposer::Bracket)?;
        steps += 1;
    }
    Ok(())
}

/// Interval from which the next online-fitting penalty is drawn:
/// `{A : eps < S(A) < 1 - eps}` intersected with the current bracket.
/// Falls back to the bracket (or the evaluated span) when the fitted slope
/// is not increasing or misses the bracket.
pub fn ofs_draw_region(trace: &TuningTrace, fit: &SigmoidFit) -> (f64, f64) {
    let a_min = trace.entries.iter().map(|e| e.a_norm).fold(f64::INFINITY, f64::min);
    let a_max = trace.entries.iter().map(|e| e.a_norm).fold(0.0, f64::max);
    let lo = trace.a_left.unwrap_or(a_min);
    let hi = trace.a_right.unwrap_or(a_max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (a_min, a_max) };
    if fit.theta_s > 0.0 {
        let s_lo = fit.inverse(OFS_EPSILON).max(lo);
        let s_hi = fit.inverse(1.0 - OFS_EPSILON).min(hi);
        if s_hi > s_lo {
            return (s_lo, s_hi);
        }
    }
    (lo, hi)
}

/// Sigmoid fit to every `(a_norm, p_f)` observation, initialized from the
/// current bracket.
pub fn ofs_fit(trace: &TuningTrace) -> Result<SigmoidFit> {
    let points = trace.pf_points();
    let a_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let a_max = points.iter().map(|p| p.0).fold(0.0, f64::max);
    let lo = trace.a_left.unwrap_or(a_min);
    let hi = trace.a_right.unwrap_or(a_max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (a_min, a_max) };
    SigmoidFit::fit(&points, lo, hi)
}

/// One online-fitting trial: fit, draw on the slope, evaluate, record.
pub fn ofs_step(trace: &mut TuningTrace, oracle: &mut dyn PenaltyOracle, rng: &mut impl Rng) -> Result<SigmoidFit> {
    let fit = ofs_fit(trace)?;
    let (lo, hi) = ofs_draw_region(trace, &fit);
    let a = if hi > lo { rng.random_range(lo..hi) } else { lo };
    evaluate(oracle, trace, a, Proposer::OnlineFit)?;
    Ok(fit)
}

/// Online fitting without a surrogate: bracket from `a0_norm`, then step.
pub fn ofs_tune(
    oracle: &mut dyn PenaltyOracle,
    a0_norm: f64,
    max_trials: usize,
    rng: &mut impl Rng,
) -> Result<TuningTrace> {
    let mut trace = TuningTrace::new();
    ofs_bracket(&mut trace, oracle, a0_norm, max_trials)?;
    while trace.len() < max_trials {
        ofs_step(&mut trace, oracle, rng)?;
    }
    Ok(trace)
}

/// Surrogate-first tuning: trial 1 from [`mfs_propose`], trials 2 and 3 from
/// [`pbs_propose`] at 0.8 and 0.2, remaining trials by online fitting seeded
/// with those three observations. Every solver call is one trial, including
/// bracketing probes.
pub fn composed_strategy(
    model: &dyn SolverSurrogate,
    oracle: &mut dyn PenaltyOracle,
    a_range: (f64, f64),
    max_trials: usize,
    rng: &mut impl Rng,
) -> Result<TuningTrace> {
    if max_trials < 3 {
        return Err(Error::InvalidConfig(format!("max_trials = {max_trials} < 3")));
    }
    let first = mfs_propose(model, a_range)?;
    let high = pbs_propose(model, PBS_HIGH, a_range)?;
    let low = pbs_propose(model, PBS_LOW, a_range)?;
    let mut trace = TuningTrace::new();
    evaluate(oracle, &mut trace, first, Proposer::MinFitness)?;
    evaluate(oracle, &mut trace, high, Proposer::PfTarget)?;
    evaluate(oracle, &mut trace, low, Proposer::PfTarget)?;
    ofs_bracket(&mut trace, oracle, first, max_trials)?;
    while trace.len() < max_trials {
        ofs_step(&mut trace, oracle, rng)?;
    }
    Ok(trace)
}
