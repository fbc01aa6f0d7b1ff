//! Tuning the penalty weight of QUBO-encoded constrained problems.
//!
//! A constrained binary problem `min x^T Q x  s.t. Cx = d` is relaxed to
//! `min x^T Q x + A ||Cx - d||^2`. Too small an `A` and the solver returns
//! infeasible states; too large and the objective drowns in the penalty.
//! This crate learns a surrogate of the solver's behaviour as a function of
//! `A` (feasibility probability and energy statistics) from previously
//! solved instances and uses it to propose `A` with few or no solver calls.
//!
//! Layout:
//! - [`qubo`], [`annealer`]: models, energies and a batch simulated annealer.
//! - [`encoding`]: TSP / vertex-cover encodings, distance preprocessing, TSPLIB.
//! - [`task`], [`dataset`]: batch statistics and training corpora.
//! - [`surrogate`]: features and the two feed-forward heads.
//! - [`strategy`]: surrogate-driven proposals and online sigmoid fitting.
//! - [`baseline`]: random search, TPE and GP-based Bayesian optimization.
//! - [`bench`]: instance generation, sweeps and gap-curve benchmarking.

pub mod annealer;
pub mod baseline;
pub mod bench;
pub mod dataset;
pub mod encoding;
pub mod error;
pub mod qubo;
pub mod seed;
pub mod stats;
pub mod strategy;
pub mod surrogate;
pub mod task;
pub mod trace;

pub use error::{Error, Result};
