//! Benchmark harness: instance generation, raw penalty sweeps, and
//! gap-versus-trial curves comparing tuners on held-out instances.

mod instances;
mod report;

use std::path::Path;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annealer::QuboSolver;
use crate::baseline::{run_baseline, Baseline, TunerConfig};
use crate::encoding::tsp::brute_force_tour;
use crate::encoding::TspInstance;
use crate::error::{Error, Result};
use crate::seed;
use crate::stats::log_space;
use crate::strategy::{composed_strategy, ofs_tune};
use crate::surrogate::SurrogatePair;
use crate::task::{BatchStats, TspTask};
use crate::trace::{Proposer, TuningTrace};
pub use instances::{
    generate_instances, random_uniform_instance, read_instance, read_instance_dir, read_split_dirs, write_instances,
    DistKind, GenConfig, DEFAULT_SIDE,
};
pub use report::{read_curves_csv, write_curves_csv, write_runs_csv, write_summary_csv, SummaryRow};

/// Gap charged while no feasible tour has been found.
pub const INFEASIBLE_GAP: f64 = 1.0;
/// Points in the reference sweep.
pub const REFERENCE_SWEEP_POINTS: usize = 64;
/// Instances up to this size get an exact reference by enumeration.
pub const BRUTE_FORCE_MAX_CITIES: usize = 10;
/// Trials reported in the summary table.
pub const SUMMARY_TRIALS: [usize; 2] = [3, 20];

/// `(best - reference) / reference`, floored at 0. An infinite `best` (no
/// feasible tour yet) maps to [`INFEASIBLE_GAP`].
pub fn normalized_gap(best_so_far: f64, reference: f64) -> Result<f64> {
    if !(reference > 0.0 && reference.is_finite()) {
        return Err(Error::InvalidConfig(format!("reference fitness {reference} must be positive")));
    }
    if best_so_far.is_infinite() {
        return Ok(INFEASIBLE_GAP);
    }
    Ok(((best_so_far - reference) / reference).max(0.0))
}

/// Evaluates every raw penalty in `a_values` with one solver call each.
pub fn sweep(instance: &TspInstance, solver: &dyn QuboSolver, a_values: &[f64], seed: u64) -> Result<Vec<BatchStats>> {
    let mut task = TspTask::new(instance, solver, seed)?;
    a_values.iter().map(|&a| crate::task::PenaltyOracle::evaluate(&mut task, a)).collect()
}

/// Writes sweep rows as CSV: `a_raw,a_norm,p_f,e_avg,e_std,best_fitness`
/// (empty `best_fitness` when infeasible).
pub fn write_sweep_csv(rows: &[BatchStats], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["a_raw", "a_norm", "p_f", "e_avg", "e_std", "best_fitness"])?;
    for r in rows {
        w.write_record([
            r.a_raw.to_string(),
            r.a_norm.to_string(),
            r.p_f.to_string(),
            r.e_avg.to_string(),
            r.e_std.to_string(),
            r.best_fitness.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Minimum-fitness, two feasibility targets, then online fitting.
    Surrogate,
    /// Online fitting alone, started from the mean distance.
    Ofs,
    Random,
    Tpe,
    GpBo,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Surrogate, Method::Ofs, Method::Random, Method::Tpe, Method::GpBo];

    pub fn name(self) -> &'static str {
        match self {
            Method::Surrogate => "surrogate",
            Method::Ofs => "ofs",
            Method::Random => "random",
            Method::Tpe => "tpe",
            Method::GpBo => "gp_bo",
        }
    }

    pub fn needs_model(self) -> bool {
        self == Method::Surrogate
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}' (expected one of surrogate, ofs, random, tpe, gp_bo)")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub max_trials: usize,
    pub seeds: Vec<u64>,
    /// Raw penalty range and warm-up count for the generic tuners.
    pub tuner: TunerConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Surrogate, Method::Random, Method::Tpe, Method::GpBo],
            max_trials: 20,
            seeds: vec![0, 1, 2],
            tuner: TunerConfig::default(),
        }
    }
}

/// One tuner run on one instance with one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub method: Method,
    pub instance: String,
    pub seed: u64,
    pub trace: TuningTrace,
}

/// Mean normalized gap per trial with 95% confidence half-widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCurve {
    pub method: String,
    pub mean: Vec<f64>,
    pub ci95: Vec<f64>,
    pub n_instances: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub curves: Vec<GapCurve>,
    pub references: Vec<(String, f64)>,
    pub runs: Vec<Run>,
}

impl BenchReport {
    pub fn curve(&self, method: Method) -> Option<&GapCurve> {
        self.curves.iter().find(|c| c.method == method.name())
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        self.curves
            .iter()
            .map(|c| SummaryRow {
                method: c.method.clone(),
                at: SUMMARY_TRIALS
                    .iter()
                    .map(|&t| (t, c.mean.get(t - 1).copied(), c.ci95.get(t - 1).copied()))
                    .collect(),
            })
            .collect()
    }

    /// Writes `curves.csv`, `summary.csv` and `runs.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_curves_csv(&self.curves, dir.join("curves.csv"))?;
        write_summary_csv(&self.summary(), dir.join("summary.csv"))?;
        write_runs_csv(self, dir.join("runs.csv"))
    }
}

fn run_one(
    method: Method,
    instance: &TspInstance,
    solver: &dyn QuboSolver,
    model: Option<&SurrogatePair>,
    cfg: &BenchConfig,
    run_seed: u64,
) -> Result<TuningTrace> {
    // common random numbers: the solver stream depends on (seed, instance) only
    let inst_seed = seed::derive(run_seed, seed::hash_str(instance.name()));
    let mut task = TspTask::new(instance, solver, inst_seed)?;
    let mut rng = seed::rng(seed::derive(inst_seed, 1));
    match method {
        Method::Surrogate => {
            let model = model.ok_or_else(|| Error::InvalidConfig("the surrogate method needs a trained model".into()))?;
            let bound = model.bind(instance)?;
            composed_strategy(&bound, &mut task, bound.a_norm_range(), cfg.max_trials, &mut rng)
        }
        Method::Ofs => {
            let a0 = instance.a_norm(instance.mean_original_distance());
            ofs_tune(&mut task, a0, cfg.max_trials, &mut rng)
        }
        Method::Random | Method::Tpe | Method::GpBo => {
            let kind = match method {
                Method::Random => Baseline::Random,
                Method::Tpe => Baseline::Tpe,
                _ => Baseline::GpBo,
            };
            let tcfg = TunerConfig {
                seed: seed::derive(inst_seed, 2),
                max_trials: cfg.max_trials,
                ..cfg.tuner
            };
            run_baseline(kind, &tcfg, &mut task)
        }
    }
}

/// Best-known fitness: the best of every run, a log-spaced sweep over the
/// union of the tuners' penalty ranges, and for small instances the exact
/// optimum.
pub fn reference_fitness(
    instance: &TspInstance,
    solver: &dyn QuboSolver,
    runs: &[&TuningTrace],
    sweep_range: (f64, f64),
    seed: u64,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    for t in runs {
        if let Some(e) = t.best() {
            best = best.min(e.stats.objective());
        }
    }
    let grid = log_space(sweep_range.0, sweep_range.1, REFERENCE_SWEEP_POINTS);
    for s in sweep(instance, solver, &grid, seed::derive(seed::derive(seed, seed::hash_str(instance.name())), 3))? {
        best = best.min(s.objective());
    }
    if instance.n_cities() <= BRUTE_FORCE_MAX_CITIES {
        best = best.min(brute_force_tour(instance.dist_original()).1);
    }
    if !best.is_finite() {
        return Err(Error::Solver(format!("no feasible tour found for reference on {}", instance.name())));
    }
    Ok(best)
}

/// Mean of per-instance values and `1.96 * stderr` across instances.
fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Runs every method on every instance and seed, computes per-instance
/// references, and aggregates gap curves (seed mean per instance first).
pub fn run_benchmark(
    cfg: &BenchConfig,
    instances: &[TspInstance],
    solver: &dyn QuboSolver,
    model: Option<&SurrogatePair>,
) -> Result<BenchReport> {
    if instances.is_empty() {
        return Err(Error::InvalidConfig("no benchmark instances".into()));
    }
    if cfg.methods.is_empty() || cfg.seeds.is_empty() || cfg.max_trials == 0 {
        return Err(Error::InvalidConfig("need at least one method, one seed and one trial".into()));
    }
    if cfg.methods.iter().any(|m| m.needs_model()) && model.is_none() {
        return Err(Error::InvalidConfig(
            "the surrogate method needs a trained model; pass --model or drop the method".into(),
        ));
    }
    if cfg.methods.contains(&Method::Surrogate) && cfg.max_trials < 3 {
        return Err(Error::InvalidConfig(format!("max_trials = {} < 3", cfg.max_trials)));
    }
    if cfg.methods.iter().any(|m| matches!(m, Method::Random | Method::Tpe | Method::GpBo)) {
        TunerConfig {
            max_trials: cfg.max_trials,
            ..cfg.tuner
        }
        .validate()?;
    }

    let jobs: Vec<(Method, usize, u64)> = cfg
        .methods
        .iter()
        .flat_map(|&m| (0..instances.len()).flat_map(move |i| cfg.seeds.iter().map(move |&s| (m, i, s))))
        .collect();
    let traces: Vec<Result<TuningTrace>> = jobs
        .par_iter()
        .map(|&(m, i, s)| run_one(m, &instances[i], solver, model, cfg, s))
        .collect();
    let mut runs = Vec::with_capacity(jobs.len());
    for (&(method, i, seed), t) in jobs.iter().zip(traces) {
        runs.push(Run {
            method,
            instance: instances[i].name().to_string(),
            seed,
            trace: t?,
        });
    }
    info!("completed {} tuning runs", runs.len());

    let tuner_lo = cfg.tuner.a_range.0;
    let tuner_hi = cfg.tuner.a_range.1;
    let references: Vec<Result<(String, f64)>> = instances
        .par_iter()
        .map(|inst| {
            let own: Vec<&TuningTrace> = runs.iter().filter(|r| r.instance == inst.name()).map(|r| &r.trace).collect();
            let (mut lo, mut hi) = (tuner_lo, tuner_hi);
            if let Some(m) = model {
                lo = lo.min(inst.a_raw(m.a_norm_range.0));
                hi = hi.max(inst.a_raw(m.a_norm_range.1));
            }
            let r = reference_fitness(inst, solver, &own, (lo, hi), cfg.seeds[0])?;
            Ok((inst.name().to_string(), r))
        })
        .collect();
    let references: Vec<(String, f64)> = references.into_iter().collect::<Result<_>>()?;

    let mut curves = Vec::new();
    for &method in &cfg.methods {
        if curves.iter().any(|c: &GapCurve| c.method == method.name()) {
            continue;
        }
        let mut per_instance: Vec<Vec<f64>> = Vec::with_capacity(instances.len());
        for (name, reference) in &references {
            let mut acc = vec![0.0; cfg.max_trials];
            let mine: Vec<&Run> = runs.iter().filter(|r| r.method == method && &r.instance == name).collect();
            for r in &mine {
                for (t, b) in r.trace.best_so_far().iter().enumerate() {
                    acc[t] += normalized_gap(*b, *reference)? / mine.len() as f64;
                }
            }
            per_instance.push(acc);
        }
        let (mut mean, mut ci95) = (Vec::new(), Vec::new());
        for t in 0..cfg.max_trials {
            let column: Vec<f64> = per_instance.iter().map(|v| v[t]).collect();
            let (m, c) = mean_ci(&column);
            mean.push(m);
            ci95.push(c);
        }
        curves.push(GapCurve {
            method: method.name().to_string(),
            mean,
            ci95,
            n_instances: instances.len(),
        });
    }
    Ok(BenchReport {
        curves,
        references,
        runs,
    })
}

/// Label used in run reports for a trace entry's proposer.
pub fn proposer_label(p: Proposer) -> &'static str {
    match p {
        Proposer::MinFitness => "min_fitness",
        Proposer::PfTarget => "pf_target",
        Proposer::Bracket => "bracket",
        Proposer::OnlineFit => "online_fit",
        Proposer::Random => "random",
        Proposer::Tpe => "tpe",
        Proposer::GpBo => "gp_bo",
        Proposer::Sweep => "sweep",
    }
}
