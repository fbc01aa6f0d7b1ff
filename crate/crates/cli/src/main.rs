//! `relaxtune` command-line front end.
//!
//! Exit status: 0 on success, 2 on usage or validation errors, 1 on runtime
//! failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use relaxtune::annealer::{AnnealConfig, SimulatedAnnealer};
use relaxtune::baseline::{run_baseline, Baseline, TunerConfig};
use relaxtune::bench::{
    generate_instances, read_instance, read_split_dirs, run_benchmark, sweep, write_instances, write_sweep_csv,
    BenchConfig, DistKind, GenConfig, Method, DEFAULT_SIDE,
};
use relaxtune::dataset::{build_corpus, read_corpus, write_corpus, Split};
use relaxtune::seed;
use relaxtune::stats::log_space;
use relaxtune::strategy::{composed_strategy, mfs_propose, ofs_tune};
use relaxtune::surrogate::{SurrogatePair, TrainConfig};
use relaxtune::task::TspTask;
use relaxtune::trace::TuningTrace;
use relaxtune::Error;

#[derive(Parser)]
#[command(name = "relaxtune", version, about = "Penalty-parameter tuning for QUBO-encoded TSP instances")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// JSON annealer configuration (batch_size, sweeps, t_initial, t_final, seed).
    #[arg(long)]
    solver_config: Option<PathBuf>,
    /// Solutions per solver call; overrides the configuration file.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Metropolis sweeps per replica; overrides the configuration file.
    #[arg(long)]
    sweeps: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Uniform,
    Exponential,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic instances into <out>/train and <out>/test.
    Gen {
        /// Number of instances.
        #[arg(long)]
        n: usize,
        /// Inclusive city-count range, e.g. 20..30.
        #[arg(long, value_parser = parse_range)]
        cities: (usize, usize),
        #[arg(long, value_enum, default_value = "uniform")]
        kind: KindArg,
        /// Side of the coordinate square for uniform instances.
        #[arg(long, default_value_t = DEFAULT_SIDE)]
        side: f64,
        #[arg(long, default_value_t = 0.9)]
        train_ratio: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample penalties on every instance and write a JSONL training corpus.
    Corpus {
        /// Directory with train/ and test/ subdirectories (or plain instance files).
        #[arg(long)]
        instances: PathBuf,
        /// Penalty samples per instance beyond the bracketing probes.
        #[arg(long, default_value_t = 20)]
        budget: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Train the surrogate on the train split of a corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Tune one instance and print the proposal and the trace.
    Tune {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        /// surrogate, ofs, random, tpe or gp_bo. Defaults to surrogate with a model, ofs without.
        #[arg(long)]
        method: Option<String>,
        #[arg(long, default_value_t = 20)]
        max_trials: usize,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Compare tuners on held-out instances and write gap curves.
    Bench {
        /// Directory with a test/ subdirectory (or plain instance files).
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Comma-separated methods.
        #[arg(long, default_value = "surrogate,random,tpe,gp_bo")]
        methods: String,
        #[arg(long, default_value_t = 20)]
        max_trials: usize,
        /// Number of tuning seeds, derived from --seed.
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        /// Output directory for curves.csv, summary.csv and runs.csv.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Evaluate a log-spaced grid of raw penalties on one instance.
    Sweep {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        a_min: f64,
        #[arg(long, default_value_t = 100.0)]
        a_max: f64,
        #[arg(long, default_value_t = 64)]
        points: usize,
        /// Interpret --a-min/--a-max as normalized penalties.
        #[arg(long)]
        normalized: bool,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected MIN..MAX, got '{s}'"))?;
    let lo = a.trim().parse::<usize>().map_err(|e| e.to_string())?;
    let hi = b.trim().trim_start_matches('=').parse::<usize>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

/// Error plus the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Dimension { .. }
            | Error::IndexOutOfRange { .. }
            | Error::Degenerate(_)
            | Error::InvalidInstance(_)
            | Error::InvalidConfig(_)
            | Error::UnsupportedFormat(_)
            | Error::Malformed(_)
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::Version { .. }
            | Error::InsufficientHistory(_)
            | Error::NoFeasibleRegion { .. }
            | Error::Json(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn solver_from(args: &SolverArgs, seed: u64) -> Result<SimulatedAnnealer, Failure> {
    let mut cfg = match &args.solver_config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::from(Error::Io {
                path: p.clone(),
                source: e,
            }))?;
            serde_json::from_str::<AnnealConfig>(&text)
                .map_err(|e| usage(format!("{}: invalid solver configuration: {e}", p.display())))?
        }
        None => AnnealConfig::default(),
    };
    if let Some(b) = args.batch_size {
        cfg.batch_size = b;
    }
    if let Some(s) = args.sweeps {
        cfg.sweeps = s;
    }
    cfg.seed = seed::derive(cfg.seed, seed);
    Ok(SimulatedAnnealer::new(cfg)?)
}

fn load_model(path: Option<&Path>) -> Result<Option<SurrogatePair>, Failure> {
    path.map(|p| SurrogatePair::load(p).map_err(Failure::from)).transpose()
}

fn print_trace(trace: &TuningTrace) {
    println!("trial,proposer,a_raw,a_norm,p_f,best_fitness,best_so_far");
    for (k, (e, best)) in trace.entries.iter().zip(trace.best_so_far()).enumerate() {
        println!(
            "{},{},{},{},{},{},{}",
            k + 1,
            serde_json::to_value(e.proposer).map(|v| v.as_str().unwrap_or("").to_string()).unwrap_or_default(),
            e.stats.a_raw,
            e.a_norm,
            e.stats.p_f,
            e.stats.best_fitness.map(|v| v.to_string()).unwrap_or_default(),
            if best.is_finite() { best.to_string() } else { String::new() }
        );
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let seed = cli.seed;
    match cli.command {
        Command::Gen {
            n,
            cities,
            kind,
            side,
            train_ratio,
            out,
        } => {
            let cfg = GenConfig {
                n_instances: n,
                cities,
                kind: match kind {
                    KindArg::Uniform => DistKind::Uniform,
                    KindArg::Exponential => DistKind::Exponential,
                },
                side,
                rate_range: (0.5 / side, 2.0 / side),
                train_ratio,
                seed,
            };
            let instances = generate_instances(&cfg)?;
            let paths = write_instances(&instances, &out)?;
            println!("wrote {} instances to {}", paths.len(), out.display());
        }
        Command::Corpus {
            instances,
            budget,
            out,
            solver,
        } => {
            let solver = solver_from(&solver, seed)?;
            let instances = read_split_dirs(&instances)?;
            if instances.is_empty() {
                return Err(usage("no instance files found"));
            }
            let records = build_corpus(&instances, &solver, budget, seed)?;
            write_corpus(&records, &out)?;
            println!("wrote {} records to {}", records.len(), out.display());
        }
        Command::Train { corpus, epochs, lr, out } => {
            let records = read_corpus(&corpus)?;
            let (train, test): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| r.split == Split::Train);
            if train.is_empty() {
                return Err(usage("corpus has no training records"));
            }
            let cfg = TrainConfig {
                epochs,
                lr,
                seed,
                ..TrainConfig::default()
            };
            let (model, report) = SurrogatePair::train(&train, &cfg)?;
            println!(
                "pf BCE {:.4} -> {:.4}; energy Huber {:.4} -> {:.4}",
                report.pf_initial, report.pf_final, report.energy_initial, report.energy_final
            );
            if !test.is_empty() {
                let mut bce = 0.0;
                for r in &test {
                    let p = model.predict_features(&r.feature_vector)?.p_f;
                    bce -= r.stats.p_f * p.ln() + (1.0 - r.stats.p_f) * (1.0 - p).ln();
                }
                println!("held-out BCE {:.4} over {} records", bce / test.len() as f64, test.len());
            }
            model.save(&out)?;
            println!("saved model to {}", out.display());
        }
        Command::Tune {
            instance,
            model,
            method,
            max_trials,
            solver,
        } => {
            let solver = solver_from(&solver, seed)?;
            let inst = read_instance(&instance)?;
            let model = load_model(model.as_deref())?;
            let method: Method = match method {
                Some(m) => m.parse()?,
                None if model.is_some() => Method::Surrogate,
                None => Method::Ofs,
            };
            let mut task = TspTask::new(&inst, &solver, seed::derive(seed, seed::hash_str(inst.name())))?;
            let mut rng = seed::rng(seed::derive(seed, 1));
            let trace = match method {
                Method::Surrogate => {
                    let model = model
                        .as_ref()
                        .ok_or_else(|| usage("method 'surrogate' needs --model (train one with `relaxtune train`)"))?;
                    let bound = model.bind(&inst)?;
                    let a = mfs_propose(&bound, bound.a_norm_range())?;
                    println!("proposed A = {} (normalized {a})", inst.a_raw(a));
                    composed_strategy(&bound, &mut task, bound.a_norm_range(), max_trials, &mut rng)?
                }
                Method::Ofs => {
                    let a0 = inst.a_norm(inst.mean_original_distance());
                    ofs_tune(&mut task, a0, max_trials, &mut rng)?
                }
                Method::Random | Method::Tpe | Method::GpBo => {
                    let kind = match method {
                        Method::Random => Baseline::Random,
                        Method::Tpe => Baseline::Tpe,
                        _ => Baseline::GpBo,
                    };
                    let cfg = TunerConfig {
                        seed,
                        max_trials,
                        ..TunerConfig::default()
                    };
                    run_baseline(kind, &cfg, &mut task)?
                }
            };
            if let Some(best) = trace.best() {
                println!("best A = {} with tour length {}", best.stats.a_raw, best.stats.objective());
            } else {
                println!("no feasible tour found in {max_trials} trials");
            }
            print_trace(&trace);
        }
        Command::Bench {
            instances,
            model,
            methods,
            max_trials,
            seeds,
            out,
            solver,
        } => {
            let methods: Vec<Method> = methods
                .split(',')
                .map(|m| m.trim().parse::<Method>())
                .collect::<Result<_, _>>()?;
            let model = load_model(model.as_deref())?;
            if methods.iter().any(|m| m.needs_model()) && model.is_none() {
                return Err(usage(
                    "method 'surrogate' needs a trained model: run `relaxtune corpus` and `relaxtune train`, then pass --model <file> (or drop 'surrogate' from --methods)",
                ));
            }
            let solver = solver_from(&solver, seed)?;
            let all = read_split_dirs(&instances)?;
            let held_out: Vec<_> = if all.iter().any(|p| p.1 == Split::Test) {
                all.into_iter().filter(|p| p.1 == Split::Test).map(|p| p.0).collect()
            } else {
                all.into_iter().map(|p| p.0).collect()
            };
            let cfg = BenchConfig {
                methods,
                max_trials,
                seeds: (0..seeds as u64).map(|k| seed::derive(seed, k)).collect(),
                ..BenchConfig::default()
            };
            info!("benchmarking {} instances", held_out.len());
            let report = run_benchmark(&cfg, &held_out, &solver, model.as_ref())?;
            report.write(&out)?;
            for row in report.summary() {
                let cells: Vec<String> = row
                    .at
                    .iter()
                    .map(|(t, m, c)| match (m, c) {
                        (Some(m), Some(c)) => format!("#{t}: {:.2}% ± {:.2}%", 100.0 * m, 100.0 * c),
                        _ => format!("#{t}: -"),
                    })
                    .collect();
                println!("{:<10} {}", row.method, cells.join("  "));
            }
            println!("wrote reports to {}", out.display());
        }
        Command::Sweep {
            instance,
            a_min,
            a_max,
            points,
            normalized,
            out,
            solver,
        } => {
            if !(a_min > 0.0 && a_max > a_min) || points < 2 {
                return Err(usage("need 0 < --a-min < --a-max and --points >= 2"));
            }
            let solver = solver_from(&solver, seed)?;
            let inst = read_instance(&instance)?;
            let (lo, hi) = if normalized { (inst.a_raw(a_min), inst.a_raw(a_max)) } else { (a_min, a_max) };
            let rows = sweep(&inst, &solver, &log_space(lo, hi, points), seed)?;
            write_sweep_csv(&rows, &out)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
