//! End-to-end acceptance checks. Runs every criterion, prints one PASS/FAIL
//! line each, and exits non-zero if any failed.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use relaxtune::annealer::{AnnealConfig, CountingSolver, QuboSolver, SimulatedAnnealer};
use relaxtune::bench::{generate_instances, run_benchmark, sweep, BenchConfig, BenchReport, GenConfig, Method};
use relaxtune::dataset::{build_corpus, DatasetRecord, Split};
use relaxtune::encoding::tsp::{brute_force_tour, canonical_tour, tour_to_bits};
use relaxtune::encoding::{encode_tsp, off_diagonal_variance, tour_length, TspInstance};
use relaxtune::qubo::all_assignments;
use relaxtune::seed;
use relaxtune::stats::{log_space, spearman};
use relaxtune::strategy::{composed_strategy, expected_min_fitness, mfs_propose, pbs_propose, sigmoid, SigmoidFit};
use relaxtune::surrogate::{SurrogatePair, TrainConfig};
use relaxtune::task::TspTask;

/// Sweeps per replica for corpus building and benchmarking.
const BENCH_SWEEPS: usize = 200;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_instance(n: usize, rng: &mut impl Rng) -> TspInstance {
    let coords = (0..n).map(|_| (rng.random_range(0.0..100.0), rng.random_range(0.0..100.0))).collect();
    TspInstance::from_coords("r", coords).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let coords = vec![(0.0, 0.0), (1.0, 0.0), (0.5, 3f64.sqrt() / 2.0)];
    let tri = TspInstance::from_coords("tri", coords).unwrap();
    let enc = encode_tsp(&tri).unwrap();
    let mut zeros = 0;
    let mut zeros_are_permutations = true;
    for bits in all_assignments(9) {
        if enc.penalty.energy(&bits).unwrap() == 0.0 {
            zeros += 1;
            let is_perm = (0..3).all(|v| (0..3).map(|j| bits[v * 3 + j]).sum::<u8>() == 1)
                && (0..3).all(|j| (0..3).map(|v| bits[v * 3 + j]).sum::<u8>() == 1);
            zeros_are_permutations &= is_perm;
        }
    }

    let mut rng = seed::rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(3..=10);
        let inst = random_instance(n, &mut rng);
        let enc = encode_tsp(&inst).unwrap();
        let mut tour: Vec<usize> = (0..n).collect();
        tour.shuffle(&mut rng);
        let e = enc.objective.energy(&tour_to_bits(&tour)).unwrap();
        let len = tour_length(inst.dist_solver(), &tour);
        worst = worst.max((e - len).abs() / len.abs().max(1e-300));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        zeros == 6 && zeros_are_permutations && worst < 1e-9 && secs < 1.0,
        format!("{zeros} zero-penalty states (all permutations: {zeros_are_permutations}); worst relative energy error {worst:.2e}; {secs:.2}s"),
    )
}

/// Sample mean and its standard error.
fn monte_carlo_min(mu: f64, sigma: f64, m: usize, draws: usize, rng: &mut impl Rng) -> (f64, f64) {
    let (mut acc, mut acc2) = (0.0, 0.0);
    for _ in 0..draws {
        let mut best = f64::INFINITY;
        for _ in 0..m {
            let z: f64 = rng.sample(StandardNormal);
            best = best.min(z);
        }
        let v = mu + sigma * best;
        acc += v;
        acc2 += v * v;
    }
    let n = draws as f64;
    let mean = acc / n;
    (mean, ((acc2 / n - mean * mean) / n).sqrt())
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let b = 128;
    let mut rng = seed::rng(2);
    let (mut worst, mut worst_z): (f64, f64) = (0.0, 0.0);
    for _ in 0..25 {
        let mu = rng.random_range(10.0..1000.0);
        let sigma = rng.random_range(1.0..100.0);
        let m = [1usize, 2, 4, 16, 64][rng.random_range(0..5)];
        let exact = expected_min_fitness(m as f64 / b as f64, mu, sigma, b).unwrap();
        let (mc, se) = monte_carlo_min(mu, sigma, m, 1_000_000, &mut rng);
        worst = worst.max((exact - mc).abs() / mc.abs());
        worst_z = worst_z.max((exact - mc).abs() / se);
    }
    let single = expected_min_fitness(1.0 / b as f64, 100.0, 10.0, b).unwrap();
    let single_err = (single - 100.0).abs() / 100.0;
    let infeasible = expected_min_fitness(0.0, 100.0, 10.0, b).unwrap();
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 0.005 && single_err < 0.001 && infeasible == f64::INFINITY && secs < 30.0,
        format!("worst MC relative error {worst:.2e} (worst deviation {worst_z:.2} MC standard errors); m=1 error {single_err:.1e}; p_f=0 -> {infeasible}; {secs:.1}s"),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let a: Vec<f64> = (0..12).map(|k| 5.0 * k as f64 / 11.0).collect();
    let clean: Vec<(f64, f64)> = a.iter().map(|&x| (x, sigmoid(x, 2.0, 5.0))).collect();
    let fit = SigmoidFit::fit(&clean, 0.0, 5.0).unwrap();
    let exact_ok = (fit.theta_s - 2.0).abs() < 1e-3 && (fit.theta_o - 5.0).abs() < 1e-3;

    let mut hits = 0;
    for s in 0..100 {
        let mut rng = seed::rng(seed::derive(3, s));
        let noisy: Vec<(f64, f64)> = a
            .iter()
            .map(|&x| {
                let z: f64 = rng.sample(StandardNormal);
                (x, sigmoid(x, 2.0, 5.0) + 0.05 * z)
            })
            .collect();
        if let Ok(f) = SigmoidFit::fit(&noisy, 0.0, 5.0) {
            if (f.theta_s - 2.0).abs() < 0.15 && (f.theta_o - 5.0).abs() < 0.15 {
                hits += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        exact_ok && hits >= 95 && secs < 5.0,
        format!(
            "noiseless fit ({:.6}, {:.6}); noisy recovery {hits}/100; {secs:.2}s",
            fit.theta_s, fit.theta_o
        ),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = seed::rng(4);
    let mut same = 0;
    let mut variance_ok = 0;
    for _ in 0..20 {
        let inst = random_instance(7, &mut rng);
        let (t_orig, _) = brute_force_tour(inst.dist_original());
        let (t_solv, _) = brute_force_tour(inst.dist_solver());
        if canonical_tour(&t_orig) == canonical_tour(&t_solv) {
            same += 1;
        }
        if off_diagonal_variance(inst.dist_solver()) <= off_diagonal_variance(inst.dist_original()) {
            variance_ok += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        same == 20 && variance_ok == 20 && secs < 10.0,
        format!("same optimal tour on {same}/20; variance reduced on {variance_ok}/20; {secs:.2}s"),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let solver = SimulatedAnnealer::new(AnnealConfig {
        batch_size: 128,
        sweeps: 1000,
        ..AnnealConfig::default()
    })
    .unwrap();
    let instances = generate_instances(&GenConfig {
        n_instances: 5,
        cities: (10, 10),
        train_ratio: 1.0,
        seed: 5,
        ..GenConfig::default()
    })
    .unwrap();
    let mut monotone = 0;
    let mut inside = 0;
    let mut notes = Vec::new();
    for (k, (inst, _)) in instances.iter().enumerate() {
        let grid: Vec<f64> = log_space(0.1, 10.0, 40).into_iter().map(|a| inst.a_raw(a)).collect();
        let rows = sweep(inst, &solver, &grid, seed::derive(5, k as u64)).unwrap();
        let a: Vec<f64> = rows.iter().map(|r| r.a_raw).collect();
        let p: Vec<f64> = rows.iter().map(|r| r.p_f).collect();
        let rho = spearman(&a, &p);
        if rho > 0.8 {
            monotone += 1;
        }
        // first minimizer in increasing A
        let mut best = 0;
        for (i, r) in rows.iter().enumerate() {
            if r.objective() < rows[best].objective() {
                best = i;
            }
        }
        let p_best = rows[best].p_f;
        if p_best > 0.0 && p_best < 1.0 {
            inside += 1;
        }
        notes.push(format!("rho={rho:.2} p_f@argmin={p_best:.3}"));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        monotone == 5 && inside >= 4 && secs < 600.0,
        format!(
            "Spearman > 0.8 on {monotone}/5, argmin on slope {inside}/5 [{}]; {secs:.0}s",
            notes.join(", ")
        ),
    )
}

fn bench_solver() -> SimulatedAnnealer {
    SimulatedAnnealer::new(AnnealConfig {
        sweeps: BENCH_SWEEPS,
        ..AnnealConfig::default()
    })
    .unwrap()
}

fn bce(p: f64, target: f64) -> f64 {
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

fn criterion_6() -> (Outcome, Option<SurrogatePair>) {
    let start = Instant::now();
    let instances = generate_instances(&GenConfig {
        n_instances: 40,
        cities: (10, 15),
        train_ratio: 0.8,
        seed: 6,
        ..GenConfig::default()
    })
    .unwrap();
    let solver = bench_solver();
    let corpus = match build_corpus(&instances, &solver, 20, 6) {
        Ok(c) => c,
        Err(e) => return (Err(format!("corpus failed: {e}")), None),
    };
    let (train, test): (Vec<DatasetRecord>, Vec<DatasetRecord>) =
        corpus.into_iter().partition(|r| r.split == Split::Train);
    let (model, report) = match SurrogatePair::train(&train, &TrainConfig::default()) {
        Ok(m) => m,
        Err(e) => return (Err(format!("training failed: {e}")), None),
    };
    let mut loss = 0.0;
    let (mut plateau, mut correct) = (0, 0);
    for r in &test {
        let p = model.predict_features(&r.feature_vector).unwrap().p_f;
        loss += bce(p, r.stats.p_f);
        if r.stats.p_f == 0.0 || r.stats.p_f == 1.0 {
            plateau += 1;
            if (p >= 0.5) == (r.stats.p_f == 1.0) {
                correct += 1;
            }
        }
    }
    let loss = loss / test.len() as f64;
    let accuracy = correct as f64 / plateau as f64;
    let (g_pf, g_energy) = model.gradient_check(&test[..32.min(test.len())]).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let outcome = check(
        loss < 0.45 && accuracy > 0.9 && g_pf < 1e-4 && g_energy < 1e-4 && secs < 900.0,
        format!(
            "{} train / {} held-out records; held-out BCE {loss:.3}; plateau accuracy {accuracy:.3} ({correct}/{plateau}); \
             train BCE {:.3} -> {:.3}; gradient errors {g_pf:.1e} / {g_energy:.1e}; {secs:.0}s",
            train.len(),
            test.len(),
            report.pf_initial,
            report.pf_final
        ),
    );
    (outcome, Some(model))
}

fn bench_instances() -> Vec<TspInstance> {
    generate_instances(&GenConfig {
        n_instances: 10,
        cities: (10, 15),
        train_ratio: 0.0,
        seed: 7,
        ..GenConfig::default()
    })
    .unwrap()
    .into_iter()
    .map(|p| p.0)
    .collect()
}

fn run_bench(model: &SurrogatePair, out: &Path) -> relaxtune::Result<BenchReport> {
    let cfg = BenchConfig {
        methods: vec![Method::Surrogate, Method::Random, Method::Tpe, Method::GpBo],
        max_trials: 20,
        seeds: vec![0, 1, 2],
        ..BenchConfig::default()
    };
    let report = run_benchmark(&cfg, &bench_instances(), &bench_solver(), Some(model))?;
    report.write(out)?;
    Ok(report)
}

fn criterion_7(model: Option<&SurrogatePair>, out: &Path) -> Outcome {
    let start = Instant::now();
    let model = model.ok_or("no surrogate available from criterion 6")?;
    let report = run_bench(model, out).map_err(|e| format!("benchmark failed: {e}"))?;
    let gap = |m: Method, t: usize| report.curve(m).unwrap().mean[t - 1];
    let ours3 = gap(Method::Surrogate, 3);
    let others3: Vec<(Method, f64)> = [Method::Random, Method::Tpe, Method::GpBo]
        .into_iter()
        .map(|m| (m, gap(m, 3)))
        .collect();
    let ours1 = gap(Method::Surrogate, 1);
    let random1 = gap(Method::Random, 1);
    let secs = start.elapsed().as_secs_f64();
    let table: Vec<String> = report
        .curves
        .iter()
        .map(|c| format!("{} #1 {:.2}% #3 {:.2}% #20 {:.2}%", c.method, 100.0 * c.mean[0], 100.0 * c.mean[2], 100.0 * c.mean[19]))
        .collect();
    check(
        others3.iter().all(|(_, g)| ours3 < *g) && ours1 < random1 && secs < 7200.0,
        format!("{}; {secs:.0}s", table.join(" | ")),
    )
}

fn criterion_8(model: Option<&SurrogatePair>) -> Outcome {
    let model = model.ok_or("no surrogate available from criterion 6")?;
    let inst = &bench_instances()[0];
    let counting = CountingSolver::new(bench_solver());
    let bound = model.bind(inst).map_err(|e| e.to_string())?;
    let range = bound.a_norm_range();
    let mfs = mfs_propose(&bound, range).map_err(|e| e.to_string())?;
    let p8 = pbs_propose(&bound, 0.8, range).map_err(|e| e.to_string())?;
    let p2 = pbs_propose(&bound, 0.2, range).map_err(|e| e.to_string())?;
    let offline_calls = counting.calls();
    let mut task = TspTask::new(inst, &counting as &dyn QuboSolver, 8).map_err(|e| e.to_string())?;
    composed_strategy(&bound, &mut task, range, 3, &mut seed::rng(8)).map_err(|e| e.to_string())?;
    let composed_calls = counting.calls();
    check(
        offline_calls == 0 && composed_calls == 3,
        format!(
            "proposals (A_norm {mfs:.3}, {p8:.3}, {p2:.3}) made {offline_calls} solver calls; 3-trial composed run made {composed_calls}"
        ),
    )
}

fn criterion_9(model: Option<&SurrogatePair>, first: &Path, second: &Path) -> Outcome {
    let model = model.ok_or("no surrogate available from criterion 6")?;
    if !first.join("curves.csv").exists() {
        return Err("criterion 7 produced no reports".into());
    }
    run_bench(model, second).map_err(|e| format!("benchmark failed: {e}"))?;
    let mut compared = Vec::new();
    for name in ["curves.csv", "summary.csv", "runs.csv"] {
        let a = fs::read(first.join(name)).map_err(|e| e.to_string())?;
        let b = fs::read(second.join(name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{name} differs between identical runs"));
        }
        compared.push(format!("{name} ({} bytes)", a.len()));
    }
    Ok(format!("byte-identical: {}", compared.join(", ")))
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let (first, second) = (dir.path().join("run1"), dir.path().join("run2"));
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |n: usize, name: &'static str, o: Outcome| {
        let tag = if o.is_ok() { "PASS" } else { "FAIL" };
        let detail = match &o {
            Ok(d) | Err(d) => d.clone(),
        };
        println!("[{tag}] criterion {n}: {name}: {detail}");
        results.push((n, name, o));
    };
    report(1, "encoding correctness", criterion_1());
    report(2, "expected-min-fitness oracle", criterion_2());
    report(3, "sigmoid-fit recovery", criterion_3());
    report(4, "variance-reduction invariance", criterion_4());
    report(5, "sigmoid/dip phenomenology", criterion_5());
    let (o6, model) = criterion_6();
    report(6, "surrogate learnability", o6);
    report(7, "end-to-end benchmark", criterion_7(model.as_ref(), &first));
    report(8, "zero offline solver calls", criterion_8(model.as_ref()));
    report(9, "determinism", criterion_9(model.as_ref(), &first, &second));

    let failed: Vec<usize> = results.iter().filter(|r| r.2.is_err()).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({failed:?})") }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
