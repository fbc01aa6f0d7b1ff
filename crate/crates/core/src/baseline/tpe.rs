//! Tree-structured Parzen estimator for a single bounded parameter.

use rand::Rng;
use rand_distr::StandardNormal;

use super::TunerConfig;
use crate::stats::norm_cdf;

pub const TPE_GAMMA: f64 = 0.25;
pub const TPE_CANDIDATES: usize = 64;
/// Lower bound on kernel bandwidth as a fraction of the range width.
const MIN_BANDWIDTH_FRACTION: f64 = 0.01;

/// Gaussian KDE with every kernel truncated to `[lo, hi]`.
struct TruncatedKde {
    centers: Vec<f64>,
    h: f64,
    lo: f64,
    hi: f64,
}

impl TruncatedKde {
    fn new(centers: Vec<f64>, lo: f64, hi: f64) -> Self {
        let n = centers.len() as f64;
        let mean = centers.iter().sum::<f64>() / n;
        let std = (centers.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n).sqrt();
        let silverman = 1.06 * std * n.powf(-0.2);
        let h = silverman.max(MIN_BANDWIDTH_FRACTION * (hi - lo));
        Self { centers, h, lo, hi }
    }

    fn density(&self, x: f64) -> f64 {
        let h = self.h;
        self.centers
            .iter()
            .map(|&c| {
                let mass = norm_cdf((self.hi - c) / h) - norm_cdf((self.lo - c) / h);
                let z = (x - c) / h;
                (-0.5 * z * z).exp() / (h * (2.0 * std::f64::consts::PI).sqrt() * mass.max(1e-300))
            })
            .sum::<f64>()
            / self.centers.len() as f64
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        let c = self.centers[rng.random_range(0..self.centers.len())];
        for _ in 0..100 {
            let z: f64 = rng.sample(StandardNormal);
            let x = c + self.h * z;
            if x >= self.lo && x <= self.hi {
                return x;
            }
        }
        c.clamp(self.lo, self.hi)
    }
}

/// Next raw penalty given `(a_raw, objective)` history.
///
/// Uniform while the history is shorter than `n_init` or contains no
/// feasible trial. Otherwise the best `ceil(gamma * n)` feasible points form
/// the good set, the rest (including every infeasible trial) the bad set,
/// and the candidate drawn from the good density maximizing
/// `density_good / density_bad` is returned.
pub fn tpe_suggest(history: &[(f64, f64)], config: &TunerConfig, rng: &mut impl Rng) -> f64 {
    let (lo, hi) = config.a_range;
    let mut feasible: Vec<(f64, f64)> = history.iter().copied().filter(|p| p.1.is_finite()).collect();
    if history.len() < config.n_init || feasible.is_empty() {
        return config.uniform(rng);
    }
    feasible.sort_by(|x, y| x.1.total_cmp(&y.1));
    let n_good = ((TPE_GAMMA * history.len() as f64).ceil() as usize).clamp(1, feasible.len());
    let good: Vec<f64> = feasible[..n_good].iter().map(|p| p.0).collect();
    let mut bad: Vec<f64> = feasible[n_good..].iter().map(|p| p.0).collect();
    bad.extend(history.iter().filter(|p| !p.1.is_finite()).map(|p| p.0));

    let l = TruncatedKde::new(good, lo, hi);
    let g = (!bad.is_empty()).then(|| TruncatedKde::new(bad, lo, hi));
    let uniform_density = 1.0 / (hi - lo);
    let mut best = (f64::NEG_INFINITY, lo);
    for _ in 0..TPE_CANDIDATES {
        let x = l.sample(rng);
        let denom = g.as_ref().map_or(uniform_density, |g| g.density(x)).max(1e-300);
        let score = l.density(x) / denom;
        if score > best.0 {
            best = (score, x);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn cfg() -> TunerConfig {
        TunerConfig::default()
    }

    #[test]
    fn cold_start_is_uniform() {
        let h = [(10.0, 1.0), (20.0, 2.0)];
        let a = tpe_suggest(&h, &cfg(), &mut seed::rng(1));
        let b = cfg().uniform(&mut seed::rng(1));
        assert_eq!(a, b);
        let infeasible = [(1.0, f64::INFINITY); 8];
        let a = tpe_suggest(&infeasible, &cfg(), &mut seed::rng(2));
        assert_eq!(a, cfg().uniform(&mut seed::rng(2)));
    }

    #[test]
    fn deterministic() {
        let h: Vec<(f64, f64)> = (1..10).map(|k| (k as f64 * 10.0, (k as f64 - 4.0).powi(2))).collect();
        let a = tpe_suggest(&h, &cfg(), &mut seed::rng(3));
        assert_eq!(a, tpe_suggest(&h, &cfg(), &mut seed::rng(3)));
    }

    #[test]
    fn concentrates_in_basin() {
        // objective with one basin around 60; history spread over the range
        let f = |a: f64| (a - 60.0).powi(2);
        let h: Vec<(f64, f64)> = (0..16).map(|k| 3.0 + 6.2 * k as f64).map(|a| (a, f(a))).collect();
        let mut good: Vec<f64> = h.clone().into_iter().map(|p| p.1).collect();
        good.sort_by(f64::total_cmp);
        let cutoff = good[(TPE_GAMMA * h.len() as f64).ceil() as usize - 1];
        let basin: Vec<f64> = h.iter().filter(|p| p.1 <= cutoff).map(|p| p.0).collect();
        let (b_lo, b_hi) = (
            basin.iter().copied().fold(f64::INFINITY, f64::min),
            basin.iter().copied().fold(0.0, f64::max),
        );
        let hits = (0..100)
            .filter(|&s| {
                let a = tpe_suggest(&h, &cfg(), &mut seed::rng(s));
                a >= b_lo && a <= b_hi
            })
            .count();
        assert!(hits >= 80, "{hits} / 100 in [{b_lo}, {b_hi}]");
    }

    #[test]
    fn truncated_density_integrates_to_one() {
        let kde = TruncatedKde::new(vec![1.5, 2.0, 90.0], 1.0, 100.0);
        let n = 200_000;
        let w = 99.0 / n as f64;
        let total: f64 = (0..n).map(|k| kde.density(1.0 + (k as f64 + 0.5) * w) * w).sum();
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }
}
