//! Gaussian-process regression with a squared-exponential kernel and
//! expected-improvement acquisition on a fixed grid.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use super::TunerConfig;
use crate::error::{Error, Result};
use crate::stats::{log_space, norm_cdf, norm_pdf};

pub const HYPER_GRID_POINTS: usize = 16;
pub const EI_GRID_POINTS: usize = 256;
const JITTERS: [f64; 5] = [1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpHyper {
    pub length_scale: f64,
    pub signal_var: f64,
    pub noise_var: f64,
}

/// A fitted GP on one-dimensional inputs.
pub struct GaussianProcess {
    x: Vec<f64>,
    hyper: GpHyper,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    log_marginal: f64,
}

fn kernel(a: f64, b: f64, h: &GpHyper) -> f64 {
    h.signal_var * (-0.5 * ((a - b) / h.length_scale).powi(2)).exp()
}

impl GaussianProcess {
    /// Exact fit; the diagonal receives the noise variance plus the smallest
    /// jitter from 1e-8 to 1e-4 that makes the kernel matrix factorizable.
    pub fn fit(x: &[f64], y: &[f64], hyper: GpHyper) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::Dimension {
                expected: x.len(),
                actual: y.len(),
            });
        }
        let n = x.len();
        let base = DMatrix::from_fn(n, n, |i, j| kernel(x[i], x[j], &hyper));
        let yv = DVector::from_column_slice(y);
        for jitter in JITTERS {
            let mut k = base.clone();
            for i in 0..n {
                k[(i, i)] += hyper.noise_var + jitter;
            }
            if let Some(chol) = Cholesky::new(k) {
                let alpha = chol.solve(&yv);
                let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
                let log_marginal =
                    -0.5 * yv.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
                return Ok(Self {
                    x: x.to_vec(),
                    hyper,
                    chol,
                    alpha,
                    log_marginal,
                });
            }
        }
        Err(Error::Numerical(format!(
            "kernel matrix not positive definite even with jitter 1e-4 ({hyper:?})"
        )))
    }

    /// Type-II maximum likelihood over a log grid of every hyperparameter.
    pub fn fit_ml(x: &[f64], y: &[f64]) -> Result<Self> {
        let lengths = log_space(1e-2, 3.0, HYPER_GRID_POINTS);
        let signals = log_space(1e-1, 1e1, HYPER_GRID_POINTS);
        let noises = log_space(1e-8, 1e-1, HYPER_GRID_POINTS);
        let mut best: Option<Self> = None;
        let mut last_err = None;
        for &length_scale in &lengths {
            for &signal_var in &signals {
                for &noise_var in &noises {
                    let hyper = GpHyper {
                        length_scale,
                        signal_var,
                        noise_var,
                    };
                    match Self::fit(x, y, hyper) {
                        Ok(gp) => {
                            if best.as_ref().is_none_or(|b| gp.log_marginal > b.log_marginal) {
                                best = Some(gp);
                            }
                        }
                        Err(e) => last_err = Some(e),
                    }
                }
            }
        }
        best.ok_or_else(|| last_err.expect("grid is non-empty"))
    }

    pub fn hyper(&self) -> GpHyper {
        self.hyper
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal
    }

    /// Posterior mean and standard deviation of the latent function.
    pub fn predict(&self, at: f64) -> (f64, f64) {
        let k = DVector::from_iterator(self.x.len(), self.x.iter().map(|&xi| kernel(at, xi, &self.hyper)));
        let mean = k.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&k).expect("factor is non-singular");
        let var = (self.hyper.signal_var - v.dot(&v)).max(0.0);
        (mean, var.sqrt())
    }
}

/// Expected improvement below `best` for a Gaussian prediction.
pub fn expected_improvement(mean: f64, std: f64, best: f64) -> f64 {
    if std <= 1e-12 {
        return (best - mean).max(0.0);
    }
    let z = (best - mean) / std;
    (best - mean) * norm_cdf(z) + std * norm_pdf(z)
}

/// Next raw penalty given `(a_raw, objective)` history.
///
/// Uniform while fewer than `n_init` points exist or none is feasible.
/// Inputs are mapped to `[0, 1]`, infeasible objectives are imputed as the
/// worst feasible value plus the feasible spread, and targets are
/// standardized before fitting.
pub fn gp_bo_suggest(history: &[(f64, f64)], config: &TunerConfig, rng: &mut impl Rng) -> Result<f64> {
    let (lo, hi) = config.a_range;
    let finite: Vec<f64> = history.iter().map(|p| p.1).filter(|v| v.is_finite()).collect();
    if history.len() < config.n_init || finite.is_empty() {
        return Ok(config.uniform(rng));
    }
    let best = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = if worst > best { worst - best } else { worst.abs().max(1.0) };
    let x: Vec<f64> = history.iter().map(|p| (p.0 - lo) / (hi - lo)).collect();
    let raw: Vec<f64> = history
        .iter()
        .map(|p| if p.1.is_finite() { p.1 } else { worst + spread })
        .collect();
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let sd = (raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    let y: Vec<f64> = raw.iter().map(|v| (v - mean) / sd).collect();
    let y_best = (best - mean) / sd;

    let gp = GaussianProcess::fit_ml(&x, &y)?;
    let mut arg = (f64::NEG_INFINITY, 0.0);
    for k in 0..EI_GRID_POINTS {
        let u = k as f64 / (EI_GRID_POINTS - 1) as f64;
        let (m, s) = gp.predict(u);
        let ei = expected_improvement(m, s, y_best);
        if ei > arg.0 {
            arg = (ei, u);
        }
    }
    Ok(lo + arg.1 * (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn interpolates_training_points() {
        let x = [0.0, 0.2, 0.5, 0.7, 1.0];
        let y = [1.0, -0.5, 0.3, 2.0, -1.0];
        let gp = GaussianProcess::fit(
            &x,
            &y,
            GpHyper {
                length_scale: 0.2,
                signal_var: 1.0,
                noise_var: 0.0,
            },
        )
        .unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let (m, s) = gp.predict(*xi);
            assert!((m - yi).abs() < 1e-5, "{m} vs {yi}");
            assert!(s < 1e-3);
        }
    }

    #[test]
    fn log_marginal_matches_direct_formula() {
        let x = [0.1, 0.4, 0.9];
        let y = [0.5, -0.2, 1.0];
        let h = GpHyper {
            length_scale: 0.3,
            signal_var: 1.5,
            noise_var: 0.01,
        };
        let gp = GaussianProcess::fit(&x, &y, h).unwrap();
        let mut k = DMatrix::from_fn(3, 3, |i, j| kernel(x[i], x[j], &h));
        for i in 0..3 {
            k[(i, i)] += h.noise_var + 1e-8;
        }
        let yv = DVector::from_column_slice(&y);
        let inv = k.clone().try_inverse().unwrap();
        let direct = -0.5 * (yv.transpose() * inv * &yv)[(0, 0)]
            - 0.5 * k.determinant().ln()
            - 1.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((gp.log_marginal_likelihood() - direct).abs() < 1e-9);
    }

    #[test]
    fn duplicates_push_exploration() {
        let cfg = TunerConfig {
            n_init: 2,
            ..TunerConfig::default()
        };
        let h = [(40.0, 7.0), (40.0, 7.0)];
        let a = gp_bo_suggest(&h, &cfg, &mut seed::rng(0)).unwrap();
        assert!((a - 40.0).abs() > 1e-6, "{a}");
    }

    #[test]
    fn quadratic_minimizer_found() {
        let f = |a: f64| (a - 37.0).powi(2);
        let xs = [5.0, 18.0, 30.0, 45.0, 55.0, 68.0, 80.0, 95.0];
        let h: Vec<(f64, f64)> = xs.iter().map(|&a| (a, f(a))).collect();
        let a = gp_bo_suggest(&h, &TunerConfig::default(), &mut seed::rng(0)).unwrap();
        assert!((a - 37.0).abs() < 3.7, "{a}");
    }

    #[test]
    fn ei_properties() {
        assert_eq!(expected_improvement(1.0, 0.0, 0.5), 0.0);
        assert_eq!(expected_improvement(0.0, 0.0, 0.5), 0.5);
        assert!(expected_improvement(0.0, 1.0, 0.0) > 0.39);
        assert!(expected_improvement(0.0, 1.0, 0.0) > expected_improvement(0.5, 1.0, 0.0));
    }
}
