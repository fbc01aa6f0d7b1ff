//! Learned stand-in for the solver: given an instance and a normalized
//! penalty, predict the feasibility probability and the mean / spread of
//! the batch energies.
//!
//! Two independent networks are trained: a classifier for `p_f` (binary
//! cross-entropy on soft labels) and a regressor for `(e_avg, ln e_std)`
//! (Huber loss on standardized targets). Energies are first divided by the
//! instance's A-normalization scale, which makes them comparable across
//! instances of different size and units.

pub mod features;
mod network;

use std::fs;
use std::path::Path;

use log::{info, warn};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::DatasetRecord;
use crate::encoding::TspInstance;
use crate::error::{Error, Result};
use crate::seed;
pub use features::{extract_features, instance_features, FEATURE_LEN, FEATURE_SPEC};
use network::{bce_with_logit, huber, logistic, Mlp};

pub const MODEL_SCHEMA: u32 = 1;
pub const HIDDEN_WIDTH: usize = 64;
pub const HUBER_DELTA: f64 = 1.0;
/// Floor on the scale-normalized energy spread before taking its logarithm.
pub const MIN_NORM_STD: f64 = 1e-6;
const P_F_CLAMP: f64 = 1e-15;

/// Predicted batch statistics in raw energy units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub p_f: f64,
    pub e_avg: f64,
    pub e_std: f64,
}

/// Anything that predicts batch statistics for one instance as a function of
/// the normalized penalty. Strategies only depend on this.
pub trait SolverSurrogate {
    fn predict(&self, a_norm: f64) -> Prediction;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut std = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in std.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let std = std.into_iter().map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
        Self { mean, std }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }

    fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| v * s + m).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            lr: 1e-3,
            momentum: 0.9,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// Mean training-set losses before the first and after the last epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainReport {
    pub pf_initial: f64,
    pub pf_final: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
}

/// The trained pair plus everything needed to map raw inputs and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogatePair {
    pub schema: u32,
    pub feature_spec: String,
    pub feature_scaler: Standardizer,
    /// Over `[e_avg / scale, ln(e_std / scale)]`.
    pub energy_scaler: Standardizer,
    /// Smallest and largest normalized penalty seen in training.
    pub a_norm_range: (f64, f64),
    pub pf_net: Mlp,
    pub energy_net: Mlp,
}

/// Per-record learning targets.
struct Sample {
    x: Vec<f64>,
    p_f: f64,
    energy: [f64; 2],
}

fn energy_targets(r: &DatasetRecord) -> [f64; 2] {
    let scale = r.stats.a_raw / r.stats.a_norm;
    [r.stats.e_avg / scale, (r.stats.e_std / scale).max(MIN_NORM_STD).ln()]
}

fn pf_loss_and_grad(net: &Mlp, s: &Sample, grad: Option<&mut [f64]>) -> f64 {
    let cache = net.forward_cached(&s.x);
    let z = cache.output()[0];
    if let Some(g) = grad {
        net.backward(&cache, &[logistic(z) - s.p_f], g);
    }
    bce_with_logit(z, s.p_f)
}

fn energy_loss_and_grad(net: &Mlp, s: &Sample, grad: Option<&mut [f64]>) -> f64 {
    let cache = net.forward_cached(&s.x);
    let out = cache.output();
    let (l0, d0) = huber(out[0] - s.energy[0], HUBER_DELTA);
    let (l1, d1) = huber(out[1] - s.energy[1], HUBER_DELTA);
    if let Some(g) = grad {
        net.backward(&cache, &[d0, d1], g);
    }
    l0 + l1
}

type LossFn = fn(&Mlp, &Sample, Option<&mut [f64]>) -> f64;

fn mean_loss(net: &Mlp, samples: &[Sample], loss: LossFn) -> f64 {
    samples.iter().map(|s| loss(net, s, None)).sum::<f64>() / samples.len() as f64
}

/// Largest relative disagreement between backpropagated gradients of the
/// summed loss and central finite differences (step `1e-6`). Entries where
/// both are below `1e-6` in magnitude are compared absolutely.
fn max_gradient_error(net: &Mlp, samples: &[Sample], loss: LossFn) -> f64 {
    let total = |n: &Mlp| samples.iter().map(|s| loss(n, s, None)).sum::<f64>();
    let mut grad = vec![0.0; net.n_params()];
    for s in samples {
        loss(net, s, Some(&mut grad));
    }
    let p = net.params();
    let h = 1e-6;
    let mut probe = net.clone();
    let mut q = p.clone();
    let mut worst: f64 = 0.0;
    for k in 0..p.len() {
        q[k] = p[k] + h;
        probe.set_params(&q);
        let up = total(&probe);
        q[k] = p[k] - h;
        probe.set_params(&q);
        let down = total(&probe);
        q[k] = p[k];
        let fd = (up - down) / (2.0 * h);
        let denom = fd.abs().max(grad[k].abs()).max(1e-6);
        worst = worst.max((fd - grad[k]).abs() / denom);
    }
    worst
}

/// Mini-batch gradient descent with heavy-ball momentum on the mean loss.
fn fit(net: &mut Mlp, samples: &[Sample], loss: LossFn, cfg: &TrainConfig, seed: u64) -> (f64, f64) {
    let initial = mean_loss(net, samples, loss);
    let mut rng = seed::rng(seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut params = net.params();
    let mut velocity = vec![0.0; params.len()];
    let mut grad = vec![0.0; params.len()];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in chunk {
                loss(net, &samples[i], Some(&mut grad));
            }
            let scale = cfg.lr / chunk.len() as f64;
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v - scale * g;
                *p += *v;
            }
            net.set_params(&params);
        }
    }
    (initial, mean_loss(net, samples, loss))
}

impl SurrogatePair {
    /// Trains both heads on `records` (every record is used; filter splits
    /// beforehand). Deterministic for a fixed `cfg.seed`.
    pub fn train(records: &[DatasetRecord], cfg: &TrainConfig) -> Result<(Self, TrainReport)> {
        if records.is_empty() {
            return Err(Error::InvalidConfig("cannot train on an empty corpus".into()));
        }
        if cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.lr > 0.0) || !(0.0..1.0).contains(&cfg.momentum) {
            return Err(Error::InvalidConfig(format!("bad training configuration {cfg:?}")));
        }
        for r in records {
            if r.feature_vector.len() != FEATURE_LEN {
                return Err(Error::Dimension {
                    expected: FEATURE_LEN,
                    actual: r.feature_vector.len(),
                });
            }
            r.stats.validate()?;
        }
        let slope = records.iter().filter(|r| r.stats.p_f > 0.0 && r.stats.p_f < 1.0).count();
        let zeros = records.iter().filter(|r| r.stats.p_f == 0.0).count();
        let ones = records.iter().filter(|r| r.stats.p_f == 1.0).count();
        if slope == 0 || zeros == 0 || ones == 0 {
            warn!("corpus lacks coverage: {zeros} infeasible-plateau, {slope} slope, {ones} feasible-plateau records");
        }
        let first_pf = records[0].stats.p_f;
        if records.iter().all(|r| r.stats.p_f == first_pf) {
            warn!("all feasibility targets equal {first_pf}; the classifier will learn a constant");
        }
        let first_e = energy_targets(&records[0]);
        if records.iter().all(|r| energy_targets(r) == first_e) {
            warn!("all energy targets are identical; the regressor will learn a constant");
        }

        let raw_x: Vec<Vec<f64>> = records.iter().map(|r| r.feature_vector.clone()).collect();
        let feature_scaler = Standardizer::fit(&raw_x);
        let raw_e: Vec<Vec<f64>> = records.iter().map(|r| energy_targets(r).to_vec()).collect();
        let energy_scaler = Standardizer::fit(&raw_e);
        let samples: Vec<Sample> = records
            .iter()
            .zip(&raw_e)
            .map(|(r, e)| {
                let z = energy_scaler.apply(e);
                Sample {
                    x: feature_scaler.apply(&r.feature_vector),
                    p_f: r.stats.p_f,
                    energy: [z[0], z[1]],
                }
            })
            .collect();

        let mut init_rng = seed::rng(seed::derive(cfg.seed, 0));
        let mut pf_net = Mlp::new(&[FEATURE_LEN, HIDDEN_WIDTH, HIDDEN_WIDTH, 1], &mut init_rng);
        let mut energy_net = Mlp::new(&[FEATURE_LEN, HIDDEN_WIDTH, HIDDEN_WIDTH, 2], &mut init_rng);
        let (pf_initial, pf_final) = fit(&mut pf_net, &samples, pf_loss_and_grad, cfg, seed::derive(cfg.seed, 1));
        let (energy_initial, energy_final) =
            fit(&mut energy_net, &samples, energy_loss_and_grad, cfg, seed::derive(cfg.seed, 2));
        info!("trained surrogate: BCE {pf_initial:.4} -> {pf_final:.4}, Huber {energy_initial:.4} -> {energy_final:.4}");

        let a_lo = records.iter().map(|r| r.stats.a_norm).fold(f64::INFINITY, f64::min);
        let a_hi = records.iter().map(|r| r.stats.a_norm).fold(0.0, f64::max);
        let model = Self {
            schema: MODEL_SCHEMA,
            feature_spec: FEATURE_SPEC.to_string(),
            feature_scaler,
            energy_scaler,
            a_norm_range: (a_lo, a_hi),
            pf_net,
            energy_net,
        };
        let report = TrainReport {
            pf_initial,
            pf_final,
            energy_initial,
            energy_final,
        };
        Ok((model, report))
    }

    /// Worst relative gradient error of the `(p_f, energy)` heads on the
    /// given records, checked against finite differences at the current
    /// weights.
    pub fn gradient_check(&self, records: &[DatasetRecord]) -> Result<(f64, f64)> {
        let mut samples = Vec::with_capacity(records.len());
        for r in records {
            if r.feature_vector.len() != FEATURE_LEN {
                return Err(Error::Dimension {
                    expected: FEATURE_LEN,
                    actual: r.feature_vector.len(),
                });
            }
            let e = self.energy_scaler.apply(&energy_targets(r));
            samples.push(Sample {
                x: self.feature_scaler.apply(&r.feature_vector),
                p_f: r.stats.p_f,
                energy: [e[0], e[1]],
            });
        }
        Ok((
            max_gradient_error(&self.pf_net, &samples, pf_loss_and_grad),
            max_gradient_error(&self.energy_net, &samples, energy_loss_and_grad),
        ))
    }

    /// Prediction from a feature vector; energies come back scale-normalized.
    pub fn predict_features(&self, features: &[f64]) -> Result<Prediction> {
        if features.len() != self.pf_net.n_inputs() {
            return Err(Error::Dimension {
                expected: self.pf_net.n_inputs(),
                actual: features.len(),
            });
        }
        let x = self.feature_scaler.apply(features);
        let p_f = logistic(self.pf_net.forward(&x)[0]).clamp(P_F_CLAMP, 1.0 - P_F_CLAMP);
        let e = self.energy_scaler.invert(&self.energy_net.forward(&x));
        Ok(Prediction {
            p_f,
            e_avg: e[0],
            e_std: e[1].exp().max(f64::MIN_POSITIVE),
        })
    }

    /// Denormalized prediction for `instance` at normalized penalty `a_norm`.
    pub fn predict(&self, instance: &TspInstance, a_norm: f64) -> Result<Prediction> {
        self.bind(instance)?.try_predict(a_norm)
    }

    /// Precomputes the instance part of the features.
    pub fn bind<'a>(&'a self, instance: &TspInstance) -> Result<BoundSurrogate<'a>> {
        let base = instance_features(instance);
        if base.len() + 1 != self.pf_net.n_inputs() {
            return Err(Error::Dimension {
                expected: self.pf_net.n_inputs(),
                actual: base.len() + 1,
            });
        }
        Ok(BoundSurrogate {
            model: self,
            base,
            scale: instance.a_scale(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Versions {
            schema: u32,
            feature_spec: String,
        }
        let v: Versions = serde_json::from_str(text)?;
        if v.schema != MODEL_SCHEMA {
            return Err(Error::Version {
                found: format!("schema {}", v.schema),
                expected: format!("schema {MODEL_SCHEMA}"),
            });
        }
        if v.feature_spec != FEATURE_SPEC {
            return Err(Error::Version {
                found: v.feature_spec,
                expected: FEATURE_SPEC.to_string(),
            });
        }
        let model: Self = serde_json::from_str(text)?;
        model.pf_net.validate()?;
        model.energy_net.validate()?;
        let dims_ok = model.pf_net.n_inputs() == FEATURE_LEN
            && model.energy_net.n_inputs() == FEATURE_LEN
            && model.pf_net.n_outputs() == 1
            && model.energy_net.n_outputs() == 2
            && model.feature_scaler.mean.len() == FEATURE_LEN
            && model.feature_scaler.std.len() == FEATURE_LEN
            && model.energy_scaler.mean.len() == 2
            && model.energy_scaler.std.len() == 2;
        if !dims_ok {
            return Err(Error::Malformed("model dimensions disagree with the feature layout".into()));
        }
        Ok(model)
    }
}

/// A model with one instance's features fixed.
pub struct BoundSurrogate<'a> {
    model: &'a SurrogatePair,
    base: Vec<f64>,
    scale: f64,
}

impl BoundSurrogate<'_> {
    pub fn try_predict(&self, a_norm: f64) -> Result<Prediction> {
        if !(a_norm > 0.0) {
            return Err(Error::InvalidConfig(format!("a_norm = {a_norm} must be positive")));
        }
        let mut x = self.base.clone();
        x.push(a_norm.ln());
        let p = self.model.predict_features(&x)?;
        Ok(Prediction {
            p_f: p.p_f,
            e_avg: p.e_avg * self.scale,
            e_std: p.e_std * self.scale,
        })
    }

    pub fn a_norm_range(&self) -> (f64, f64) {
        self.model.a_norm_range
    }
}

impl SolverSurrogate for BoundSurrogate<'_> {
    fn predict(&self, a_norm: f64) -> Prediction {
        self.try_predict(a_norm).expect("dimensions checked at bind time and a_norm positive")
    }
}
