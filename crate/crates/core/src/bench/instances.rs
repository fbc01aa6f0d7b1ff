//! Synthetic instance generation and instance-directory IO.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::dataset::Split;
use crate::encoding::tsplib::parse_tsplib;
use crate::encoding::TspInstance;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistKind {
    Uniform,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_instances: usize,
    /// Inclusive range of city counts.
    pub cities: (usize, usize),
    pub kind: DistKind,
    /// Side of the square for uniform coordinates.
    pub side: f64,
    /// Range the exponential rate is drawn from, per instance.
    pub rate_range: (f64, f64),
    /// Fraction of instances assigned to the training split.
    pub train_ratio: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_instances: 300,
            cities: (20, 30),
            kind: DistKind::Uniform,
            side: DEFAULT_SIDE,
            rate_range: (0.5 / DEFAULT_SIDE, 2.0 / DEFAULT_SIDE),
            train_ratio: 0.9,
            seed: 0,
        }
    }
}

/// Default coordinate box side for uniform instances.
pub const DEFAULT_SIDE: f64 = 50.0;

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cities.0 < 3 || self.cities.1 < self.cities.0 {
            return Err(Error::InvalidConfig(format!(
                "city range {}..{} must satisfy 3 <= min <= max",
                self.cities.0, self.cities.1
            )));
        }
        if !(self.side > 0.0) || !(self.rate_range.0 > 0.0 && self.rate_range.1 >= self.rate_range.0) {
            return Err(Error::InvalidConfig("coordinate scale parameters must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.train_ratio) {
            return Err(Error::InvalidConfig(format!("train ratio {} outside [0, 1]", self.train_ratio)));
        }
        Ok(())
    }
}

/// `n` cities uniform on `[0, side]^2`.
pub fn random_uniform_instance(name: &str, n: usize, side: f64, seed: u64) -> TspInstance {
    let mut rng = seed::rng(seed);
    let coords = (0..n).map(|_| (rng.random_range(0.0..side), rng.random_range(0.0..side))).collect();
    TspInstance::from_coords(name, coords).expect("random points give a valid instance")
}

fn exponential_instance(name: &str, n: usize, rate: f64, rng: &mut impl Rng) -> TspInstance {
    let exp = Exp::new(rate).expect("rate is positive");
    let coords = (0..n).map(|_| (exp.sample(rng), exp.sample(rng))).collect();
    TspInstance::from_coords(name, coords).expect("random points give a valid instance")
}

/// Generates instances; the first `round(train_ratio * n)` are the training split.
pub fn generate_instances(cfg: &GenConfig) -> Result<Vec<(TspInstance, Split)>> {
    cfg.validate()?;
    let n_train = (cfg.train_ratio * cfg.n_instances as f64).round() as usize;
    Ok((0..cfg.n_instances)
        .map(|k| {
            let mut rng = seed::rng(seed::derive(cfg.seed, k as u64));
            let n = rng.random_range(cfg.cities.0..=cfg.cities.1);
            let name = format!("inst-{k:04}");
            let inst = match cfg.kind {
                DistKind::Uniform => random_uniform_instance(&name, n, cfg.side, rng.random()),
                DistKind::Exponential => {
                    let rate = rng.random_range(cfg.rate_range.0..=cfg.rate_range.1);
                    exponential_instance(&name, n, rate, &mut rng)
                }
            };
            (inst, if k < n_train { Split::Train } else { Split::Test })
        })
        .collect())
}

fn split_dir(out: &Path, split: Split) -> PathBuf {
    out.join(match split {
        Split::Train => "train",
        Split::Test => "test",
    })
}

/// Writes `<out>/train/<name>.json` and `<out>/test/<name>.json`.
pub fn write_instances(instances: &[(TspInstance, Split)], out: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out = out.as_ref();
    let mut paths = Vec::with_capacity(instances.len());
    for split in [Split::Train, Split::Test] {
        let dir = split_dir(out, split);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    for (inst, split) in instances {
        let path = split_dir(out, *split).join(format!("{}.json", inst.name()));
        let text = serde_json::to_string_pretty(inst)?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Reads a JSON instance file or a TSPLIB file (by `.tsp` extension).
pub fn read_instance(path: impl AsRef<Path>) -> Result<TspInstance> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "tsp") {
        return parse_tsplib(path);
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Every `.json` / `.tsp` instance in `dir`, sorted by file name.
pub fn read_instance_dir(dir: impl AsRef<Path>) -> Result<Vec<TspInstance>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json" || e == "tsp"))
        .collect();
    paths.sort();
    paths.iter().map(read_instance).collect()
}

/// Instances from `<root>/train` and `<root>/test`, or from `root` itself as
/// the training split when it has no such subdirectories.
pub fn read_split_dirs(root: impl AsRef<Path>) -> Result<Vec<(TspInstance, Split)>> {
    let root = root.as_ref();
    let (train, test) = (root.join("train"), root.join("test"));
    if !train.is_dir() && !test.is_dir() {
        return Ok(read_instance_dir(root)?.into_iter().map(|i| (i, Split::Train)).collect());
    }
    let mut out = Vec::new();
    for (dir, split) in [(train, Split::Train), (test, Split::Test)] {
        if dir.is_dir() {
            out.extend(read_instance_dir(&dir)?.into_iter().map(|i| (i, split)));
        }
    }
    Ok(out)
}
