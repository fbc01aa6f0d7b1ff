//! Fixed-length, relabeling-invariant instance descriptors.
//!
//! Layout (`FEATURE_LEN` entries):
//!
//! | idx | feature |
//! |-----|---------|
//! | 0 | number of cities |
//! | 1..=4 | mean, std, min, max of off-diagonal solver distances |
//! | 5..=9 | 10/30/50/70/90% quantiles of the same |
//! | 10, 11 | mean, std of each city's nearest-neighbour distance |
//! | 12 | MST length / (n * mean distance) |
//! | 13 | ln(normalized A) |
//!
//! Entries 1..=11 are divided by the instance's A-normalization scale, so the
//! vector is invariant to a uniform rescaling of the distances. Entries 10..=12
//! use the original matrix.

use crate::encoding::{DistanceMatrix, TspInstance};
use crate::stats::quantile_sorted;

pub const FEATURE_LEN: usize = 14;
pub const FEATURE_SPEC: &str = "tsp-handcrafted-v1";
const QUANTILES: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

pub fn extract_features(instance: &TspInstance, a_norm: f64) -> Vec<f64> {
    let mut f = instance_features(instance);
    f.push(a_norm.ln());
    f
}

/// Everything except the trailing `ln(a_norm)` entry.
pub fn instance_features(instance: &TspInstance) -> Vec<f64> {
    let n = instance.n_cities();
    let scale = instance.a_scale();
    let solver = instance.dist_solver();
    let original = instance.dist_original();

    let mut upper: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| solver.get(i, j) / scale)
        .collect();
    upper.sort_by(f64::total_cmp);
    let (mean, std) = mean_std(&upper);

    let mut f = Vec::with_capacity(FEATURE_LEN);
    f.push(n as f64);
    f.extend([mean, std, upper[0], upper[upper.len() - 1]]);
    f.extend(QUANTILES.iter().map(|&q| quantile_sorted(&upper, q)));

    let nearest: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| original.get(i, j))
                .fold(f64::INFINITY, f64::min)
                / scale
        })
        .collect();
    let (nn_mean, nn_std) = mean_std(&nearest);
    f.extend([nn_mean, nn_std]);

    let mean_dist = instance.mean_original_distance();
    let mst_ratio = if mean_dist > 0.0 {
        mst_length(original) / (n as f64 * mean_dist)
    } else {
        0.0
    };
    f.push(mst_ratio);
    f
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Minimum spanning tree weight by Prim's algorithm, O(n^2).
pub fn mst_length(dist: &DistanceMatrix) -> f64 {
    let n = dist.n();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut total = 0.0;
    for _ in 0..n {
        let u = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .expect("a vertex remains");
        in_tree[u] = true;
        total += best[u];
        for v in 0..n {
            if !in_tree[v] {
                best[v] = best[v].min(dist.get(u, v));
            }
        }
    }
    total
}
