//! Position-based TSP QUBO.
//!
//! Variable `x[v * n + j]` is 1 when city `v` is visited at position `j`.
//! The objective sums `d_uv x_{u,j} x_{v,j+1}` over ordered city pairs with the
//! position index wrapping (`j + 1 = n` means position 0), so a permutation
//! matrix scores exactly its closed-tour length. The penalty is
//! `sum_v (1 - sum_j x_vj)^2 + sum_j (1 - sum_v x_vj)^2`, which is zero
//! exactly on permutation matrices.

use serde::{Deserialize, Serialize};

use super::instance::{DistanceMatrix, TspInstance};
use crate::error::{Error, Result};
use crate::qubo::QuboModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspEncoding {
    pub objective: QuboModel,
    pub penalty: QuboModel,
    pub n_cities: usize,
}

impl TspEncoding {
    /// `objective + a * penalty`.
    pub fn compose(&self, a: f64) -> Result<QuboModel> {
        self.objective.add_scaled(&self.penalty, a)
    }

    #[inline]
    pub fn var(&self, city: usize, position: usize) -> usize {
        city * self.n_cities + position
    }
}

/// Builds the objective over `dist_solver` and the permutation penalty.
pub fn encode_tsp(instance: &TspInstance) -> Result<TspEncoding> {
    let n = instance.n_cities();
    if n < 3 {
        return Err(Error::Degenerate(format!("{n} cities; need at least 3")));
    }
    let dist = instance.dist_solver();
    let nv = n * n;
    let var = |city: usize, pos: usize| city * n + pos;

    let mut objective = QuboModel::new(nv);
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let d = dist.get(u, v);
            for j in 0..n {
                objective.add_term(var(u, j), var(v, (j + 1) % n), d)?;
            }
        }
    }

    let mut penalty = QuboModel::new(nv);
    penalty.add_offset(2.0 * n as f64);
    for v in 0..n {
        for j in 0..n {
            // -1 from the row constraint and -1 from the column constraint
            penalty.add_term(var(v, j), var(v, j), -2.0)?;
            for k in (j + 1)..n {
                penalty.add_term(var(v, j), var(v, k), 2.0)?;
            }
            for w in (v + 1)..n {
                penalty.add_term(var(v, j), var(w, j), 2.0)?;
            }
        }
    }

    Ok(TspEncoding {
        objective,
        penalty,
        n_cities: n,
    })
}

/// Reads a permutation matrix: `tour[j]` is the city at position `j`.
/// Returns `None` unless every row and column has exactly one set bit.
pub fn decode_permutation(n: usize, bits: &[u8]) -> Option<Vec<usize>> {
    if bits.len() != n * n {
        return None;
    }
    let mut tour = vec![usize::MAX; n];
    for v in 0..n {
        let mut count = 0;
        for j in 0..n {
            if bits[v * n + j] != 0 {
                count += 1;
                if tour[j] != usize::MAX {
                    return None;
                }
                tour[j] = v;
            }
        }
        if count != 1 {
            return None;
        }
    }
    Some(tour)
}

/// Closed-tour length of `tour` under `dist`.
pub fn tour_length(dist: &DistanceMatrix, tour: &[usize]) -> f64 {
    let n = tour.len();
    (0..n).map(|j| dist.get(tour[j], tour[(j + 1) % n])).sum()
}

/// Tour length on the original distances when `bits` is feasible, else `None`.
///
/// Feasibility is judged by the penalty energy being exactly zero.
pub fn decode_and_score(encoding: &TspEncoding, instance: &TspInstance, bits: &[u8]) -> Option<f64> {
    let penalty = encoding.penalty.energy(bits).ok()?;
    if penalty != 0.0 {
        return None;
    }
    let tour = decode_permutation(encoding.n_cities, bits)?;
    Some(tour_length(instance.dist_original(), &tour))
}

/// Bits of the permutation matrix for `tour`.
pub fn tour_to_bits(tour: &[usize]) -> Vec<u8> {
    let n = tour.len();
    let mut bits = vec![0u8; n * n];
    for (pos, &city) in tour.iter().enumerate() {
        bits[city * n + pos] = 1;
    }
    bits
}

/// Exhaustive optimal tour (city 0 fixed first). Feasible up to roughly 11 cities.
pub fn brute_force_tour(dist: &DistanceMatrix) -> (Vec<usize>, f64) {
    let n = dist.n();
    let mut rest: Vec<usize> = (1..n).collect();
    let mut best_len = f64::INFINITY;
    let mut best = Vec::new();
    let mut tour = vec![0usize; n];
    loop {
        tour[1..].copy_from_slice(&rest);
        let len = tour_length(dist, &tour);
        if len < best_len {
            best_len = len;
            best = tour.clone();
        }
        if !next_permutation(&mut rest) {
            break;
        }
    }
    (best, best_len)
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Rotates and possibly reverses a tour so that it starts at city 0 and its
/// second city is the smaller of city 0's two neighbours.
pub fn canonical_tour(tour: &[usize]) -> Vec<usize> {
    let n = tour.len();
    let start = tour.iter().position(|&c| c == 0).unwrap_or(0);
    let forward: Vec<usize> = (0..n).map(|k| tour[(start + k) % n]).collect();
    let backward: Vec<usize> = (0..n).map(|k| tour[(start + n - k) % n]).collect();
    if n > 1 && backward[1] < forward[1] {
        backward
    } else {
        forward
    }
}
