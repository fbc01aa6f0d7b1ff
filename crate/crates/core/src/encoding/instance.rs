use serde::{Deserialize, Serialize};

use super::mvodm::mvodm_preprocess;
use crate::error::{Error, Result};

/// Dense square matrix of pairwise distances, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInstance(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Euclidean distances between points, unrounded.
    pub fn euclidean(coords: &[(f64, f64)]) -> Self {
        Self::from_fn(coords.len(), |i, j| {
            if i == j {
                0.0
            } else {
                let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
                (dx * dx + dy * dy).sqrt()
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Entries `(i, j)` with `i != j`, row-major.
    pub fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| self.get(i, j)))
    }

    /// Matrix with the rows/columns reordered: `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::from_fn(self.n, |i, j| self.get(perm[i], perm[j]))
    }

    fn validate_metric(&self) -> Result<()> {
        for i in 0..self.n {
            if self.get(i, i) != 0.0 {
                return Err(Error::InvalidInstance(format!("non-zero diagonal at {i}")));
            }
            for j in 0..self.n {
                let d = self.get(i, j);
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidInstance(format!(
                        "distance ({i}, {j}) = {d} is not a finite non-negative value"
                    )));
                }
                if d != self.get(j, i) {
                    return Err(Error::InvalidInstance(format!(
                        "asymmetric distance between {i} and {j}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// TSPLIB instances with at least this many cities are outside the benchmark filter.
pub const TSPLIB_MAX_EXCLUSIVE: usize = 90;
/// TSPLIB instances with at most this many cities are outside the benchmark filter.
pub const TSPLIB_MIN_EXCLUSIVE: usize = 14;

/// A symmetric TSP instance with both its original and variance-reduced
/// distance matrices.
///
/// The solver-side matrix satisfies `solver[i][j] = original[i][j] - pi[i] - pi[j]`
/// off the diagonal; tour lengths under the two differ by the constant `2 * sum(pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct TspInstance {
    name: String,
    coords: Option<Vec<(f64, f64)>>,
    dist_original: DistanceMatrix,
    dist_solver: DistanceMatrix,
    pi: Vec<f64>,
}

impl TspInstance {
    pub fn new(
        name: impl Into<String>,
        coords: Option<Vec<(f64, f64)>>,
        dist_original: DistanceMatrix,
    ) -> Result<Self> {
        let n = dist_original.n();
        if n < 3 {
            return Err(Error::Degenerate(format!("{n} cities; need at least 3")));
        }
        if let Some(c) = &coords {
            if c.len() != n {
                return Err(Error::InvalidInstance(format!(
                    "{} coordinates for {n} cities",
                    c.len()
                )));
            }
        }
        dist_original.validate_metric()?;
        let (dist_solver, pi) = mvodm_preprocess(&dist_original)?;
        Ok(Self {
            name: name.into(),
            coords,
            dist_original,
            dist_solver,
            pi,
        })
    }

    /// Instance with Euclidean (unrounded) distances between the given points.
    pub fn from_coords(name: impl Into<String>, coords: Vec<(f64, f64)>) -> Result<Self> {
        let dist = DistanceMatrix::euclidean(&coords);
        Self::new(name, Some(coords), dist)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_cities(&self) -> usize {
        self.dist_original.n()
    }

    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        self.coords.as_deref()
    }

    pub fn dist_original(&self) -> &DistanceMatrix {
        &self.dist_original
    }

    pub fn dist_solver(&self) -> &DistanceMatrix {
        &self.dist_solver
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// `2 * sum(pi)`: original tour length minus solver-matrix tour length.
    pub fn tour_shift(&self) -> f64 {
        2.0 * self.pi.iter().sum::<f64>()
    }

    /// Largest off-diagonal `|dist_solver|`; divides raw A into normalized A.
    pub fn a_scale(&self) -> f64 {
        let m = self.dist_solver.off_diagonal().fold(0.0, |m: f64, d| m.max(d.abs()));
        if m > 0.0 {
            m
        } else {
            // all residuals vanish (e.g. equal distances); fall back to the raw scale
            self.mean_original_distance().max(1.0)
        }
    }

    pub fn a_norm(&self, a_raw: f64) -> f64 {
        a_raw / self.a_scale()
    }

    pub fn a_raw(&self, a_norm: f64) -> f64 {
        a_norm * self.a_scale()
    }

    pub fn mean_original_distance(&self) -> f64 {
        let n = self.n_cities();
        self.dist_original.off_diagonal().sum::<f64>() / (n * (n - 1)) as f64
    }

    /// True when the instance falls outside the `14 < n < 90` size window used
    /// for TSPLIB benchmarking. Such instances are flagged, never rejected.
    pub fn outside_benchmark_size_range(&self) -> bool {
        let n = self.n_cities();
        n >= TSPLIB_MAX_EXCLUSIVE || n <= TSPLIB_MIN_EXCLUSIVE
    }

    /// Same instance with cities relabeled: new city `i` is old city `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let coords = self
            .coords
            .as_ref()
            .map(|c| perm.iter().map(|&p| c[p]).collect());
        Self::new(self.name.clone(), coords, self.dist_original.permuted(perm))
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    name: String,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<(f64, f64)>>,
    dist_original: Vec<Vec<f64>>,
}

impl TryFrom<InstanceFile> for TspInstance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        if file.dist_original.len() != file.n {
            return Err(Error::InvalidInstance(format!(
                "n = {} but distance matrix has {} rows",
                file.n,
                file.dist_original.len()
            )));
        }
        let dist = DistanceMatrix::from_rows(file.dist_original)?;
        TspInstance::new(file.name, file.coords, dist)
    }
}

impl From<TspInstance> for InstanceFile {
    fn from(inst: TspInstance) -> Self {
        InstanceFile {
            n: inst.n_cities(),
            dist_original: inst.dist_original.rows(),
            name: inst.name,
            coords: inst.coords,
        }
    }
}
