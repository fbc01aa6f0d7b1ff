//! Variance-minimizing node potentials for distance matrices.
//!
//! Fits the additive model `d_ij ~ mu + pi_i + pi_j` over the off-diagonal
//! entries by least squares. With the gauge `sum(pi) = 0` the normal equations
//! reduce to the closed form
//!
//! ```text
//! mu   = mean of off-diagonal entries
//! pi_i = (R_i - (n - 1) mu) / (n - 2),   R_i = sum_{j != i} d_ij
//! ```
//!
//! and the transformed matrix `d_ij - pi_i - pi_j` keeps `mu` as its mean.
//! Every Hamiltonian cycle shifts by exactly `2 sum(pi) = 0`.

use super::instance::DistanceMatrix;
use crate::error::{Error, Result};

/// Returns the transformed matrix and the potentials `pi`.
pub fn mvodm_preprocess(dist: &DistanceMatrix) -> Result<(DistanceMatrix, Vec<f64>)> {
    let n = dist.n();
    if n < 3 {
        return Err(Error::Degenerate(format!(
            "variance reduction needs n >= 3 (normal equations are singular for n = {n})"
        )));
    }
    let row_sums: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| dist.get(i, j)).sum())
        .collect();
    let mu = row_sums.iter().sum::<f64>() / (n * (n - 1)) as f64;
    let mut pi: Vec<f64> = row_sums
        .iter()
        .map(|r| (r - (n - 1) as f64 * mu) / (n - 2) as f64)
        .collect();
    // exact gauge: remove accumulated rounding from sum(pi)
    let drift = pi.iter().sum::<f64>() / n as f64;
    pi.iter_mut().for_each(|p| *p -= drift);

    let transformed = DistanceMatrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            dist.get(i, j) - pi[i] - pi[j]
        }
    });
    Ok((transformed, pi))
}

/// Population variance of the off-diagonal entries.
pub fn off_diagonal_variance(dist: &DistanceMatrix) -> f64 {
    let values: Vec<f64> = dist.off_diagonal().collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DistanceMatrix {
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = rng.random_range(1.0..100.0);
                rows[i][j] = d;
                rows[j][i] = d;
            }
        }
        DistanceMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn additive_matrix_becomes_constant() {
        let a = [1.0, 4.0, 2.5, 7.0, 3.0];
        let d = DistanceMatrix::from_fn(5, |i, j| if i == j { 0.0 } else { a[i] + a[j] });
        let (t, _) = mvodm_preprocess(&d).unwrap();
        assert!(off_diagonal_variance(&t) < 1e-20);
    }

    #[test]
    fn equal_distances_give_zero_potentials() {
        let d = DistanceMatrix::from_fn(6, |i, j| if i == j { 0.0 } else { 3.5 });
        let (t, pi) = mvodm_preprocess(&d).unwrap();
        assert!(pi.iter().all(|p| p.abs() < 1e-12));
        assert_eq!(t, d);
    }

    #[test]
    fn two_cities_are_degenerate() {
        let d = DistanceMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(mvodm_preprocess(&d), Err(Error::Degenerate(_))));
    }

    #[test]
    fn variance_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let d = random_symmetric(5, &mut rng);
            let (t, _) = mvodm_preprocess(&d).unwrap();
            assert!(off_diagonal_variance(&t) <= off_diagonal_variance(&d) + 1e-9);
        }
    }

    /// Independent route: generic least squares on the design matrix
    /// `[1, e_i + e_j]` over all ordered off-diagonal pairs, solved by SVD.
    #[test]
    fn matches_generic_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [3, 4, 7, 9] {
            let d = random_symmetric(n, &mut rng);
            let rows = n * (n - 1);
            let mut design = DMatrix::<f64>::zeros(rows, n + 1);
            let mut target = DVector::<f64>::zeros(rows);
            let mut r = 0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        design[(r, 0)] = 1.0;
                        design[(r, 1 + i)] += 1.0;
                        design[(r, 1 + j)] += 1.0;
                        target[r] = d.get(i, j);
                        r += 1;
                    }
                }
            }
            let svd = design.svd(true, true);
            let coef = svd.solve(&target, 1e-12).unwrap();
            // fitted residuals are gauge-independent
            let (t, pi) = mvodm_preprocess(&d).unwrap();
            let mu = coef[0];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let resid_ls = d.get(i, j) - mu - coef[1 + i] - coef[1 + j];
                        let resid = t.get(i, j) - d.off_diagonal().sum::<f64>() / rows as f64;
                        assert!((resid_ls - resid).abs() < 1e-8, "n={n} ({i},{j})");
                    }
                }
            }
            assert!(pi.iter().sum::<f64>().abs() < 1e-9);
        }
    }
}
