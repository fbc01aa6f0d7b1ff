//! QUBO models, their energies, and solver batch bookkeeping.
//!
//! A [`QuboModel`] stores the coefficients of `x^T Q x + offset` in canonical
//! upper-triangular form: the term `x_i x_j` lives at key `(min(i,j), max(i,j))`
//! and diagonal keys hold the linear terms (since `x_i^2 = x_i`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadratic model over `n_vars` binary variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboModel {
    n_vars: usize,
    coeffs: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl QuboModel {
    /// Empty (all-zero) model.
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            coeffs: BTreeMap::new(),
            offset: 0.0,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Adds `value` to the coefficient of `x_i x_j`. `(j, i)` lands on `(i, j)`.
    pub fn add_term(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        for index in [i, j] {
            if index >= self.n_vars {
                return Err(Error::IndexOutOfRange {
                    index,
                    len: self.n_vars,
                });
            }
        }
        if value == 0.0 {
            return Ok(());
        }
        let key = if i <= j { (i, j) } else { (j, i) };
        *self.coeffs.entry(key).or_insert(0.0) += value;
        Ok(())
    }

    pub fn add_offset(&mut self, value: f64) {
        self.offset += value;
    }

    /// Coefficient of `x_i x_j`, zero when absent.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.coeffs.get(&key).copied().unwrap_or(0.0)
    }

    /// Canonical `((i, j), value)` terms with `i <= j`, in key order.
    pub fn terms(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.coeffs.iter().map(|(&k, &v)| (k, v))
    }

    pub fn n_terms(&self) -> usize {
        self.coeffs.len()
    }

    /// `sum_{i<=j} Q_ij x_i x_j + offset`.
    pub fn energy(&self, bits: &[u8]) -> Result<f64> {
        if bits.len() != self.n_vars {
            return Err(Error::Dimension {
                expected: self.n_vars,
                actual: bits.len(),
            });
        }
        let mut total = 0.0;
        for (&(i, j), &q) in &self.coeffs {
            if bits[i] != 0 && bits[j] != 0 {
                total += q;
            }
        }
        Ok(total + self.offset)
    }

    /// `self + weight * other`, coefficient-wise (offsets included).
    pub fn add_scaled(&self, other: &QuboModel, weight: f64) -> Result<QuboModel> {
        if self.n_vars != other.n_vars {
            return Err(Error::Dimension {
                expected: self.n_vars,
                actual: other.n_vars,
            });
        }
        let mut out = self.clone();
        for (&(i, j), &q) in &other.coeffs {
            let scaled = weight * q;
            if scaled != 0.0 {
                *out.coeffs.entry((i, j)).or_insert(0.0) += scaled;
            }
        }
        out.offset += weight * other.offset;
        Ok(out)
    }

    /// Largest absolute coefficient (0 for the empty model).
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A binary assignment together with its energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySolution {
    pub bits: Vec<u8>,
    pub energy: f64,
}

impl BinarySolution {
    /// Builds a solution, computing its energy from the model.
    pub fn evaluate(model: &QuboModel, bits: Vec<u8>) -> Result<Self> {
        let energy = model.energy(&bits)?;
        Ok(Self { bits, energy })
    }
}

/// Default number of replicas a solver returns per call.
pub const DEFAULT_BATCH_SIZE: usize = 128;

/// The `B` solutions returned by one solver call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveBatch {
    solutions: Vec<BinarySolution>,
}

impl SolveBatch {
    pub fn new(solutions: Vec<BinarySolution>) -> Result<Self> {
        if solutions.is_empty() {
            return Err(Error::EmptyBatch);
        }
        Ok(Self { solutions })
    }

    pub fn batch_size(&self) -> usize {
        self.solutions.len()
    }

    pub fn solutions(&self) -> &[BinarySolution] {
        &self.solutions
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.solutions.iter().map(|s| s.energy)
    }

    pub fn best(&self) -> &BinarySolution {
        self.solutions
            .iter()
            .min_by(|a, b| a.energy.total_cmp(&b.energy))
            .expect("batch is never empty")
    }
}

/// Every assignment of `n` bits, in counting order. Only sensible for small `n`.
pub fn all_assignments(n: usize) -> impl Iterator<Item = Vec<u8>> {
    assert!(n < 32, "exhaustive enumeration over {n} bits");
    (0u32..(1u32 << n)).map(move |mask| (0..n).map(|i| ((mask >> i) & 1) as u8).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_var() -> QuboModel {
        let mut m = QuboModel::new(2);
        m.add_term(0, 0, -1.0).unwrap();
        m.add_term(1, 1, -1.0).unwrap();
        m.add_term(0, 1, 2.0).unwrap();
        m
    }

    #[test]
    fn single_diagonal_term() {
        let mut m = QuboModel::new(1);
        m.add_term(0, 0, -1.0).unwrap();
        assert_eq!(m.energy(&[1]).unwrap(), -1.0);
        assert_eq!(m.energy(&[0]).unwrap(), 0.0);
    }

    #[test]
    fn two_var_energies() {
        let m = two_var();
        assert_eq!(m.energy(&[1, 1]).unwrap(), 0.0);
        let energies: Vec<(Vec<u8>, f64)> = all_assignments(2)
            .map(|x| {
                let e = m.energy(&x).unwrap();
                (x, e)
            })
            .collect();
        let min = energies.iter().map(|(_, e)| *e).fold(f64::INFINITY, f64::min);
        assert_eq!(min, -1.0);
        let argmins: Vec<_> = energies.iter().filter(|(_, e)| *e == min).map(|(x, _)| x.clone()).collect();
        assert_eq!(argmins, vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn length_mismatch_is_dimension_error() {
        let m = two_var();
        assert!(matches!(m.energy(&[1]), Err(Error::Dimension { expected: 2, actual: 1 })));
    }

    #[test]
    fn out_of_range_term_rejected() {
        let mut m = QuboModel::new(2);
        assert!(matches!(m.add_term(0, 2, 1.0), Err(Error::IndexOutOfRange { index: 2, .. })));
    }

    #[test]
    fn add_scaled_identity_and_annihilation() {
        let m = two_var();
        let zero = QuboModel::new(2);
        assert_eq!(m.add_scaled(&zero, 5.0).unwrap(), m);
        assert_eq!(zero.add_scaled(&m, 0.0).unwrap(), zero);
        assert!(m.add_scaled(&QuboModel::new(3), 1.0).is_err());
    }

    #[test]
    fn canonicalization() {
        let mut a = QuboModel::new(3);
        a.add_term(2, 0, 1.5).unwrap();
        assert_eq!(a.terms().collect::<Vec<_>>(), vec![((0, 2), 1.5)]);
        assert_eq!(a.coeff(2, 0), 1.5);
        let mut b = QuboModel::new(3);
        for ((i, j), v) in a.terms() {
            b.add_term(j, i, v).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn empty_batch_rejected() {
        assert!(matches!(SolveBatch::new(vec![]), Err(Error::EmptyBatch)));
    }

    fn arb_model(n: usize) -> impl Strategy<Value = QuboModel> {
        (
            prop::collection::vec((0..n, 0..n, -10.0f64..10.0), 0..12),
            -5.0f64..5.0,
        )
            .prop_map(move |(terms, offset)| {
                let mut m = QuboModel::new(n);
                for (i, j, v) in terms {
                    m.add_term(i, j, v).unwrap();
                }
                m.add_offset(offset);
                m
            })
    }

    proptest! {
        #[test]
        fn add_scaled_is_linear_in_energy(
            m1 in arb_model(4),
            m2 in arb_model(4),
            w in -3.0f64..3.0,
        ) {
            let sum = m1.add_scaled(&m2, w).unwrap();
            for x in all_assignments(4) {
                let lhs = sum.energy(&x).unwrap();
                let rhs = m1.energy(&x).unwrap() + w * m2.energy(&x).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            }
        }

        #[test]
        fn canonical_keys_are_upper_triangular(m in arb_model(5)) {
            for ((i, j), _) in m.terms() {
                prop_assert!(i <= j && j < 5);
            }
        }
    }

    #[test]
    fn add_scaled_exhaustive_weight_two_and_half() {
        let mut m1 = QuboModel::new(4);
        let mut m2 = QuboModel::new(4);
        let vals = [0.3, -1.2, 2.5, 0.7, -0.4, 1.1, -2.2, 0.9, 1.6, -0.8];
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                m1.add_term(i, j, vals[k % vals.len()]).unwrap();
                m2.add_term(j, i, vals[(k + 3) % vals.len()]).unwrap();
                k += 1;
            }
        }
        m2.add_offset(1.25);
        let sum = m1.add_scaled(&m2, 2.5).unwrap();
        for x in all_assignments(4) {
            let expected = m1.energy(&x).unwrap() + 2.5 * m2.energy(&x).unwrap();
            assert!((sum.energy(&x).unwrap() - expected).abs() < 1e-12);
        }
    }
}
