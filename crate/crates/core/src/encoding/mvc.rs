use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::QuboModel;

/// Weighted undirected graph for minimum vertex cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvcInstance {
    n_nodes: usize,
    edges: BTreeSet<(usize, usize)>,
    weights: Vec<f64>,
}

impl MvcInstance {
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>, weights: Vec<f64>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidInstance("graph has no nodes".into()));
        }
        if weights.len() != n_nodes {
            return Err(Error::Dimension {
                expected: n_nodes,
                actual: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidInstance(format!("vertex weight {w} is not non-negative")));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidInstance(format!("self-loop at {a}")));
            }
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::InvalidInstance(format!("edge ({a}, {b}) out of range")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self {
            n_nodes,
            edges: set,
            weights,
        })
    }

    /// Unit-weight graph.
    pub fn unweighted(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(n_nodes, edges, vec![1.0; n_nodes])
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Objective `sum w_i u_i` and penalty `sum_{(i,j)} (1 - u_i - u_j + u_i u_j)`.
///
/// The penalty counts uncovered edges; compose with
/// `objective.add_scaled(&penalty, sigma)`.
pub fn encode_mvc(instance: &MvcInstance) -> Result<(QuboModel, QuboModel)> {
    let n = instance.n_nodes;
    let mut objective = QuboModel::new(n);
    for (i, &w) in instance.weights.iter().enumerate() {
        objective.add_term(i, i, w)?;
    }
    let mut penalty = QuboModel::new(n);
    for (i, j) in instance.edges() {
        penalty.add_offset(1.0);
        penalty.add_term(i, i, -1.0)?;
        penalty.add_term(j, j, -1.0)?;
        penalty.add_term(i, j, 1.0)?;
    }
    Ok((objective, penalty))
}
