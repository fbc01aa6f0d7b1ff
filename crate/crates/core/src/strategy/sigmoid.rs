//! Least-squares fit of the feasibility sigmoid
//! `S(A) = 1 / (1 + exp(-A theta_s + theta_o))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITERS: usize = 200;
const MAX_HALVINGS: usize = 40;
/// `ln(99)`: `S` moves from 1% to 99% over `2 ln(99) / theta_s`.
const LOGIT_99: f64 = 4.59511985013459;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidFit {
    pub theta_s: f64,
    pub theta_o: f64,
    /// Sum of squared residuals at the solution.
    pub residual: f64,
}

pub fn sigmoid(a: f64, theta_s: f64, theta_o: f64) -> f64 {
    let z = a * theta_s - theta_o;
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn sse(points: &[(f64, f64)], s: f64, o: f64) -> f64 {
    points.iter().map(|&(a, p)| (sigmoid(a, s, o) - p).powi(2)).sum()
}

impl SigmoidFit {
    pub fn eval(&self, a: f64) -> f64 {
        sigmoid(a, self.theta_s, self.theta_o)
    }

    /// Penalty where the fitted curve equals `level`, for `0 < level < 1`.
    pub fn inverse(&self, level: f64) -> f64 {
        (self.theta_o + (level / (1.0 - level)).ln()) / self.theta_s
    }

    /// Gauss-Newton with step halving, started from the curve that rises
    /// from 1% at `lo` to 99% at `hi`.
    pub fn fit(points: &[(f64, f64)], lo: f64, hi: f64) -> Result<Self> {
        let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(Error::InsufficientHistory(format!(
                "sigmoid fit needs at least 2 distinct penalties, got {}",
                distinct.len()
            )));
        }
        if !(hi > lo) {
            return Err(Error::InvalidConfig(format!("initial bracket [{lo}, {hi}] is empty")));
        }
        let mut s = 2.0 * LOGIT_99 / (hi - lo);
        let mut o = s * 0.5 * (lo + hi);
        let mut cur = sse(points, s, o);
        for _ in 0..MAX_ITERS {
            // normal equations J^T J d = -J^T r
            let (mut jss, mut jso, mut joo, mut gs, mut go) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &(a, p) in points {
                let v = sigmoid(a, s, o);
                let w = v * (1.0 - v);
                let (ds, d_o) = (w * a, -w);
                let r = v - p;
                jss += ds * ds;
                jso += ds * d_o;
                joo += d_o * d_o;
                gs += ds * r;
                go += d_o * r;
            }
            let damp = 1e-12 * (jss + joo).max(f64::MIN_POSITIVE);
            let (jss, joo) = (jss + damp, joo + damp);
            let det = jss * joo - jso * jso;
            if !(det > 0.0) {
                break;
            }
            let step_s = -(joo * gs - jso * go) / det;
            let step_o = -(jss * go - jso * gs) / det;
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..MAX_HALVINGS {
                let (ns, no) = (s + t * step_s, o + t * step_o);
                let next = sse(points, ns, no);
                if next < cur {
                    let rel_step = (t * step_s).abs() / s.abs().max(1e-12) + (t * step_o).abs() / o.abs().max(1.0);
                    s = ns;
                    o = no;
                    let gain = cur - next;
                    cur = next;
                    improved = rel_step > 1e-14 && gain > 1e-18 * cur.max(1e-300);
                    break;
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if !(s.is_finite() && o.is_finite()) {
            return Err(Error::Numerical("sigmoid fit diverged".into()));
        }
        Ok(Self {
            theta_s: s,
            theta_o: o,
            residual: cur,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_recovery() {
        let pts: Vec<(f64, f64)> = (0..12)
            .map(|k| {
                let a = 5.0 * k as f64 / 11.0;
                (a, sigmoid(a, 2.0, 5.0))
            })
            .collect();
        let fit = SigmoidFit::fit(&pts, 0.0, 5.0).unwrap();
        assert!((fit.theta_s - 2.0).abs() < 1e-3 && (fit.theta_o - 5.0).abs() < 1e-3, "{fit:?}");
        assert!(fit.residual < 1e-12);
        assert!((fit.inverse(0.5) - 2.5).abs() < 1e-3);
    }

    #[test]
    fn needs_two_distinct_points() {
        assert!(matches!(
            SigmoidFit::fit(&[(1.0, 0.0), (1.0, 1.0)], 0.5, 2.0),
            Err(Error::InsufficientHistory(_))
        ));
    }

    #[test]
    fn step_data_gives_steep_curve() {
        let pts = [(1.0, 0.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)];
        let fit = SigmoidFit::fit(&pts, 1.0, 4.0).unwrap();
        assert!(fit.eval(1.5) < 0.05 && fit.eval(3.5) > 0.95);
        let mid = fit.inverse(0.5);
        assert!(mid > 2.0 && mid < 3.0);
    }
}
