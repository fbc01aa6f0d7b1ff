//! One-dimensional global minimization: uniform grid scan, then golden
//! section inside the cell pair around the best grid point.

use crate::error::{Error, Result};

pub const GRID_POINTS: usize = 64;
const GOLDEN_ITERS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    /// Uniform in `ln(x)`; requires a positive range.
    Log,
}

/// Returns `(argmin, min)` of `f` over `[lo, hi]`. Ties on the grid go to
/// the smaller argument.
pub fn grid_golden_minimize(f: impl Fn(f64) -> f64, lo: f64, hi: f64, spacing: Spacing) -> Result<(f64, f64)> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidConfig(format!("search range [{lo}, {hi}] is empty")));
    }
    if spacing == Spacing::Log && lo <= 0.0 {
        return Err(Error::InvalidConfig(format!("log-spaced search needs lo > 0, got {lo}")));
    }
    let (to_u, from_u): (fn(f64) -> f64, fn(f64) -> f64) = match spacing {
        Spacing::Linear => (|x| x, |u| u),
        Spacing::Log => (f64::ln, f64::exp),
    };
    let (u_lo, u_hi) = (to_u(lo), to_u(hi));
    let g = |u: f64| f(from_u(u).clamp(lo, hi));
    let step = (u_hi - u_lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|k| u_lo + k as f64 * step).collect();
    let values: Vec<f64> = grid.iter().map(|&u| g(u)).collect();
    let mut best = 0;
    for k in 1..GRID_POINTS {
        if values[k] < values[best] {
            best = k;
        }
    }
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(GRID_POINTS - 1)]);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..GOLDEN_ITERS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
    }
    let (u_star, f_star) = if fc <= fd { (c, fc) } else { (d, fd) };
    // never return worse than the grid
    if values[best] < f_star {
        Ok((from_u(grid[best]).clamp(lo, hi), values[best]))
    } else {
        Ok((from_u(u_star).clamp(lo, hi), f_star))
    }
}
