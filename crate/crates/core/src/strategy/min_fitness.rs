//! Expected minimum of `m` Gaussian draws, by quadrature of the survival
//! function `P(min > z) = (1 - Phi(z))^m`.
//!
//! For a variable bounded below by `L`, `E[min] = L + int_L^inf P(min > z) dz`.
//! With `L = 0` this is the usual identity for non-negative fitness; here
//! `L = mu - 8 sigma`, below which the survival function is 1 to double
//! precision, so the result stays exact when the Gaussian puts mass on
//! negative values.

use libm::erfc;

use crate::error::{Error, Result};

/// Number of standard deviations above the mean where the integral is cut.
pub const UPPER_SIGMAS: f64 = 8.0;
pub const REL_TOL: f64 = 1e-6;
const MAX_DEPTH: u32 = 50;
const INITIAL_PANELS: usize = 16;

/// `(1 - Phi((z - mu) / sigma))^m`, evaluated in log space.
fn survival_pow(z: f64, mu: f64, sigma: f64, m: f64) -> f64 {
    let tail = 0.5 * erfc((z - mu) / (sigma * std::f64::consts::SQRT_2));
    if tail <= 0.0 {
        0.0
    } else {
        (m * tail.ln()).exp()
    }
}

/// Expected best fitness among the feasible part of a batch of `b`
/// solutions whose energies are `N(e_avg, e_std^2)` and a fraction `p_f` of
/// which is feasible.
///
/// Returns `+inf` when fewer than half a feasible solution is expected
/// (`p_f * b < 0.5`). Accurate to about `1e-8 * e_std` in absolute terms.
pub fn expected_min_fitness(p_f: f64, e_avg: f64, e_std: f64, b: usize) -> Result<f64> {
    if !(e_std > 0.0) || !e_std.is_finite() {
        return Err(Error::InvalidConfig(format!("e_std = {e_std} must be positive")));
    }
    if b == 0 {
        return Err(Error::InvalidConfig("batch size must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p_f) {
        return Err(Error::InvalidConfig(format!("p_f = {p_f} is outside [0, 1]")));
    }
    let m = p_f * b as f64;
    if m < 0.5 {
        return Ok(f64::INFINITY);
    }
    let upper = e_avg + UPPER_SIGMAS * e_std;
    let lower = e_avg - UPPER_SIGMAS * e_std;
    let f = |z: f64| survival_pow(z, e_avg, e_std, m);
    let width = (upper - lower) / INITIAL_PANELS as f64;
    let tol = 1e-2 * REL_TOL * e_std;
    let mut total = lower;
    for k in 0..INITIAL_PANELS {
        let a = lower + k as f64 * width;
        let b = if k + 1 == INITIAL_PANELS { upper } else { a + width };
        total += adaptive_simpson(&f, a, b, tol / INITIAL_PANELS as f64);
    }
    Ok(total)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
