//! Real Lambert W on `[-1/e, inf)`: the principal branch `W0` and the lower
//! branch `W-1`.
//!
//! Initial guesses come from the branch-point series near `-1/e` and the
//! logarithmic asymptotics away from it; Halley's iteration refines them. If
//! an iterate leaves the bracketing interval the solver bisects instead.

use std::f64::consts::E;

use crate::error::{Error, Result};

const INV_E: f64 = 1.0 / E;
/// Inputs this close to `-1/e` snap to the branch point.
const BRANCH_SNAP: f64 = 1e-14;
const MAX_HALLEY: u32 = 64;

/// A branch value with the residual `value * e^value - x` it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WBranchResult {
    pub value: f64,
    pub residual: f64,
    pub iterations: u32,
}

fn finish(x: f64, value: f64, iterations: u32) -> WBranchResult {
    WBranchResult {
        value,
        residual: value * value.exp() - x,
        iterations,
    }
}

/// Series in `q = sqrt(2 (1 + e x))` around the branch point; `q < 0` selects `W-1`.
fn branch_point_series(q: f64) -> f64 {
    -1.0 + q * (1.0 + q * (-1.0 / 3.0 + q * (11.0 / 72.0 + q * (-43.0 / 540.0))))
}

/// Halley steps on `w e^w - x` safeguarded by the bracket `[lo, hi]`.
///
/// `decreasing` is true when `w e^w` decreases on the bracket (the lower branch).
fn refine(x: f64, guess: f64, mut lo: f64, mut hi: f64, decreasing: bool) -> (f64, u32) {
    let sign = if decreasing { -1.0 } else { 1.0 };
    let mut w = guess.clamp(lo, hi);
    for it in 1..=MAX_HALLEY {
        // f e^-w, which stays finite where e^w overflows
        let t = w - x * (-w).exp();
        if t == 0.0 {
            return (w, it);
        }
        // keep the bracket tight so bisection fallback always makes progress
        if sign * t > 0.0 {
            hi = w;
        } else {
            lo = w;
        }
        let wp1 = w + 1.0;
        let step = t / (wp1 - (w + 2.0) * t / (2.0 * wp1));
        let mut next = w - step;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - w).abs() <= 4.0 * f64::EPSILON * w.abs().max(1.0) {
            return (next, it);
        }
        w = next;
    }
    (w, MAX_HALLEY)
}

/// Lower branch `W-1(x)` for `x` in `[-1/e, 0)`; the result is `<= -1`.
pub fn lambert_w_minus1(x: f64) -> Result<WBranchResult> {
    if !(-INV_E..0.0).contains(&x) {
        if x + INV_E >= -BRANCH_SNAP && x < 0.0 {
            return Ok(finish(x, -1.0, 0));
        }
        return Err(Error::domain("x", format!("W-1 is undefined at {x}")));
    }
    if x + INV_E <= BRANCH_SNAP {
        return Ok(finish(x, -1.0, 0));
    }
    let guess = if x < -0.25 {
        let q = -(2.0 * (1.0 + E * x)).max(0.0).sqrt();
        branch_point_series(q)
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };
    // w e^w = x with w <= -1 forces w >= 2 ln(-x) - 1
    let lo = 2.0 * (-x).ln() - 1.0;
    let (w, it) = refine(x, guess, lo, -1.0, true);
    Ok(finish(x, w.min(-1.0), it))
}

/// Principal branch `W0(x)` for `x >= -1/e`; the result is `>= -1`.
pub fn lambert_w_principal(x: f64) -> Result<WBranchResult> {
    if x.is_nan() || x < -INV_E - BRANCH_SNAP {
        return Err(Error::domain("x", format!("W0 is undefined at {x}")));
    }
    if x + INV_E <= BRANCH_SNAP {
        return Ok(finish(x, -1.0, 0));
    }
    if x == 0.0 {
        return Ok(finish(x, 0.0, 0));
    }
    if x == f64::INFINITY {
        return Ok(finish(x, f64::INFINITY, 0));
    }
    let guess = if x < -0.25 {
        branch_point_series((2.0 * (1.0 + E * x)).sqrt())
    } else if x < 3.0 {
        let l = x.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    let hi = if x > E { x.ln() } else { x.max(1.0) };
    let (w, it) = refine(x, guess, -1.0, hi, false);
    Ok(finish(x, w.max(-1.0), it))
}
