//! Budgeted maximization of `f_n(y) = sum_{i<n} u(y_i) delta^i` subject to
//! `sum_i y_i <= B`, `y >= 0`.
//!
//! Power utilities have a closed-form solution. For any other concave utility
//! the optimum equalizes discounted marginal utility at a common multiplier
//! `lambda` (water-filling), found by bisection.

use serde::Serialize;

use crate::allocation::{AllocationRule, RewardProfile};
use crate::error::{Error, Result};
use crate::model::{validate_delta, CompensatedSum, UtilityFunction};

/// Default relative budget tolerance of [`solve_fixed_rule_kkt`].
pub const DEFAULT_BUDGET_TOL: f64 = 1e-10;

/// An optimal split of one block reward over the `n` most recent shares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedSolution {
    /// Currency paid at each offset.
    pub y: Vec<f64>,
    pub lambda: f64,
    /// `sum_i u(y_i) delta^i`.
    pub objective: f64,
    pub budget: f64,
    pub budget_used: f64,
}

impl TruncatedSolution {
    fn assemble(y: Vec<f64>, lambda: f64, u: &UtilityFunction, delta: f64, budget: f64) -> Self {
        let objective = objective(u, delta, &y);
        let budget_used = y.iter().copied().collect::<CompensatedSum>().total();
        TruncatedSolution {
            y,
            lambda,
            objective,
            budget,
            budget_used,
        }
    }

    /// Largest violation of the KKT conditions, relative to `lambda`.
    ///
    /// Coordinates that are zero only because the stationary value underflows
    /// are treated as interior.
    pub fn kkt_violation(&self, u: &UtilityFunction, delta: f64) -> f64 {
        let mut worst = 0.0f64;
        let mut disc = 1.0f64;
        for &y in &self.y {
            let gap = if y > 0.0 {
                (u.marginal(y) * disc - self.lambda).abs() / self.lambda
            } else if u.inverse_marginal(self.lambda / disc) == 0.0 || disc == 0.0 {
                0.0
            } else {
                ((u.marginal(0.0) * disc - self.lambda) / self.lambda).max(0.0)
            };
            worst = worst.max(gap);
            disc *= delta;
        }
        worst
    }
}

/// `sum_i u(y_i) delta^i`, the truncated objective.
pub fn objective(u: &UtilityFunction, delta: f64, y: &[f64]) -> f64 {
    let mut disc = 1.0;
    let mut acc = CompensatedSum::new();
    for &yi in y {
        acc.add(u.value(yi) * disc);
        disc *= delta;
    }
    acc.total()
}

/// Closed-form maximizer for `u(x) = x^alpha`, `0 < alpha < 1`:
/// `y_i = B (1 - rho) / (1 - rho^n) rho^i` with `rho = delta^(1/(1-alpha))`.
pub fn truncated_lagrange_power(
    n: usize,
    alpha: f64,
    delta: f64,
    budget: f64,
) -> Result<TruncatedSolution> {
    validate_delta(delta)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha", format!("{alpha} is not in (0, 1)")));
    }
    check_window_and_budget(n, budget)?;
    let log_rho = delta.ln() / (1.0 - alpha);
    let head = budget * log_rho.exp_m1() / (n as f64 * log_rho).exp_m1();
    let y: Vec<f64> = (0..n).map(|i| head * (i as f64 * log_rho).exp()).collect();
    let lambda = alpha * head.powf(alpha - 1.0);
    let u = UtilityFunction::Power { alpha };
    Ok(TruncatedSolution::assemble(y, lambda, &u, delta, budget))
}

fn check_window_and_budget(n: usize, budget: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("n", "window must hold at least one share"));
    }
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::domain("block_reward", format!("{budget} is not positive")));
    }
    Ok(())
}

/// Water-filling allocation at multiplier `lambda`: `y_i = (u')^-1(lambda / delta^i)`.
fn allocation_at(u: &UtilityFunction, log_delta: f64, n: usize, lambda: f64) -> Vec<f64> {
    let log_lambda = lambda.ln();
    (0..n)
        .map(|i| u.inverse_marginal((log_lambda - i as f64 * log_delta).exp()))
        .collect()
}

fn total(y: &[f64]) -> f64 {
    y.iter().copied().collect::<CompensatedSum>().total()
}

/// Solves the budgeted program for any supported concave utility by bisecting
/// on the multiplier.
///
/// The budget sum `S(lambda)` is nonincreasing; the upper bracket is
/// `u'(B * 1e-16)`, where `S` is negligible, and the lower bracket is found by
/// halving until `S >= B`. Bisection runs in log space and stops once
/// `|S - B| <= tol * B`. Concavity makes the KKT point the global maximum.
pub fn solve_fixed_rule_kkt(
    u: &UtilityFunction,
    delta: f64,
    budget: f64,
    n: usize,
    tol: f64,
) -> Result<TruncatedSolution> {
    validate_delta(delta)?;
    check_window_and_budget(n, budget)?;
    if !(tol > 0.0) {
        return Err(Error::domain("tol", format!("{tol} is not positive")));
    }
    let log_delta = delta.ln();
    let sum_at = |lambda: f64| total(&allocation_at(u, log_delta, n, lambda));

    let mut hi = u.marginal(budget * 1e-16);
    if !(hi.is_finite() && hi > 0.0) {
        return Err(Error::domain("utility", "marginal utility is not positive and finite"));
    }
    let mut lo = hi;
    let mut s_lo = sum_at(lo);
    let mut halvings = 0;
    while s_lo < budget {
        hi = lo;
        lo *= 0.5;
        s_lo = sum_at(lo);
        halvings += 1;
        if halvings > 2100 || lo == 0.0 {
            return Err(Error::Infeasible {
                budget,
                achieved: s_lo,
            });
        }
    }

    let (mut best, mut best_gap) = (lo, (s_lo - budget).abs());
    for _ in 0..300 {
        if best_gap <= tol * budget {
            break;
        }
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        let s = sum_at(mid);
        let gap = (s - budget).abs();
        if gap < best_gap {
            best = mid;
            best_gap = gap;
        }
        if s >= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = allocation_at(u, log_delta, n, best);
    let achieved = total(&y);
    if !((achieved - budget).abs() <= tol * budget) {
        return Err(Error::Infeasible { budget, achieved });
    }
    Ok(TruncatedSolution::assemble(y, best, u, delta, budget))
}

/// Pads the solution with zeros beyond offset `n`, as a fixed rule.
///
/// Weights are `y_i / max(B, sum y)` so rounding can never produce a rule that
/// overpays.
pub fn extend_truncated(sol: &TruncatedSolution) -> Result<AllocationRule> {
    let scale = sol.budget.max(sol.budget_used);
    let weights = sol.y.iter().map(|y| y / scale).collect();
    Ok(AllocationRule::Custom(RewardProfile::new(weights)?))
}
