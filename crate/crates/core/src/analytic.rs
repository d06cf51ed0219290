//! Closed-form steady-state utilities and optimal pool parameters.
//!
//! Offsets start at 0 (the block share itself). The PPLNS closed form
//! `p B^a N^-a (1 - delta^N) / (1 - delta)` sums `delta^0 .. delta^(N-1)`, so it
//! agrees term for term with [`fixed_rule_steady_state_utility`] for PPLNS.

use serde::Serialize;

use crate::allocation::{truncation_depth, AllocationRule};
use crate::error::{Error, Result};
use crate::lambert::lambert_w_minus1;
use crate::model::{deu, validate_alpha, validate_delta, PoolParams, UtilityFunction};

/// The optimal PPLNS window for a power utility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalPplns {
    /// The continuous maximizer of `N^-a (1 - delta^N)`.
    pub n_real: f64,
    /// The better of `floor(n_real)` and `ceil(n_real)` (at least 1; ties go to the smaller).
    pub n_int: u64,
    /// Steady-state utility at `n_int` per unit of `p B^a`.
    pub utility_at_n_int: f64,
}

impl OptimalPplns {
    /// Steady-state utility of `Pplns(n_int)` in the given environment.
    pub fn utility(&self, params: &PoolParams, alpha: f64) -> f64 {
        params.p() * params.block_reward().powf(alpha) * self.utility_at_n_int
    }

    pub fn rule(&self) -> AllocationRule {
        AllocationRule::Pplns { n: self.n_int }
    }
}

/// `N^-a (1 - delta^N) / (1 - delta)`, the PPLNS utility without its `p B^a` factor.
fn pplns_shape(alpha: f64, delta: f64, n: f64) -> f64 {
    n.powf(-alpha) * -(n * delta.ln()).exp_m1() / (1.0 - delta)
}

/// Steady-state utility of a share in a PPLNS(N) pool with `u(x) = x^alpha`.
///
/// Real `n` is accepted for optimization; pools use integer windows.
pub fn pplns_steady_state_utility(params: &PoolParams, alpha: f64, n: f64) -> Result<f64> {
    validate_alpha(alpha)?;
    if !(n >= 1.0) {
        return Err(Error::domain("n", format!("PPLNS window {n} is below 1")));
    }
    Ok(params.p() * params.block_reward().powf(alpha) * pplns_shape(alpha, params.delta(), n))
}

/// The utility-maximizing PPLNS window `(W-1(-a e^-a) + a) / ln(delta)`.
///
/// Risk-neutral miners (`alpha = 1`) are best off solo, so `N = 1`.
pub fn optimal_pplns_n(alpha: f64, delta: f64) -> Result<OptimalPplns> {
    validate_alpha(alpha)?;
    validate_delta(delta)?;
    if alpha == 1.0 {
        return Ok(OptimalPplns {
            n_real: 1.0,
            n_int: 1,
            utility_at_n_int: 1.0,
        });
    }
    let w = lambert_w_minus1(-alpha * (-alpha).exp())?.value;
    let n_real = (w + alpha) / delta.ln();
    let lo = n_real.floor().max(1.0);
    let hi = n_real.ceil().max(1.0);
    let (f_lo, f_hi) = (pplns_shape(alpha, delta, lo), pplns_shape(alpha, delta, hi));
    let (n, f) = if f_hi > f_lo { (hi, f_hi) } else { (lo, f_lo) };
    Ok(OptimalPplns {
        n_real,
        n_int: n as u64,
        utility_at_n_int: f,
    })
}

fn geometric_ratio(alpha: f64, delta: f64) -> Result<(f64, f64)> {
    validate_delta(delta)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(
            "alpha",
            format!("{alpha} is not in (0, 1); the risk-neutral limit is solo mining"),
        ));
    }
    let log_r = delta.ln() / (1.0 - alpha);
    Ok((-log_r.exp_m1(), log_r.exp()))
}

/// The optimal fixed rule for `u(x) = x^alpha`: geometric with
/// `r = delta^(1/(1-alpha))` and `c = 1 - r`.
///
/// The rule is scale-free; `block_reward` is only validated.
pub fn geometric_optimal_rule(block_reward: f64, alpha: f64, delta: f64) -> Result<AllocationRule> {
    if !(block_reward > 0.0 && block_reward.is_finite()) {
        return Err(Error::domain("block_reward", format!("{block_reward} is not positive")));
    }
    let (c, r) = geometric_ratio(alpha, delta)?;
    AllocationRule::geometric(c, r)
}

/// `p B^a (1 - delta^(1/(1-a)))^(a-1)`, the utility of the optimal geometric pool.
pub fn geometric_steady_state_utility(params: &PoolParams, alpha: f64) -> Result<f64> {
    let (c, _) = geometric_ratio(alpha, params.delta())?;
    Ok(params.p() * params.block_reward().powf(alpha) * c.powf(alpha - 1.0))
}

/// `sum_{i<d} p u(B w_i) delta^i` with `d` from [`truncation_depth`], which
/// puts the result within `eps` of the untruncated sum.
///
/// Every share of a fixed-rule pool sees this same value.
pub fn fixed_rule_steady_state_utility(
    rule: &AllocationRule,
    params: &PoolParams,
    u: &UtilityFunction,
    eps: f64,
) -> Result<f64> {
    rule.mass()?;
    let depth = truncation_depth(rule, params, u, eps)?;
    let b = params.block_reward();
    let terms: Vec<f64> = (0..depth)
        .map(|i| params.p() * u.value(b * rule.weight(i)))
        .collect();
    deu(&terms, params.delta())
}

/// Expected steady-state utility of a share in a proportional-pay pool.
///
/// A share sits in a round with `A` shares before it and `F` after it (the
/// last being the block), both independent `Geometric(p)`. It is paid
/// `u(B / (A + F + 1)) delta^F`. Grouping by round length `n = A + F` gives
///
/// `sum_n p^2 (1-p)^n u(B/(n+1)) (1 - delta^(n+1)) / (1 - delta)`,
///
/// cut off once the remaining tail `u(B) (1-p)^n (1 + n p)` drops below `eps`.
pub fn proportional_pay_expected_utility(
    params: &PoolParams,
    u: &UtilityFunction,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::domain("eps", format!("{eps} is not positive")));
    }
    let (p, b, delta) = (params.p(), params.block_reward(), params.delta());
    let q = 1.0 - p;
    let log_q = q.ln();
    let log_delta = delta.ln();
    let scale = u.value(b);
    let mut acc = crate::model::CompensatedSum::new();
    let mut n = 0u64;
    loop {
        let len = (n + 1) as f64;
        let q_n = (n as f64 * log_q).exp();
        let discounted = -(len * log_delta).exp_m1() / (1.0 - delta);
        acc.add(p * p * q_n * u.value(b / len) * discounted);
        n += 1;
        let tail = scale * (n as f64 * log_q).exp() * (1.0 + n as f64 * p);
        if !(tail >= eps) {
            break;
        }
    }
    Ok(acc.total())
}
