//! Environment parameters, utility functions and the discounted-expected-utility
//! primitive shared by every other module.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The environment a pool operates in.
///
/// `p` is the probability that a share is a valid block, `block_reward` the
/// reward `B` of a block and `delta` the per-share discount factor. One share
/// is one discount step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct PoolParams {
    p: f64,
    #[serde(rename = "block_reward")]
    block_reward: f64,
    delta: f64,
}

#[derive(Deserialize)]
struct RawParams {
    p: f64,
    #[serde(alias = "B")]
    block_reward: f64,
    delta: f64,
}

impl TryFrom<RawParams> for PoolParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        PoolParams::new(raw.p, raw.block_reward, raw.delta)
    }
}

impl PoolParams {
    /// Validates and builds the parameter triple.
    ///
    /// `p = 1` is admitted so that deterministic block streams can be
    /// simulated; `delta = 1` is rejected because the utility series diverges.
    pub fn new(p: f64, block_reward: f64, delta: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::domain("p", format!("{p} is not in (0, 1]")));
        }
        if !(block_reward > 0.0 && block_reward.is_finite()) {
            return Err(Error::domain(
                "block_reward",
                format!("{block_reward} is not a positive finite amount"),
            ));
        }
        validate_delta(delta)?;
        Ok(PoolParams {
            p,
            block_reward,
            delta,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn block_reward(&self) -> f64 {
        self.block_reward
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

pub(crate) fn validate_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("delta", format!("{delta} is not in (0, 1)")))
    }
}

pub(crate) fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain("alpha", format!("{alpha} is not in (0, 1]")))
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied utility: `u`, its derivative, and the inverse of the derivative.
///
/// The caller is responsible for `u(0) = 0`, concavity and monotonicity.
#[derive(Clone)]
pub struct CustomUtility {
    pub name: String,
    value: ScalarFn,
    marginal: ScalarFn,
    inverse_marginal: ScalarFn,
}

impl CustomUtility {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        marginal: impl Fn(f64) -> f64 + Send + Sync + 'static,
        inverse_marginal: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CustomUtility {
            name: name.into(),
            value: Arc::new(value),
            marginal: Arc::new(marginal),
            inverse_marginal: Arc::new(inverse_marginal),
        }
    }
}

impl fmt::Debug for CustomUtility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomUtility")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// A concave, nondecreasing von Neumann-Morgenstern utility with `u(0) = 0`.
#[derive(Debug, Clone)]
pub enum UtilityFunction {
    /// `u(x) = x^alpha` with `alpha` in `(0, 1]`.
    Power { alpha: f64 },
    /// `u(x) = ln(1 + x)`.
    LogShifted,
    Custom(CustomUtility),
}

impl UtilityFunction {
    pub fn power(alpha: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        Ok(UtilityFunction::Power { alpha })
    }

    /// The risk parameter when this is a power utility.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            UtilityFunction::Power { alpha } => Some(*alpha),
            _ => None,
        }
    }

    /// `u(x)`; negative amounts are a domain error.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::domain("x", format!("utility of {x} is undefined")));
        }
        Ok(self.value(x))
    }

    /// `u(x)` for `x >= 0`, unchecked.
    pub(crate) fn value(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        match self {
            UtilityFunction::Power { alpha } => x.powf(*alpha),
            UtilityFunction::LogShifted => x.ln_1p(),
            UtilityFunction::Custom(c) => (c.value)(x),
        }
    }

    /// `u'(x)`; at `x = 0` this is the right derivative, possibly infinite.
    pub fn marginal(&self, x: f64) -> f64 {
        match self {
            UtilityFunction::Power { alpha } => {
                if *alpha == 1.0 {
                    1.0
                } else {
                    alpha * x.powf(alpha - 1.0)
                }
            }
            UtilityFunction::LogShifted => 1.0 / (1.0 + x),
            UtilityFunction::Custom(c) => (c.marginal)(x),
        }
    }

    /// The largest `x >= 0` with `u'(x) >= z`, i.e. `(u')^-1(z)` clamped at zero.
    ///
    /// For the linear utility this is `+inf` below the constant slope and `0`
    /// at or above it.
    pub fn inverse_marginal(&self, z: f64) -> f64 {
        match self {
            UtilityFunction::Power { alpha } => {
                if *alpha == 1.0 {
                    if z < 1.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else {
                    (z / alpha).powf(1.0 / (alpha - 1.0))
                }
            }
            UtilityFunction::LogShifted => (1.0 / z - 1.0).max(0.0),
            UtilityFunction::Custom(c) => (c.inverse_marginal)(z).max(0.0),
        }
    }
}

impl fmt::Display for UtilityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilityFunction::Power { alpha } => write!(f, "power:{alpha}"),
            UtilityFunction::LogShifted => f.write_str("log1p"),
            UtilityFunction::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

/// Parses `power:<alpha>` or `log1p`.
impl FromStr for UtilityFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "log1p" || s == "log_shifted" {
            return Ok(UtilityFunction::LogShifted);
        }
        if let Some(rest) = s.strip_prefix("power:") {
            let alpha: f64 = rest
                .parse()
                .map_err(|_| Error::domain("utility", format!("bad exponent in `{s}`")))?;
            return UtilityFunction::power(alpha);
        }
        Err(Error::domain(
            "utility",
            format!("`{s}` is not one of power:<alpha>, log1p"),
        ))
    }
}

/// Neumaier's compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `delta^i` for a nonnegative integer offset.
#[inline]
pub(crate) fn discount(delta: f64, i: usize) -> f64 {
    match i32::try_from(i) {
        Ok(n) => delta.powi(n),
        Err(_) => delta.powf(i as f64),
    }
}

/// Discounted sum `sum_i a_i * delta^i` in ascending offset order.
pub fn deu(expected_utilities: &[f64], delta: f64) -> Result<f64> {
    validate_delta(delta)?;
    Ok(expected_utilities
        .iter()
        .enumerate()
        .map(|(i, a)| a * discount(delta, i))
        .collect::<CompensatedSum>()
        .total())
}

/// `u(x)`.
pub fn eval_utility(u: &UtilityFunction, x: f64) -> Result<f64> {
    u.eval(x)
}
