//! Fixed-rule allocation schemes.
//!
//! A rule pays the share that precedes a winning block by `i` shares (the
//! block share itself is offset 0) the fraction `w_i` of the block reward.
//! Weights are dimensionless; they become currency only when evaluated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{discount, CompensatedSum, PoolParams, UtilityFunction};

/// Absolute slack allowed on a rule's total payout fraction.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// An explicit finite weight vector `w_0, ..., w_{d-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RewardProfile(Vec<f64>);

impl RewardProfile {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::domain(
                "weights",
                format!("weight {i} is {w}; weights must be finite and nonnegative"),
            ));
        }
        let mass = weights.iter().copied().collect::<CompensatedSum>().total();
        if mass > 1.0 + MASS_TOLERANCE {
            return Err(Error::Ponzi { mass });
        }
        Ok(RewardProfile(weights))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }
}

/// Serialized form of a rule, e.g. `{"kind":"pplns","n":125}`.
///
/// The simulator additionally understands `{"kind":"proportional"}`, which is
/// history-dependent and therefore not an [`AllocationRule`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RuleSpec {
    Solo,
    Pplns { n: u64 },
    Geometric { c: f64, r: f64 },
    Custom { weights: Vec<f64> },
    Proportional,
}

/// A state-independent allocation rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RuleSpec", into = "RuleSpec")]
pub enum AllocationRule {
    /// The block finder keeps the whole reward.
    Solo,
    /// `w_i = 1/n` for `i < n`.
    Pplns { n: u64 },
    /// `w_i = c r^i`.
    Geometric { c: f64, r: f64 },
    Custom(RewardProfile),
}

impl TryFrom<RuleSpec> for AllocationRule {
    type Error = Error;

    fn try_from(spec: RuleSpec) -> Result<Self> {
        match spec {
            RuleSpec::Solo => Ok(AllocationRule::Solo),
            RuleSpec::Pplns { n } => AllocationRule::pplns(n),
            RuleSpec::Geometric { c, r } => AllocationRule::geometric(c, r),
            RuleSpec::Custom { weights } => AllocationRule::custom(weights),
            RuleSpec::Proportional => Err(Error::domain(
                "kind",
                "proportional pay is not a fixed-rule pool",
            )),
        }
    }
}

impl From<AllocationRule> for RuleSpec {
    fn from(rule: AllocationRule) -> Self {
        match rule {
            AllocationRule::Solo => RuleSpec::Solo,
            AllocationRule::Pplns { n } => RuleSpec::Pplns { n },
            AllocationRule::Geometric { c, r } => RuleSpec::Geometric { c, r },
            AllocationRule::Custom(p) => RuleSpec::Custom { weights: p.0 },
        }
    }
}

impl AllocationRule {
    pub fn pplns(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n", "PPLNS window must be positive"));
        }
        Ok(AllocationRule::Pplns { n })
    }

    pub fn geometric(c: f64, r: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::domain("c", format!("{c} is not in (0, 1]")));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::domain("r", format!("{r} is not in (0, 1)")));
        }
        let rule = AllocationRule::Geometric { c, r };
        rule.mass()?;
        Ok(rule)
    }

    pub fn custom(weights: Vec<f64>) -> Result<Self> {
        RewardProfile::new(weights).map(AllocationRule::Custom)
    }

    /// Parses and validates the JSON form.
    ///
    /// Malformed input is a [`Error::Config`]; a rule that overpays is
    /// [`Error::Ponzi`].
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: RuleSpec = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("rule JSON: {e}")))?;
        AllocationRule::try_from(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("rules always serialize")
    }

    /// `w_i`: the fraction of `B` paid to the share `i` places before the block.
    pub fn weight(&self, i: usize) -> f64 {
        match self {
            AllocationRule::Solo => {
                if i == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            AllocationRule::Pplns { n } => {
                if (i as u64) < *n {
                    1.0 / *n as f64
                } else {
                    0.0
                }
            }
            AllocationRule::Geometric { c, r } => c * discount(*r, i),
            AllocationRule::Custom(p) => p.0.get(i).copied().unwrap_or(0.0),
        }
    }

    /// Offsets beyond which the rule pays nothing, or `None` for geometric rules.
    pub fn natural_window(&self) -> Option<usize> {
        match self {
            AllocationRule::Solo => Some(1),
            AllocationRule::Pplns { n } => Some(usize::try_from(*n).unwrap_or(usize::MAX)),
            AllocationRule::Geometric { .. } => None,
            AllocationRule::Custom(p) => Some(p.0.len()),
        }
    }

    /// Total fraction of a block reward paid out, `sum_i w_i`.
    pub fn mass(&self) -> Result<f64> {
        let mass = match self {
            AllocationRule::Solo | AllocationRule::Pplns { .. } => 1.0,
            AllocationRule::Geometric { c, r } => c / (1.0 - r),
            AllocationRule::Custom(p) => p.0.iter().copied().collect::<CompensatedSum>().total(),
        };
        if mass > 1.0 + MASS_TOLERANCE {
            Err(Error::Ponzi { mass })
        } else {
            Ok(mass)
        }
    }

    /// Keeps only the first `depth` weights.
    pub fn truncated(&self, depth: usize) -> AllocationRule {
        let depth = self.natural_window().map_or(depth, |w| w.min(depth));
        AllocationRule::Custom(RewardProfile((0..depth).map(|i| self.weight(i)).collect()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            AllocationRule::Solo => "solo",
            AllocationRule::Pplns { .. } => "pplns",
            AllocationRule::Geometric { .. } => "geometric",
            AllocationRule::Custom(_) => "custom",
        }
    }
}

/// Smallest depth `d >= 1` with `u(B) delta^d / (1 - delta) < eps`, capped at
/// the rule's natural window.
///
/// Dropping every offset at or beyond `d` changes each share's utility by less
/// than `eps`.
pub fn truncation_depth(
    rule: &AllocationRule,
    params: &PoolParams,
    u: &UtilityFunction,
    eps: f64,
) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::domain("eps", format!("{eps} is not positive")));
    }
    let depth = tail_depth(u.value(params.block_reward()), params.delta(), eps);
    Ok(rule.natural_window().map_or(depth, |w| w.min(depth)))
}

fn tail_depth(scale: f64, delta: f64, eps: f64) -> usize {
    if !(scale > 0.0) {
        return 1;
    }
    let bound = |d: f64| scale.ln() + d * delta.ln() - (1.0 - delta).ln();
    let target = eps.ln();
    let mut d = ((target - bound(0.0)) / delta.ln()).floor().max(1.0);
    while d > 1.0 && bound(d - 1.0) < target {
        d -= 1.0;
    }
    while bound(d) >= target {
        d += 1.0;
    }
    d as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_examples() {
        assert_eq!(AllocationRule::pplns(4).unwrap().weight(2), 0.25);
        assert_eq!(AllocationRule::pplns(4).unwrap().weight(4), 0.0);
        assert_eq!(AllocationRule::Solo.weight(1), 0.0);
        assert_eq!(AllocationRule::Solo.weight(0), 1.0);
        let g = AllocationRule::geometric(0.0199, 0.9801).unwrap();
        assert!((g.weight(1) - 0.01950399).abs() < 1e-15);
    }

    #[test]
    fn mass_examples() {
        for n in [1, 7, 125, 10_000] {
            assert_eq!(AllocationRule::pplns(n).unwrap().mass().unwrap(), 1.0);
        }
        let r = 0.37;
        let g = AllocationRule::geometric(1.0 - r, r).unwrap();
        assert!((g.mass().unwrap() - 1.0).abs() <= 1e-15);
        assert!(matches!(
            AllocationRule::custom(vec![0.5, 0.6]),
            Err(Error::Ponzi { .. })
        ));
        assert!(matches!(
            AllocationRule::geometric(0.5, 0.6),
            Err(Error::Ponzi { .. })
        ));
    }

    #[test]
    fn invalid_constructions() {
        assert!(AllocationRule::pplns(0).is_err());
        assert!(AllocationRule::geometric(0.0, 0.5).is_err());
        assert!(AllocationRule::geometric(0.1, 1.0).is_err());
        assert!(matches!(
            AllocationRule::custom(vec![0.1, -0.01]),
            Err(Error::Domain { .. })
        ));
        assert!(AllocationRule::custom(vec![f64::NAN]).is_err());
    }

    #[test]
    fn depth_examples() {
        let params = PoolParams::new(1e-3, 1e3, 0.999).unwrap();
        let sqrt = UtilityFunction::power(0.5).unwrap();
        let pplns = AllocationRule::pplns(10).unwrap();
        assert!(truncation_depth(&pplns, &params, &sqrt, 1e-300).unwrap() <= 10);
        assert_eq!(truncation_depth(&AllocationRule::Solo, &params, &sqrt, 1e-9).unwrap(), 1);

        // direct iteration of the bound, one discount step at a time
        let scale = 1e3f64.sqrt();
        let mut d = 0usize;
        let mut pow = 1.0f64;
        while scale * pow / 0.001 >= 1e-6 {
            pow *= 0.999;
            d += 1;
        }
        assert_eq!(d, 24166);
        let geo = AllocationRule::geometric(0.001999, 0.998001).unwrap();
        assert_eq!(truncation_depth(&geo, &params, &sqrt, 1e-6).unwrap(), d);
        assert!(truncation_depth(&geo, &params, &sqrt, 0.0).is_err());
    }

    #[test]
    fn json_forms() {
        let cases = [
            (r#"{"kind":"pplns","n":125}"#, AllocationRule::Pplns { n: 125 }),
            (r#"{"kind":"solo"}"#, AllocationRule::Solo),
            (
                r#"{"kind":"geometric","c":0.0199,"r":0.9801}"#,
                AllocationRule::Geometric { c: 0.0199, r: 0.9801 },
            ),
            (
                r#"{"kind":"custom","weights":[0.5,0.25]}"#,
                AllocationRule::custom(vec![0.5, 0.25]).unwrap(),
            ),
        ];
        for (text, rule) in cases {
            assert_eq!(AllocationRule::from_json(text).unwrap(), rule);
            assert_eq!(rule.to_json(), text);
        }
        assert!(matches!(
            AllocationRule::from_json(r#"{"kind":"custom","weights":[0.5,0.6]}"#),
            Err(Error::Ponzi { .. })
        ));
        assert!(matches!(
            AllocationRule::from_json(r#"{"kind":"pps"}"#),
            Err(Error::Config(_))
        ));
        assert!(AllocationRule::from_json(r#"{"kind":"proportional"}"#).is_err());
    }

    #[test]
    fn truncation_keeps_leading_weights() {
        let g = AllocationRule::geometric(0.5, 0.5).unwrap();
        let t = g.truncated(3);
        assert_eq!(t.natural_window(), Some(3));
        assert_eq!(t.weight(2), 0.125);
        assert_eq!(t.weight(3), 0.0);
        assert_eq!(AllocationRule::pplns(2).unwrap().truncated(5).natural_window(), Some(2));
    }
}
