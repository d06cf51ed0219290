//! Reward allocation for Bitcoin-style mining pools under discounted expected
//! utility.
//!
//! A share is worth `sum_i E[u(X_i)] delta^i`, where `X_i` is what it is paid
//! `i` shares after it is submitted. The crate provides
//!
//! * closed forms for PPLNS and the optimal geometric pool ([`analytic`]),
//! * the real Lambert W function the optimal PPLNS window needs ([`lambert`]),
//! * a water-filling solver for optimal fixed rules under any concave utility
//!   ([`optimizer`]),
//! * a seeded Monte Carlo engine that checks all of the above against
//!   simulated share streams ([`simulator`]),
//! * the command implementations behind the `minepool` binary ([`cli`]).

// NaN must fail domain checks, hence the negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod analytic;
pub mod cli;
pub mod error;
pub mod lambert;
pub mod model;
pub mod optimizer;
pub mod simulator;

pub use allocation::{truncation_depth, AllocationRule, RewardProfile, RuleSpec};
pub use analytic::{
    fixed_rule_steady_state_utility, geometric_optimal_rule, geometric_steady_state_utility,
    optimal_pplns_n, pplns_steady_state_utility, proportional_pay_expected_utility, OptimalPplns,
};
pub use error::{Error, Result};
pub use lambert::{lambert_w_minus1, lambert_w_principal, WBranchResult};
pub use model::{deu, eval_utility, CustomUtility, PoolParams, UtilityFunction};
pub use optimizer::{
    extend_truncated, solve_fixed_rule_kkt, truncated_lagrange_power, TruncatedSolution,
};
pub use simulator::{
    balance_report, convergence_report, simulate, simulate_fixed_rule, simulate_proportional,
    ConvergenceReport, Scheme, SimConfig, UkEstimates,
};
