//! Optimal finite-window rules for a utility without a closed form, found by
//! water-filling on the Lagrange multiplier.
//!
//! ```text
//! cargo run --example kkt_solver
//! ```

use minepool::optimizer::DEFAULT_BUDGET_TOL;
use minepool::{
    extend_truncated, fixed_rule_steady_state_utility, solve_fixed_rule_kkt,
    truncated_lagrange_power, PoolParams, UtilityFunction,
};

fn main() -> minepool::Result<()> {
    let (delta, reward, window) = (0.95, 20.0, 60);
    let log = UtilityFunction::LogShifted;
    let sol = solve_fixed_rule_kkt(&log, delta, reward, window, DEFAULT_BUDGET_TOL)?;
    let paid = sol.y.iter().filter(|&&y| y > 0.0).count();
    println!("log(1+x), delta={delta}, B={reward}, window={window}");
    println!("  lambda = {:.9}, objective = {:.9}", sol.lambda, sol.objective);
    println!("  {paid} offsets paid; KKT violation {:.1e}", sol.kkt_violation(&log, delta));
    for (i, y) in sol.y.iter().take(paid + 1).enumerate() {
        println!("  y[{i:>2}] = {y:.6}");
    }

    let rule = extend_truncated(&sol)?;
    let params = PoolParams::new(0.01, reward, delta)?;
    let u = fixed_rule_steady_state_utility(&rule, &params, &log, 1e-12)?;
    println!("  as a pool: steady-state utility {u:.9} per share");

    let sqrt = UtilityFunction::power(0.5)?;
    let numeric = solve_fixed_rule_kkt(&sqrt, delta, reward, window, DEFAULT_BUDGET_TOL)?;
    let closed = truncated_lagrange_power(window, 0.5, delta, reward)?;
    let gap = numeric
        .y
        .iter()
        .zip(&closed.y)
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    println!("sqrt utility: solver vs closed form, max relative gap {gap:.1e}");
    Ok(())
}
