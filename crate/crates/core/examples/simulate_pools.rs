//! Desk-scale Monte Carlo of solo, optimal PPLNS, optimal geometric and
//! proportional pools, compared with their analytic steady-state utilities.
//!
//! ```text
//! cargo run --release --example simulate_pools
//! ```

use minepool::cli::analytic_reference;
use minepool::{
    convergence_report, geometric_optimal_rule, optimal_pplns_n, simulate, AllocationRule,
    PoolParams, Scheme, SimConfig, UtilityFunction,
};

fn main() -> minepool::Result<()> {
    let params = PoolParams::new(1e-3, 1e3, 0.999)?;
    let alpha = 0.5;
    let u = UtilityFunction::power(alpha)?;
    let schemes = [
        Scheme::Fixed(AllocationRule::Solo),
        Scheme::Fixed(optimal_pplns_n(alpha, params.delta())?.rule()),
        Scheme::Fixed(geometric_optimal_rule(params.block_reward(), alpha, params.delta())?),
        Scheme::ProportionalPay,
    ];
    println!(
        "{:<13} {:>10} {:>10} {:>9} {:>6} {:>10} {:>8}",
        "scheme", "analytic", "simulated", "se", "z", "converged", "balanced"
    );
    for scheme in schemes {
        let mut cfg = SimConfig::new(params, u.clone(), scheme);
        cfg.seed = 42;
        let analytic = analytic_reference(&cfg)?;
        let est = simulate(&cfg)?;
        let report = convergence_report(&est, Some(analytic));
        println!(
            "{:<13} {analytic:>10.6} {:>10.6} {:>9.2e} {:>6.2} {:>10} {:>8}",
            est.scheme,
            report.steady_mean,
            report.steady_se,
            report.z_score.unwrap_or(f64::NAN),
            report.converged,
            report.balance_ok
        );
    }
    Ok(())
}
