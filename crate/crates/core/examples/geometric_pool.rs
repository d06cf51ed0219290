//! Builds the optimal geometric pool for a power utility and compares its
//! steady-state utility with solo mining and the best PPLNS pool.
//!
//! ```text
//! cargo run --example geometric_pool -- 0.5
//! ```

use minepool::{
    fixed_rule_steady_state_utility, geometric_optimal_rule, geometric_steady_state_utility,
    optimal_pplns_n, AllocationRule, PoolParams, UtilityFunction,
};

fn main() -> minepool::Result<()> {
    let alpha: f64 = std::env::args()
        .nth(1)
        .map(|a| a.parse().expect("alpha must be a number"))
        .unwrap_or(0.5);
    let params = PoolParams::new(1e-3, 1e3, 0.999)?;
    let u = UtilityFunction::power(alpha)?;

    let rule = geometric_optimal_rule(params.block_reward(), alpha, params.delta())?;
    if let AllocationRule::Geometric { c, r } = rule {
        println!("optimal rule: w_i = {c:.6e} * {r:.9}^i  (mass {})", rule.mass()?);
    }
    println!("JSON: {}", rule.to_json());

    let closed = geometric_steady_state_utility(&params, alpha)?;
    let summed = fixed_rule_steady_state_utility(&rule, &params, &u, 1e-12)?;
    let pplns = optimal_pplns_n(alpha, params.delta())?;
    println!("geometric  {closed:.9} (term-by-term {summed:.9})");
    println!("pplns N={}  {:.9}", pplns.n_int, pplns.utility(&params, alpha));
    println!("solo       {:.9}", u.eval(params.block_reward())? * params.p());
    Ok(())
}
