//! Shares submitted right after a PPLNS pool launches collect more than
//! steady-state shares, because the first blocks are split among fewer than
//! N shares.

use minepool::{simulate_fixed_rule, AllocationRule, PoolParams, Scheme, SimConfig, UtilityFunction};

fn main() -> minepool::Result<()> {
    let n = 100u64;
    let params = PoolParams::new(0.05, 100.0, 0.995)?;
    let mut cfg = SimConfig::new(
        params,
        UtilityFunction::power(0.5)?,
        Scheme::Fixed(AllocationRule::pplns(n)?),
    );
    cfg.num_shares = 4_000;
    cfg.trials = 2_000;
    cfg.seed = 1;
    cfg.report_k = 2 * n as usize;
    let est = simulate_fixed_rule(&cfg)?;
    println!("steady state: {:.4} +- {:.4}", est.steady_mean, est.steady_se);
    for k in est.per_k.iter().step_by(10) {
        let bar = "#".repeat((40.0 * k.mean / est.steady_mean / 2.0) as usize);
        println!("k={:>3} {:.4} +- {:.4} {bar}", k.k, k.mean, k.se);
    }
    Ok(())
}
