//! The utility-maximizing PPLNS window as a function of risk aversion and
//! discounting, checked against a brute-force scan over integer windows.
//!
//! ```text
//! cargo run --example optimal_pplns
//! ```

use minepool::{optimal_pplns_n, pplns_steady_state_utility, PoolParams};

fn main() -> minepool::Result<()> {
    let params = PoolParams::new(1e-3, 1e3, 0.99)?;
    println!("delta = {}", params.delta());
    println!("{:>6} {:>10} {:>6} {:>10} {:>12}", "alpha", "N*", "N", "scan N", "utility");
    for alpha in [0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
        let opt = optimal_pplns_n(alpha, params.delta())?;
        let scan = (1..=5000u32)
            .map(|n| (n, pplns_steady_state_utility(&params, alpha, n as f64).unwrap()))
            .fold((0, f64::MIN), |best, x| if x.1 > best.1 { x } else { best });
        println!(
            "{alpha:>6} {:>10.3} {:>6} {:>10} {:>12.6}",
            opt.n_real,
            opt.n_int,
            scan.0,
            opt.utility(&params, alpha)
        );
    }
    Ok(())
}
