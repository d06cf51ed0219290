//! Analytic utility of every scheme across risk parameters at the desk
//! parameters, printed as the sweep CSV (no simulation).

use minepool::cli::{sweep_rows, SimOptions, SweepArgs};
use minepool::cli::EnvArgs;

fn main() -> minepool::Result<()> {
    let args = SweepArgs {
        alphas: (1..=10).map(|k| k as f64 / 10.0).collect(),
        schemes: ["solo", "pplns_opt", "geometric", "proportional"].map(String::from).to_vec(),
        env: EnvArgs { p: 1e-3, delta: 0.999, reward: 1e3 },
        sim: SimOptions { no_sim: true, shares: 0, trials: 0, seed: 0 },
    };
    println!("alpha  solo       pplns_opt  geometric  proportional");
    for chunk in sweep_rows(&args)?.chunks(4) {
        let cells: Vec<String> = chunk.iter().map(|r| format!("{:.6}", r.analytic_utility)).collect();
        println!("{:<6} {}", chunk[0].alpha, cells.join("   "));
    }
    Ok(())
}
