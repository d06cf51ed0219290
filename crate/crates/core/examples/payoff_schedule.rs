//! Per-offset payout fractions of the optimal geometric pool against PPLNS:
//! the geometric pool pays recent shares more and older shares less.

use minepool::{geometric_optimal_rule, AllocationRule};

fn main() -> minepool::Result<()> {
    let (alpha, delta, n) = (0.5, 0.99, 125u64);
    let geometric = geometric_optimal_rule(1.0, alpha, delta)?;
    let pplns = AllocationRule::pplns(n)?;
    let crossover = (0..).find(|&i| geometric.weight(i) < pplns.weight(i)).unwrap();
    println!("geometric pays more than PPLNS({n}) for offsets 0..{crossover}");
    for i in (0..=2 * n as usize).step_by(25) {
        println!("{i:>4} {:.6} {:.6}", geometric.weight(i), pplns.weight(i));
    }
    Ok(())
}
