//! Both real branches of the Lambert W function around the branch point.
//!
//! ```text
//! cargo run --example lambert_w
//! ```

use minepool::{lambert_w_minus1, lambert_w_principal};

fn main() -> minepool::Result<()> {
    let branch = -1.0 / std::f64::consts::E;
    println!("{:>14} {:>18} {:>18} {:>10}", "x", "W0(x)", "W-1(x)", "residual");
    for frac in [1.0, 0.999_999, 0.9, 0.5, 0.1, 1e-3, 1e-10] {
        let x = branch * frac;
        let upper = lambert_w_principal(x)?;
        let lower = lambert_w_minus1(x)?;
        println!(
            "{x:>14.6e} {:>18.12} {:>18.12} {:>10.1e}",
            upper.value,
            lower.value,
            lower.residual.abs().max(upper.residual.abs())
        );
    }
    Ok(())
}
