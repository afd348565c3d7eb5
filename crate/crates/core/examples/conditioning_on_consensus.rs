//! The quadratic family is far better conditioned on the consensus subspace
//! than agent by agent: sums of local constants overstate `L` and understate `μ`.

use tvopt::prelude::*;

fn main() -> tvopt::Result<()> {
    println!("{:>5} {:>6} {:>10} {:>10} {:>12} {:>12}", "n", "alpha", "kappa_f", "kappa_full", "L_sum/L_f", "mu_f/mu_sum");
    for (n, alpha) in [(4, 1.0), (10, 0.1), (100, 0.01), (1000, 0.001)] {
        let c = QuadraticFamily::new(n, alpha)?.constants()?;
        println!(
            "{n:>5} {alpha:>6} {:>10.3} {:>10.1} {:>12.3} {:>12.3}",
            c.kappa_f(),
            c.kappa_full(),
            c.l_sum / c.l_f,
            c.mu_f / c.mu_sum
        );
    }
    let q = QuadraticFamily::new(10, 0.1)?;
    let report = coercivity_check(&q, &q.constants()?, 200, 1);
    println!("coercivity over 200 random pairs: worst margin {:.2e}", report.worst_margin);
    Ok(())
}
