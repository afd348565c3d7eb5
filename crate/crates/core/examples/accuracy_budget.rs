//! Plan ε₁, the outer iteration count and the per-step gossip rounds for a
//! target accuracy, then compare the plan with an accuracy-driven run.

use nalgebra::DVector;
use tvopt::harness::{solve_reference, DEFAULT_REFERENCE_TOL};
use tvopt::prelude::*;

fn main() -> tvopt::Result<()> {
    let n = 10;
    let q = QuadraticFamily::new(n, 0.1)?;
    let c = q.constants()?;
    let r = solve_reference(&q, &c, DEFAULT_REFERENCE_TOL)?;
    let x0 = DVector::from_element(n, 1.0);
    let r0 = (n as f64).sqrt() * (&x0 - &r.x_star).norm();

    for window in [1, 2, 4] {
        let s = build_schedule(ScheduleKind::RandomGilbert { p: 0.3, period: 1 }, n, 12, window)?;
        let stats = verify_assumption(&s, window, 20 * window)?.stats();
        println!("B = {window}, delta_hat = {:.4}", stats.delta_hat);
        for eps in [1e-2, 1e-4, 1e-6] {
            let b = theorem2_budget(eps, r0, &c, &stats, r.grad_norm_at_star)?;
            let inner = InnerMode::AccuracyDriven { eps1: b.eps1, delta_hat: stats.delta_hat };
            let t = decentralized_projected_gd(&q, &c, &s, &x0, &SolverConfig::new(inner, b.n_outer), &r)?;
            println!(
                "  eps {eps:.0e}: eps1 {:.2e}, N {:>4}, m {:>3}, budget {:>6}, used {:>6}, final dist^2 {:.2e}",
                b.eps1,
                b.n_outer,
                b.m_inner,
                b.total_comm,
                t.total_comms(),
                t.final_record().dist_sq_to_opt
            );
        }
    }
    Ok(())
}
