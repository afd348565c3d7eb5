//! Projected gradient descent with the projection replaced by a fixed number
//! of gossip rounds, against the exact projection. At the default step a
//! single round per step does not average enough and the iterates blow up.

use nalgebra::DVector;
use tvopt::harness::{solve_reference, DEFAULT_REFERENCE_TOL};
use tvopt::prelude::*;

fn main() -> tvopt::Result<()> {
    let n = 10;
    let q = QuadraticFamily::new(n, 0.1)?;
    let c = q.constants()?;
    let r = solve_reference(&q, &c, DEFAULT_REFERENCE_TOL)?;
    let s = build_schedule(ScheduleKind::RandomGilbert { p: 0.2, period: 1 }, n, 4, 3)?;
    let x0 = DVector::from_fn(n, |i, _| 1.0 + i as f64);
    let iters = 120;

    let exact = exact_projected_gd(&q, &c, &x0, iters, &r)?;
    println!("{:<10} {:>8} {:>14} {:>14}", "method", "comms", "r_N", "consensus");
    println!("{:<10} {:>8} {:>14.3e} {:>14.3e}", "exact", 0, exact.final_record().r_k, 0.0);
    for rounds in [1, 3, 10] {
        let cfg = SolverConfig::new(InnerMode::FixedRounds(rounds), iters);
        let t = decentralized_projected_gd(&q, &c, &s, &x0, &cfg, &r)?;
        let last = t.final_record();
        println!("{:<10} {:>8} {:>14.3e} {:>14.3e}", format!("k = {rounds}"), last.comms, last.r_k, last.dist_to_consensus);
    }
    Ok(())
}
