//! Gossip over a schedule whose individual graphs are disconnected: the
//! disagreement only shrinks once per window, by at least the factor δ̂.

use nalgebra::DMatrix;
use tvopt::prelude::*;

fn main() -> tvopt::Result<()> {
    let n = 6;
    let halves = vec![
        Graph::new(n, [(0, 1), (1, 2), (3, 4), (4, 5)])?,
        Graph::new(n, [(2, 3)])?,
    ];
    let b = 2;
    let s = build_schedule(ScheduleKind::Alternating(halves), n, 0, b)?;
    let report = verify_assumption(&s, b, 20 * b)?;
    println!("window B = {b}, delta_hat = {:.4}, assumptions hold: {}", report.delta_hat, report.pass);

    let x0 = ParameterMatrix::new(DMatrix::from_fn(2, n, |i, j| (i + 1) as f64 * j as f64))?;
    let d0 = distance_to_consensus(&x0);
    println!("{:>6} {:>14} {:>14}", "round", "distance", "bound");
    let mut x = x0.clone();
    for window in 1..=10 {
        x = run_consensus(&x, &s, (window - 1) * b, b)?.0;
        let bound = report.delta_hat.powi(window as i32) * d0;
        println!("{:>6} {:>14.6e} {:>14.6e}", window * b, distance_to_consensus(&x), bound);
    }

    let eps = 1e-8;
    let m = rounds_needed(d0, eps, report.delta_hat, b)?;
    let reached = distance_to_consensus(&run_consensus(&x0, &s, 0, m)?.0);
    println!("rounds planned for {eps:e}: {m}, reached {reached:.3e}");
    println!("mean kept: {:.3e}", (x.mean() - x0.mean()).amax());
    Ok(())
}
