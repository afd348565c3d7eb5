//! Metropolis weights for a few graphs and the contraction factor of each.

use tvopt::prelude::*;
use tvopt::topology::stochasticity_residual;

fn show(name: &str, g: &Graph) -> tvopt::Result<()> {
    let w = metropolis_weights(g);
    let delta = window_delta(w.as_matrix())?;
    println!("{name}: {} edges, delta = {delta:.4}, residual = {:.1e}", g.edge_count(), stochasticity_residual(w.as_matrix()));
    println!("{:.3}", w.as_matrix());
    Ok(())
}

fn main() -> tvopt::Result<()> {
    show("path(4)", &Graph::path(4))?;
    show("ring(5)", &Graph::ring(5))?;
    show("star(5)", &Graph::new(5, [(0, 1), (0, 2), (0, 3), (0, 4)])?)?;
    show("complete(4)", &Graph::complete(4))?;
    Ok(())
}
