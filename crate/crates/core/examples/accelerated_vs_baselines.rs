//! Communication cost to a function gap on an ill-conditioned logistic
//! regression: accelerated projected GD, plain projected GD at several inner
//! round counts, and tuned DIGing.
//!
//! ```bash
//! cargo run --release -p tvopt --example accelerated_vs_baselines
//! ```

use std::path::Path;

use tvopt::harness::{run_experiment, ExperimentConfig};

fn main() -> tvopt::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/logistic_desk.json");
    let cfg = ExperimentConfig::from_path(path)?;
    let report = run_experiment(&cfg)?;
    let fmt = |v: Option<usize>| v.map_or("-".to_string(), |c| c.to_string());
    println!("{:<16} {:>10} {:>10} {:>10} {:>12}", "method", "to 1e-2", "to 1e-3", "to 1e-4", "final fgap");
    for outcome in &report.outcomes {
        match &outcome.result {
            Ok(run) => {
                let t = &run.trajectory;
                println!(
                    "{:<16} {:>10} {:>10} {:>10} {:>12.3e}",
                    outcome.id,
                    fmt(t.comms_to_fgap(1e-2)),
                    fmt(t.comms_to_fgap(1e-3)),
                    fmt(t.comms_to_fgap(1e-4)),
                    t.final_record().fgap
                );
                if let Some(alpha) = run.settings.alpha {
                    println!("{:<16} tuned alpha = {alpha:.4e}", "");
                }
            }
            Err(e) => println!("{:<16} failed: {e}", outcome.id),
        }
    }
    let (csv, manifest) = report.write(&cfg)?;
    println!("wrote {} and {}", csv.display(), manifest.display());
    Ok(())
}
