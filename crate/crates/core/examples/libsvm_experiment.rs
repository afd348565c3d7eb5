//! Load a LibSVM file, shard it over agents, solve the reference problem and
//! run every method of a config on an alternating schedule read from a file.

use std::path::Path;

use tvopt::harness::{parse_libsvm, partition_dataset, run_experiment, ExperimentConfig, PartitionMode};

fn main() -> tvopt::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let ds = parse_libsvm(dir.join("toy.libsvm"))?;
    println!("{} rows, {} features, {} nonzeros, labels {:?}", ds.m(), ds.dim, ds.nnz(), ds.label_set);
    let shards = partition_dataset(ds.m(), 4, PartitionMode::Shuffled(9))?;
    println!("shard sizes: {:?}", shards.iter().map(Vec::len).collect::<Vec<_>>());

    let cfg = ExperimentConfig::from_path(dir.join("toy_alternating.json"))?;
    let report = run_experiment(&cfg)?;
    let m = &report.manifest;
    println!("f* = {:.10}, |grad F(X*)| = {:.3e}, r0 = {:.3}", m.f_star, m.grad_norm_at_star, m.r0);
    for rec in &m.methods {
        println!(
            "{:<18} {:<7} comms {:>7} fgap {:.3e}",
            rec.id,
            rec.status,
            rec.total_comms.map_or("-".into(), |c| c.to_string()),
            rec.final_fgap.unwrap_or(f64::NAN)
        );
    }
    report.write(&cfg)?;
    Ok(())
}
