//! Data ingestion, reference solutions and the experiment runner.

pub mod config;
pub mod experiment;
pub mod libsvm;
pub mod reference;
pub mod synthetic;

pub use config::{
    ConsensusBenchSpec, ExperimentConfig, GraphSpec, InnerSpec, MethodKind, MethodSpec,
    NamedGraph, ObjectiveSpec, OutputSpec, TopologySpec,
};
pub use experiment::{
    build_objective, build_topology, check_topology, consensus_bench, logistic_from_dataset,
    metrics_csv, prepare, run_experiment, run_method, BuiltObjective, ConsensusBench,
    ExperimentReport, Manifest, MethodOutcome, MethodRun, MethodSettings, Setup, CSV_HEADER,
};
pub use libsvm::{parse_libsvm, parse_libsvm_str, partition_dataset, LibsvmDataset, PartitionMode};
pub use reference::{solve_reference, ReferenceSolution, DEFAULT_REFERENCE_TOL};
pub use synthetic::synthetic_dataset;
