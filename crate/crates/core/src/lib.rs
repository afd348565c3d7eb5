//! Decentralized optimization over time-varying networks.
//!
//! Every agent `i` of a network holds a private objective `f_i` and a local
//! copy `x_i` of the decision vector. Stacking the copies as columns gives a
//! `d × n` matrix `X`, and minimizing `f = Σ f_i` becomes minimizing
//! `F(X) = Σ f_i(x_i)` over the consensus subspace `K = {x_1 = … = x_n}`.
//!
//! This crate runs projected gradient descent on that reformulation where the
//! projection onto `K` is only approximated by gossip averaging over a
//! sequence of doubly stochastic mixing matrices `W(k)`:
//!
//! - [`topology`]: graphs, Metropolis mixing matrices, time-varying
//!   schedules, window products and the contraction factor `δ`.
//! - [`consensus`]: the parameter matrix, exact projection onto `K`, gossip
//!   rounds and the rounds-to-accuracy planner.
//! - [`objectives`]: regularized logistic regression, a quadratic family with
//!   known constants, and the strong-convexity/smoothness constants.
//! - [`optimizers`]: exact projected GD, decentralized inexact projected GD,
//!   its accelerated variant, and the iteration/communication budgets.
//! - [`baselines`]: DIGing and EXTRA on the same schedules and metrics.
//! - [`harness`]: LibSVM ingestion, partitioning, reference solutions and
//!   the CSV-producing experiment runner behind the `tvopt` binary.
//!
//! Runnable walkthroughs for each capability live in `examples/`:
//!
//! ```bash
//! cargo run -p tvopt --example metropolis_mixing
//! cargo run -p tvopt --example gossip_contraction
//! cargo run -p tvopt --example conditioning_on_consensus
//! cargo run -p tvopt --example inexact_projection
//! cargo run -p tvopt --example accuracy_budget
//! cargo run -p tvopt --example accelerated_vs_baselines
//! cargo run -p tvopt --example libsvm_experiment
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod consensus;
pub mod error;
pub mod harness;
pub mod objectives;
pub mod optimizers;
pub mod topology;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::baselines::{diging, extra};
    pub use crate::consensus::{
        distance_to_consensus, project_consensus, rounds_needed, run_consensus, ParameterMatrix,
    };
    pub use crate::error::{Error, Result};
    pub use crate::objectives::{
        coercivity_check, estimate_constants, LocalObjective, LogisticObjective, QuadraticFamily,
        SpectralConstants,
    };
    pub use crate::optimizers::{
        accelerated_projected_gd, decentralized_projected_gd, epsilon1_for_target,
        exact_projected_gd, outer_iteration_count, theorem2_budget, AccelConstants,
        AccuracyBudget, InnerMode, SolverConfig, Trajectory,
    };
    pub use crate::topology::{
        build_schedule, metropolis_weights, verify_assumption, window_delta, window_product, Graph,
        MixingMatrix, MixingSchedule, ScheduleKind, ScheduleStats,
    };
}
