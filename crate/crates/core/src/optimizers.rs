//! Projected gradient methods on the consensus subspace and their budgets.
//!
//! [`exact_projected_gd`] is the idealized method `Π_{k+1} = Π_k − γ proj_K(∇F(Π_k))`.
//! [`decentralized_projected_gd`] replaces the projection by gossip rounds,
//! either a fixed number per step or as many as needed to bring the squared
//! disagreement under `ε₁`. [`accelerated_projected_gd`] adds a Nesterov
//! momentum step on top of the same inexact projection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::consensus::{
    ceil_tol, column_mean, consensus_distance, gossip, project_matrix, rounds_needed,
    ParameterMatrix,
};
use crate::error::{Error, Result};
use crate::harness::ReferenceSolution;
use crate::objectives::{LocalObjective, SpectralConstants};
use crate::topology::{MixingSchedule, ScheduleStats};

/// Floor applied to an empirical `δ̂` before taking `log(1/δ̂)`.
pub const DELTA_FLOOR: f64 = 1e-15;

/// Extra windows an accuracy-driven projection may add when the empirical
/// `δ̂` turned out optimistic for the rounds actually used.
const MAX_TOP_UP_WINDOWS: usize = 10_000;

/// How each outer step approximates the projection onto `K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMode {
    /// Exactly this many gossip rounds per outer step.
    FixedRounds(usize),
    /// Enough rounds for `‖X_{k+1} − proj_K(Y_{k+1})‖² ≤ eps1`, planned from
    /// the schedule's empirical contraction factor.
    AccuracyDriven { eps1: f64, delta_hat: f64 },
}

/// Which smoothness/condition pair drives the accelerated method.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccelConstants {
    /// `L = L_f / n`, `κ = L_f / μ_f`: `F` restricted to `K`.
    #[default]
    Restricted,
    /// `L = L_max`, `κ = L_max / μ_min`: `F` on all of `ℝ^{d×n}`.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Step size; `None` picks the method default.
    pub gamma: Option<f64>,
    pub inner: InnerMode,
    pub outer_iterations: usize,
    /// Keep `X_k` in the trajectory every this many steps (0 keeps none).
    #[serde(default)]
    pub keep_iterates_every: usize,
    #[serde(default)]
    pub accel: AccelConstants,
}

impl SolverConfig {
    pub fn new(inner: InnerMode, outer_iterations: usize) -> Self {
        SolverConfig {
            gamma: None,
            inner,
            outer_iterations,
            keep_iterates_every: 0,
            accel: AccelConstants::Restricted,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_accel(mut self, accel: AccelConstants) -> Self {
        self.accel = accel;
        self
    }

    pub fn keep_iterates(mut self, every: usize) -> Self {
        self.keep_iterates_every = every;
        self
    }
}

/// Metrics after outer iteration `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub k: usize,
    /// Cumulative gossip rounds (matrix mixings).
    pub comms: usize,
    /// Cumulative stacked-gradient evaluations `∇F(X)`.
    pub grads: usize,
    /// `f(x̄_k) − f*`.
    pub fgap: f64,
    /// `‖X_k − X*‖²_F`.
    pub dist_sq_to_opt: f64,
    pub dist_to_consensus: f64,
    /// `‖Π_k − Π*‖_F`.
    pub r_k: f64,
    pub iterate: Option<DMatrix<f64>>,
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub method: String,
    /// One record per outer iteration, starting with `k = 0`.
    pub records: Vec<TrajectoryRecord>,
    /// Gossip rounds spent in each outer step.
    pub inner_rounds: Vec<usize>,
    /// `‖X_{k+1} − proj_K(Y_{k+1})‖²` after each outer step.
    pub projection_residuals: Vec<f64>,
    /// Final iterate.
    pub last: Option<DMatrix<f64>>,
}

impl Trajectory {
    pub fn final_record(&self) -> &TrajectoryRecord {
        self.records.last().expect("trajectory has at least the initial record")
    }

    pub fn total_comms(&self) -> usize {
        self.final_record().comms
    }

    /// Cumulative communications at the first record with `fgap ≤ target`.
    pub fn comms_to_fgap(&self, target: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.fgap <= target)
            .map(|r| r.comms)
    }
}

/// Computes metrics of an iterate against a reference solution.
pub(crate) struct Probe<'a> {
    obj: &'a dyn LocalObjective,
    reference: &'a ReferenceSolution,
    keep_every: usize,
}

impl<'a> Probe<'a> {
    pub(crate) fn new(
        obj: &'a dyn LocalObjective,
        reference: &'a ReferenceSolution,
        keep_every: usize,
    ) -> Self {
        Probe {
            obj,
            reference,
            keep_every,
        }
    }

    pub(crate) fn record(
        &self,
        k: usize,
        comms: usize,
        grads: usize,
        x: &DMatrix<f64>,
    ) -> TrajectoryRecord {
        let xbar = column_mean(x);
        let x_star = &self.reference.x_star;
        let dist_sq_to_opt = x.column_iter().map(|c| (c - x_star).norm_squared()).sum();
        let n = x.ncols() as f64;
        TrajectoryRecord {
            k,
            comms,
            grads,
            fgap: self.obj.total_value(&xbar) - self.reference.f_star,
            dist_sq_to_opt,
            dist_to_consensus: consensus_distance(x),
            r_k: n.sqrt() * (&xbar - x_star).norm(),
            iterate: (self.keep_every > 0 && k.is_multiple_of(self.keep_every)).then(|| x.clone()),
        }
    }
}

fn check_dims(
    obj: &dyn LocalObjective,
    x0: &DVector<f64>,
    reference: &ReferenceSolution,
    schedule: Option<&MixingSchedule>,
) -> Result<()> {
    if x0.len() != obj.dim() {
        return Err(Error::dim(format!("x0 of length {}", obj.dim()), x0.len()));
    }
    if reference.x_star.len() != obj.dim() {
        return Err(Error::dim(
            format!("reference of length {}", obj.dim()),
            reference.x_star.len(),
        ));
    }
    if let Some(s) = schedule {
        if s.n() != obj.n() {
            return Err(Error::dim(format!("schedule on {} agents", obj.n()), s.n()));
        }
    }
    Ok(())
}

/// `γ = n / (μ_f + L_f) = 1 / (μ̂_f + L̂_f)`.
pub fn default_gamma(c: &SpectralConstants) -> f64 {
    c.n as f64 / (c.mu_f + c.l_f)
}

/// Exact projected gradient descent from the consensual `Π₀ = [x0, …, x0]`.
///
/// Equivalent to centralized gradient descent on `f` with step `γ / n`.
pub fn exact_projected_gd(
    obj: &dyn LocalObjective,
    constants: &SpectralConstants,
    x0: &DVector<f64>,
    iterations: usize,
    reference: &ReferenceSolution,
) -> Result<Trajectory> {
    check_dims(obj, x0, reference, None)?;
    let n = obj.n();
    let gamma = default_gamma(constants);
    let probe = Probe::new(obj, reference, 0);
    let mut pi = x0.clone();
    let mut traj = Trajectory {
        method: "exact".into(),
        ..Default::default()
    };
    traj.records
        .push(probe.record(0, 0, 0, ParameterMatrix::replicate(&pi, n).as_matrix()));
    for k in 0..iterations {
        // proj_K(∇F(Π)) has every column equal to ∇f(π) / n.
        let step = obj.total_gradient(&pi) / n as f64;
        pi -= step * gamma;
        let x = ParameterMatrix::replicate(&pi, n).into_matrix();
        traj.records.push(probe.record(k + 1, 0, k + 1, &x));
        traj.inner_rounds.push(0);
        traj.projection_residuals.push(0.0);
    }
    traj.last = Some(ParameterMatrix::replicate(&pi, n).into_matrix());
    Ok(traj)
}

/// Runs the inexact projection of `y` in place; returns rounds used.
fn inexact_projection(
    y: &mut DMatrix<f64>,
    schedule: &MixingSchedule,
    round: usize,
    inner: InnerMode,
) -> Result<usize> {
    match inner {
        InnerMode::FixedRounds(m) => {
            gossip(y, schedule, round, m);
            Ok(m)
        }
        InnerMode::AccuracyDriven { eps1, delta_hat } => {
            if !(eps1 > 0.0) {
                return Err(Error::InvalidArgument(format!("eps1 must be positive, got {eps1}")));
            }
            let window = schedule.window();
            let target = eps1.sqrt();
            let planned = rounds_needed(
                consensus_distance(y),
                target,
                delta_hat.max(DELTA_FLOOR),
                window,
            )?;
            gossip(y, schedule, round, planned);
            let mut used = planned;
            let mut top_ups = 0;
            while consensus_distance(y) > target {
                if top_ups == MAX_TOP_UP_WINDOWS {
                    return Err(Error::Schedule(format!(
                        "gossip failed to reach disagreement {target:e} after {used} rounds"
                    )));
                }
                gossip(y, schedule, round + used, window);
                used += window;
                top_ups += 1;
            }
            Ok(used)
        }
    }
}

/// Decentralized inexact projected gradient descent.
///
/// Every outer step is a local gradient step `Y = X − γ ∇F(X)` followed by
/// gossip. Gossip rounds consume the schedule monotonically: inner loops of
/// later outer steps see later graphs.
pub fn decentralized_projected_gd(
    obj: &dyn LocalObjective,
    constants: &SpectralConstants,
    schedule: &MixingSchedule,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
    reference: &ReferenceSolution,
) -> Result<Trajectory> {
    check_dims(obj, x0, reference, Some(schedule))?;
    let gamma = cfg.gamma.unwrap_or_else(|| default_gamma(constants));
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {gamma}")));
    }
    let probe = Probe::new(obj, reference, cfg.keep_iterates_every);
    let mut x = ParameterMatrix::replicate(x0, obj.n()).into_matrix();
    let mut traj = Trajectory {
        method: "proj-gd".into(),
        ..Default::default()
    };
    traj.records.push(probe.record(0, 0, 0, &x));
    let mut round = 0;
    for k in 0..cfg.outer_iterations {
        let mut y = &x - obj.stacked_gradient(&x) * gamma;
        let target = project_matrix(&y);
        let used = inexact_projection(&mut y, schedule, round, cfg.inner)?;
        round += used;
        traj.projection_residuals.push((&y - &target).norm_squared());
        traj.inner_rounds.push(used);
        x = y;
        traj.records.push(probe.record(k + 1, round, k + 1, &x));
    }
    traj.last = Some(x);
    Ok(traj)
}

/// Momentum coefficient `(√κ − 1) / (√κ + 1)`.
pub fn momentum(kappa: f64) -> Result<f64> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("condition number must be finite and >= 1, got {kappa}")));
    }
    let s = kappa.sqrt();
    Ok((s - 1.0) / (s + 1.0))
}

/// Decentralized accelerated projected gradient descent.
///
/// `Y = X − (1/L) ∇F(X)`, `Ỹ' ≈ proj_K(Y)` by gossip, then
/// `X = Ỹ' + β (Ỹ' − Ỹ)` with `β = (√κ − 1)/(√κ + 1)` and `Ỹ₀ = X₀`.
/// Records track the projected sequence `Ỹ_k`.
pub fn accelerated_projected_gd(
    obj: &dyn LocalObjective,
    constants: &SpectralConstants,
    schedule: &MixingSchedule,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
    reference: &ReferenceSolution,
) -> Result<Trajectory> {
    check_dims(obj, x0, reference, Some(schedule))?;
    let (smoothness, kappa) = match cfg.accel {
        AccelConstants::Restricted => (constants.l_hat(), constants.kappa_f()),
        AccelConstants::Full => (constants.l_max, constants.kappa_full()),
    };
    let beta = momentum(kappa)?;
    let step = cfg.gamma.unwrap_or(1.0 / smoothness);
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {step}")));
    }
    let probe = Probe::new(obj, reference, cfg.keep_iterates_every);
    let mut x = ParameterMatrix::replicate(x0, obj.n()).into_matrix();
    let mut y_prev = x.clone();
    let mut traj = Trajectory {
        method: "accelerated".into(),
        ..Default::default()
    };
    traj.records.push(probe.record(0, 0, 0, &y_prev));
    let mut round = 0;
    for k in 0..cfg.outer_iterations {
        let mut y = &x - obj.stacked_gradient(&x) * step;
        let target = project_matrix(&y);
        let used = inexact_projection(&mut y, schedule, round, cfg.inner)?;
        round += used;
        traj.projection_residuals.push((&y - &target).norm_squared());
        traj.inner_rounds.push(used);
        x = &y + (&y - &y_prev) * beta;
        traj.records.push(probe.record(k + 1, round, k + 1, &y));
        y_prev = y;
    }
    traj.last = Some(y_prev);
    Ok(traj)
}

/// Per-step projection accuracy `ε₁ = μ_f² ε / (13 n² L_max²)` that makes the
/// outer loop reach `‖X_N − X*‖² ≤ ε`.
pub fn epsilon1_for_target(eps: f64, n: usize, mu_f: f64, l_max: f64) -> Result<f64> {
    if !(eps > 0.0 && mu_f > 0.0 && l_max > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "need positive eps, n, mu_f, L_max; got {eps}, {n}, {mu_f}, {l_max}"
        )));
    }
    let n = n as f64;
    Ok(mu_f * mu_f * eps / (13.0 * n * n * l_max * l_max))
}

/// Squared-distance level `12 L_max² ε₁ / μ̂_f²` below which the outer
/// contraction guarantee stops applying.
pub fn contraction_threshold(eps1: f64, c: &SpectralConstants) -> f64 {
    12.0 * c.l_max * c.l_max * eps1 / (c.mu_hat() * c.mu_hat())
}

/// Guaranteed per-step factor `1 − μ̂_f / (8 L̂_f)` on `r_k²`.
pub fn contraction_factor(c: &SpectralConstants) -> f64 {
    1.0 - c.mu_hat() / (8.0 * c.l_hat())
}

/// Outer iterations after which `r_N²` is below [`contraction_threshold`] for
/// the `ε₁` matching target `eps`.
pub fn outer_iteration_count(eps: f64, r0: f64, c: &SpectralConstants) -> Result<usize> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidArgument(format!("r0 must be positive, got {r0}")));
    }
    let eps1 = epsilon1_for_target(eps, c.n, c.mu_f, c.l_max)?;
    let threshold = contraction_threshold(eps1, c);
    if r0 * r0 <= threshold {
        return Ok(0);
    }
    let rate = -contraction_factor(c).ln();
    if !(rate > 0.0) {
        return Err(Error::InvalidArgument("degenerate contraction factor".into()));
    }
    Ok(ceil_tol((r0 * r0 / threshold).ln() / rate) as usize)
}

/// Accuracy, iteration and communication budget of the accuracy-driven method.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AccuracyBudget {
    pub eps: f64,
    pub eps1: f64,
    pub n_outer: usize,
    /// Worst-case disagreement right after a gradient step.
    pub step_disagreement_bound: f64,
    pub m_inner: usize,
    pub total_comm: usize,
}

/// Compose `ε₁`, the outer count and the per-step gossip rounds.
///
/// The disagreement after a gradient step is bounded by
/// `√ε₁ (1 + γ L_max) + γ ‖∇F(X*)‖ + γ L_max r0` with `γ = n/(μ_f + L_f)`,
/// and each step needs enough rounds to shrink that to `√ε₁`.
pub fn theorem2_budget(
    eps: f64,
    r0: f64,
    c: &SpectralConstants,
    stats: &ScheduleStats,
    grad_norm_at_star: f64,
) -> Result<AccuracyBudget> {
    let eps1 = epsilon1_for_target(eps, c.n, c.mu_f, c.l_max)?;
    let n_outer = outer_iteration_count(eps, r0, c)?;
    let gamma = default_gamma(c);
    let root = eps1.sqrt();
    let bound = root * (1.0 + gamma * c.l_max) + gamma * grad_norm_at_star + gamma * c.l_max * r0;
    let m_inner = rounds_needed(bound, root, stats.delta_hat.max(DELTA_FLOOR), stats.window)?;
    Ok(AccuracyBudget {
        eps,
        eps1,
        n_outer,
        step_disagreement_bound: bound,
        m_inner,
        total_comm: n_outer * m_inner,
    })
}
