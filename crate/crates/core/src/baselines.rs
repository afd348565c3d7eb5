//! Gradient-tracking and primal-correction baselines: DIGing and EXTRA.
//!
//! Both run on the same schedules and report the same [`Trajectory`] schema as
//! the projected methods, so communication counts line up one to one.
//!
//! DIGing:
//! ```text
//! X_{k+1} = X_k W(k) − α Y_k
//! Y_{k+1} = Y_k W(k) + ∇F(X_{k+1}) − ∇F(X_k),     Y_0 = ∇F(X_0)
//! ```
//! Two mixings per iteration (one for `X`, one for `Y`).
//!
//! EXTRA:
//! ```text
//! X_1     = X_0 W(0) − α ∇F(X_0)
//! X_{k+1} = X_k (I + W(k)) − X_{k−1} W̃ − α (∇F(X_k) − ∇F(X_{k−1})),   W̃ = (I + W)/2
//! ```
//! The `X_{k−1} W` part of `W̃` reuses the mixing computed one iteration
//! earlier, so each iteration costs one mixing; on a fixed graph this is the
//! textbook recursion.

use nalgebra::{DMatrix, DVector};

use crate::consensus::ParameterMatrix;
use crate::error::{Error, Result};
use crate::harness::ReferenceSolution;
use crate::objectives::{LocalObjective, SpectralConstants};
use crate::optimizers::{Probe, Trajectory};
use crate::topology::MixingSchedule;

/// `μ̂_f (1 − δ̂)² / (8 L_max²)`.
pub fn default_diging_alpha(c: &SpectralConstants, delta_hat: f64) -> f64 {
    let gap = (1.0 - delta_hat).clamp(0.0, 1.0);
    c.mu_hat() * gap * gap / (8.0 * c.l_max * c.l_max)
}

pub fn default_extra_alpha(c: &SpectralConstants) -> f64 {
    0.5 / c.l_max
}

/// DIGing iterate plus gradient tracker.
#[derive(Clone, Debug)]
pub struct TrackerState {
    pub x: DMatrix<f64>,
    /// Tracks the network-average gradient.
    pub y: DMatrix<f64>,
    pub g_prev: DMatrix<f64>,
    pub alpha: f64,
}

impl TrackerState {
    pub fn new(obj: &dyn LocalObjective, x0: &ParameterMatrix, alpha: f64) -> Self {
        let g = obj.stacked_gradient(x0.as_matrix());
        TrackerState {
            x: x0.as_matrix().clone(),
            y: g.clone(),
            g_prev: g,
            alpha,
        }
    }

    pub fn step(&mut self, obj: &dyn LocalObjective, w: &DMatrix<f64>) {
        let x_next = &self.x * w - &self.y * self.alpha;
        let g_next = obj.stacked_gradient(&x_next);
        self.y = &self.y * w + &g_next - &self.g_prev;
        self.x = x_next;
        self.g_prev = g_next;
    }
}

/// EXTRA's two-step state.
#[derive(Clone, Debug)]
pub struct ExtraState {
    pub x: DMatrix<f64>,
    x_prev: Option<DMatrix<f64>>,
    mix_prev: Option<DMatrix<f64>>,
    g_prev: Option<DMatrix<f64>>,
    g: DMatrix<f64>,
    pub alpha: f64,
}

impl ExtraState {
    pub fn new(obj: &dyn LocalObjective, x0: &ParameterMatrix, alpha: f64) -> Self {
        ExtraState {
            x: x0.as_matrix().clone(),
            x_prev: None,
            mix_prev: None,
            g_prev: None,
            g: obj.stacked_gradient(x0.as_matrix()),
            alpha,
        }
    }

    pub fn step(&mut self, obj: &dyn LocalObjective, w: &DMatrix<f64>) {
        let mix = &self.x * w;
        let next = match (&self.x_prev, &self.mix_prev, &self.g_prev) {
            (Some(xp), Some(mp), Some(gp)) => {
                &self.x + &mix - (xp + mp) * 0.5 - (&self.g - gp) * self.alpha
            }
            _ => &mix - &self.g * self.alpha,
        };
        let g_next = obj.stacked_gradient(&next);
        self.x_prev = Some(std::mem::replace(&mut self.x, next));
        self.mix_prev = Some(mix);
        self.g_prev = Some(std::mem::replace(&mut self.g, g_next));
    }
}

fn check(
    obj: &dyn LocalObjective,
    schedule: &MixingSchedule,
    x0: &DVector<f64>,
    alpha: f64,
) -> Result<()> {
    if x0.len() != obj.dim() {
        return Err(Error::dim(format!("x0 of length {}", obj.dim()), x0.len()));
    }
    if schedule.n() != obj.n() {
        return Err(Error::dim(format!("schedule on {} agents", obj.n()), schedule.n()));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("step size must be >= 0, got {alpha}")));
    }
    Ok(())
}

pub fn diging(
    obj: &dyn LocalObjective,
    schedule: &MixingSchedule,
    x0: &DVector<f64>,
    alpha: f64,
    iterations: usize,
    reference: &ReferenceSolution,
) -> Result<Trajectory> {
    check(obj, schedule, x0, alpha)?;
    let probe = Probe::new(obj, reference, 0);
    let mut state = TrackerState::new(obj, &ParameterMatrix::replicate(x0, obj.n()), alpha);
    let mut traj = Trajectory {
        method: "diging".into(),
        ..Default::default()
    };
    traj.records.push(probe.record(0, 0, 1, &state.x));
    for k in 0..iterations {
        state.step(obj, schedule.matrix(k).as_matrix());
        traj.inner_rounds.push(2);
        traj.records.push(probe.record(k + 1, 2 * (k + 1), k + 2, &state.x));
    }
    traj.last = Some(state.x);
    Ok(traj)
}

pub fn extra(
    obj: &dyn LocalObjective,
    schedule: &MixingSchedule,
    x0: &DVector<f64>,
    alpha: f64,
    iterations: usize,
    reference: &ReferenceSolution,
) -> Result<Trajectory> {
    check(obj, schedule, x0, alpha)?;
    let probe = Probe::new(obj, reference, 0);
    let mut state = ExtraState::new(obj, &ParameterMatrix::replicate(x0, obj.n()), alpha);
    let mut traj = Trajectory {
        method: "extra".into(),
        ..Default::default()
    };
    traj.records.push(probe.record(0, 0, 1, &state.x));
    for k in 0..iterations {
        state.step(obj, schedule.matrix(k).as_matrix());
        traj.inner_rounds.push(1);
        traj.records.push(probe.record(k + 1, k + 1, k + 2, &state.x));
    }
    traj.last = Some(state.x);
    Ok(traj)
}
