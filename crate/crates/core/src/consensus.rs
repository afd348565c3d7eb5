//! Consensus subspace, exact projection and gossip averaging.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::topology::MixingSchedule;

/// `d × n` matrix whose column `i` is agent `i`'s local copy `x_i`.
///
/// Norms and inner products are Frobenius.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterMatrix(DMatrix<f64>);

impl ParameterMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("parameter matrix has non-finite entries".into()));
        }
        Ok(ParameterMatrix(m))
    }

    pub fn zeros(d: usize, n: usize) -> Self {
        ParameterMatrix(DMatrix::zeros(d, n))
    }

    /// Consensual matrix `[x, …, x]`.
    pub fn replicate(x: &DVector<f64>, n: usize) -> Self {
        ParameterMatrix(DMatrix::from_fn(x.len(), n, |r, _| x[r]))
    }

    pub fn d(&self) -> usize {
        self.0.nrows()
    }

    pub fn n(&self) -> usize {
        self.0.ncols()
    }

    pub fn column(&self, i: usize) -> DVector<f64> {
        self.0.column(i).into_owned()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Column mean `x̄ = (1/n) Σ x_i`.
    pub fn mean(&self) -> DVector<f64> {
        column_mean(&self.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn inner(&self, other: &ParameterMatrix) -> f64 {
        self.0.dot(&other.0)
    }
}

impl From<ParameterMatrix> for DMatrix<f64> {
    fn from(p: ParameterMatrix) -> Self {
        p.0
    }
}

pub(crate) fn column_mean(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.ncols() as f64;
    let mut mean = DVector::zeros(m.nrows());
    for c in m.column_iter() {
        mean += c;
    }
    mean / n
}

pub(crate) fn project_matrix(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mean = column_mean(m);
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, _| mean[r])
}

pub(crate) fn consensus_distance(m: &DMatrix<f64>) -> f64 {
    let mean = column_mean(m);
    let mut acc = 0.0;
    for c in m.column_iter() {
        acc += (c - &mean).norm_squared();
    }
    acc.sqrt()
}

/// Orthogonal projection onto `K`: every column replaced by the mean.
pub fn project_consensus(x: &ParameterMatrix) -> ParameterMatrix {
    ParameterMatrix(project_matrix(&x.0))
}

/// `‖X − proj_K(X)‖_F`.
pub fn distance_to_consensus(x: &ParameterMatrix) -> f64 {
    consensus_distance(&x.0)
}

/// Apply `m` gossip rounds `X ← X W(k)` for `k = k_start, …, k_start+m−1`.
///
/// Returns the final matrix and the number of rounds used.
pub fn run_consensus(
    x0: &ParameterMatrix,
    s: &MixingSchedule,
    k_start: usize,
    m: usize,
) -> Result<(ParameterMatrix, usize)> {
    if x0.n() != s.n() {
        return Err(Error::dim(format!("{} columns", s.n()), format!("{} columns", x0.n())));
    }
    let mut x = x0.0.clone();
    gossip(&mut x, s, k_start, m);
    Ok((ParameterMatrix(x), m))
}

/// In-place gossip on a raw matrix; dimensions are the caller's problem.
pub(crate) fn gossip(x: &mut DMatrix<f64>, s: &MixingSchedule, k_start: usize, m: usize) {
    for k in k_start..k_start + m {
        *x = &*x * s.matrix(k).as_matrix();
    }
}

/// `ceil` that absorbs floating noise around exact integers.
pub(crate) fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Gossip rounds that shrink a disagreement of `r0` to at most `eps`, given a
/// per-window contraction `delta_hat` over windows of `window` rounds.
///
/// The count is a whole number of windows, `B · ⌈log(r0/eps) / log(1/δ̂)⌉`,
/// because contraction is only certified once a full window has elapsed.
pub fn rounds_needed(r0: f64, eps: f64, delta_hat: f64, window: usize) -> Result<usize> {
    if !(delta_hat > 0.0 && delta_hat < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "contraction factor must lie in (0, 1), got {delta_hat}"
        )));
    }
    if !(eps > 0.0) || !(r0 >= 0.0) || window == 0 {
        return Err(Error::InvalidArgument(format!(
            "need eps > 0, r0 >= 0, B >= 1; got eps = {eps}, r0 = {r0}, B = {window}"
        )));
    }
    if r0 <= eps {
        return Ok(0);
    }
    let windows = ceil_tol((r0 / eps).ln() / (1.0 / delta_hat).ln());
    Ok(window * windows as usize)
}
