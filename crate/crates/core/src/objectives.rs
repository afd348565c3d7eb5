//! Per-agent objectives and the constants that set step sizes and budgets.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Differentiable `f_i : ℝ^d → ℝ` for each agent `i in 0..n`.
pub trait LocalObjective: Send + Sync {
    fn n(&self) -> usize;

    fn dim(&self) -> usize;

    fn value(&self, i: usize, x: &DVector<f64>) -> f64;

    fn gradient(&self, i: usize, x: &DVector<f64>) -> DVector<f64>;

    /// Strong convexity and smoothness constants of `f = Σ f_i` and of the
    /// individual `f_i`.
    fn constants(&self) -> Result<SpectralConstants>;

    /// Closed-form minimizer of `f`, when there is one.
    fn known_minimizer(&self) -> Option<DVector<f64>> {
        None
    }

    /// `f(x) = Σ_i f_i(x)`.
    fn total_value(&self, x: &DVector<f64>) -> f64 {
        (0..self.n()).map(|i| self.value(i, x)).sum()
    }

    /// `∇f(x) = Σ_i ∇f_i(x)`, summed in agent order.
    fn total_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim());
        for i in 0..self.n() {
            g += self.gradient(i, x);
        }
        g
    }

    /// `F(X) = Σ_i f_i(x_i)`.
    fn stacked_value(&self, x: &DMatrix<f64>) -> f64 {
        (0..self.n())
            .map(|i| self.value(i, &x.column(i).into_owned()))
            .sum()
    }

    /// `∇F(X) = [∇f_1(x_1), …, ∇f_n(x_n)]`.
    fn stacked_gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.dim(), self.n());
        for i in 0..self.n() {
            g.set_column(i, &self.gradient(i, &x.column(i).into_owned()));
        }
        g
    }
}

/// `μ_f, L_f` of the aggregate and `μ_min, L_max, μ_sum, L_sum` of the parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralConstants {
    pub n: usize,
    pub mu_f: f64,
    pub l_f: f64,
    pub mu_min: f64,
    pub l_max: f64,
    pub mu_sum: f64,
    pub l_sum: f64,
}

impl SpectralConstants {
    pub fn new(
        n: usize,
        mu_f: f64,
        l_f: f64,
        mu_min: f64,
        l_max: f64,
        mu_sum: f64,
        l_sum: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Objective("agent count must be positive".into()));
        }
        if !(mu_f > 0.0 && mu_f <= l_f && l_f.is_finite()) {
            return Err(Error::Objective(format!(
                "need 0 < mu_f <= L_f, got mu_f = {mu_f}, L_f = {l_f}"
            )));
        }
        if !(mu_min >= 0.0 && mu_min <= l_max && l_max.is_finite()) {
            return Err(Error::Objective(format!(
                "need 0 <= mu_min <= L_max, got mu_min = {mu_min}, L_max = {l_max}"
            )));
        }
        Ok(SpectralConstants {
            n,
            mu_f,
            l_f,
            mu_min,
            l_max,
            mu_sum,
            l_sum,
        })
    }

    /// `μ̂_f = μ_f / n`, strong convexity of `F` restricted to `K`.
    pub fn mu_hat(&self) -> f64 {
        self.mu_f / self.n as f64
    }

    /// `L̂_f = L_f / n`.
    pub fn l_hat(&self) -> f64 {
        self.l_f / self.n as f64
    }

    pub fn kappa_f(&self) -> f64 {
        self.l_f / self.mu_f
    }

    /// Condition number of `F` on all of `ℝ^{d×n}`.
    pub fn kappa_full(&self) -> f64 {
        self.l_max / self.mu_min
    }
}

pub fn estimate_constants(obj: &dyn LocalObjective) -> Result<SpectralConstants> {
    obj.constants()
}

/// `f_i(x) = ½ x_i² + (α / 2n) ‖x‖²`, so `f(x) = ½ (1 + α) ‖x‖²` when `d = n`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticFamily {
    n: usize,
    alpha: f64,
    d: usize,
}

impl QuadraticFamily {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        Self::with_dim(n, alpha, n)
    }

    pub fn with_dim(n: usize, alpha: f64, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Objective("quadratic family needs n >= 1".into()));
        }
        if !(alpha > 0.0) {
            return Err(Error::Objective(format!("alpha must be positive, got {alpha}")));
        }
        if d < n {
            return Err(Error::Objective(format!("need d >= n, got d = {d}, n = {n}")));
        }
        Ok(QuadraticFamily { n, alpha, d })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl LocalObjective for QuadraticFamily {
    fn n(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, i: usize, x: &DVector<f64>) -> f64 {
        0.5 * x[i] * x[i] + self.alpha / (2.0 * self.n as f64) * x.norm_squared()
    }

    fn gradient(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        let mut g = x * (self.alpha / self.n as f64);
        g[i] += x[i];
        g
    }

    fn constants(&self) -> Result<SpectralConstants> {
        let n = self.n as f64;
        let mu_i = self.alpha / n;
        let l_i = 1.0 + self.alpha / n;
        // Coordinates beyond the n-th only see the α term.
        let mu_f = if self.d == self.n { 1.0 + self.alpha } else { self.alpha };
        let mu_sum = (0..self.n).map(|_| mu_i).sum();
        let l_sum = (0..self.n).map(|_| l_i).sum();
        SpectralConstants::new(self.n, mu_f, 1.0 + self.alpha, mu_i, l_i, mu_sum, l_sum)
    }

    fn known_minimizer(&self) -> Option<DVector<f64>> {
        Some(DVector::zeros(self.d))
    }
}

/// Label encoding of a binary classification dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelSet {
    ZeroOne,
    PlusMinusOne,
}

impl LabelSet {
    /// Map a raw label to `±1`; `None` if it is not in the set.
    pub fn to_sign(self, label: f64) -> Option<f64> {
        match self {
            LabelSet::ZeroOne if label == 0.0 => Some(-1.0),
            LabelSet::ZeroOne if label == 1.0 => Some(1.0),
            LabelSet::PlusMinusOne if label == -1.0 || label == 1.0 => Some(label),
            _ => None,
        }
    }
}

/// Samples held by one agent: rows of `features` are `a_j`, without bias.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub features: DMatrix<f64>,
    pub labels: Vec<f64>,
}

#[derive(Clone, Debug)]
struct Shard {
    /// Augmented rows `[a_j, 1]`.
    a: DMatrix<f64>,
    /// Labels in `{−1, +1}`.
    c: DVector<f64>,
}

/// Regularized logistic regression split over agents:
/// `f_i(x) = (1/m) Σ_{j ∈ shard i} log(1 + exp(−c_j ⟨[a_j, 1], x⟩)) + (λ / 2n) ‖x‖²`
/// where `m` counts samples across all shards.
#[derive(Clone, Debug)]
pub struct LogisticObjective {
    shards: Vec<Shard>,
    lambda: f64,
    m_total: usize,
    d: usize,
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Relative change of the Rayleigh quotient at which power iteration stops.
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 50_000;

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub(crate) fn power_iteration(g: &DMatrix<f64>) -> f64 {
    let d = g.nrows();
    if d == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = DVector::from_fn(d, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        1.0 + 0.1 * z
    });
    v /= v.norm();
    let mut rho = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = g * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - rho).abs() <= POWER_TOL * next.abs() {
            return next.max(rho);
        }
        rho = next;
    }
    rho
}

impl LogisticObjective {
    pub fn new(shards: Vec<Samples>, lambda: f64, labels: LabelSet) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Objective(format!("lambda must be >= 0, got {lambda}")));
        }
        if shards.is_empty() {
            return Err(Error::Objective("need at least one agent".into()));
        }
        let raw_d = shards[0].features.ncols();
        let mut out = Vec::with_capacity(shards.len());
        let mut m_total = 0;
        for (i, s) in shards.into_iter().enumerate() {
            let rows = s.features.nrows();
            if rows == 0 {
                return Err(Error::Objective(format!("agent {i} holds no samples")));
            }
            if s.features.ncols() != raw_d {
                return Err(Error::Objective(format!(
                    "agent {i} has {} features, agent 0 has {raw_d}",
                    s.features.ncols()
                )));
            }
            if s.labels.len() != rows {
                return Err(Error::Objective(format!(
                    "agent {i}: {} labels for {rows} samples",
                    s.labels.len()
                )));
            }
            if s.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::Objective(format!("agent {i} has non-finite features")));
            }
            let c = s
                .labels
                .iter()
                .map(|&l| {
                    labels.to_sign(l).ok_or_else(|| {
                        Error::Objective(format!("label {l} not in {labels:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let a = DMatrix::from_fn(rows, raw_d + 1, |r, col| {
                if col < raw_d {
                    s.features[(r, col)]
                } else {
                    1.0
                }
            });
            m_total += rows;
            out.push(Shard {
                a,
                c: DVector::from_vec(c),
            });
        }
        Ok(LogisticObjective {
            shards: out,
            lambda,
            m_total,
            d: raw_d + 1,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sample_count(&self) -> usize {
        self.m_total
    }

    pub fn shard_sizes(&self) -> Vec<usize> {
        self.shards.iter().map(|s| s.a.nrows()).collect()
    }

    /// `λ_max(ÃᵀÃ) / (4m)`: smoothness bound of the unregularized loss.
    pub fn data_smoothness(&self) -> f64 {
        power_iteration(&self.total_gram()) / (4.0 * self.m_total as f64)
    }

    fn total_gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.d, self.d);
        for s in &self.shards {
            g += s.a.tr_mul(&s.a);
        }
        g
    }
}

impl LocalObjective for LogisticObjective {
    fn n(&self) -> usize {
        self.shards.len()
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, i: usize, x: &DVector<f64>) -> f64 {
        let s = &self.shards[i];
        let z = &s.a * x;
        let loss: f64 = z.iter().zip(s.c.iter()).map(|(z, c)| softplus(-c * z)).sum();
        loss / self.m_total as f64
            + self.lambda / (2.0 * self.shards.len() as f64) * x.norm_squared()
    }

    fn gradient(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        let s = &self.shards[i];
        let m = self.m_total as f64;
        let mut w = &s.a * x;
        for (wj, cj) in w.iter_mut().zip(s.c.iter()) {
            *wj = -cj * sigmoid(-cj * *wj) / m;
        }
        s.a.tr_mul(&w) + x * (self.lambda / self.shards.len() as f64)
    }

    fn constants(&self) -> Result<SpectralConstants> {
        if self.lambda <= 0.0 {
            return Err(Error::Objective(
                "logistic objective needs lambda > 0 to be strongly convex".into(),
            ));
        }
        let n = self.shards.len() as f64;
        let four_m = 4.0 * self.m_total as f64;
        let l_f = self.lambda + power_iteration(&self.total_gram()) / four_m;
        let l_parts: Vec<f64> = self
            .shards
            .iter()
            .map(|s| self.lambda / n + power_iteration(&s.a.tr_mul(&s.a)) / four_m)
            .collect();
        let l_max = l_parts.iter().copied().fold(0.0, f64::max);
        SpectralConstants::new(
            self.shards.len(),
            self.lambda,
            l_f,
            self.lambda / n,
            l_max,
            self.lambda,
            l_parts.iter().sum(),
        )
    }
}

/// Slack in `⟨∇f(x) − ∇f(y), x − y⟩ ≥ μL/(μ+L) ‖x − y‖² + 1/(μ+L) ‖∇f(x) − ∇f(y)‖²`
/// for the aggregate `f`; negative means the inequality is violated.
pub fn coercivity_margin(
    obj: &dyn LocalObjective,
    c: &SpectralConstants,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> f64 {
    let dg = obj.total_gradient(x) - obj.total_gradient(y);
    let dx = x - y;
    let (mu, l) = (c.mu_f, c.l_f);
    dg.dot(&dx) - mu * l / (mu + l) * dx.norm_squared() - dg.norm_squared() / (mu + l)
}

#[derive(Clone, Debug, Serialize)]
pub struct CoercivityReport {
    pub trials: usize,
    pub worst_margin: f64,
    pub pass: bool,
}

/// Check the strongly-convex/smooth coercivity inequality on `trials` seeded
/// random pairs with standard normal coordinates.
pub fn coercivity_check(
    obj: &dyn LocalObjective,
    c: &SpectralConstants,
    trials: usize,
    seed: u64,
) -> CoercivityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = obj.dim();
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let x = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let y = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        worst = worst.min(coercivity_margin(obj, c, &x, &y));
    }
    CoercivityReport {
        trials,
        worst_margin: worst,
        pass: worst >= -1e-9,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;

    fn e1(d: usize) -> DVector<f64> {
        let mut v = DVector::zeros(d);
        v[0] = 1.0;
        v
    }

    pub(crate) fn random_logistic(seed: u64, n: usize, per: usize, raw_d: usize, lambda: f64) -> LogisticObjective {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shards = (0..n)
            .map(|_| Samples {
                features: DMatrix::from_fn(per, raw_d, |_, _| StandardNormal.sample(&mut rng)),
                labels: (0..per).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect(),
            })
            .collect();
        LogisticObjective::new(shards, lambda, LabelSet::ZeroOne).unwrap()
    }

    /// Central differences, step `h`, coordinate by coordinate.
    fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
        DVector::from_fn(x.len(), |k, _| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
    }

    #[test]
    fn logistic_value_at_zero_is_log_two() {
        let obj = random_logistic(1, 4, 7, 3, 0.0);
        assert_abs_diff_eq!(obj.total_value(&DVector::zeros(4)), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn logistic_single_sample_gradient() {
        // Raw feature 1 plus the bias column gives ã = [1, 1]; with a zero raw
        // feature the augmented vector is e₂. Use a raw zero-dimensional sample
        // so that ã = e₁ exactly.
        let s = Samples {
            features: DMatrix::zeros(1, 0),
            labels: vec![1.0],
        };
        let obj = LogisticObjective::new(vec![s], 0.0, LabelSet::PlusMinusOne).unwrap();
        assert_eq!(obj.dim(), 1);
        let g = obj.gradient(0, &DVector::zeros(1));
        assert_abs_diff_eq!(g, e1(1) * -0.5, epsilon = 1e-15);
    }

    #[test]
    fn logistic_gradient_matches_finite_differences() {
        let obj = random_logistic(2, 3, 10, 4, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let x = DVector::from_fn(obj.dim(), |_, _| rng.random_range(-2.0..2.0));
            for i in 0..obj.n() {
                let g = obj.gradient(i, &x);
                let fd = fd_gradient(|z| obj.value(i, z), &x, 1e-6);
                assert!((&g - &fd).norm() / (1.0 + g.norm()) <= 1e-6, "{g} vs {fd}");
            }
        }
    }

    #[test]
    fn logistic_rejects_bad_inputs() {
        let ok = Samples {
            features: DMatrix::zeros(2, 3),
            labels: vec![0.0, 1.0],
        };
        assert!(LogisticObjective::new(vec![ok.clone()], -1.0, LabelSet::ZeroOne).is_err());
        assert!(LogisticObjective::new(vec![ok.clone()], 0.1, LabelSet::PlusMinusOne).is_err());
        let bad = Samples {
            features: DMatrix::zeros(0, 3),
            labels: vec![],
        };
        assert!(LogisticObjective::new(vec![ok.clone(), bad], 0.1, LabelSet::ZeroOne).is_err());
        let wide = Samples {
            features: DMatrix::zeros(2, 4),
            labels: vec![0.0, 1.0],
        };
        assert!(LogisticObjective::new(vec![ok, wide], 0.1, LabelSet::ZeroOne).is_err());
    }

    #[test]
    fn quadratic_constants_and_gradient() {
        let q = QuadraticFamily::new(4, 1.0).unwrap();
        let c = q.constants().unwrap();
        assert_eq!((c.mu_f, c.l_f, c.mu_min, c.l_max), (2.0, 2.0, 0.25, 1.25));
        assert_eq!((c.l_sum, c.mu_sum), (5.0, 1.0));
        assert_eq!(c.kappa_f(), 1.0);

        let q2 = QuadraticFamily::new(2, 2.0).unwrap();
        assert_eq!(q2.gradient(0, &e1(2)), e1(2) * 2.0);
        assert!(QuadraticFamily::new(3, 0.0).is_err());
        assert!(QuadraticFamily::with_dim(3, 1.0, 2).is_err());
    }

    #[test]
    fn quadratic_aggregate_is_scaled_norm() {
        let q = QuadraticFamily::new(5, 0.3).unwrap();
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0, 0.0]);
        assert_relative_eq!(q.total_value(&x), 0.5 * 1.3 * x.norm_squared(), max_relative = 1e-14);
        assert_relative_eq!(q.total_gradient(&x), x.clone() * 1.3, max_relative = 1e-14);
    }

    #[test]
    fn quadratic_gradient_matches_finite_differences() {
        let q = QuadraticFamily::with_dim(3, 0.7, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let x = DVector::from_fn(5, |_, _| rng.random_range(-3.0..3.0));
            for i in 0..3 {
                let g = q.gradient(i, &x);
                let fd = fd_gradient(|z| q.value(i, z), &x, 1e-6);
                assert!((&g - &fd).norm() / (1.0 + g.norm()) <= 1e-6);
            }
        }
    }

    #[test]
    fn logistic_constants_single_sample() {
        let s = Samples {
            features: DMatrix::zeros(1, 0),
            labels: vec![1.0],
        };
        let obj = LogisticObjective::new(vec![s], 0.1, LabelSet::PlusMinusOne).unwrap();
        let c = estimate_constants(&obj).unwrap();
        assert_relative_eq!(c.l_f, 0.35, max_relative = 1e-12);
        assert_eq!(c.mu_f, 0.1);
        let zero = LogisticObjective::new(
            vec![Samples {
                features: DMatrix::zeros(1, 0),
                labels: vec![1.0],
            }],
            0.0,
            LabelSet::PlusMinusOne,
        )
        .unwrap();
        assert!(estimate_constants(&zero).is_err());
    }

    #[test]
    fn logistic_constants_match_dense_eigen() {
        // 50 samples × 5 raw features over 5 agents.
        let obj = random_logistic(11, 5, 10, 5, 0.01);
        let c = obj.constants().unwrap();
        let mut rows = Vec::new();
        for s in &obj.shards {
            rows.push(s.a.clone());
        }
        let mut full = DMatrix::zeros(50, 6);
        for (b, a) in rows.iter().enumerate() {
            full.rows_mut(b * 10, 10).copy_from(a);
        }
        let gram = full.tr_mul(&full);
        let top = gram.symmetric_eigen().eigenvalues.max();
        assert_abs_diff_eq!(c.l_f, 0.01 + top / 200.0, epsilon = 1e-6);
        for (s, _) in obj.shards.iter().zip(0..) {
            let local = s.a.tr_mul(&s.a).symmetric_eigen().eigenvalues.max();
            assert!(c.l_max + 1e-9 >= 0.01 / 5.0 + local / 200.0);
        }
        assert!(c.mu_min <= c.l_max && c.kappa_f() >= 1.0);
    }

    #[test]
    fn coercivity_quadratic_tight_and_logistic_pass() {
        let q = QuadraticFamily::new(3, 1.0).unwrap();
        let c = q.constants().unwrap();
        let r = coercivity_check(&q, &c, 100, 1);
        assert!(r.pass);
        assert!(r.worst_margin.abs() < 1e-9, "identity case should be tight");
        let x = DVector::from_vec(vec![0.3, -0.2, 1.0]);
        assert_eq!(coercivity_margin(&q, &c, &x, &x), 0.0);

        let obj = random_logistic(5, 4, 8, 3, 0.1);
        let c = obj.constants().unwrap();
        let r = coercivity_check(&obj, &c, 100, 2);
        assert!(r.pass, "worst margin {}", r.worst_margin);
    }

    #[test]
    fn consensual_sums_and_projected_gradient() {
        let obj = random_logistic(6, 4, 5, 2, 0.2);
        let x = DVector::from_vec(vec![0.4, -0.7, 0.1]);
        let xm = crate::consensus::ParameterMatrix::replicate(&x, 4);
        assert_abs_diff_eq!(obj.stacked_value(xm.as_matrix()), obj.total_value(&x), epsilon = 1e-12);
        let g = obj.stacked_gradient(xm.as_matrix());
        let pg = crate::consensus::project_matrix(&g);
        let target = obj.total_gradient(&x) / 4.0;
        for col in pg.column_iter() {
            assert_abs_diff_eq!(col.into_owned(), target, epsilon = 1e-10);
        }
    }

    #[test]
    fn restricted_conditioning_on_consensus() {
        let (n, alpha) = (6, 0.4);
        let q = QuadraticFamily::new(n, alpha).unwrap();
        let c = q.constants().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let (xm, ym) = (
                crate::consensus::ParameterMatrix::replicate(&x, n),
                crate::consensus::ParameterMatrix::replicate(&y, n),
            );
            let diff = ym.as_matrix() - xm.as_matrix();
            let lin = q.stacked_value(xm.as_matrix())
                + q.stacked_gradient(xm.as_matrix()).dot(&diff);
            let fy = q.stacked_value(ym.as_matrix());
            let sq = diff.norm_squared();
            let nf = n as f64;
            assert!(fy >= lin + c.mu_f / (2.0 * nf) * sq - 1e-12);
            assert!(fy <= lin + c.l_f / (2.0 * nf) * sq + 1e-12);
        }
    }

    #[test]
    fn remark_ratios() {
        for (n, alpha) in [(4usize, 1.0f64), (10, 0.1), (100, 0.01)] {
            let c = QuadraticFamily::new(n, alpha).unwrap().constants().unwrap();
            let nf = n as f64;
            assert_relative_eq!(c.l_sum / c.l_f, (nf + alpha) / (1.0 + alpha), max_relative = 1e-14);
            assert_relative_eq!(c.mu_f / c.mu_sum, (1.0 + alpha) / alpha, max_relative = 1e-14);
        }
    }
}
