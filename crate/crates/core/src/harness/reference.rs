//! Centralized reference solutions `x*`, `f*`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::objectives::{LocalObjective, SpectralConstants};

pub const DEFAULT_REFERENCE_TOL: f64 = 1e-12;
pub const REFERENCE_MAX_ITERS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: DVector<f64>,
    pub f_star: f64,
    /// `‖∇F(X*)‖_F = √(Σ_i ‖∇f_i(x*)‖²)`.
    pub grad_norm_at_star: f64,
}

impl ReferenceSolution {
    pub fn at(obj: &dyn LocalObjective, x_star: DVector<f64>) -> Self {
        let grad_norm_at_star = (0..obj.n())
            .map(|i| obj.gradient(i, &x_star).norm_squared())
            .sum::<f64>()
            .sqrt();
        ReferenceSolution {
            f_star: obj.total_value(&x_star),
            grad_norm_at_star,
            x_star,
        }
    }
}

/// Minimize `f = Σ f_i` to `‖∇f(x)‖ ≤ tol (1 + ‖x‖)`.
///
/// Objectives with a closed-form minimizer skip the iteration. Otherwise this
/// runs Nesterov's method with step `1/L_f`, momentum from `κ_f`, and a
/// gradient-based restart.
pub fn solve_reference(
    obj: &dyn LocalObjective,
    c: &SpectralConstants,
    tol: f64,
) -> Result<ReferenceSolution> {
    solve_reference_capped(obj, c, tol, REFERENCE_MAX_ITERS)
}

pub fn solve_reference_capped(
    obj: &dyn LocalObjective,
    c: &SpectralConstants,
    tol: f64,
    max_iters: usize,
) -> Result<ReferenceSolution> {
    if let Some(x) = obj.known_minimizer() {
        return Ok(ReferenceSolution::at(obj, x));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let step = 1.0 / c.l_f;
    let q = (c.mu_f / c.l_f).sqrt();
    let beta = (1.0 - q) / (1.0 + q);
    let mut x = DVector::zeros(obj.dim());
    let mut y = x.clone();
    let mut grad_norm = f64::INFINITY;
    for _ in 0..max_iters {
        let gx = obj.total_gradient(&x);
        grad_norm = gx.norm();
        if grad_norm <= tol * (1.0 + x.norm()) {
            return Ok(ReferenceSolution::at(obj, x));
        }
        let gy = obj.total_gradient(&y);
        let next = &y - gy * step;
        let moved = &next - &x;
        // Restart when the momentum direction points uphill.
        y = if gx.dot(&moved) > 0.0 {
            next.clone()
        } else {
            &next + &moved * beta
        };
        x = next;
    }
    Err(Error::NoConvergence {
        tol,
        iters: max_iters,
        grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{LabelSet, LogisticObjective, QuadraticFamily, Samples};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    #[test]
    fn quadratic_family_is_exact() {
        let q = QuadraticFamily::new(7, 0.3).unwrap();
        let r = solve_reference(&q, &q.constants().unwrap(), DEFAULT_REFERENCE_TOL).unwrap();
        assert_eq!(r.x_star, DVector::zeros(7));
        assert_eq!(r.f_star, 0.0);
        assert_eq!(r.grad_norm_at_star, 0.0);
    }

    #[test]
    fn symmetric_toy_set_is_bias_only() {
        // (e₁, +1) and (−e₁, +1): the feature weight cancels, the bias does not.
        let shards = vec![
            Samples {
                features: DMatrix::from_row_slice(1, 1, &[1.0]),
                labels: vec![1.0],
            },
            Samples {
                features: DMatrix::from_row_slice(1, 1, &[-1.0]),
                labels: vec![1.0],
            },
        ];
        let lambda = 0.1;
        let obj = LogisticObjective::new(shards, lambda, LabelSet::PlusMinusOne).unwrap();
        let c = obj.constants().unwrap();
        let r = solve_reference(&obj, &c, DEFAULT_REFERENCE_TOL).unwrap();
        assert!(r.x_star[0].abs() < 1e-12);
        let b = r.x_star[1];
        assert!(b > 0.0);
        // Stationarity of the bias: −σ(−b) + λ b = 0.
        assert_abs_diff_eq!(1.0 / (1.0 + b.exp()), lambda * b, epsilon = 1e-12);
        assert!(obj.total_gradient(&r.x_star).norm() <= 1e-12 * (1.0 + r.x_star.norm()));
    }

    #[test]
    fn stacked_gradient_norm_recomputed() {
        let obj = crate::objectives::tests::random_logistic(4, 5, 12, 3, 0.05);
        let c = obj.constants().unwrap();
        let r = solve_reference(&obj, &c, DEFAULT_REFERENCE_TOL).unwrap();
        let stacked = crate::consensus::ParameterMatrix::replicate(&r.x_star, 5);
        let direct = obj.stacked_gradient(stacked.as_matrix()).norm();
        assert_abs_diff_eq!(r.grad_norm_at_star, direct, epsilon = 1e-14);
        assert!(r.grad_norm_at_star > 0.0);
        assert!(obj.total_gradient(&r.x_star).norm() <= 1e-10 * (1.0 + r.x_star.norm()));
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let obj = crate::objectives::tests::random_logistic(1, 2, 5, 2, 0.1);
        let mut c = obj.constants().unwrap();
        c.l_f *= 1e6;
        assert!(matches!(
            solve_reference_capped(&obj, &c, 1e-12, 50),
            Err(Error::NoConvergence { .. })
        ));
    }
}
