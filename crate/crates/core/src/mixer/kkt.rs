//! Exact minimization of the relaxed per-step bound over the simplex.
//!
//! The objective is separable: `Σ_k w_k λ_k + ½ w_k² κ_k`. Its KKT point is
//! `w_k = max(0, -(μ + λ_k)/κ_k)` with `μ` fixed by `Σ w = 1`.

use crate::error::{PikeError, Result};
use crate::types::{SimplexWeights, TaskGradStats};

pub const BISECTION_TOL: f64 = 1e-12;
pub const BISECTION_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct KktCoefficients {
    pub lambda: Vec<f64>,
    pub kappa: Vec<f64>,
    /// Dual variable of the sum constraint, set by [`solve_with_dual`].
    pub mu: Option<f64>,
}

impl KktCoefficients {
    pub fn new(lambda: Vec<f64>, kappa: Vec<f64>) -> Result<Self> {
        if lambda.len() != kappa.len() {
            return Err(PikeError::DimensionMismatch {
                expected: lambda.len(),
                got: kappa.len(),
            });
        }
        if lambda.iter().chain(&kappa).any(|x| !x.is_finite()) {
            return Err(PikeError::invalid("KKT coefficients must be finite"));
        }
        if kappa.iter().any(|&k| k < 0.0) {
            return Err(PikeError::invalid("kappa must be nonnegative"));
        }
        Ok(KktCoefficients {
            lambda,
            kappa,
            mu: None,
        })
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// `Σ_k w_k λ_k + ½ w_k² κ_k`.
    pub fn objective(&self, w: &[f64]) -> f64 {
        w.iter()
            .zip(&self.lambda)
            .zip(&self.kappa)
            .map(|((&w, &l), &k)| w * l + 0.5 * w * w * k)
            .sum()
    }
}

/// `λ_k = -ηβ‖∇L_k‖² + (Lη²/2b)σ_k²`, `κ_k = Lη²γ‖∇L_k‖²`.
pub fn kkt_coefficients(
    stats: &TaskGradStats,
    eta: f64,
    beta: f64,
    gamma: f64,
    smoothness: f64,
    b: usize,
) -> Result<KktCoefficients> {
    if !(eta > 0.0 && smoothness > 0.0 && b >= 1) {
        return Err(PikeError::invalid("kkt_coefficients needs eta > 0, L > 0, b >= 1"));
    }
    let b = b as f64;
    let lambda = stats
        .iter()
        .map(|s| -eta * beta * s.grad_norm_sq_hat + smoothness * eta * eta / (2.0 * b) * s.var_hat)
        .collect();
    let kappa = stats
        .iter()
        .map(|s| smoothness * eta * eta * gamma * s.grad_norm_sq_hat)
        .collect();
    KktCoefficients::new(lambda, kappa)
}

fn mass(mu: f64, idx: &[usize], c: &KktCoefficients) -> f64 {
    idx.iter()
        .map(|&k| (-(mu + c.lambda[k]) / c.kappa[k]).max(0.0))
        .sum()
}

/// Solves for `μ` with `Σ_{k∈idx} max(0, -(μ+λ_k)/κ_k) = 1`, all `κ_k > 0`.
fn solve_positive(c: &KktCoefficients, idx: &[usize]) -> f64 {
    let max_l = idx.iter().map(|&k| c.lambda[k]).fold(f64::NEG_INFINITY, f64::max);
    let min_l = idx.iter().map(|&k| c.lambda[k]).fold(f64::INFINITY, f64::min);
    let max_k = idx.iter().map(|&k| c.kappa[k]).fold(0.0, f64::max);
    let (mut lo, mut hi) = (-max_l - max_k, -min_l);
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..BISECTION_MAX_ITER {
        mu = 0.5 * (lo + hi);
        let s = mass(mu, idx, c);
        if (s - 1.0).abs() <= BISECTION_TOL {
            break;
        }
        if s > 1.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        if hi - lo <= f64::EPSILON * (lo.abs() + hi.abs()) {
            break;
        }
    }
    // Closed form on the active set recovers μ to full precision.
    let active: Vec<usize> = idx
        .iter()
        .copied()
        .filter(|&k| -(mu + c.lambda[k]) > 0.0)
        .collect();
    if !active.is_empty() {
        let inv: f64 = active.iter().map(|&k| 1.0 / c.kappa[k]).sum();
        let lk: f64 = active.iter().map(|&k| c.lambda[k] / c.kappa[k]).sum();
        let exact = -(1.0 + lk) / inv;
        if (mass(exact, idx, c) - 1.0).abs() <= (mass(mu, idx, c) - 1.0).abs() {
            mu = exact;
        }
    }
    mu
}

/// Minimizer of the relaxed objective and its dual variable.
pub fn solve_with_dual(c: &KktCoefficients) -> Result<(SimplexWeights, f64)> {
    let k = c.len();
    if k == 0 {
        return Err(PikeError::invalid("solve_simplex_qp needs K >= 1"));
    }
    if k == 1 {
        return Ok((SimplexWeights::uniform(1), -(c.lambda[0] + c.kappa[0])));
    }
    let pos: Vec<usize> = (0..k).filter(|&i| c.kappa[i] > 0.0).collect();
    let flat: Vec<usize> = (0..k).filter(|&i| c.kappa[i] == 0.0).collect();
    let mut w = vec![0.0; k];
    let mu;
    if flat.is_empty() {
        mu = solve_positive(c, &pos);
    } else {
        let min_flat = flat.iter().map(|&i| c.lambda[i]).fold(f64::INFINITY, f64::min);
        let mu0 = -min_flat;
        if !pos.is_empty() && mass(mu0, &pos, c) >= 1.0 {
            mu = solve_positive(c, &pos);
        } else {
            // linear tasks at the lowest λ take whatever the curved ones leave
            mu = mu0;
            let leftover = 1.0 - mass(mu0, &pos, c);
            let tol = 1e-12 * (1.0 + min_flat.abs());
            let ties: Vec<usize> = flat
                .iter()
                .copied()
                .filter(|&i| c.lambda[i] - min_flat <= tol)
                .collect();
            for &i in &ties {
                w[i] = leftover / ties.len() as f64;
            }
        }
    }
    for &i in &pos {
        w[i] = (-(mu + c.lambda[i]) / c.kappa[i]).max(0.0);
    }
    let w = SimplexWeights::normalized(w)?;
    Ok((w, mu))
}

pub fn solve_simplex_qp(c: &KktCoefficients) -> Result<SimplexWeights> {
    solve_with_dual(c).map(|(w, _)| w)
}
