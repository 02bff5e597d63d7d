//! Synthetic task families with closed-form expected losses and gradients.
//!
//! Both families share the per-sample loss
//! `ℓ(θ; x) = q(θ) + xᵀθ` with `x ~ N(0, (σ²/d) I)`, so the per-sample
//! gradient is `∇q(θ) + x`, the noise has total variance `σ²`, and the
//! expected loss is `q(θ)`.
//!
//! * [`AxisQuadraticParams`]: `q(θ) = (L/2) θ_a²` for a single axis `a`.
//! * [`RandomQuadraticParams`]: `q(θ) = ½ (θ - c)ᵀ H (θ - c)` with `H ⪰ 0`,
//!   `‖H‖ ≤ L`.

use crate::error::{PikeError, Result};
use crate::rng::StreamRng;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, PartialEq)]
pub struct AxisQuadraticParams {
    pub axis_index: usize,
    pub smoothness: f64,
    pub sigma_sq: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomQuadraticParams {
    pub hessian: DMatrix<f64>,
    pub center: Vec<f64>,
    pub sigma_sq: f64,
    /// Declared bound on the spectral norm of `hessian`.
    pub smoothness: f64,
}

impl RandomQuadraticParams {
    /// `H = Q Λ Qᵀ` with a Haar-ish orthogonal `Q` and eigenvalues uniform in `[0, L]`.
    pub fn generate(
        dim: usize,
        smoothness: f64,
        sigma_sq: f64,
        center_scale: f64,
        rng: &mut StreamRng,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(PikeError::invalid("random quadratic needs dim >= 1"));
        }
        let gauss = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
        let q = gauss.qr().q();
        let eig = DVector::<f64>::from_fn(dim, |_, _| rng.random_range(0.0..=smoothness));
        let hessian = &q * DMatrix::from_diagonal(&eig) * q.transpose();
        let hessian = (&hessian + hessian.transpose()) * 0.5;
        let center = (0..dim)
            .map(|_| center_scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let p = RandomQuadraticParams {
            hessian,
            center,
            sigma_sq,
            smoothness,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.center.len();
        if d == 0 || self.hessian.nrows() != d || self.hessian.ncols() != d {
            return Err(PikeError::invalid("hessian must be d x d with d = center length"));
        }
        if !(self.smoothness > 0.0) || !(self.sigma_sq >= 0.0) {
            return Err(PikeError::invalid("random quadratic needs L > 0 and sigma_sq >= 0"));
        }
        let scale = self.hessian.amax().max(1.0);
        for i in 0..d {
            for j in 0..i {
                if (self.hessian[(i, j)] - self.hessian[(j, i)]).abs() > 1e-12 * scale {
                    return Err(PikeError::invalid("hessian is not symmetric"));
                }
            }
        }
        let eig = SymmetricEigen::new(self.hessian.clone()).eigenvalues;
        let tol = 1e-10 * scale;
        if eig.min() < -tol {
            return Err(PikeError::invalid("hessian is not positive semidefinite"));
        }
        if eig.max() > self.smoothness + tol {
            return Err(PikeError::invalid(format!(
                "hessian spectral norm {} exceeds declared L = {}",
                eig.max(),
                self.smoothness
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskSpec {
    AxisQuadratic(AxisQuadraticParams),
    RandomQuadratic(RandomQuadraticParams),
}

/// One draw: per-sample gradient and loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub grad: Vec<f64>,
    pub loss: f64,
}

impl TaskSpec {
    pub fn axis(axis_index: usize, smoothness: f64, sigma_sq: f64, dim: usize) -> Result<Self> {
        if axis_index >= dim {
            return Err(PikeError::invalid(format!(
                "axis {axis_index} out of range for dim {dim}"
            )));
        }
        if !(smoothness > 0.0) || !(sigma_sq >= 0.0) || !sigma_sq.is_finite() {
            return Err(PikeError::invalid("axis quadratic needs L > 0 and finite sigma_sq >= 0"));
        }
        Ok(TaskSpec::AxisQuadratic(AxisQuadraticParams {
            axis_index,
            smoothness,
            sigma_sq,
            dim,
        }))
    }

    pub fn random(params: RandomQuadraticParams) -> Result<Self> {
        params.validate()?;
        Ok(TaskSpec::RandomQuadratic(params))
    }

    pub fn dim(&self) -> usize {
        match self {
            TaskSpec::AxisQuadratic(p) => p.dim,
            TaskSpec::RandomQuadratic(p) => p.center.len(),
        }
    }

    pub fn smoothness(&self) -> f64 {
        match self {
            TaskSpec::AxisQuadratic(p) => p.smoothness,
            TaskSpec::RandomQuadratic(p) => p.smoothness,
        }
    }

    /// Total noise variance `E‖∇ℓ - ∇L‖²`.
    pub fn exact_sigma_sq(&self) -> f64 {
        match self {
            TaskSpec::AxisQuadratic(p) => p.sigma_sq,
            TaskSpec::RandomQuadratic(p) => p.sigma_sq,
        }
    }

    fn check_dim(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(PikeError::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    pub fn exact_expected_loss(&self, theta: &[f64]) -> Result<f64> {
        self.check_dim(theta)?;
        Ok(self.loss_unchecked(theta))
    }

    pub fn exact_grad(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(theta)?;
        let mut g = vec![0.0; theta.len()];
        self.grad_into(theta, &mut g);
        Ok(g)
    }

    pub(crate) fn loss_unchecked(&self, theta: &[f64]) -> f64 {
        match self {
            TaskSpec::AxisQuadratic(p) => {
                let x = theta[p.axis_index];
                0.5 * p.smoothness * x * x
            }
            TaskSpec::RandomQuadratic(p) => {
                let d = p.center.len();
                let mut acc = 0.0;
                for i in 0..d {
                    let di = theta[i] - p.center[i];
                    let mut row = 0.0;
                    for (j, (t, c)) in theta.iter().zip(&p.center).enumerate() {
                        row += p.hessian[(i, j)] * (t - c);
                    }
                    acc += di * row;
                }
                0.5 * acc
            }
        }
    }

    pub(crate) fn grad_into(&self, theta: &[f64], out: &mut [f64]) {
        match self {
            TaskSpec::AxisQuadratic(p) => {
                out.iter_mut().for_each(|g| *g = 0.0);
                out[p.axis_index] = p.smoothness * theta[p.axis_index];
            }
            TaskSpec::RandomQuadratic(p) => {
                let d = p.center.len();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..d)
                        .map(|j| p.hessian[(i, j)] * (theta[j] - p.center[j]))
                        .sum();
                }
            }
        }
    }

    /// Draws `count` samples, calling `f(grad, loss)` for each in order.
    pub fn for_each_sample<F>(
        &self,
        theta: &[f64],
        count: usize,
        rng: &mut StreamRng,
        mut f: F,
    ) -> Result<()>
    where
        F: FnMut(&[f64], f64),
    {
        self.check_dim(theta)?;
        let d = theta.len();
        let mut base = vec![0.0; d];
        self.grad_into(theta, &mut base);
        let base_loss = self.loss_unchecked(theta);
        let noise_sd = (self.exact_sigma_sq() / d as f64).sqrt();
        let mut grad = vec![0.0; d];
        for _ in 0..count {
            let mut inner = 0.0;
            for i in 0..d {
                let x = noise_sd * rng.sample::<f64, _>(StandardNormal);
                grad[i] = base[i] + x;
                inner += x * theta[i];
            }
            f(&grad, base_loss + inner);
        }
        Ok(())
    }

    pub fn sample_batch(
        &self,
        theta: &[f64],
        count: usize,
        rng: &mut StreamRng,
    ) -> Result<Vec<Sample>> {
        if count == 0 {
            return Err(PikeError::invalid("sample_batch needs count >= 1"));
        }
        let mut out = Vec::with_capacity(count);
        self.for_each_sample(theta, count, rng, |g, l| {
            out.push(Sample {
                grad: g.to_vec(),
                loss: l,
            })
        })?;
        Ok(out)
    }

    /// Adds the sum of `count` per-sample gradients to `grad_sum` and returns
    /// the summed per-sample loss. Consumes the stream exactly like
    /// [`TaskSpec::sample_batch`].
    pub fn accumulate_batch(
        &self,
        theta: &[f64],
        count: usize,
        rng: &mut StreamRng,
        grad_sum: &mut [f64],
    ) -> Result<f64> {
        if grad_sum.len() != theta.len() {
            return Err(PikeError::DimensionMismatch {
                expected: theta.len(),
                got: grad_sum.len(),
            });
        }
        let mut loss = 0.0;
        self.for_each_sample(theta, count, rng, |g, l| {
            for (acc, gi) in grad_sum.iter_mut().zip(g) {
                *acc += gi;
            }
            loss += l;
        })?;
        Ok(loss)
    }

    /// Hessian as a dense matrix.
    pub fn hessian(&self) -> DMatrix<f64> {
        match self {
            TaskSpec::AxisQuadratic(p) => {
                let mut h = DMatrix::zeros(p.dim, p.dim);
                h[(p.axis_index, p.axis_index)] = p.smoothness;
                h
            }
            TaskSpec::RandomQuadratic(p) => p.hessian.clone(),
        }
    }
}

/// Smoothness constant of the summed objective `Σ_k L_k`: the larger of the
/// per-task bounds and the top eigenvalue of `Σ_k H_k`.
pub fn total_smoothness(tasks: &[TaskSpec]) -> f64 {
    let per_task = tasks.iter().map(|t| t.smoothness()).fold(0.0, f64::max);
    let Some(first) = tasks.first() else {
        return 0.0;
    };
    let d = first.dim();
    let mut h = DMatrix::<f64>::zeros(d, d);
    for t in tasks {
        h += t.hessian();
    }
    let top = SymmetricEigen::new(h).eigenvalues.max();
    per_task.max(top)
}

/// Sum of exact expected losses.
pub fn total_loss(tasks: &[TaskSpec], theta: &[f64]) -> Result<f64> {
    tasks.iter().map(|t| t.exact_expected_loss(theta)).sum()
}
