//! Closed forms for the two-task diagonal example: one SGD step on
//! `½θ₁² + ½θ₂²` with per-coordinate noise of variance `σ_k²` on task k's
//! samples.

/// Expected loss after one step with `b1` samples of task 1 and `b2` of task 2.
pub fn example1_expected_loss(
    theta1: f64,
    theta2: f64,
    b1: usize,
    b2: usize,
    eta: f64,
    sigma1_sq: f64,
    sigma2_sq: f64,
) -> f64 {
    let b = (b1 + b2) as f64;
    relaxed_expected_loss(theta1, theta2, b1 as f64 / b, b, eta, sigma1_sq, sigma2_sq)
}

/// Same with real-valued counts `b1 = w1·b`.
pub fn relaxed_expected_loss(
    theta1: f64,
    theta2: f64,
    w1: f64,
    b: f64,
    eta: f64,
    sigma1_sq: f64,
    sigma2_sq: f64,
) -> f64 {
    let w2 = 1.0 - w1;
    0.5 * (1.0 - eta * w1).powi(2) * theta1 * theta1
        + 0.5 * (1.0 - eta * w2).powi(2) * theta2 * theta2
        + eta * eta * (w1 * sigma1_sq + w2 * sigma2_sq) / b
}

/// Minimizer over `w1 ∈ [0,1]` of [`relaxed_expected_loss`]; 0.5 at `θ = 0`.
pub fn example1_optimal_w(
    theta1: f64,
    theta2: f64,
    sigma1_sq: f64,
    sigma2_sq: f64,
    eta: f64,
    b: usize,
) -> f64 {
    let (t1, t2) = (theta1 * theta1, theta2 * theta2);
    if t1 + t2 == 0.0 {
        return 0.5;
    }
    let raw = ((sigma2_sq - sigma1_sq) / b as f64 + (t1 - t2) / eta + t2) / (t1 + t2);
    raw.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn grid_argmin(f: impl Fn(f64) -> f64, steps: usize) -> f64 {
        (0..=steps)
            .map(|i| i as f64 / steps as f64)
            .min_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap())
            .unwrap()
    }

    #[test]
    fn optimal_w_examples() {
        assert_eq!(example1_optimal_w(1.0, 1.0, 2.0, 2.0, 0.3, 7), 0.5);
        assert_eq!(example1_optimal_w(2.0, 0.0, 1.0, 1.0, 1.0, 4), 1.0);
        assert_eq!(example1_optimal_w(1.0, 1.0, 1e6, 0.0, 0.1, 1), 0.0);
        assert_eq!(example1_optimal_w(0.0, 0.0, 1.0, 3.0, 0.1, 1), 0.5);
        let g = grid_argmin(|w| relaxed_expected_loss(2.0, 0.0, w, 4.0, 1.0, 1.0, 1.0), 100_000);
        assert!((g - 1.0).abs() <= 1e-5);
    }

    #[test]
    fn expected_loss_examples() {
        assert_eq!(example1_expected_loss(1.5, -2.0, 3, 1, 0.0, 9.0, 9.0), 0.5 * 2.25 + 2.0);
        assert_eq!(example1_expected_loss(1.0, 1.0, 1, 1, 1.0, 0.0, 0.0), 0.25);
    }

    #[test]
    fn optimal_w_matches_numeric_minimizer() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let t1 = r.random_range(0.2..2.0);
            let t2 = -r.random_range(0.2..2.0);
            let s1 = r.random_range(0.0..5.0);
            let s2 = r.random_range(0.0..5.0);
            let eta = r.random_range(0.05..1.0);
            let b = r.random_range(1..64usize);
            let f = |w| relaxed_expected_loss(t1, t2, w, b as f64, eta, s1, s2);
            let g = grid_argmin(f, 200_000);
            let w = example1_optimal_w(t1, t2, s1, s2, eta, b);
            assert!((w - g).abs() <= 1e-4, "{w} vs {g}");
        }
    }
}
