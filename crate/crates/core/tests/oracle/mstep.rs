//! Numerical maximizer of the expected complete-data log-likelihood in the
//! transition parameters `(a, c, b)`, with the process noise held fixed.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

/// Posterior moments of one transition `x_{j−1} → x_j`, with its weight.
pub struct TransitionMoments {
    pub weight: f64,
    pub mean_prev: Vector2<f64>,
    pub mean_next: Vector2<f64>,
    /// `E[x_{j−1} x_{j−1}ᵀ]`
    pub prev_prev: Matrix2<f64>,
    /// `E[x_j x_jᵀ]`
    pub next_next: Matrix2<f64>,
    /// `E[x_j x_{j−1}ᵀ]`
    pub next_prev: Matrix2<f64>,
}

fn similarity(a: f64, c: f64) -> Matrix2<f64> {
    Matrix2::new(a, -c, c, a)
}

/// `Σ w E[(x_j − A x_{j−1} − b)ᵀ W (x_j − A x_{j−1} − b)]`. Smaller is better.
pub fn objective(terms: &[TransitionMoments], w: &Matrix2<f64>, theta: &Vector4<f64>) -> f64 {
    let a = similarity(theta[0], theta[1]);
    let b = Vector2::new(theta[2], theta[3]);
    terms
        .iter()
        .map(|t| {
            let e = t.next_next - t.next_prev * a.transpose() - a * t.next_prev.transpose() + a * t.prev_prev * a.transpose()
                - t.mean_next * b.transpose()
                - b * t.mean_next.transpose()
                + a * t.mean_prev * b.transpose()
                + b * t.mean_prev.transpose() * a.transpose()
                + b * b.transpose();
            t.weight * (w * e).trace()
        })
        .sum()
}

/// Finite-difference Newton steps followed by a shrinking compass search.
pub fn minimize(terms: &[TransitionMoments], w: &Matrix2<f64>, start: Vector4<f64>) -> Vector4<f64> {
    let f = |th: &Vector4<f64>| objective(terms, w, th);
    let mut theta = start;
    let h = 1e-3;
    for _ in 0..4 {
        let mut grad = Vector4::zeros();
        let mut hess = Matrix4::zeros();
        for i in 0..4 {
            let ei = Vector4::ith(i, h);
            grad[i] = (f(&(theta + ei)) - f(&(theta - ei))) / (2.0 * h);
            for j in 0..4 {
                let ej = Vector4::ith(j, h);
                hess[(i, j)] = (f(&(theta + ei + ej)) - f(&(theta + ei - ej)) - f(&(theta - ei + ej)) + f(&(theta - ei - ej))) / (4.0 * h * h);
            }
        }
        match hess.try_inverse() {
            Some(inv) => theta -= inv * grad,
            None => break,
        }
    }
    let mut step = 1e-4;
    let mut best = f(&theta);
    while step > 1e-12 {
        let mut moved = false;
        for i in 0..4 {
            for sign in [1.0, -1.0] {
                let cand = theta + Vector4::ith(i, sign * step);
                let v = f(&cand);
                if v < best {
                    best = v;
                    theta = cand;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    theta
}
