//! Dense joint-Gaussian construction of the padded state-space model.
//!
//! States are stacked `X = (x_0, …, x_{L−1})` with `x_0 ~ N(μs, Φs)` and
//! `x_j = A x_{j−1} + b + w_j`. Measurements `z = H X + v` collect the observed
//! slots and, optionally, the end belief as a pseudo-observation of the last
//! state.

use agentseg::kalman::{BeliefParams, DynamicsParams};
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

pub struct StatePrior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

fn put2(m: &mut DMatrix<f64>, r: usize, c: usize, b: &Matrix2<f64>) {
    m.view_mut((2 * r, 2 * c), (2, 2)).copy_from(b);
}

fn get2(m: &DMatrix<f64>, r: usize, c: usize) -> Matrix2<f64> {
    m.fixed_view::<2, 2>(2 * r, 2 * c).into_owned()
}

pub fn state_prior(d: &DynamicsParams, b: &BeliefParams, len: usize) -> StatePrior {
    let a = d.transition;
    let mut mean = DVector::zeros(2 * len);
    let mut cov = DMatrix::zeros(2 * len, 2 * len);
    let mut m = b.start_mean;
    mean.fixed_rows_mut::<2>(0).copy_from(&m);
    put2(&mut cov, 0, 0, &b.start_cov);
    for j in 1..len {
        m = a * m + d.offset;
        mean.fixed_rows_mut::<2>(2 * j).copy_from(&m);
        for k in 0..j {
            let c = a * get2(&cov, j - 1, k);
            put2(&mut cov, j, k, &c);
            put2(&mut cov, k, j, &c.transpose());
        }
        let diag = a * get2(&cov, j - 1, j - 1) * a.transpose() + d.process_cov;
        put2(&mut cov, j, j, &diag);
    }
    StatePrior { mean, cov }
}

pub struct Measurement {
    pub z: DVector<f64>,
    pub h: DMatrix<f64>,
    pub noise: DMatrix<f64>,
}

/// `obs[t−1]` sits in slot `pre + t`; `None` is a missing observation.
pub fn measurement(obs: &[Option<Vector2<f64>>], d: &DynamicsParams, b: &BeliefParams, pre: usize, post: usize, with_end: bool) -> Measurement {
    let len = obs.len() + pre + post + 1;
    let mut rows: Vec<(usize, Vector2<f64>, Matrix2<f64>)> = Vec::new();
    for (i, y) in obs.iter().enumerate() {
        if let Some(y) = y {
            rows.push((pre + i + 1, *y, d.obs_cov));
        }
    }
    if with_end {
        rows.push((len - 1, b.end_mean, b.end_cov));
    }
    let n = rows.len();
    let mut z = DVector::zeros(2 * n);
    let mut h = DMatrix::zeros(2 * n, 2 * len);
    let mut noise = DMatrix::zeros(2 * n, 2 * n);
    for (r, (slot, y, cov)) in rows.iter().enumerate() {
        z.fixed_rows_mut::<2>(2 * r).copy_from(y);
        put2(&mut h, r, *slot, &Matrix2::identity());
        put2(&mut noise, r, r, cov);
    }
    Measurement { z, h, noise }
}

pub fn log_density(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let n = x.len() as f64;
    let chol = cov.clone().cholesky().expect("covariance not positive definite");
    let r = x - mean;
    let sol = chol.solve(&r);
    let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + logdet + r.dot(&sol))
}

/// `log p(z)` of the measured quantities.
pub fn loglik(obs: &[Option<Vector2<f64>>], d: &DynamicsParams, b: &BeliefParams, pre: usize, post: usize, with_end: bool) -> f64 {
    let len = obs.len() + pre + post + 1;
    let prior = state_prior(d, b, len);
    let m = measurement(obs, d, b, pre, post, with_end);
    if m.z.is_empty() {
        return 0.0;
    }
    let mean = &m.h * &prior.mean;
    let cov = &m.h * &prior.cov * m.h.transpose() + &m.noise;
    log_density(&m.z, &mean, &cov)
}

pub struct Posterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Posterior {
    pub fn mean2(&self, j: usize) -> Vector2<f64> {
        self.mean.fixed_rows::<2>(2 * j).into_owned()
    }

    pub fn cov2(&self, j: usize, k: usize) -> Matrix2<f64> {
        get2(&self.cov, j, k)
    }

    /// `E[x_j x_kᵀ]`.
    pub fn moment(&self, j: usize, k: usize) -> Matrix2<f64> {
        self.cov2(j, k) + self.mean2(j) * self.mean2(k).transpose()
    }
}

/// Conditional distribution of all padded states given the measurements.
pub fn posterior(obs: &[Option<Vector2<f64>>], d: &DynamicsParams, b: &BeliefParams, pre: usize, post: usize, with_end: bool) -> Posterior {
    let len = obs.len() + pre + post + 1;
    let prior = state_prior(d, b, len);
    let m = measurement(obs, d, b, pre, post, with_end);
    let s = &m.h * &prior.cov * m.h.transpose() + &m.noise;
    let s_inv = s.cholesky().expect("innovation covariance").inverse();
    let gain = &prior.cov * m.h.transpose() * s_inv;
    let mean = &prior.mean + &gain * (&m.z - &m.h * &prior.mean);
    let cov = &prior.cov - &gain * &m.h * &prior.cov;
    let cov = (&cov + cov.transpose()) * 0.5;
    Posterior { mean, cov }
}
