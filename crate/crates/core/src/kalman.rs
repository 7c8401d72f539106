//! Kalman filter and fixed-interval smoother for one agent's linear dynamical
//! system, with unobserved padding states before the first and after the last
//! observation.
//!
//! Padded indices run from `-t_s` to `τ + t_e`. The state at `-t_s` is drawn
//! from the start belief, observations update indices `1..=τ` only, and the
//! end belief enters as one extra Gaussian factor on the final padded state.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::linalg::{is_spd, log_normal, symmetrize};
use crate::traj::Trajectory;

/// `x_t = A x_{t-1} + b + w`, `w ~ N(0, Q)`; `y_t = x_t + v`, `v ~ N(0, R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsParams {
    pub transition: Matrix2<f64>,
    pub offset: Vector2<f64>,
    pub process_cov: Matrix2<f64>,
    pub obs_cov: Matrix2<f64>,
}

impl DynamicsParams {
    /// Similarity transform `[[a, -c], [c, a]]`.
    pub fn similarity(a: f64, c: f64) -> Matrix2<f64> {
        Matrix2::new(a, -c, c, a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.transition.iter().chain(self.offset.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite dynamics".into()));
        }
        if !is_spd(&self.process_cov) {
            return Err(Error::NotSpd("process covariance Q"));
        }
        if !is_spd(&self.obs_cov) {
            return Err(Error::NotSpd("observation covariance R"));
        }
        Ok(())
    }
}

/// Gaussian beliefs over where a trajectory starts and where it is heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefParams {
    pub start_mean: Vector2<f64>,
    pub start_cov: Matrix2<f64>,
    pub end_mean: Vector2<f64>,
    pub end_cov: Matrix2<f64>,
}

impl BeliefParams {
    pub fn validate(&self) -> Result<()> {
        if !is_spd(&self.start_cov) {
            return Err(Error::NotSpd("start belief covariance"));
        }
        if !is_spd(&self.end_cov) {
            return Err(Error::NotSpd("end belief covariance"));
        }
        Ok(())
    }
}

/// Output of one filter/smoother pass for a fixed padding `(t_s, t_e)`.
#[derive(Debug, Clone)]
pub struct PaddedRun {
    pub pre_pad: usize,
    pub post_pad: usize,
    /// `log p(y_1..y_τ)`.
    pub obs_loglik: f64,
    /// `log ∫ p(x_last | y) N(x_last; μe, Φe) dx_last`.
    pub end_loglik: f64,
    /// `obs_loglik + end_loglik`.
    pub loglik: f64,
    pub filtered_means: Vec<Vector2<f64>>,
    pub filtered_covs: Vec<Matrix2<f64>>,
    pub smoothed_means: Vec<Vector2<f64>>,
    pub smoothed_covs: Vec<Matrix2<f64>>,
    /// `E[x_{j+1} x_jᵀ]` for consecutive padded positions `j, j+1`.
    pub pairwise: Vec<Matrix2<f64>>,
}

impl PaddedRun {
    /// Number of padded states, `τ + t_s + t_e + 1`.
    pub fn len(&self) -> usize {
        self.smoothed_means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.smoothed_means.is_empty()
    }

    /// Position in the padded arrays of observation `y_t`, `t` 1-based.
    pub fn slot_of_observation(&self, t: usize) -> usize {
        self.pre_pad + t
    }

    /// `E[x xᵀ]` at padded position `j`.
    pub fn second_moment(&self, j: usize) -> Matrix2<f64> {
        let m = self.smoothed_means[j];
        self.smoothed_covs[j] + m * m.transpose()
    }
}

pub fn run(traj: &Trajectory, dyn_: &DynamicsParams, bel: &BeliefParams, pre_pad: usize, post_pad: usize) -> Result<PaddedRun> {
    let obs: Vec<Option<Vector2<f64>>> = traj.points().iter().map(|p| Some(p.to_vector())).collect();
    run_with_gaps(&obs, dyn_, bel, pre_pad, post_pad)
}

/// Like [`run`], but `None` entries are missing observations (no update).
pub fn run_with_gaps(
    obs: &[Option<Vector2<f64>>],
    dyn_: &DynamicsParams,
    bel: &BeliefParams,
    pre_pad: usize,
    post_pad: usize,
) -> Result<PaddedRun> {
    filter_impl(obs, dyn_, bel, pre_pad, post_pad, true)
}

/// Log-likelihood only; skips the backward pass.
pub fn loglik(traj: &Trajectory, dyn_: &DynamicsParams, bel: &BeliefParams, pre_pad: usize, post_pad: usize) -> Result<f64> {
    let obs: Vec<Option<Vector2<f64>>> = traj.points().iter().map(|p| Some(p.to_vector())).collect();
    Ok(filter_impl(&obs, dyn_, bel, pre_pad, post_pad, false)?.loglik)
}

struct Update {
    mean: Vector2<f64>,
    cov: Matrix2<f64>,
    loglik: f64,
}

/// Joseph-form measurement update with identity observation matrix.
fn update(mean: &Vector2<f64>, cov: &Matrix2<f64>, y: &Vector2<f64>, noise: &Matrix2<f64>, index: usize) -> Result<Update> {
    let innov_cov = symmetrize(&(cov + noise));
    if innov_cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            index,
            message: "non-finite innovation covariance".into(),
        });
    }
    let innov = y - mean;
    let loglik = log_normal(&innov, &innov_cov).ok_or_else(|| Error::Numerical {
        index,
        message: "innovation covariance not positive definite".into(),
    })?;
    let inv = innov_cov.try_inverse().ok_or_else(|| Error::Numerical {
        index,
        message: "singular innovation covariance".into(),
    })?;
    let gain = cov * inv;
    let i_k = Matrix2::identity() - gain;
    Ok(Update {
        mean: mean + gain * innov,
        cov: symmetrize(&(i_k * cov * i_k.transpose() + gain * noise * gain.transpose())),
        loglik,
    })
}

fn filter_impl(
    obs: &[Option<Vector2<f64>>],
    dyn_: &DynamicsParams,
    bel: &BeliefParams,
    pre_pad: usize,
    post_pad: usize,
    smooth: bool,
) -> Result<PaddedRun> {
    if obs.is_empty() {
        return Err(Error::TooShort { len: 0, min: 1 });
    }
    dyn_.validate()?;
    bel.validate()?;

    let tau = obs.len();
    let len = tau + pre_pad + post_pad + 1;
    let a = dyn_.transition;
    let at = a.transpose();

    let mut pred_means = Vec::with_capacity(len);
    let mut pred_covs = Vec::with_capacity(len);
    let mut filt_means: Vec<Vector2<f64>> = Vec::with_capacity(len);
    let mut filt_covs: Vec<Matrix2<f64>> = Vec::with_capacity(len);
    let mut obs_loglik = 0.0;

    for j in 0..len {
        let (m_pred, p_pred) = if j == 0 {
            (bel.start_mean, bel.start_cov)
        } else {
            let m = a * filt_means[j - 1] + dyn_.offset;
            let p = symmetrize(&(a * filt_covs[j - 1] * at + dyn_.process_cov));
            (m, p)
        };
        // padded position j holds time t = j - t_s
        let observed = j
            .checked_sub(pre_pad)
            .filter(|&t| (1..=tau).contains(&t))
            .and_then(|t| obs[t - 1]);
        let (m_filt, p_filt) = match observed {
            Some(y) => {
                let u = update(&m_pred, &p_pred, &y, &dyn_.obs_cov, j)?;
                obs_loglik += u.loglik;
                (u.mean, u.cov)
            }
            None => (m_pred, p_pred),
        };
        pred_means.push(m_pred);
        pred_covs.push(p_pred);
        filt_means.push(m_filt);
        filt_covs.push(p_filt);
    }

    let last = len - 1;
    let end = update(&filt_means[last], &filt_covs[last], &bel.end_mean, &bel.end_cov, last)?;
    filt_means[last] = end.mean;
    filt_covs[last] = end.cov;
    let end_loglik = end.loglik;

    let mut run = PaddedRun {
        pre_pad,
        post_pad,
        obs_loglik,
        end_loglik,
        loglik: obs_loglik + end_loglik,
        filtered_means: Vec::new(),
        filtered_covs: Vec::new(),
        smoothed_means: Vec::new(),
        smoothed_covs: Vec::new(),
        pairwise: Vec::new(),
    };
    if !run.loglik.is_finite() {
        return Err(Error::Numerical {
            index: last,
            message: "non-finite log-likelihood".into(),
        });
    }
    if !smooth {
        return Ok(run);
    }

    let mut sm = filt_means.clone();
    let mut sp = filt_covs.clone();
    let mut pairwise = vec![Matrix2::zeros(); len - 1];
    for j in (0..last).rev() {
        let pred_inv = pred_covs[j + 1].try_inverse().ok_or_else(|| Error::Numerical {
            index: j + 1,
            message: "singular predicted covariance".into(),
        })?;
        let gain = filt_covs[j] * at * pred_inv;
        sm[j] = filt_means[j] + gain * (sm[j + 1] - pred_means[j + 1]);
        sp[j] = symmetrize(&(filt_covs[j] + gain * (sp[j + 1] - pred_covs[j + 1]) * gain.transpose()));
        let cross = sp[j + 1] * gain.transpose();
        pairwise[j] = cross + sm[j + 1] * sm[j].transpose();
    }

    run.filtered_means = filt_means;
    run.filtered_covs = filt_covs;
    run.smoothed_means = sm;
    run.smoothed_covs = sp;
    run.pairwise = pairwise;
    Ok(run)
}
