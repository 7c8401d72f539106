//! γ-weighted sufficient statistics and the closed-form M-step.
//!
//! The transition is restricted to `A = [[a, -c], [c, a]]`. Its regression is
//! solved in centered coordinates, where the offset decouples: `(a, c)` come
//! from a 2×2 generalized least-squares system weighted by the incoming
//! `Q⁻¹`, then `b = x̄_t − A x̄_{t−1}`, and `Q` is the residual second moment
//! at the new `(A, b)`.

use log::warn;
use nalgebra::{Matrix2, Vector2};

use super::{AgentModel, MdaModel, Responsibility};
use crate::error::{Error, Result};
use crate::kalman::{DynamicsParams, PaddedRun};
use crate::linalg::{floor_cov, symmetrize, COV_FLOOR};
use crate::traj::{Corpus, Trajectory};

/// Agents whose total responsibility falls below this keep their parameters.
pub const MIN_AGENT_WEIGHT: f64 = 1e-8;

const ROT90: Matrix2<f64> = Matrix2::new(0.0, -1.0, 1.0, 0.0);

/// Weighted moments of a Gaussian state.
#[derive(Debug, Clone, Copy, Default)]
pub struct MomentStats {
    pub weight: f64,
    pub sum: Vector2<f64>,
    pub sum_outer: Matrix2<f64>,
}

impl MomentStats {
    fn add(&mut self, w: f64, mean: &Vector2<f64>, second: &Matrix2<f64>) {
        self.weight += w;
        self.sum += mean * w;
        self.sum_outer += second * w;
    }

    fn merge(&mut self, o: &MomentStats) {
        self.weight += o.weight;
        self.sum += o.sum;
        self.sum_outer += o.sum_outer;
    }

    fn mean_cov(&self) -> (Vector2<f64>, Matrix2<f64>) {
        let mean = self.sum / self.weight;
        (mean, symmetrize(&(self.sum_outer / self.weight - mean * mean.transpose())))
    }
}

/// Moments over consecutive state pairs `(x_{t−1}, x_t)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TransitionStats {
    pub weight: f64,
    pub sum_prev: Vector2<f64>,
    pub sum_next: Vector2<f64>,
    pub outer_prev: Matrix2<f64>,
    pub outer_next: Matrix2<f64>,
    /// `Σ w E[x_t x_{t−1}ᵀ]`.
    pub cross: Matrix2<f64>,
}

impl TransitionStats {
    pub fn add(&mut self, w: f64, prev: &Vector2<f64>, next: &Vector2<f64>, e_prev: &Matrix2<f64>, e_next: &Matrix2<f64>, e_cross: &Matrix2<f64>) {
        self.weight += w;
        self.sum_prev += prev * w;
        self.sum_next += next * w;
        self.outer_prev += e_prev * w;
        self.outer_next += e_next * w;
        self.cross += e_cross * w;
    }

    /// Deterministic pairs, as from raw observations.
    pub fn add_points(&mut self, w: f64, prev: &Vector2<f64>, next: &Vector2<f64>) {
        self.add(w, prev, next, &(prev * prev.transpose()), &(next * next.transpose()), &(next * prev.transpose()));
    }

    fn merge(&mut self, o: &TransitionStats) {
        self.weight += o.weight;
        self.sum_prev += o.sum_prev;
        self.sum_next += o.sum_next;
        self.outer_prev += o.outer_prev;
        self.outer_next += o.outer_next;
        self.cross += o.cross;
    }

    /// Means and centered second moments `(x̄_prev, x̄_next, C_prev, C_next, C_cross)`.
    fn centered(&self) -> (Vector2<f64>, Vector2<f64>, Matrix2<f64>, Matrix2<f64>, Matrix2<f64>) {
        let n = self.weight;
        let mp = self.sum_prev / n;
        let mn = self.sum_next / n;
        (
            mp,
            mn,
            self.outer_prev / n - mp * mp.transpose(),
            self.outer_next / n - mn * mn.transpose(),
            self.cross / n - mn * mp.transpose(),
        )
    }
}

/// Constrained weighted regression `x_t ≈ A x_{t−1} + b`, `A = [[a,-c],[c,a]]`,
/// minimizing `Σ w E[rᵀ W r]`. Returns `(a, c, b)`, or `None` when the
/// system is singular.
pub fn fit_similarity(stats: &TransitionStats, precision: &Matrix2<f64>) -> Option<(f64, f64, Vector2<f64>)> {
    if stats.weight <= 0.0 {
        return None;
    }
    let (mp, mn, c_prev, _, c_cross) = stats.centered();
    let w = precision;
    let jt_w = ROT90.transpose() * w;
    let normal = Matrix2::new(
        (w * c_prev).trace(),
        (w * ROT90 * c_prev).trace(),
        (jt_w * c_prev).trace(),
        (jt_w * ROT90 * c_prev).trace(),
    );
    let rhs = Vector2::new((w * c_cross).trace(), (jt_w * c_cross).trace());
    let scale = normal.amax();
    if !(scale > 0.0) || normal.determinant().abs() <= 1e-14 * scale * scale {
        return None;
    }
    let theta = normal.try_inverse()? * rhs;
    let a = DynamicsParams::similarity(theta[0], theta[1]);
    let b = mn - a * mp;
    theta.iter().chain(b.iter()).all(|v| v.is_finite()).then_some((theta[0], theta[1], b))
}

/// Residual second moment `E[(x_t − A x_{t−1} − b)(…)ᵀ]` per unit weight.
fn residual_cov(stats: &TransitionStats, a: &Matrix2<f64>, b: &Vector2<f64>) -> Matrix2<f64> {
    let (mp, mn, c_prev, c_next, c_cross) = stats.centered();
    let d = mn - a * mp - b;
    symmetrize(&(c_next - c_cross * a.transpose() - a * c_cross.transpose() + a * c_prev * a.transpose() + d * d.transpose()))
}

/// Everything one agent needs from the E-step.
#[derive(Debug, Clone, Copy, Default)]
pub struct AgentStats {
    pub weight: f64,
    pub start: MomentStats,
    pub end: MomentStats,
    pub transitions: TransitionStats,
    pub obs_weight: f64,
    pub obs_resid: Matrix2<f64>,
}

impl AgentStats {
    /// Add one smoothed run of `traj` with responsibility `w`.
    pub fn accumulate(&mut self, traj: &Trajectory, run: &PaddedRun, w: f64) {
        if w <= 0.0 {
            return;
        }
        let last = run.len() - 1;
        self.weight += w;
        self.start.add(w, &run.smoothed_means[0], &run.second_moment(0));
        self.end.add(w, &run.smoothed_means[last], &run.second_moment(last));
        for j in 1..run.len() {
            self.transitions.add(
                w,
                &run.smoothed_means[j - 1],
                &run.smoothed_means[j],
                &run.second_moment(j - 1),
                &run.second_moment(j),
                &run.pairwise[j - 1],
            );
        }
        for (i, p) in traj.points().iter().enumerate() {
            let j = run.slot_of_observation(i + 1);
            let r = p.to_vector() - run.smoothed_means[j];
            self.obs_resid += (r * r.transpose() + run.smoothed_covs[j]) * w;
            self.obs_weight += w;
        }
    }

    pub fn merge(&mut self, o: &AgentStats) {
        self.weight += o.weight;
        self.start.merge(&o.start);
        self.end.merge(&o.end);
        self.transitions.merge(&o.transitions);
        self.obs_weight += o.obs_weight;
        self.obs_resid += o.obs_resid;
    }
}

#[derive(Debug, Clone)]
pub struct MStepOutput {
    pub model: MdaModel,
    pub warnings: Vec<String>,
}

/// Maximize the expected complete-data log-likelihood given per-agent stats
/// gathered over `n_traj` trajectories.
pub fn m_step_from_stats(prev: &MdaModel, stats: &[AgentStats], n_traj: usize) -> MStepOutput {
    let mut warnings = Vec::new();
    let mut agents = Vec::with_capacity(prev.len());
    for (m, (old, st)) in prev.agents.iter().zip(stats).enumerate() {
        let weight = st.weight / n_traj as f64;
        if st.weight < MIN_AGENT_WEIGHT {
            let msg = format!("agent {m}: effective weight {:.3e} below threshold, parameters carried over", st.weight);
            warn!("{msg}");
            warnings.push(msg);
            agents.push(AgentModel { weight, ..*old });
            continue;
        }

        let mut next = *old;
        next.weight = weight;

        let (mu_s, phi_s) = st.start.mean_cov();
        let (mu_e, phi_e) = st.end.mean_cov();
        next.belief.start_mean = mu_s;
        next.belief.start_cov = floor_cov(&phi_s, COV_FLOOR);
        next.belief.end_mean = mu_e;
        next.belief.end_cov = floor_cov(&phi_e, COV_FLOOR);

        let precision = old.dynamics.process_cov.try_inverse().unwrap_or_else(Matrix2::identity);
        let (a, b) = match fit_similarity(&st.transitions, &precision) {
            Some((a, c, b)) => (DynamicsParams::similarity(a, c), b),
            None => {
                let msg = format!("agent {m}: singular transition regression, keeping A");
                warn!("{msg}");
                warnings.push(msg);
                let a = old.dynamics.transition;
                let t = &st.transitions;
                (a, t.sum_next / t.weight - a * t.sum_prev / t.weight)
            }
        };
        next.dynamics.transition = a;
        next.dynamics.offset = b;
        next.dynamics.process_cov = floor_cov(&residual_cov(&st.transitions, &a, &b), COV_FLOOR);
        next.dynamics.obs_cov = floor_cov(&(st.obs_resid / st.obs_weight), COV_FLOOR);
        agents.push(next);
    }

    let total: f64 = agents.iter().map(|a| a.weight).sum();
    if total > 0.0 {
        for a in &mut agents {
            a.weight /= total;
        }
    }
    MStepOutput {
        model: MdaModel {
            agents,
            max_pad: prev.max_pad,
            em_trace: prev.em_trace.clone(),
        },
        warnings,
    }
}

/// M-step from explicit per-trajectory responsibilities and runs.
/// `runs[k][i]` is the run for `responsibilities[k].cells[i]`; cells without
/// a run must carry zero weight.
pub fn m_step(prev: &MdaModel, corpus: &Corpus, responsibilities: &[Responsibility], runs: &[Vec<Option<PaddedRun>>]) -> Result<MStepOutput> {
    if responsibilities.len() != corpus.len() || runs.len() != corpus.len() {
        return Err(Error::InvalidArgument("responsibilities/runs do not match corpus".into()));
    }
    let mut stats = vec![AgentStats::default(); prev.len()];
    for ((traj, resp), runs) in corpus.trajectories.iter().zip(responsibilities).zip(runs) {
        let total: f64 = resp.cells.iter().map(|c| c.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("responsibilities of `{}` sum to {total}", traj.id())));
        }
        for ((h, w), run) in resp.cells.iter().zip(runs) {
            match run {
                Some(run) => stats[h.agent].accumulate(traj, run, *w),
                None if *w == 0.0 => {}
                None => return Err(Error::InvalidArgument("missing run for weighted cell".into())),
            }
        }
    }
    Ok(m_step_from_stats(prev, &stats, corpus.len()))
}
