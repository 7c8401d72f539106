//! Enumeration of every hidden configuration with dense Gaussian densities.

use agentseg::mda::{self, MdaModel};
use agentseg::{Corpus, Point2, Trajectory};
use nalgebra::{Matrix2, Vector2, Vector4};

use super::gaussian;
use super::mstep::{self, TransitionMoments};

pub fn obs_of(traj: &Trajectory) -> Vec<Option<Vector2<f64>>> {
    traj.points().iter().map(|p| Some(Vector2::new(p.x, p.y))).collect()
}

/// `(agent, t_s, t_e, γ)` in agent-major order.
pub fn responsibilities(traj: &Trajectory, model: &MdaModel) -> Vec<(usize, usize, usize, f64)> {
    let obs = obs_of(traj);
    let mut cells = Vec::new();
    for (z, agent) in model.agents.iter().enumerate() {
        for pre in 0..=model.max_pad {
            for post in 0..=model.max_pad {
                let ll = gaussian::loglik(&obs, &agent.dynamics, &agent.belief, pre, post, true);
                cells.push((z, pre, post, agent.weight.ln() + ll));
            }
        }
    }
    let top = cells.iter().map(|c| c.3).fold(f64::NEG_INFINITY, f64::max);
    let norm: f64 = cells.iter().map(|c| (c.3 - top).exp()).sum();
    cells.into_iter().map(|(z, s, e, lw)| (z, s, e, (lw - top).exp() / norm)).collect()
}

/// Largest deviation between the library E-step and the enumeration.
pub fn e_step_gap(traj: &Trajectory, model: &MdaModel) -> f64 {
    let lib = mda::e_step(traj, model).unwrap();
    let oracle = responsibilities(traj, model);
    assert_eq!(lib.cells.len(), oracle.len());
    lib.cells
        .iter()
        .zip(&oracle)
        .map(|((h, w), (z, s, e, g))| {
            assert_eq!((h.agent, h.pre_pad, h.post_pad), (*z, *s, *e));
            (w - g).abs()
        })
        .fold(0.0, f64::max)
}

/// Weighted transition moments for `agent` built from dense posteriors.
pub fn transition_moments(corpus: &Corpus, model: &MdaModel, agent: usize) -> Vec<TransitionMoments> {
    let a = &model.agents[agent];
    let mut terms = Vec::new();
    for traj in &corpus.trajectories {
        let obs = obs_of(traj);
        for (z, pre, post, g) in responsibilities(traj, model) {
            if z != agent {
                continue;
            }
            let p = gaussian::posterior(&obs, &a.dynamics, &a.belief, pre, post, true);
            let len = obs.len() + pre + post + 1;
            for j in 1..len {
                terms.push(TransitionMoments {
                    weight: g,
                    mean_prev: p.mean2(j - 1),
                    mean_next: p.mean2(j),
                    prev_prev: p.moment(j - 1, j - 1),
                    next_next: p.moment(j, j),
                    next_prev: p.moment(j, j - 1),
                });
            }
        }
    }
    terms
}

/// Largest `(a, c, b)` deviation between the library M-step and the
/// numerical maximizer, over all agents.
pub fn m_step_gap(corpus: &Corpus, model: &MdaModel) -> f64 {
    let mut resps = Vec::new();
    let mut runs = Vec::new();
    for traj in &corpus.trajectories {
        let (r, rs) = mda::e_step_runs(traj, model, true).unwrap();
        resps.push(r);
        runs.push(rs);
    }
    let next = mda::m_step(model, corpus, &resps, &runs).unwrap().model;
    let mut gap: f64 = 0.0;
    for m in 0..model.len() {
        let terms = transition_moments(corpus, model, m);
        let total: f64 = corpus.trajectories.iter().flat_map(|t| responsibilities(t, model)).filter(|c| c.0 == m).map(|c| c.3).sum();
        let params = |d: &agentseg::kalman::DynamicsParams| Vector4::new(d.transition[(0, 0)], d.transition[(1, 0)], d.offset[0], d.offset[1]);
        let got = params(&next.agents[m].dynamics);
        // starved agents keep their previous transition
        let best = if total < mda::MIN_AGENT_WEIGHT {
            params(&model.agents[m].dynamics)
        } else {
            let w: Matrix2<f64> = model.agents[m].dynamics.process_cov.try_inverse().unwrap();
            mstep::minimize(&terms, &w, Vector4::new(1.0, 0.0, 0.0, 0.0))
        };
        gap = gap.max((got - best).amax());
    }
    gap
}

pub fn trajectory(id: &str, obs: &[Vector2<f64>]) -> Trajectory {
    Trajectory::new(id, obs.iter().map(|v| Point2::new(v[0], v[1])).collect()).unwrap()
}
