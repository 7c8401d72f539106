//! Mixture of dynamic pedestrian agents.
//!
//! Each agent is a linear dynamical system with a similarity-transform
//! transition, plus Gaussian beliefs about where its trajectories start and
//! end. Learning is EM over the hidden agent label and the unobserved padding
//! lengths `(t_s, t_e)` before and after each observed track.

mod init;
mod persist;
mod sample;
mod stats;

use log::debug;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kalman::{self, BeliefParams, DynamicsParams, PaddedRun};
use crate::linalg::log_sum_exp;
use crate::traj::{Corpus, Trajectory};

pub use init::{initialize, INIT_COV_FLOOR};
pub use sample::{sample, sample_agent, SampleConfig, Switching, SyntheticSample, DEFAULT_SWITCH_PROB};
pub use stats::{fit_similarity, m_step, m_step_from_stats, AgentStats, MStepOutput, TransitionStats, MIN_AGENT_WEIGHT};

/// One mixture component `ω_m = (D_m, B_m, π_m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentModel {
    pub dynamics: DynamicsParams,
    pub belief: BeliefParams,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdaModel {
    pub agents: Vec<AgentModel>,
    /// Padding lengths range over `0..=max_pad` on both sides.
    pub max_pad: usize,
    /// Corpus log-likelihood of the model entering each EM iteration.
    pub em_trace: Vec<f64>,
}

impl MdaModel {
    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.agents.iter().map(|a| a.weight).sum()
    }
}

pub const DEFAULT_MAX_PAD: usize = 10;

/// A hidden configuration `h = (z, t_s, t_e)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Hidden {
    pub agent: usize,
    pub pre_pad: usize,
    pub post_pad: usize,
}

/// Posterior weights `γ` over every hidden configuration of one trajectory.
#[derive(Debug, Clone)]
pub struct Responsibility {
    pub cells: Vec<(Hidden, f64)>,
    /// `log p(y | Θ)` with the padding prior included.
    pub log_evidence: f64,
}

impl Responsibility {
    pub fn agent_totals(&self, n_agents: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_agents];
        for (h, w) in &self.cells {
            out[h.agent] += w;
        }
        out
    }
}

fn hidden_grid(n_agents: usize, max_pad: usize) -> impl Iterator<Item = Hidden> {
    (0..n_agents).flat_map(move |agent| {
        (0..=max_pad).flat_map(move |pre_pad| {
            (0..=max_pad).map(move |post_pad| Hidden {
                agent,
                pre_pad,
                post_pad,
            })
        })
    })
}

/// Responsibilities and, when `smooth` is set, the smoothed run of each cell.
/// Cells with zero mixture weight get no run.
pub fn e_step_runs(traj: &Trajectory, model: &MdaModel, smooth: bool) -> Result<(Responsibility, Vec<Option<PaddedRun>>)> {
    let log_pad_prior = -2.0 * ((model.max_pad + 1) as f64).ln();
    let mut cells = Vec::new();
    let mut log_w = Vec::new();
    let mut runs = Vec::new();
    for h in hidden_grid(model.len(), model.max_pad) {
        let agent = &model.agents[h.agent];
        cells.push(h);
        if agent.weight <= 0.0 {
            log_w.push(f64::NEG_INFINITY);
            runs.push(None);
            continue;
        }
        let prior = agent.weight.ln() + log_pad_prior;
        if smooth {
            let run = kalman::run(traj, &agent.dynamics, &agent.belief, h.pre_pad, h.post_pad)?;
            log_w.push(prior + run.loglik);
            runs.push(Some(run));
        } else {
            let ll = kalman::loglik(traj, &agent.dynamics, &agent.belief, h.pre_pad, h.post_pad)?;
            log_w.push(prior + ll);
            runs.push(None);
        }
    }
    let log_evidence = log_sum_exp(&log_w);
    if !log_evidence.is_finite() {
        return Err(Error::DegenerateResponsibilities);
    }
    let cells = cells
        .into_iter()
        .zip(&log_w)
        .map(|(h, lw)| (h, (lw - log_evidence).exp()))
        .collect();
    Ok((Responsibility { cells, log_evidence }, runs))
}

pub fn e_step(traj: &Trajectory, model: &MdaModel) -> Result<Responsibility> {
    Ok(e_step_runs(traj, model, false)?.0)
}

/// `Σ_k log p(y^k | Θ)`.
pub fn corpus_loglik(corpus: &Corpus, model: &MdaModel) -> Result<f64> {
    let parts: Vec<f64> = corpus
        .trajectories
        .par_iter()
        .map(|t| e_step(t, model).map(|r| r.log_evidence))
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

#[derive(Debug, Clone)]
pub struct LearnConfig {
    pub agents: usize,
    pub max_pad: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            agents: 2,
            max_pad: DEFAULT_MAX_PAD,
            seed: 0,
            max_iters: 50,
            tol: 1e-4,
        }
    }
}

/// One E-step over the corpus, returning the total log-likelihood and the
/// γ-weighted sufficient statistics. Reduction runs in corpus order.
pub fn expected_stats(corpus: &Corpus, model: &MdaModel) -> Result<(f64, Vec<AgentStats>)> {
    let per_traj: Vec<(f64, Vec<AgentStats>)> = corpus
        .trajectories
        .par_iter()
        .map(|traj| {
            let (resp, runs) = e_step_runs(traj, model, true)?;
            let mut acc = vec![AgentStats::default(); model.len()];
            for ((h, w), run) in resp.cells.iter().zip(&runs) {
                if let Some(run) = run {
                    acc[h.agent].accumulate(traj, run, *w);
                }
            }
            Ok((resp.log_evidence, acc))
        })
        .collect::<Result<_>>()?;

    let mut total = 0.0;
    let mut acc = vec![AgentStats::default(); model.len()];
    for (ll, parts) in per_traj {
        total += ll;
        for (a, p) in acc.iter_mut().zip(&parts) {
            a.merge(p);
        }
    }
    Ok((total, acc))
}

/// Run EM from `init`. The trace's last entry is the log-likelihood of the
/// returned model.
pub fn learn_from(corpus: &Corpus, init: MdaModel, max_iters: usize, tol: f64) -> Result<MdaModel> {
    let mut model = init;
    let mut trace = model.em_trace.clone();
    let mut iteration = 0;
    loop {
        let wrap = |e: Error| Error::Iteration {
            iteration,
            source: Box::new(e),
        };
        let (ll, stats) = expected_stats(corpus, &model).map_err(wrap)?;
        debug!("EM iteration {iteration}: loglik {ll}");
        let converged = trace.last().is_some_and(|prev| (ll - prev).abs() < tol);
        trace.push(ll);
        if converged || iteration >= max_iters {
            break;
        }
        let out = m_step_from_stats(&model, &stats, corpus.len());
        model = out.model;
        iteration += 1;
    }
    model.em_trace = trace;
    Ok(model)
}

/// k-means initialization followed by EM. With `max_iters == 0` the returned
/// agents are the initialization.
pub fn learn(corpus: &Corpus, cfg: &LearnConfig) -> Result<MdaModel> {
    if cfg.agents == 0 {
        return Err(Error::InvalidArgument("at least one agent is required".into()));
    }
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("corpus is empty".into()));
    }
    let init = initialize(corpus, cfg.agents, cfg.max_pad, cfg.seed)?;
    learn_from(corpus, init, cfg.max_iters, cfg.tol)
}
