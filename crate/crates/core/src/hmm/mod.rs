//! Hidden Markov model whose states are learned agents.
//!
//! Each state emits 6-D windows of three consecutive absolute positions from
//! a full-covariance Gaussian. Parameters come from the agents by sampling,
//! are refined with Baum-Welch, and trajectories are decoded with Viterbi.
//! Everything runs in log space.

mod persist;

use log::warn;
use nalgebra::{DMatrix, SMatrix};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{floor_cov, log_sum_exp, GaussianEval, COV_FLOOR};
use crate::mda::{sample_agent, MdaModel};
use crate::rng;
use crate::traj::{segmentation_points_from_labels, window_to_point_index, windowize, windowize_points, Corpus, Trajectory, Window6};

pub use persist::HMM_SCHEMA;

pub type Cov6 = SMatrix<f64, 6, 6>;

/// Default self-transition probability of a freshly built model.
pub const DEFAULT_SELF_TRANSITION: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct EmissionGaussian {
    pub mean: Window6,
    pub cov: Cov6,
}

impl EmissionGaussian {
    fn evaluator(&self) -> Result<GaussianEval<6>> {
        GaussianEval::new(self.mean, &self.cov).ok_or(Error::NotSpd("emission covariance"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    pub initial: Vec<f64>,
    /// Row-stochastic; entry `(i, j)` is the probability of moving from state `i` to `j`.
    pub trans: DMatrix<f64>,
    pub emissions: Vec<EmissionGaussian>,
    /// Source agent of each state.
    pub agent_ids: Vec<usize>,
}

impl HmmModel {
    pub fn n_states(&self) -> usize {
        self.initial.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.n_states();
        if m == 0 {
            return Err(Error::InvalidArgument("HMM needs at least one state".into()));
        }
        if self.trans.nrows() != m || self.trans.ncols() != m || self.emissions.len() != m || self.agent_ids.len() != m {
            return Err(Error::InvalidArgument("HMM dimensions disagree".into()));
        }
        let on_simplex = |xs: &mut dyn Iterator<Item = f64>| {
            let v: Vec<f64> = xs.collect();
            v.iter().all(|&p| p >= 0.0) && (v.iter().sum::<f64>() - 1.0).abs() <= 1e-9
        };
        if !on_simplex(&mut self.initial.iter().copied()) {
            return Err(Error::InvalidArgument("initial distribution not on the simplex".into()));
        }
        for i in 0..m {
            if !on_simplex(&mut self.trans.row(i).iter().copied()) {
                return Err(Error::InvalidArgument(format!("transition row {i} not on the simplex")));
            }
        }
        Ok(())
    }

    fn log_trans(&self) -> DMatrix<f64> {
        self.trans.map(f64::ln)
    }

    /// `log b(j, t)` for every window and state, `[t][j]`.
    pub fn emission_logs(&self, windows: &[Window6]) -> Result<Vec<Vec<f64>>> {
        let evals: Vec<GaussianEval<6>> = self.emissions.iter().map(EmissionGaussian::evaluator).collect::<Result<_>>()?;
        Ok(windows.iter().map(|w| evals.iter().map(|e| e.log_pdf(w)).collect()).collect())
    }

    /// Relabel states: new state `i` is old state `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> HmmModel {
        let m = self.n_states();
        HmmModel {
            initial: perm.iter().map(|&p| self.initial[p]).collect(),
            trans: DMatrix::from_fn(m, m, |i, j| self.trans[(perm[i], perm[j])]),
            emissions: perm.iter().map(|&p| self.emissions[p].clone()).collect(),
            agent_ids: perm.iter().map(|&p| self.agent_ids[p]).collect(),
        }
    }
}

/// A transition matrix with `self_prob` on the diagonal and the remainder
/// spread evenly.
pub fn sticky_transitions(m: usize, self_prob: f64) -> DMatrix<f64> {
    if m == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    let off = (1.0 - self_prob) / (m - 1) as f64;
    DMatrix::from_fn(m, m, |i, j| if i == j { self_prob } else { off })
}

#[derive(Debug, Clone)]
pub struct EmissionFit {
    pub n_samples: usize,
    /// Inclusive length range of the sampled trajectories, at least 3.
    pub len_range: (usize, usize),
    pub seed: u64,
}

impl Default for EmissionFit {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            len_range: (20, 60),
            seed: 0,
        }
    }
}

/// Sample moments of the windows of trajectories drawn from one agent.
fn fit_emission(model: &MdaModel, agent: usize, fit: &EmissionFit) -> EmissionGaussian {
    let mut rng = rng::stream(fit.seed, "hmm-emission", agent as u64);
    let mut windows = Vec::new();
    for _ in 0..fit.n_samples {
        let len = rng.random_range(fit.len_range.0..=fit.len_range.1);
        let (_, obs) = sample_agent(&model.agents[agent], len, &mut rng);
        windows.extend(windowize_points(&obs).expect("length checked"));
    }
    let n = windows.len() as f64;
    let mean = windows.iter().sum::<Window6>() / n;
    let cov = windows.iter().map(|w| (w - mean) * (w - mean).transpose()).sum::<Cov6>() / n;
    EmissionGaussian {
        mean,
        cov: floor_cov(&cov, COV_FLOOR),
    }
}

/// Build an HMM over the agents in `subset` (all agents when empty).
/// `ρ` is the renormalized mixture weight of the chosen agents.
pub fn init_from_agents(model: &MdaModel, subset: &[usize], fit: &EmissionFit) -> Result<HmmModel> {
    if fit.n_samples < 100 {
        return Err(Error::InvalidArgument("need at least 100 samples per agent".into()));
    }
    if fit.len_range.0 < 3 || fit.len_range.0 > fit.len_range.1 {
        return Err(Error::InvalidArgument("sampled lengths must be at least 3".into()));
    }
    let ids: Vec<usize> = if subset.is_empty() { (0..model.len()).collect() } else { subset.to_vec() };
    if ids.is_empty() {
        return Err(Error::InvalidArgument("model has no agents".into()));
    }
    if let Some(bad) = ids.iter().find(|&&i| i >= model.len()) {
        return Err(Error::InvalidArgument(format!("agent {bad} not in model of {} agents", model.len())));
    }
    let emissions: Vec<EmissionGaussian> = ids.par_iter().map(|&a| fit_emission(model, a, fit)).collect();
    let weights: Vec<f64> = ids.iter().map(|&a| model.agents[a].weight).collect();
    let total: f64 = weights.iter().sum();
    let initial = if total > 0.0 {
        weights.iter().map(|w| w / total).collect()
    } else {
        vec![1.0 / ids.len() as f64; ids.len()]
    };
    Ok(HmmModel {
        initial,
        trans: sticky_transitions(ids.len(), DEFAULT_SELF_TRANSITION),
        emissions,
        agent_ids: ids,
    })
}

/// Forward-backward result for one sequence.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub loglik: f64,
    /// `γ_t(i)`, `[t][i]`.
    pub state_probs: Vec<Vec<f64>>,
    /// `Σ_t ξ_t(i, j)`.
    pub trans_counts: DMatrix<f64>,
}

pub fn forward_backward(windows: &[Window6], model: &HmmModel) -> Result<Posterior> {
    let emit = model.emission_logs(windows)?;
    forward_backward_logs(&emit, model)
}

fn forward_backward_logs(emit: &[Vec<f64>], model: &HmmModel) -> Result<Posterior> {
    let m = model.n_states();
    let n = emit.len();
    if n == 0 {
        return Err(Error::TooShort { len: 0, min: 1 });
    }
    let log_a = model.log_trans();
    let mut alpha = vec![vec![0.0; m]; n];
    let mut scratch = vec![0.0; m];
    for j in 0..m {
        alpha[0][j] = model.initial[j].ln() + emit[0][j];
    }
    for t in 1..n {
        for j in 0..m {
            for i in 0..m {
                scratch[i] = alpha[t - 1][i] + log_a[(i, j)];
            }
            alpha[t][j] = emit[t][j] + log_sum_exp(&scratch);
        }
    }
    let loglik = log_sum_exp(&alpha[n - 1]);
    if !loglik.is_finite() {
        return Err(Error::Numerical {
            index: n - 1,
            message: "sequence has zero probability under the HMM".into(),
        });
    }
    let mut beta = vec![vec![0.0; m]; n];
    for t in (0..n - 1).rev() {
        for i in 0..m {
            for j in 0..m {
                scratch[j] = log_a[(i, j)] + emit[t + 1][j] + beta[t + 1][j];
            }
            beta[t][i] = log_sum_exp(&scratch);
        }
    }
    let state_probs = (0..n)
        .map(|t| (0..m).map(|i| (alpha[t][i] + beta[t][i] - loglik).exp()).collect())
        .collect();
    let mut trans_counts = DMatrix::zeros(m, m);
    for t in 0..n - 1 {
        for i in 0..m {
            for j in 0..m {
                trans_counts[(i, j)] += (alpha[t][i] + log_a[(i, j)] + emit[t + 1][j] + beta[t + 1][j] - loglik).exp();
            }
        }
    }
    Ok(Posterior {
        loglik,
        state_probs,
        trans_counts,
    })
}

#[derive(Debug, Clone)]
pub struct BaumWelchConfig {
    pub max_iters: usize,
    pub tol: f64,
    /// Keep the emission Gaussians fixed and learn only `ρ` and transitions.
    pub freeze_emissions: bool,
}

impl Default for BaumWelchConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-4,
            freeze_emissions: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaumWelchOutput {
    pub model: HmmModel,
    /// Total log-likelihood of the model entering each iteration; the last
    /// entry belongs to the returned model.
    pub trace: Vec<f64>,
    /// Ids of trajectories shorter than three points.
    pub skipped: Vec<String>,
}

pub fn baum_welch(corpus: &Corpus, init: &HmmModel, cfg: &BaumWelchConfig) -> Result<BaumWelchOutput> {
    let mut seqs = Vec::new();
    let mut skipped = Vec::new();
    for t in &corpus.trajectories {
        match windowize(t) {
            Ok(w) => seqs.push(w),
            Err(_) => {
                warn!("skipping `{}`: too short for windows", t.id());
                skipped.push(t.id().to_string());
            }
        }
    }
    let mut out = baum_welch_windows(&seqs, init, cfg)?;
    out.skipped = skipped;
    Ok(out)
}

/// Baum-Welch over pre-windowed sequences.
pub fn baum_welch_windows(seqs: &[Vec<Window6>], init: &HmmModel, cfg: &BaumWelchConfig) -> Result<BaumWelchOutput> {
    init.validate()?;
    let seqs: Vec<&Vec<Window6>> = seqs.iter().filter(|s| !s.is_empty()).collect();
    if seqs.is_empty() {
        return Err(Error::InvalidArgument("no sequences to train on".into()));
    }
    let m = init.n_states();
    let mut model = init.clone();
    let mut trace: Vec<f64> = Vec::new();
    let mut iteration = 0;
    loop {
        let posts: Vec<Posterior> = seqs
            .par_iter()
            .map(|s| forward_backward(s, &model))
            .collect::<Result<_>>()
            .map_err(|e| Error::Iteration {
                iteration,
                source: Box::new(e),
            })?;
        let ll: f64 = posts.iter().map(|p| p.loglik).sum();
        let converged = trace.last().is_some_and(|prev| (ll - prev).abs() < cfg.tol);
        trace.push(ll);
        if converged || iteration >= cfg.max_iters {
            break;
        }

        let mut initial = vec![0.0; m];
        let mut counts = DMatrix::zeros(m, m);
        for p in &posts {
            for i in 0..m {
                initial[i] += p.state_probs[0][i];
            }
            counts += &p.trans_counts;
        }
        let n_seq = posts.len() as f64;
        for v in &mut initial {
            *v /= n_seq;
        }
        let mut trans = model.trans.clone();
        for i in 0..m {
            let row: f64 = counts.row(i).sum();
            if row > 0.0 {
                for j in 0..m {
                    trans[(i, j)] = counts[(i, j)] / row;
                }
            }
        }
        let emissions = if cfg.freeze_emissions {
            model.emissions.clone()
        } else {
            reestimate_emissions(&seqs, &posts, &model.emissions)
        };
        model = HmmModel {
            initial,
            trans,
            emissions,
            agent_ids: model.agent_ids.clone(),
        };
        iteration += 1;
    }
    Ok(BaumWelchOutput {
        model,
        trace,
        skipped: Vec::new(),
    })
}

fn reestimate_emissions(seqs: &[&Vec<Window6>], posts: &[Posterior], old: &[EmissionGaussian]) -> Vec<EmissionGaussian> {
    (0..old.len())
        .map(|j| {
            let mut weight = 0.0;
            let mut sum = Window6::zeros();
            for (s, p) in seqs.iter().zip(posts) {
                for (w, g) in s.iter().zip(&p.state_probs) {
                    weight += g[j];
                    sum += w * g[j];
                }
            }
            if !(weight > 1e-12) {
                warn!("HMM state {j} received no responsibility; keeping its emission");
                return old[j].clone();
            }
            let mean = sum / weight;
            let mut cov = Cov6::zeros();
            for (s, p) in seqs.iter().zip(posts) {
                for (w, g) in s.iter().zip(&p.state_probs) {
                    let d = w - mean;
                    cov += d * d.transpose() * g[j];
                }
            }
            EmissionGaussian {
                mean,
                cov: floor_cov(&(cov / weight), COV_FLOOR),
            }
        })
        .collect()
}

/// Most probable state path `Z*`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    /// HMM state per window.
    pub labels: Vec<usize>,
    /// Point indices where the state changes.
    pub boundaries: Vec<usize>,
    pub loglik: f64,
}

impl Segmentation {
    /// Labels expressed as source agent ids.
    pub fn agent_labels(&self, model: &HmmModel) -> Vec<usize> {
        self.labels.iter().map(|&s| model.agent_ids[s]).collect()
    }
}

/// Viterbi over precomputed emission log-densities. Ties go to the lower
/// state index.
pub fn viterbi_logs(emit: &[Vec<f64>], model: &HmmModel) -> (Vec<usize>, f64) {
    let m = model.n_states();
    let n = emit.len();
    let log_a = model.log_trans();
    let mut delta: Vec<f64> = (0..m).map(|j| model.initial[j].ln() + emit[0][j]).collect();
    let mut back = vec![vec![0usize; m]; n];
    for t in 1..n {
        let mut next = vec![f64::NEG_INFINITY; m];
        for j in 0..m {
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
            for i in 0..m {
                let v = delta[i] + log_a[(i, j)];
                if v > best {
                    best = v;
                    arg = i;
                }
            }
            next[j] = best + emit[t][j];
            back[t][j] = arg;
        }
        delta = next;
    }
    let (mut best, mut state) = (f64::NEG_INFINITY, 0);
    for (j, &v) in delta.iter().enumerate() {
        if v > best {
            best = v;
            state = j;
        }
    }
    let mut labels = vec![0; n];
    labels[n - 1] = state;
    for t in (1..n).rev() {
        state = back[t][state];
        labels[t - 1] = state;
    }
    (labels, best)
}

pub fn viterbi_windows(windows: &[Window6], model: &HmmModel) -> Result<Segmentation> {
    if windows.is_empty() {
        return Err(Error::TooShortToWindow(0));
    }
    let emit = model.emission_logs(windows)?;
    let (labels, loglik) = viterbi_logs(&emit, model);
    let boundaries = segmentation_points_from_labels(&labels).into_iter().map(window_to_point_index).collect();
    Ok(Segmentation {
        labels,
        boundaries,
        loglik,
    })
}

pub fn viterbi(traj: &Trajectory, model: &HmmModel) -> Result<Segmentation> {
    viterbi_windows(&windowize(traj)?, model)
}
