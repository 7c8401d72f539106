//! Synthetic trajectories drawn from the agents' linear dynamics, optionally
//! switching agent mid-track, with the switch points kept as ground truth.

use nalgebra::Vector2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use super::{AgentModel, MdaModel};
use crate::error::{Error, Result};
use crate::linalg::sample_gaussian2;
use crate::rng;
use crate::traj::{segmentation_points_from_labels, Point2, Trajectory};

pub const DEFAULT_SWITCH_PROB: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Switching {
    None,
    /// At each interior point, with probability `switch_prob`, redraw the
    /// active agent uniformly over all agents (possibly the same one).
    Uniform { switch_prob: f64 },
}

#[derive(Debug, Clone)]
pub struct SampleConfig {
    pub n_traj: usize,
    /// Inclusive bounds on the number of observed points.
    pub len_range: (usize, usize),
    pub switching: Switching,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SyntheticSample {
    pub traj: Trajectory,
    /// Agent that generated each observed point.
    pub gt_labels: Vec<usize>,
    /// Point indices where the generating agent changes.
    pub gt_boundaries: Vec<usize>,
    /// Latent states `x_0, x_1, …, x_τ`; `x_0` is the unobserved start state.
    pub states: Vec<Point2>,
}

/// Step the dynamics of `agent` once from `x`.
fn step<R: Rng>(agent: &AgentModel, x: &Vector2<f64>, rng: &mut R) -> Vector2<f64> {
    let d = &agent.dynamics;
    sample_gaussian2(&(d.transition * x + d.offset), &d.process_cov, rng)
}

/// Draw one trajectory of `len` points from a single agent. Covariances are
/// used as given, so zero noise gives the exact recurrence.
pub fn sample_agent<R: Rng>(agent: &AgentModel, len: usize, rng: &mut R) -> (Vec<Point2>, Vec<Point2>) {
    let mut x = sample_gaussian2(&agent.belief.start_mean, &agent.belief.start_cov, rng);
    let mut states = vec![Point2::from(x)];
    let mut obs = Vec::with_capacity(len);
    for _ in 0..len {
        x = step(agent, &x, rng);
        states.push(Point2::from(x));
        obs.push(Point2::from(sample_gaussian2(&x, &agent.dynamics.obs_cov, rng)));
    }
    (states, obs)
}

fn validate(model: &MdaModel, cfg: &SampleConfig) -> Result<()> {
    if model.is_empty() {
        return Err(Error::InvalidArgument("model has no agents".into()));
    }
    if cfg.n_traj == 0 {
        return Err(Error::InvalidArgument("n_traj must be at least 1".into()));
    }
    let (lo, hi) = cfg.len_range;
    if lo == 0 || lo > hi {
        return Err(Error::InvalidArgument(format!("invalid length range {lo}..={hi}")));
    }
    if let Switching::Uniform { switch_prob } = cfg.switching {
        if !(0.0..=1.0).contains(&switch_prob) {
            return Err(Error::InvalidArgument(format!("switch probability {switch_prob} outside [0, 1]")));
        }
    }
    if model.agents.iter().any(|a| !(a.weight >= 0.0)) || model.weight_sum() <= 0.0 {
        return Err(Error::InvalidArgument("mixture weights must be non-negative with positive sum".into()));
    }
    Ok(())
}

fn sample_one(model: &MdaModel, cfg: &SampleConfig, k: usize, picker: &WeightedIndex<f64>) -> Result<SyntheticSample> {
    let mut rng = rng::stream(cfg.seed, "mda-sample", k as u64);
    let len = rng.random_range(cfg.len_range.0..=cfg.len_range.1);
    let mut active = picker.sample(&mut rng);
    let mut x = sample_gaussian2(&model.agents[active].belief.start_mean, &model.agents[active].belief.start_cov, &mut rng);
    let mut states = vec![Point2::from(x)];
    let mut points = Vec::with_capacity(len);
    let mut labels = Vec::with_capacity(len);
    for j in 0..len {
        // endpoints never host a switch
        if let Switching::Uniform { switch_prob } = cfg.switching {
            if j >= 1 && j + 1 < len && rng.random::<f64>() < switch_prob {
                active = rng.random_range(0..model.len());
            }
        }
        let agent = &model.agents[active];
        x = step(agent, &x, &mut rng);
        states.push(Point2::from(x));
        points.push(Point2::from(sample_gaussian2(&x, &agent.dynamics.obs_cov, &mut rng)));
        labels.push(active);
    }
    let traj = Trajectory::new(format!("syn{k:06}"), points)?;
    Ok(SyntheticSample {
        gt_boundaries: segmentation_points_from_labels(&labels),
        traj,
        gt_labels: labels,
        states,
    })
}

/// Trajectory `k` uses its own random stream, so output is independent of
/// thread count.
pub fn sample(model: &MdaModel, cfg: &SampleConfig) -> Result<Vec<SyntheticSample>> {
    validate(model, cfg)?;
    let weights: Vec<f64> = model.agents.iter().map(|a| a.weight).collect();
    let picker = WeightedIndex::new(&weights).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    (0..cfg.n_traj)
        .into_par_iter()
        .map(|k| sample_one(model, cfg, k, &picker))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::tests::agent;
    use super::*;
    use crate::kalman::DynamicsParams;
    use nalgebra::Matrix2;

    fn model(agents: Vec<AgentModel>) -> MdaModel {
        MdaModel {
            agents,
            max_pad: 0,
            em_trace: vec![],
        }
    }

    #[test]
    fn noiseless_recurrence_holds_exactly() {
        let mut a = agent(1.0);
        a.dynamics.transition = DynamicsParams::similarity(0.9, 0.3);
        a.dynamics.offset = Vector2::new(4.0, -2.0);
        a.dynamics.process_cov = Matrix2::zeros();
        a.dynamics.obs_cov = Matrix2::zeros();
        let m = model(vec![a]);
        let cfg = SampleConfig {
            n_traj: 3,
            len_range: (5, 9),
            switching: Switching::None,
            seed: 11,
        };
        for s in sample(&m, &cfg).unwrap() {
            assert!(s.gt_boundaries.is_empty());
            let p = s.traj.points();
            for w in p.windows(2) {
                let pred = a.dynamics.transition * w[0].to_vector() + a.dynamics.offset;
                assert_eq!(Point2::from(pred), w[1]);
            }
        }
    }

    #[test]
    fn switching_boundaries_are_interior_and_consistent() {
        let mut b = agent(0.5);
        b.dynamics.offset = Vector2::new(0.0, 3.0);
        let m = model(vec![agent(0.5), b]);
        let cfg = SampleConfig {
            n_traj: 200,
            len_range: (3, 40),
            switching: Switching::Uniform { switch_prob: 0.2 },
            seed: 5,
        };
        let samples = sample(&m, &cfg).unwrap();
        let mut any = false;
        for s in &samples {
            let n = s.traj.len();
            assert_eq!(s.gt_labels.len(), n);
            assert_eq!(s.states.len(), n + 1);
            assert!(s.gt_boundaries.windows(2).all(|w| w[0] < w[1]));
            assert!(s.gt_boundaries.iter().all(|&i| i > 0 && i + 1 < n));
            assert_eq!(s.gt_boundaries, segmentation_points_from_labels(&s.gt_labels));
            any |= !s.gt_boundaries.is_empty();
        }
        assert!(any);
        let again = sample(&m, &cfg).unwrap();
        assert!(samples.iter().zip(&again).all(|(a, b)| a.traj == b.traj));
    }

    #[test]
    fn bad_configs_rejected() {
        let m = model(vec![agent(1.0)]);
        let mut cfg = SampleConfig {
            n_traj: 0,
            len_range: (3, 5),
            switching: Switching::None,
            seed: 0,
        };
        assert!(sample(&m, &cfg).is_err());
        cfg.n_traj = 1;
        cfg.len_range = (6, 5);
        assert!(sample(&m, &cfg).is_err());
    }
}
