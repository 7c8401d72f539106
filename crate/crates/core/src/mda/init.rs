//! k-means seeding of the mixture.

use nalgebra::{Matrix2, SVector, Vector2};
use rand::Rng;

use super::stats::{fit_similarity, TransitionStats};
use super::{AgentModel, MdaModel};
use crate::error::{Error, Result};
use crate::kalman::{BeliefParams, DynamicsParams};
use crate::linalg::{floor_cov, symmetrize};
use crate::rng;
use crate::traj::{Corpus, Trajectory};

/// Covariance floor used only for the seeded agents, in px².
pub const INIT_COV_FLOOR: f64 = 1.0;

const KMEANS_MAX_ITERS: usize = 100;

type Feature = SVector<f64, 6>;

/// Start point, end point and mean per-step displacement.
fn features(t: &Trajectory) -> Feature {
    let p = t.points();
    let first = p[0];
    let last = p[p.len() - 1];
    let steps = (p.len() - 1).max(1) as f64;
    Feature::from_column_slice(&[
        first.x,
        first.y,
        last.x,
        last.y,
        (last.x - first.x) / steps,
        (last.y - first.y) / steps,
    ])
}

fn standardize(feats: &mut [Feature]) {
    let n = feats.len() as f64;
    for d in 0..6 {
        let mean = feats.iter().map(|f| f[d]).sum::<f64>() / n;
        let var = feats.iter().map(|f| (f[d] - mean).powi(2)).sum::<f64>() / n;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for f in feats.iter_mut() {
            f[d] = (f[d] - mean) / sd;
        }
    }
}

fn nearest(centers: &[Feature], f: &Feature) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .map(|(i, c)| (i, (f - c).norm_squared()))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// k-means++ seeding then Lloyd iterations; returns a cluster per point.
fn kmeans<R: Rng>(feats: &[Feature], k: usize, rng: &mut R) -> Vec<usize> {
    let n = feats.len();
    let mut centers = vec![feats[rng.random_range(0..n)]];
    while centers.len() < k.min(n) {
        let d2: Vec<f64> = feats.iter().map(|f| nearest(&centers, f).1).collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, d) in d2.iter().enumerate() {
            if target < *d {
                pick = i;
                break;
            }
            target -= d;
        }
        centers.push(feats[pick]);
    }

    let mut assign = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITERS {
        let next: Vec<usize> = feats.iter().map(|f| nearest(&centers, f).0).collect();
        if next == assign {
            break;
        }
        assign = next;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Feature> = feats.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(f, _)| f).collect();
            if !members.is_empty() {
                *center = members.iter().fold(Feature::zeros(), |acc, f| acc + *f) / members.len() as f64;
            }
        }
    }
    assign
}

fn point_moments(points: impl Iterator<Item = Vector2<f64>>) -> (Vector2<f64>, Matrix2<f64>) {
    let pts: Vec<Vector2<f64>> = points.collect();
    let n = pts.len() as f64;
    let mean = pts.iter().sum::<Vector2<f64>>() / n;
    let cov = pts.iter().map(|p| (p - mean) * (p - mean).transpose()).sum::<Matrix2<f64>>() / n;
    (mean, floor_cov(&cov, INIT_COV_FLOOR))
}

fn seed_agent(members: &[&Trajectory], weight: f64) -> AgentModel {
    let (start_mean, start_cov) = point_moments(members.iter().map(|t| t.points()[0].to_vector()));
    let (end_mean, end_cov) = point_moments(members.iter().map(|t| t.points()[t.len() - 1].to_vector()));

    let mut trans = TransitionStats::default();
    for t in members {
        for w in t.points().windows(2) {
            trans.add_points(1.0, &w[0].to_vector(), &w[1].to_vector());
        }
    }
    let (transition, offset, resid) = match fit_similarity(&trans, &Matrix2::identity()) {
        Some((a, c, b)) => {
            let a_mat = DynamicsParams::similarity(a, c);
            let mut resid = Matrix2::zeros();
            for t in members {
                for w in t.points().windows(2) {
                    let r = w[1].to_vector() - a_mat * w[0].to_vector() - b;
                    resid += r * r.transpose();
                }
            }
            (a_mat, b, resid / trans.weight)
        }
        None => {
            let offset = if trans.weight > 0.0 {
                (trans.sum_next - trans.sum_prev) / trans.weight
            } else {
                Vector2::zeros()
            };
            (Matrix2::identity(), offset, Matrix2::zeros())
        }
    };
    let noise = floor_cov(&symmetrize(&(resid * 0.5)), INIT_COV_FLOOR);
    AgentModel {
        dynamics: DynamicsParams {
            transition,
            offset,
            process_cov: noise,
            obs_cov: noise,
        },
        belief: BeliefParams {
            start_mean,
            start_cov,
            end_mean,
            end_cov,
        },
        weight,
    }
}

/// Cluster per-trajectory features into `n_agents` groups and seed one agent
/// per group from its moments. Mixture weights start uniform; a group that
/// ends up empty is seeded from the whole corpus.
pub fn initialize(corpus: &Corpus, n_agents: usize, max_pad: usize, seed: u64) -> Result<MdaModel> {
    if n_agents == 0 || corpus.is_empty() {
        return Err(Error::InvalidArgument("initialization needs agents and trajectories".into()));
    }
    let mut feats: Vec<Feature> = corpus.trajectories.iter().map(features).collect();
    standardize(&mut feats);
    let mut rng = rng::stream(seed, "mda-init", 0);
    let assign = kmeans(&feats, n_agents, &mut rng);

    let everyone: Vec<&Trajectory> = corpus.trajectories.iter().collect();
    let agents = (0..n_agents)
        .map(|c| {
            let members: Vec<&Trajectory> = corpus.trajectories.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(t, _)| t).collect();
            let group = if members.is_empty() { &everyone } else { &members };
            seed_agent(group, 1.0 / n_agents as f64)
        })
        .collect();
    Ok(MdaModel {
        agents,
        max_pad,
        em_trace: Vec::new(),
    })
}
