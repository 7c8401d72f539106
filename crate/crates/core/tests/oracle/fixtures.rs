//! Seeded random parameters for oracle comparisons.

use agentseg::kalman::{BeliefParams, DynamicsParams};
use agentseg::mda::{AgentModel, MdaModel};
use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `L Lᵀ` with a well-conditioned random lower factor.
pub fn spd<R: Rng>(rng: &mut R, scale: f64) -> Matrix2<f64> {
    let l = Matrix2::new(rng.random_range(0.5..1.5), 0.0, rng.random_range(-0.5..0.5), rng.random_range(0.5..1.5));
    l * l.transpose() * scale
}

pub fn vec2<R: Rng>(rng: &mut R, half: f64) -> Vector2<f64> {
    Vector2::new(rng.random_range(-half..half), rng.random_range(-half..half))
}

pub fn dynamics<R: Rng>(rng: &mut R) -> DynamicsParams {
    DynamicsParams {
        transition: DynamicsParams::similarity(rng.random_range(0.8..1.1), rng.random_range(-0.3..0.3)),
        offset: vec2(rng, 3.0),
        process_cov: spd(rng, 1.0),
        obs_cov: spd(rng, 0.5),
    }
}

pub fn belief<R: Rng>(rng: &mut R) -> BeliefParams {
    BeliefParams {
        start_mean: vec2(rng, 10.0),
        start_cov: spd(rng, 4.0),
        end_mean: vec2(rng, 20.0),
        end_cov: spd(rng, 25.0),
    }
}

pub fn agent<R: Rng>(rng: &mut R, weight: f64) -> AgentModel {
    AgentModel {
        dynamics: dynamics(rng),
        belief: belief(rng),
        weight,
    }
}

pub fn model<R: Rng>(rng: &mut R, n_agents: usize, max_pad: usize) -> MdaModel {
    let raw: Vec<f64> = (0..n_agents).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    MdaModel {
        agents: raw.iter().map(|w| agent(rng, w / total)).collect(),
        max_pad,
        em_trace: vec![],
    }
}

pub fn observations<R: Rng>(rng: &mut R, tau: usize) -> Vec<Vector2<f64>> {
    let mut p = vec2(rng, 10.0);
    (0..tau)
        .map(|_| {
            p += vec2(rng, 4.0);
            p
        })
        .collect()
}
