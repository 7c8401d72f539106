#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use agentseg::kalman::{BeliefParams, DynamicsParams};
use agentseg::mda::{AgentModel, MdaModel};
use nalgebra::{Matrix2, Vector2};

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agentseg")).args(args).output().expect("failed to start agentseg")
}

pub fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "agentseg {args:?} failed:\n{}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn walker(start: Vector2<f64>, velocity: Vector2<f64>, start_spread: f64, weight: f64) -> AgentModel {
    AgentModel {
        dynamics: DynamicsParams {
            transition: DynamicsParams::similarity(1.0, 0.0),
            offset: velocity,
            process_cov: Matrix2::identity() * 0.5,
            obs_cov: Matrix2::identity() * 0.5,
        },
        belief: BeliefParams {
            start_mean: start,
            start_cov: Matrix2::identity() * start_spread * start_spread,
            end_mean: start + velocity * 40.0,
            end_cov: Matrix2::identity() * 200.0 * 200.0,
        },
        weight,
    }
}

/// `n` agents walking at `speed` px/frame in evenly spread headings from a
/// shared, broad start region.
pub fn compass_agents(n: usize, speed: f64) -> MdaModel {
    let agents = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            walker(Vector2::new(0.0, 0.0), Vector2::new(theta.cos(), theta.sin()) * speed, 150.0, 1.0 / n as f64)
        })
        .collect();
    MdaModel {
        agents,
        max_pad: 2,
        em_trace: vec![],
    }
}

/// Four agents with start regions 600 px apart, each heading elsewhere.
pub fn separated_agents() -> MdaModel {
    let starts = [(0.0, 0.0), (600.0, 0.0), (600.0, 600.0), (0.0, 600.0)];
    let agents = starts
        .iter()
        .enumerate()
        .map(|(k, &(x, y))| {
            let theta = std::f64::consts::FRAC_PI_2 * k as f64;
            walker(Vector2::new(x, y), Vector2::new(theta.cos(), theta.sin()) * 8.0, 40.0, 0.25)
        })
        .collect();
    MdaModel {
        agents,
        max_pad: 2,
        em_trace: vec![],
    }
}
