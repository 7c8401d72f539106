//! Run configuration, read from TOML. Command-line flags override file values.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub m_agents: usize,
    pub t_max: usize,
    pub em_iters: usize,
    pub em_tol: f64,
    pub bw_iters: usize,
    pub bw_tol: f64,
    pub freeze_emissions: bool,
    pub switch_prob: f64,
    /// Leading share of a corpus used for training.
    pub train_fraction: f64,
    pub folds: usize,
    pub emission_samples: usize,
    pub emission_len: [usize; 2],
    pub sim_len: [usize; 2],
    pub subset_runs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            m_agents: 10,
            t_max: agentseg::mda::DEFAULT_MAX_PAD,
            em_iters: 50,
            em_tol: 1e-4,
            bw_iters: 50,
            bw_tol: 1e-4,
            freeze_emissions: false,
            switch_prob: agentseg::mda::DEFAULT_SWITCH_PROB,
            train_fraction: 0.5,
            folds: 4,
            emission_samples: 1000,
            emission_len: [20, 60],
            sim_len: [20, 60],
            subset_runs: 10,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bail!("train_fraction must lie in (0, 1), got {}", self.train_fraction);
        }
        if !(0.0..=1.0).contains(&self.switch_prob) {
            bail!("switch_prob must lie in [0, 1], got {}", self.switch_prob);
        }
        if self.m_agents == 0 {
            bail!("m_agents must be at least 1");
        }
        if self.folds == 0 {
            bail!("folds must be at least 1");
        }
        if !(self.em_tol >= 0.0 && self.bw_tol >= 0.0) {
            bail!("tolerances must be non-negative");
        }
        for (name, [lo, hi]) in [("emission_len", self.emission_len), ("sim_len", self.sim_len)] {
            if lo == 0 || lo > hi {
                bail!("{name} must be a non-empty range, got [{lo}, {hi}]");
            }
        }
        Ok(())
    }
}
