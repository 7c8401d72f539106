//! Evaluation harness: segment a held-out corpus with HMMs built from subsets
//! of the agents and score the result against ground truth.

use std::collections::HashMap;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::{self, BaumWelchConfig, EmissionFit, HmmModel, Segmentation};
use crate::mda::MdaModel;
use crate::metrics::{aggregate, evaluate, mean_std, ErrorReport, ErrorSummary, SegPointSet};
use crate::rng;
use crate::traj::{Corpus, Trajectory};

/// Viterbi over every trajectory; `None` for those too short to window.
pub fn segment_corpus(corpus: &Corpus, model: &HmmModel) -> Result<Vec<Option<Segmentation>>> {
    corpus
        .trajectories
        .par_iter()
        .map(|t| if t.len() < 3 { Ok(None) } else { hmm::viterbi(t, model).map(Some) })
        .collect()
}

/// Per-trajectory reports for the trajectories that have an estimate.
pub fn score(corpus: &Corpus, estimates: &[Option<Vec<usize>>], gt: &HashMap<String, Vec<usize>>) -> Result<Vec<ErrorReport>> {
    corpus
        .trajectories
        .iter()
        .zip(estimates)
        .filter_map(|(t, est)| est.as_ref().map(|e| (t, e)))
        .map(|(t, est)| {
            let g = gt
                .get(t.id())
                .ok_or_else(|| Error::InvalidArgument(format!("no ground truth for `{}`", t.id())))?;
            evaluate(&SegPointSet::new(t, est.clone())?, &SegPointSet::new(t, g.clone())?)
        })
        .collect()
}

/// `k` distinct agents out of `n`, ascending, drawn from the named stream.
pub fn choose_subset(n: usize, k: usize, seed: u64, run: usize) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("subset size {k} not in 1..={n}")));
    }
    let mut rng = rng::stream(seed, &format!("agent-subset-{k}"), run as u64);
    let mut picked = index::sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

#[derive(Debug, Clone)]
pub struct SubsetConfig {
    pub sizes: Vec<usize>,
    /// Repeats for sizes below the full agent count.
    pub runs: usize,
    pub emission: EmissionFit,
    pub baum_welch: BaumWelchConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsetResult {
    pub size: usize,
    pub runs: Vec<ErrorSummary>,
    pub positional_mean: f64,
    pub positional_std: f64,
    pub step_mean: f64,
    pub step_std: f64,
}

/// Train on `train`, segment `test`, for every subset size.
pub fn run_one(agents: &MdaModel, subset: &[usize], train: &Corpus, test: &Corpus, gt: &HashMap<String, Vec<usize>>, cfg: &SubsetConfig, run_seed: u64) -> Result<ErrorSummary> {
    let fit = EmissionFit {
        seed: run_seed,
        ..cfg.emission.clone()
    };
    let init = hmm::init_from_agents(agents, subset, &fit)?;
    let trained = hmm::baum_welch(train, &init, &cfg.baum_welch)?.model;
    let segs = segment_corpus(test, &trained)?;
    let est: Vec<Option<Vec<usize>>> = segs.into_iter().map(|s| s.map(|s| s.boundaries)).collect();
    Ok(aggregate(&score(test, &est, gt)?))
}

pub fn subset_sweep(agents: &MdaModel, train: &Corpus, test: &Corpus, gt: &HashMap<String, Vec<usize>>, cfg: &SubsetConfig) -> Result<Vec<SubsetResult>> {
    let n = agents.len();
    cfg.sizes
        .iter()
        .map(|&size| {
            let runs = if size == n { 1 } else { cfg.runs.max(1) };
            let summaries = (0..runs)
                .map(|r| {
                    let subset = choose_subset(n, size, cfg.seed, r)?;
                    let run_seed = rng::derive_seed(cfg.seed, &format!("subset-run-{size}"), r as u64);
                    run_one(agents, &subset, train, test, gt, cfg, run_seed)
                })
                .collect::<Result<Vec<_>>>()?;
            let (pm, ps) = mean_std(&summaries.iter().map(|s| s.positional).collect::<Vec<_>>());
            let (sm, ss) = mean_std(&summaries.iter().map(|s| s.step).collect::<Vec<_>>());
            Ok(SubsetResult {
                size,
                runs: summaries,
                positional_mean: pm,
                positional_std: ps,
                step_mean: sm,
                step_std: ss,
            })
        })
        .collect()
}

/// Ground-truth map keyed by trajectory id.
pub fn gt_map<'a>(items: impl IntoIterator<Item = (&'a Trajectory, &'a [usize])>) -> HashMap<String, Vec<usize>> {
    items.into_iter().map(|(t, b)| (t.id().to_string(), b.to_vec())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_sorted_distinct_and_reproducible() {
        for run in 0..5 {
            let s = choose_subset(10, 6, 3, run).unwrap();
            assert_eq!(s.len(), 6);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(s, choose_subset(10, 6, 3, run).unwrap());
        }
        assert_eq!(choose_subset(4, 4, 0, 0).unwrap(), vec![0, 1, 2, 3]);
        assert!(choose_subset(4, 5, 0, 0).is_err());
    }
}
