//! Positional and step errors between two sets of segmentation points.
//!
//! Each point of one set is matched to the nearest point (by index) of the
//! other set; the positional error sums the pixel distance between matched
//! observations and the step error sums the index gap. Both directions are
//! added and divided by the total number of points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traj::Trajectory;

/// Interior segmentation point indices of one trajectory.
#[derive(Debug, Clone)]
pub struct SegPointSet<'a> {
    traj: &'a Trajectory,
    indices: Vec<usize>,
}

impl<'a> SegPointSet<'a> {
    pub fn new(traj: &'a Trajectory, indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(format!("segmentation points of `{}` not strictly increasing", traj.id())));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i + 1 >= traj.len()) {
            return Err(Error::InvalidArgument(format!(
                "segmentation point {bad} of `{}` is not interior (length {})",
                traj.id(),
                traj.len()
            )));
        }
        Ok(Self { traj, indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn trajectory(&self) -> &Trajectory {
        self.traj
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub positional: f64,
    pub step: f64,
    pub n_est: usize,
    pub n_gt: usize,
}

/// Nearest index of `targets` to `i`, ties to the smaller index. With no
/// targets, the nearer terminal of the trajectory (ties to the start).
fn nearest(targets: &[usize], i: usize, len: usize) -> usize {
    if targets.is_empty() {
        let last = len - 1;
        return if i <= last - i { 0 } else { last };
    }
    let pos = targets.partition_point(|&j| j < i);
    match (pos.checked_sub(1).map(|p| targets[p]), targets.get(pos).copied()) {
        (Some(lo), Some(hi)) => {
            if i - lo <= hi - i {
                lo
            } else {
                hi
            }
        }
        (Some(lo), None) => lo,
        (None, Some(hi)) => hi,
        (None, None) => unreachable!(),
    }
}

/// One directed pass: unnormalized `(pos, stp)` sums over the points of `s1`.
pub fn calc_error(s1: &SegPointSet, s2: &SegPointSet) -> Result<(f64, usize)> {
    if s1.traj.id() != s2.traj.id() || s1.traj.len() != s2.traj.len() {
        return Err(Error::InvalidArgument("point sets reference different trajectories".into()));
    }
    let obs = s1.traj.points();
    let mut pos = 0.0;
    let mut stp = 0;
    for &i in &s1.indices {
        let j = nearest(&s2.indices, i, obs.len());
        pos += obs[j].dist(&obs[i]);
        stp += j.abs_diff(i);
    }
    Ok((pos, stp))
}

pub fn evaluate(est: &SegPointSet, gt: &SegPointSet) -> Result<ErrorReport> {
    let (p1, s1) = calc_error(est, gt)?;
    let (p2, s2) = calc_error(gt, est)?;
    let n = est.len() + gt.len();
    let (positional, step) = if n == 0 {
        (0.0, 0.0)
    } else {
        ((p1 + p2) / n as f64, (s1 + s2) as f64 / n as f64)
    };
    Ok(ErrorReport {
        positional,
        step,
        n_est: est.len(),
        n_gt: gt.len(),
    })
}

/// Uniform mean over trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub positional: f64,
    pub step: f64,
    pub trajectories: usize,
}

pub fn aggregate(reports: &[ErrorReport]) -> ErrorSummary {
    let n = reports.len();
    if n == 0 {
        return ErrorSummary {
            positional: 0.0,
            step: 0.0,
            trajectories: 0,
        };
    }
    ErrorSummary {
        positional: reports.iter().map(|r| r.positional).sum::<f64>() / n as f64,
        step: reports.iter().map(|r| r.step).sum::<f64>() / n as f64,
        trajectories: n,
    }
}

/// Sample mean and standard deviation (`n − 1` denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
