//! Ramer-Douglas-Peucker simplification used as a shape-based segmentation
//! baseline: the interior points it keeps are the segmentation points.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{aggregate, evaluate, SegPointSet};
use crate::traj::{Corpus, Point2, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct RdpResult {
    /// Strictly increasing; always contains the first and last index.
    pub kept_indices: Vec<usize>,
    pub epsilon: f64,
}

impl RdpResult {
    /// Kept points other than the two endpoints.
    pub fn interior(&self) -> &[usize] {
        &self.kept_indices[1..self.kept_indices.len() - 1]
    }
}

/// Distance from `p` to the infinite line through `a` and `b`, or to `a`
/// when the chord is degenerate.
pub fn line_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return p.dist(a);
    }
    ((p.x - a.x) * dy - (p.y - a.y) * dx).abs() / len
}

fn keep_between(points: &[Point2], first: usize, last: usize, epsilon: f64, kept: &mut Vec<usize>) {
    if last <= first + 1 {
        return;
    }
    let (mut far, mut far_dist) = (first, f64::NEG_INFINITY);
    for i in first + 1..last {
        let d = line_distance(&points[i], &points[first], &points[last]);
        if d > far_dist {
            far = i;
            far_dist = d;
        }
    }
    if far_dist > epsilon {
        keep_between(points, first, far, epsilon, kept);
        kept.push(far);
        keep_between(points, far, last, epsilon, kept);
    }
}

pub fn simplify_points(points: &[Point2], epsilon: f64) -> Result<RdpResult> {
    if points.len() < 2 {
        return Err(Error::TooShort {
            len: points.len(),
            min: 2,
        });
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let last = points.len() - 1;
    let mut kept = vec![0];
    keep_between(points, 0, last, epsilon, &mut kept);
    kept.push(last);
    Ok(RdpResult {
        kept_indices: kept,
        epsilon,
    })
}

pub fn simplify(traj: &Trajectory, epsilon: f64) -> Result<RdpResult> {
    simplify_points(traj.points(), epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub positional: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Row minimizing the positional error (first on ties).
    pub best_positional: SweepRow,
    /// Row minimizing the step error (first on ties).
    pub best_step: SweepRow,
}

/// Evaluate every ε of `grid` against ground-truth boundaries, averaging
/// per-trajectory errors uniformly. Trajectories shorter than two points are
/// ignored.
pub fn sweep(corpus: &Corpus, gt: &HashMap<String, Vec<usize>>, grid: &[f64]) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("epsilon grid is empty".into()));
    }
    let trajs: Vec<&Trajectory> = corpus.trajectories.iter().filter(|t| t.len() >= 2).collect();
    let gts = trajs
        .iter()
        .map(|t| {
            let idx = gt
                .get(t.id())
                .ok_or_else(|| Error::InvalidArgument(format!("no ground truth for `{}`", t.id())))?;
            SegPointSet::new(t, idx.clone())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(grid.len());
    for &epsilon in grid {
        let mut reports = Vec::with_capacity(trajs.len());
        for (t, g) in trajs.iter().zip(&gts) {
            let est = SegPointSet::new(t, simplify(t, epsilon)?.interior().to_vec())?;
            reports.push(evaluate(&est, g)?);
        }
        let s = aggregate(&reports);
        rows.push(SweepRow {
            epsilon,
            positional: s.positional,
            step: s.step,
        });
    }
    let pick = |key: fn(&SweepRow) -> f64| {
        *rows
            .iter()
            .fold(None::<&SweepRow>, |best, r| match best {
                Some(b) if key(b) <= key(r) => Some(b),
                _ => Some(r),
            })
            .expect("grid not empty")
    };
    Ok(SweepTable {
        best_positional: pick(|r| r.positional),
        best_step: pick(|r| r.step),
        rows,
    })
}
