//! `eval-v1`: per-trajectory and aggregate error reports.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use agentseg::metrics::{self, ErrorReport, SegPointSet};
use agentseg::Corpus;
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::seg::SegFile;

pub const EVAL_SCHEMA: &str = "eval-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub id: String,
    pub positional: f64,
    pub step: f64,
    pub n_est: usize,
    pub n_gt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trajectories: usize,
    pub positional: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn of(values: &[f64]) -> Self {
        let (mean, std) = metrics::mean_std(values);
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub source: String,
    pub method: String,
    pub aggregate: Summary,
    pub folds: Vec<Summary>,
    pub fold_positional: MeanStd,
    pub fold_step: MeanStd,
    pub skipped: Vec<String>,
    pub rows: Vec<TrajectoryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: String,
    pub runs: Vec<RunReport>,
    /// Over runs.
    pub positional: MeanStd,
    pub step: MeanStd,
}

fn summary(rows: &[TrajectoryRow]) -> Summary {
    let reports: Vec<ErrorReport> = rows
        .iter()
        .map(|r| ErrorReport {
            positional: r.positional,
            step: r.step,
            n_est: r.n_est,
            n_gt: r.n_gt,
        })
        .collect();
    let s = metrics::aggregate(&reports);
    Summary {
        trajectories: s.trajectories,
        positional: s.positional,
        step: s.step,
    }
}

/// Contiguous blocks in row order.
fn fold_summaries(rows: &[TrajectoryRow], folds: usize) -> Vec<Summary> {
    let n = rows.len();
    let folds = folds.min(n).max(1);
    (0..folds).map(|f| summary(&rows[f * n / folds..(f + 1) * n / folds])).collect()
}

pub fn evaluate_run(source: &str, seg: &SegFile, corpus: &Corpus, gt: &HashMap<String, Vec<usize>>, folds: usize) -> Result<RunReport> {
    let missing: Vec<&str> = seg
        .segments
        .iter()
        .map(|s| s.id.as_str())
        .filter(|id| corpus.get(id).is_none() || !gt.contains_key(*id))
        .collect();
    if !missing.is_empty() {
        bail!("{source}: ids missing from corpus or ground truth: {}", missing.join(", "));
    }
    let mut rows = Vec::with_capacity(seg.segments.len());
    for s in &seg.segments {
        let traj = corpus.get(&s.id).expect("checked above");
        let est = SegPointSet::new(traj, s.boundaries.clone()).with_context(|| format!("{source}: estimate for `{}`", s.id))?;
        let truth = SegPointSet::new(traj, gt[&s.id].clone()).with_context(|| format!("ground truth for `{}`", s.id))?;
        let r = metrics::evaluate(&est, &truth)?;
        rows.push(TrajectoryRow {
            id: s.id.clone(),
            positional: r.positional,
            step: r.step,
            n_est: r.n_est,
            n_gt: r.n_gt,
        });
    }
    let fold_rows = fold_summaries(&rows, folds);
    Ok(RunReport {
        source: source.to_string(),
        method: seg.method.clone(),
        aggregate: summary(&rows),
        fold_positional: MeanStd::of(&fold_rows.iter().map(|f| f.positional).collect::<Vec<_>>()),
        fold_step: MeanStd::of(&fold_rows.iter().map(|f| f.step).collect::<Vec<_>>()),
        folds: fold_rows,
        skipped: seg.skipped.iter().map(|s| s.id.clone()).collect(),
        rows,
    })
}

impl EvalReport {
    pub fn new(runs: Vec<RunReport>) -> Self {
        let pos: Vec<f64> = runs.iter().map(|r| r.aggregate.positional).collect();
        let stp: Vec<f64> = runs.iter().map(|r| r.aggregate.step).collect();
        Self {
            schema: EVAL_SCHEMA.into(),
            positional: MeanStd::of(&pos),
            step: MeanStd::of(&stp),
            runs,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    #[cfg_attr(not(test), allow(dead_code))]
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let r: EvalReport = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if r.schema != EVAL_SCHEMA {
            bail!("{}: schema `{}` is not `{EVAL_SCHEMA}`", path.display(), r.schema);
        }
        Ok(r)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<28} {:>6} {:>12} {:>10}", "source", "n", "positional", "step");
        for r in &self.runs {
            let _ = writeln!(out, "{:<28} {:>6} {:>12.3} {:>10.3}", r.source, r.aggregate.trajectories, r.aggregate.positional, r.aggregate.step);
            for (f, s) in r.folds.iter().enumerate() {
                let _ = writeln!(out, "  fold {f:<21} {:>6} {:>12.3} {:>10.3}", s.trajectories, s.positional, s.step);
            }
        }
        if self.runs.len() > 1 {
            let _ = writeln!(
                out,
                "{:<28} {:>6} {:>5.3}±{:<6.3} {:>4.3}±{:.3}",
                "mean over runs",
                self.runs.len(),
                self.positional.mean,
                self.positional.std,
                self.step.mean,
                self.step.std
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seg::Segment;
    use agentseg::{Point2, Trajectory};

    #[test]
    fn straight_line_case_and_unknown_ids() {
        let t = Trajectory::new("line", (0..12).map(|i| Point2::new(i as f64, 0.0)).collect()).unwrap();
        let corpus = Corpus::new(vec![t], "mem").unwrap();
        let gt: HashMap<String, Vec<usize>> = [("line".to_string(), vec![5])].into();
        let mut seg = SegFile::new("test");
        seg.segments.push(Segment {
            id: "line".into(),
            labels: vec![],
            boundaries: vec![7],
            loglik: None,
        });
        let run = evaluate_run("s", &seg, &corpus, &gt, 4).unwrap();
        assert_eq!((run.aggregate.positional, run.aggregate.step), (2.0, 2.0));
        assert_eq!(run.folds.len(), 1);

        seg.segments[0].id = "nope".into();
        let err = evaluate_run("s", &seg, &corpus, &gt, 4).unwrap_err().to_string();
        assert!(err.contains("nope"), "{err}");
    }

    #[test]
    fn report_round_trip() {
        let t = Trajectory::new("a", (0..6).map(|i| Point2::new(i as f64, 1.0)).collect()).unwrap();
        let corpus = Corpus::new(vec![t], "mem").unwrap();
        let gt: HashMap<String, Vec<usize>> = [("a".to_string(), vec![2])].into();
        let mut seg = SegFile::new("m");
        seg.segments.push(Segment {
            id: "a".into(),
            labels: vec![],
            boundaries: vec![],
            loglik: None,
        });
        let report = EvalReport::new(vec![evaluate_run("x", &seg, &corpus, &gt, 4).unwrap()]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.json");
        report.save(&path).unwrap();
        assert_eq!(EvalReport::load(&path).unwrap(), report);
    }
}
