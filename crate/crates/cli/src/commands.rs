//! Verb implementations.

use std::path::{Path, PathBuf};

use agentseg::experiment::{self, SubsetConfig};
use agentseg::hmm::{self, BaumWelchConfig, EmissionFit, HmmModel};
use agentseg::mda::{self, LearnConfig, MdaModel, SampleConfig, Switching};
use agentseg::{rdp as rdp_core, rng, Corpus, CorpusFormat};
use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use log::warn;
use serde::Serialize;

use crate::config::RunConfig;
use crate::eval::{evaluate_run, EvalReport};
use crate::gt::GroundTruth;
use crate::seg::{SegFile, Segment, Skipped};
use crate::{render as draw, Common, Split, SwitchMode};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

fn corpus_format(path: &Path, format: Option<Format>) -> CorpusFormat {
    match format {
        Some(Format::Csv) => CorpusFormat::Csv,
        Some(Format::Jsonl) => CorpusFormat::Jsonl,
        None => CorpusFormat::from_path(path),
    }
}

fn load_corpus(path: &Path, format: Option<Format>) -> Result<Corpus> {
    Corpus::load(path, corpus_format(path, format)).with_context(|| format!("loading corpus {}", path.display()))
}

fn settings(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Leading `train_fraction` of the corpus is the training part.
fn split(corpus: Corpus, which: Split, train_fraction: f64) -> Corpus {
    let n_train = (corpus.len() as f64 * train_fraction).round() as usize;
    let Corpus { trajectories, source } = corpus;
    let trajectories = match which {
        Split::All => trajectories,
        Split::Train => trajectories.into_iter().take(n_train).collect(),
        Split::Test => trajectories.into_iter().skip(n_train).collect(),
    };
    Corpus { trajectories, source }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    #[command(flatten)]
    common: Common,
    /// Trajectory corpus (CSV or JSONL).
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Number of agents M.
    #[arg(long)]
    agents: Option<usize>,
    /// Padding bound on each side.
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Part of the corpus to learn from.
    #[arg(long, value_enum, default_value = "train")]
    split: Split,
    /// Output `mda-model-v1` file.
    #[arg(long)]
    out: PathBuf,
}

pub fn learn_agents(a: LearnArgs) -> Result<()> {
    let cfg = settings(&a.common)?;
    let corpus = split(load_corpus(&a.corpus, a.format)?, a.split, cfg.train_fraction);
    let learn = LearnConfig {
        agents: a.agents.unwrap_or(cfg.m_agents),
        max_pad: a.t_max.unwrap_or(cfg.t_max),
        seed: rng::derive_seed(cfg.seed, "learn-agents", 0),
        max_iters: a.iters.unwrap_or(cfg.em_iters),
        tol: a.tol.unwrap_or(cfg.em_tol),
    };
    let model = mda::learn(&corpus, &learn).context("learning agents")?;
    for (i, ll) in model.em_trace.iter().enumerate() {
        println!("iter {i:>3}  loglik {ll:.6}");
    }
    model.save(&a.out)?;
    println!("wrote {} agents to {}", model.len(), a.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Agent model to sample from.
    #[arg(long)]
    model: PathBuf,
    /// Number of trajectories.
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    switching: SwitchMode,
    /// Per-step switch probability under uniform switching.
    #[arg(long)]
    switch_prob: Option<f64>,
    #[arg(long)]
    len_min: Option<usize>,
    #[arg(long)]
    len_max: Option<usize>,
    /// Output corpus; the extension picks CSV or JSONL.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth output; defaults to `<out stem>.gt.csv`.
    #[arg(long)]
    gt: Option<PathBuf>,
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let cfg = settings(&a.common)?;
    let model = MdaModel::load(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let switching = match a.switching {
        SwitchMode::None => Switching::None,
        SwitchMode::Uniform => Switching::Uniform {
            switch_prob: a.switch_prob.unwrap_or(cfg.switch_prob),
        },
    };
    let sample_cfg = SampleConfig {
        n_traj: a.n,
        len_range: (a.len_min.unwrap_or(cfg.sim_len[0]), a.len_max.unwrap_or(cfg.sim_len[1])),
        switching,
        seed: rng::derive_seed(cfg.seed, "simulate", 0),
    };
    let samples = mda::sample(&model, &sample_cfg)?;
    let gt = GroundTruth {
        rows: samples.iter().map(|s| (s.traj.id().to_string(), s.gt_boundaries.clone())).collect(),
    };
    let corpus = Corpus::new(samples.into_iter().map(|s| s.traj).collect(), a.model.display().to_string())?;
    corpus.save(&a.out, CorpusFormat::from_path(&a.out))?;
    let gt_path = a.gt.unwrap_or_else(|| {
        let stem = a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        a.out.with_file_name(format!("{stem}.gt.csv"))
    });
    gt.save(&gt_path)?;
    println!("wrote {} trajectories to {} and ground truth to {}", corpus.len(), a.out.display(), gt_path.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Agent model providing the states.
    #[arg(long)]
    model: PathBuf,
    /// Number of agents to use; all when omitted.
    #[arg(long)]
    subset_size: Option<usize>,
    /// Repeats with freshly drawn subsets (forced to 1 when all agents are used).
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    bw_iters: Option<usize>,
    #[arg(long)]
    bw_tol: Option<f64>,
    /// Keep the agent-derived emissions fixed during training.
    #[arg(long)]
    freeze_emissions: bool,
    /// Trajectories sampled per agent to fit its emission.
    #[arg(long)]
    emission_samples: Option<usize>,
    #[arg(long, value_enum, default_value = "train")]
    split: Split,
    /// Output `hmm-model-v1` file, or a directory when several runs are made.
    #[arg(long)]
    out: PathBuf,
}

pub fn train_hmm(a: TrainArgs) -> Result<()> {
    let cfg = settings(&a.common)?;
    let agents = MdaModel::load(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let corpus = split(load_corpus(&a.corpus, a.format)?, a.split, cfg.train_fraction);
    let n = agents.len();
    let size = a.subset_size.unwrap_or(n);
    if size == 0 || size > n {
        bail!("subset size {size} is not within 1..={n} agents of the model");
    }
    let runs = if size == n { 1 } else { a.runs.unwrap_or(cfg.subset_runs).max(1) };
    let bw = BaumWelchConfig {
        max_iters: a.bw_iters.unwrap_or(cfg.bw_iters),
        tol: a.bw_tol.unwrap_or(cfg.bw_tol),
        freeze_emissions: a.freeze_emissions || cfg.freeze_emissions,
    };
    if runs > 1 {
        std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    }
    for r in 0..runs {
        let subset = experiment::choose_subset(n, size, cfg.seed, r)?;
        let fit = EmissionFit {
            n_samples: a.emission_samples.unwrap_or(cfg.emission_samples),
            len_range: (cfg.emission_len[0], cfg.emission_len[1]),
            seed: rng::derive_seed(cfg.seed, &format!("subset-run-{size}"), r as u64),
        };
        let init = hmm::init_from_agents(&agents, &subset, &fit)?;
        let out = hmm::baum_welch(&corpus, &init, &bw)?;
        for id in &out.skipped {
            warn!("skipped `{id}`: too short to window");
        }
        let path = if runs > 1 { a.out.join(format!("run{r:02}.hmm")) } else { a.out.clone() };
        out.model.save(&path)?;
        let ll = out.trace.last().copied().unwrap_or(f64::NAN);
        println!("run {r}: agents {subset:?}, {} iterations, loglik {ll:.6} -> {}", out.trace.len().saturating_sub(1), path.display());
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct SegmentArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Trained `hmm-model-v1` file.
    #[arg(long)]
    hmm: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    split: Split,
    /// Output `seg-v1` file.
    #[arg(long)]
    out: PathBuf,
}

pub fn segment(a: SegmentArgs) -> Result<()> {
    let cfg = settings(&a.common)?;
    let model = HmmModel::load(&a.hmm).with_context(|| format!("loading {}", a.hmm.display()))?;
    let corpus = split(load_corpus(&a.corpus, a.format)?, a.split, cfg.train_fraction);
    let segs = experiment::segment_corpus(&corpus, &model)?;
    let mut file = SegFile::new("mda-hmm");
    for (traj, s) in corpus.trajectories.iter().zip(segs) {
        match s {
            Some(s) => file.segments.push(Segment {
                id: traj.id().to_string(),
                labels: s.agent_labels(&model),
                boundaries: s.boundaries,
                loglik: Some(s.loglik),
            }),
            None => {
                warn!("skipped `{}`: {} points, need at least 3", traj.id(), traj.len());
                file.skipped.push(Skipped {
                    id: traj.id().to_string(),
                    reason: format!("trajectory too short to window ({} points)", traj.len()),
                });
            }
        }
    }
    file.save(&a.out)?;
    println!("segmented {} trajectories ({} skipped) -> {}", file.segments.len(), file.skipped.len(), a.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct RdpArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Single threshold in pixels; writes a `seg-v1` file.
    #[arg(long, conflicts_with = "grid")]
    epsilon: Option<f64>,
    /// Comma-separated thresholds for a sweep; needs --gt.
    #[arg(long, value_delimiter = ',', requires = "gt")]
    grid: Option<Vec<f64>>,
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    split: Split,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct SweepDoc<'a> {
    schema: &'static str,
    #[serde(flatten)]
    table: &'a rdp_core::SweepTable,
}

pub fn rdp(a: RdpArgs) -> Result<()> {
    let cfg = settings(&a.common)?;
    let corpus = split(load_corpus(&a.corpus, a.format)?, a.split, cfg.train_fraction);
    match (a.epsilon, a.grid) {
        (Some(eps), None) => {
            let mut file = SegFile::new(format!("rdp epsilon={eps}"));
            for t in &corpus.trajectories {
                if t.len() < 2 {
                    file.skipped.push(Skipped {
                        id: t.id().to_string(),
                        reason: "fewer than 2 points".into(),
                    });
                    continue;
                }
                let r = rdp_core::simplify(t, eps)?;
                file.segments.push(Segment {
                    id: t.id().to_string(),
                    labels: Vec::new(),
                    boundaries: r.interior().to_vec(),
                    loglik: None,
                });
            }
            file.save(&a.out)?;
            println!("simplified {} trajectories -> {}", file.segments.len(), a.out.display());
        }
        (None, Some(grid)) => {
            let gt = GroundTruth::load(a.gt.as_deref().expect("clap requires gt"))?;
            let table = rdp_core::sweep(&corpus, &gt.to_map(), &grid)?;
            println!("{:>10} {:>12} {:>10}", "epsilon", "positional", "step");
            for r in &table.rows {
                println!("{:>10} {:>12.3} {:>10.3}", r.epsilon, r.positional, r.step);
            }
            println!("best positional: epsilon {} ({:.3})", table.best_positional.epsilon, table.best_positional.positional);
            println!("best step:       epsilon {} ({:.3})", table.best_step.epsilon, table.best_step.step);
            write_json(
                &SweepDoc {
                    schema: "rdp-sweep-v1",
                    table: &table,
                },
                &a.out,
            )?;
        }
        _ => bail!("give exactly one of --epsilon or --grid"),
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// `gt-v1` ground truth.
    #[arg(long)]
    gt: PathBuf,
    /// One or more `seg-v1` files; several are summarized as mean ± std.
    #[arg(long, num_args = 1.., required = true)]
    seg: Vec<PathBuf>,
    /// Number of contiguous folds.
    #[arg(long)]
    folds: Option<usize>,
    /// Output `eval-v1` file.
    #[arg(long)]
    out: PathBuf,
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let cfg = settings(&a.common)?;
    let corpus = load_corpus(&a.corpus, a.format)?;
    let gt = GroundTruth::load(&a.gt)?.to_map();
    let folds = a.folds.unwrap_or(cfg.folds).max(1);
    let runs = a
        .seg
        .iter()
        .map(|p| {
            let seg = SegFile::load(p)?;
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            evaluate_run(&name, &seg, &corpus, &gt, folds)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = EvalReport::new(runs);
    print!("{}", report.table());
    report.save(&a.out)
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seg: PathBuf,
    /// Output directory, one SVG per trajectory.
    #[arg(long)]
    out: PathBuf,
}

pub fn render(a: RenderArgs) -> Result<()> {
    settings(&a.common)?;
    let corpus = load_corpus(&a.corpus, a.format)?;
    let seg = SegFile::load(&a.seg)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut written = 0;
    for s in &seg.segments {
        let Some(traj) = corpus.get(&s.id) else {
            warn!("`{}` not in corpus, skipped", s.id);
            continue;
        };
        if !s.labels.is_empty() && s.labels.len() + 2 != traj.len() {
            warn!("`{}`: {} labels for {} points, skipped", s.id, s.labels.len(), traj.len());
            continue;
        }
        let path = a.out.join(format!("{}.svg", draw::file_stem(&s.id)));
        std::fs::write(&path, draw::render(traj, s)).with_context(|| format!("writing {}", path.display()))?;
        written += 1;
    }
    println!("rendered {written} trajectories into {}", a.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    /// Agent model (learned or planted).
    #[arg(long)]
    model: PathBuf,
    /// Corpus; the leading train fraction trains the HMMs, the rest is scored.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    gt: PathBuf,
    /// Comma-separated subset sizes; defaults to 5 up to the agent count.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct ExperimentDoc {
    schema: &'static str,
    results: Vec<experiment::SubsetResult>,
}

pub fn experiment(a: ExperimentArgs) -> Result<()> {
    let cfg = settings(&a.common)?;
    let agents = MdaModel::load(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let corpus = load_corpus(&a.corpus, a.format)?;
    let gt = GroundTruth::load(&a.gt)?.to_map();
    let train = split(corpus.clone(), Split::Train, cfg.train_fraction);
    let test = split(corpus, Split::Test, cfg.train_fraction);
    let n = agents.len();
    let sizes = a.sizes.unwrap_or_else(|| (n.min(5)..=n).collect());
    let sub = SubsetConfig {
        sizes,
        runs: a.runs.unwrap_or(cfg.subset_runs),
        emission: EmissionFit {
            n_samples: cfg.emission_samples,
            len_range: (cfg.emission_len[0], cfg.emission_len[1]),
            seed: 0,
        },
        baum_welch: BaumWelchConfig {
            max_iters: cfg.bw_iters,
            tol: cfg.bw_tol,
            freeze_emissions: cfg.freeze_emissions,
        },
        seed: cfg.seed,
    };
    let results = experiment::subset_sweep(&agents, &train, &test, &gt, &sub)?;
    println!("{:>6} {:>5} {:>20} {:>16}", "agents", "runs", "positional", "step");
    for r in &results {
        println!(
            "{:>6} {:>5} {:>10.3} ± {:<7.3} {:>7.3} ± {:<6.3}",
            r.size,
            r.runs.len(),
            r.positional_mean,
            r.positional_std,
            r.step_mean,
            r.step_std
        );
    }
    write_json(
        &ExperimentDoc {
            schema: "subset-sweep-v1",
            results,
        },
        &a.out,
    )
}
