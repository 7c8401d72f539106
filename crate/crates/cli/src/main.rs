//! `agentseg`: learn agent models from trajectories, segment with an HMM, and
//! score against ground truth.

mod commands;
mod config;
mod eval;
mod gt;
mod render;
mod seg;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "agentseg", version, about = "Agent-model trajectory segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Root seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    All,
    Train,
    Test,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchMode {
    None,
    Uniform,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a mixture of agents with EM and write an `mda-model-v1` file.
    LearnAgents(commands::LearnArgs),
    /// Sample trajectories and ground-truth boundaries from an agent model.
    Simulate(commands::SimulateArgs),
    /// Build an HMM from agents and train it with Baum-Welch.
    TrainHmm(commands::TrainArgs),
    /// Viterbi-segment a corpus with a trained HMM.
    Segment(commands::SegmentArgs),
    /// Ramer-Douglas-Peucker baseline, single epsilon or a sweep.
    Rdp(commands::RdpArgs),
    /// Score segmentation files against ground truth.
    Evaluate(commands::EvaluateArgs),
    /// Draw each segmented trajectory as an SVG file.
    Render(commands::RenderArgs),
    /// Train and score HMMs over agent subsets of several sizes.
    Experiment(commands::ExperimentArgs),
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::LearnAgents(a) => commands::learn_agents(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::TrainHmm(a) => commands::train_hmm(a),
        Command::Segment(a) => commands::segment(a),
        Command::Rdp(a) => commands::rdp(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Render(a) => commands::render(a),
        Command::Experiment(a) => commands::experiment(a),
    }
}
