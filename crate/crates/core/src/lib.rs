//! Semantic segmentation of 2-D trajectories with learned agent models.
//!
//! The pipeline learns a mixture of linear-dynamics agents from a corpus
//! ([`mda`]), turns the agents into the states of an HMM over three-point
//! windows ([`hmm`]), and decodes each trajectory into agent-labelled spans.
//! [`rdp`] provides the shape-based baseline and [`metrics`] the positional
//! and step errors used to compare them.

pub mod error;
pub mod experiment;
pub mod hmm;
pub mod kalman;
pub mod linalg;
pub mod mda;
pub mod metrics;
pub mod rdp;
pub mod rng;
mod textdoc;
pub mod traj;

pub use error::{Error, Result};
pub use traj::{Corpus, CorpusFormat, Point2, Trajectory, Window6};
