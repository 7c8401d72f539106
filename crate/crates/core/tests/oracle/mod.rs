//! Reference implementations used only by tests. Each one is written from the
//! textbook definition, independently of the library code it checks.
#![allow(dead_code)]

pub mod fixtures;
pub mod gaussian;
pub mod hmm;
pub mod mda;
pub mod metrics;
pub mod mstep;
pub mod rdp;
