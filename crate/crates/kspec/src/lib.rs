//! File formats, prover backends, the matrix runner and the `kspec`
//! command line, on top of `kspec-core`.

pub mod backend;
pub mod cli;
pub mod matrix;
pub mod mutate;
pub mod report;
pub mod spec;

pub use kspec_core as core;
