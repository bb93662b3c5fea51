//! Core of the kspec toolchain: terms, K-YAML spec blocks, claims, the
//! miniature stack machine and the symbolic prover that checks claims
//! against it.
//!
//! The crate is `no_std` and needs only `alloc`. File IO, process control
//! and wall-clock time live in the `kspec` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod claims;
pub mod kyaml;
pub mod mutagen;
pub mod symexec;
pub mod term;
pub mod vm;
