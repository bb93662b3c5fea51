#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Duration;

use kspec::backend::{run_job, BackendConfig, BackendKind, Job, JobResult};
use kspec::spec::{load_claims, load_program};
use kspec_core::claims::ClaimSet;
use kspec_core::vm::Program;

pub fn corpus(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel)
}

/// Spec, program and lemma files of one walkthrough example.
pub struct Example {
    pub spec: PathBuf,
    pub program: PathBuf,
    pub lemmas: Vec<PathBuf>,
}

pub fn example(dir: &str, spec: &str, lemmas: &[&str]) -> Example {
    Example {
        spec: corpus(&format!("{dir}/{spec}.yaml")),
        program: corpus(&format!("{dir}/{dir}.mvm")),
        lemmas: lemmas.iter().map(|l| corpus(&format!("{dir}/{l}"))).collect(),
    }
}

/// Every spec in the corpus with the lemmas it needs.
pub fn all_examples() -> Vec<Example> {
    vec![
        example("simple00", "simple00", &[]),
        example("simple02", "simple02", &[]),
        example("staticarray00", "staticarray00", &[]),
        example("bytes00", "bytes00", &[]),
        example("requires00", "requires00", &[]),
        example("requires00", "requires00-verbose", &[]),
        example("hash00", "hash00", &[]),
        example("staticloop00", "staticloop00", &[]),
        example("ecrecover00", "ecrecover00", &[]),
        example("ecrecoverloop00", "ecrecoverloop00", &[]),
        example("ecrecoverloop01", "ecrecoverloop01", &[]),
        example("ecrecoverloop01", "ecrecoverloop01-sig1-invalid", &[]),
        example("storage00", "storage00", &[]),
        example("storage01", "storage01", &["rsstore.lemma"]),
        example("storage02", "storage02", &["chop.lemma"]),
        example("wallet", "wallet", &[]),
    ]
}

impl Example {
    pub fn claims(&self) -> ClaimSet {
        load_claims(&self.spec, &self.lemmas).unwrap()
    }

    pub fn program(&self) -> Program {
        load_program(&self.program).unwrap()
    }

    pub fn job(&self, claim: &str) -> Job {
        Job {
            claim: claim.to_string(),
            spec: self.spec.clone(),
            program: self.program.clone(),
            lemmas: self.lemmas.clone(),
        }
    }

    /// Runs every claim on the builtin prover.
    pub fn prove_all(&self, limit: Duration) -> Vec<(String, JobResult)> {
        let cfg = BackendConfig::new(BackendKind::Builtin, limit);
        self.claims()
            .names()
            .into_iter()
            .map(|c| (c.to_string(), run_job(&cfg, &self.job(c)).unwrap()))
            .collect()
    }
}
