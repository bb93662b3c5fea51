//! Running every (claim, program) job and collecting the verdicts.

use std::collections::{BTreeMap, VecDeque};
use std::path::PathBuf;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use kspec_core::mutagen::{classify_kill, KillOutcome};
use kspec_core::symexec::VerdictKind;

use crate::backend::{run_job, BackendConfig, Job, JobResult};
use crate::spec::{load_claims, load_program, stem, LoadError};

pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(180);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Html,
    Csv,
    Md,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "html" => Ok(ReportFormat::Html),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Md),
            _ => Err(format!("unknown report format `{s}` (html, csv or md)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub specs: Vec<PathBuf>,
    pub programs: Vec<PathBuf>,
    pub lemmas: Vec<PathBuf>,
    pub backend: BackendConfig,
    pub parallelism: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixMeta {
    pub backend: String,
    pub time_limit_ms: u64,
    pub seed: u64,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResultMatrix {
    pub meta: MatrixMeta,
    pub claims: Vec<String>,
    pub programs: Vec<String>,
    /// Keyed by (claim, program).
    pub cells: BTreeMap<(String, String), JobResult>,
}

impl ResultMatrix {
    pub fn cell(&self, claim: &str, program: &str) -> Option<&JobResult> {
        self.cells.get(&(claim.to_string(), program.to_string()))
    }

    pub fn column(&self, program: &str) -> Vec<(&str, &JobResult)> {
        self.claims
            .iter()
            .filter_map(|c| self.cell(c, program).map(|r| (c.as_str(), r)))
            .collect()
    }

    pub fn kill(&self, program: &str) -> KillOutcome {
        classify_kill(self.column(program).into_iter().map(|(_, r)| r.verdict))
    }

    pub fn all_proved(&self, program: &str) -> bool {
        self.column(program)
            .iter()
            .all(|(_, r)| r.verdict == VerdictKind::ProvedTrue)
    }

    /// Base programs must prove everything; mutants must be killed.
    pub fn succeeded(&self) -> bool {
        self.programs.iter().all(|p| {
            if is_mutant(p) {
                self.kill(p) == KillOutcome::Pass
            } else {
                self.all_proved(p)
            }
        })
    }
}

/// Mutant programs are named `<base>__<op>_<site>`.
pub fn is_mutant(program: &str) -> bool {
    program.contains("__")
}

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("compile failure: {0}")]
    CompileFailure(#[from] LoadError),
    #[error("claim `{claim}` is defined in both {first} and {second}")]
    DuplicateClaim {
        claim: String,
        first: String,
        second: String,
    },
    #[error("two programs are named `{0}`")]
    DuplicateProgram(String),
    #[error("parallelism must be at least 1")]
    NoWorkers,
}

/// Compiles every input, then runs all jobs on at most `parallelism`
/// workers. Job failures become ERROR cells.
pub fn run_matrix(cfg: &RunConfig) -> Result<ResultMatrix, MatrixError> {
    if cfg.parallelism == 0 {
        return Err(MatrixError::NoWorkers);
    }
    let mut claims: Vec<(String, PathBuf)> = Vec::new();
    let mut origin: BTreeMap<String, PathBuf> = BTreeMap::new();
    for spec in &cfg.specs {
        let cs = load_claims(spec, &cfg.lemmas)?;
        for name in cs.names() {
            if let Some(first) = origin.insert(name.to_string(), spec.clone()) {
                return Err(MatrixError::DuplicateClaim {
                    claim: name.to_string(),
                    first: first.display().to_string(),
                    second: spec.display().to_string(),
                });
            }
            claims.push((name.to_string(), spec.clone()));
        }
    }
    let mut programs = Vec::new();
    for p in &cfg.programs {
        load_program(p)?;
        let name = stem(p);
        if programs.iter().any(|(n, _): &(String, PathBuf)| *n == name) {
            return Err(MatrixError::DuplicateProgram(name));
        }
        programs.push((name, p.clone()));
    }

    let mut backend = cfg.backend.clone();
    backend.seed = cfg.seed;
    let queue: Mutex<VecDeque<(String, String, Job)>> = Mutex::new(
        programs
            .iter()
            .flat_map(|(pname, ppath)| {
                claims.iter().map(move |(claim, spec)| {
                    let job = Job {
                        claim: claim.clone(),
                        spec: spec.clone(),
                        program: ppath.clone(),
                        lemmas: cfg.lemmas.clone(),
                    };
                    (claim.clone(), pname.clone(), job)
                })
            })
            .collect(),
    );
    let results: Mutex<BTreeMap<(String, String), JobResult>> = Mutex::new(BTreeMap::new());
    thread::scope(|s| {
        for _ in 0..cfg.parallelism {
            s.spawn(|| loop {
                let Some((claim, program, job)) = queue.lock().unwrap().pop_front() else {
                    break;
                };
                let start = Instant::now();
                let r = std::panic::catch_unwind(|| run_job(&backend, &job));
                let r = match r {
                    Ok(Ok(r)) => r,
                    Ok(Err(e)) => JobResult::error(start.elapsed(), e.to_string()),
                    Err(_) => JobResult::error(start.elapsed(), "job panicked"),
                };
                results.lock().unwrap().insert((claim, program), r);
            });
        }
    });
    Ok(ResultMatrix {
        meta: MatrixMeta {
            backend: backend.label(),
            time_limit_ms: backend.time_limit.as_millis() as u64,
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        claims: claims.into_iter().map(|(c, _)| c).collect(),
        programs: programs.into_iter().map(|(p, _)| p).collect(),
        cells: results.into_inner().unwrap(),
    })
}
