//! The `kspec` command line. Exit codes: 0 success, 1 a claim failed,
//! 2 usage or input errors.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use kspec_core::claims::emit_k_module;
use kspec_core::mutagen::{generate_mutants, sample_mutants, MutationOperator};
use kspec_core::symexec::VerdictKind;
use kspec_core::vm::{run_transaction, Tx, U256};

use crate::backend::{run_job, BackendConfig, Job};
use crate::matrix::{run_matrix, ReportFormat, RunConfig};
use crate::mutate::write_mutants;
use crate::report::render_report;
use crate::spec::{load_claims, load_program, stem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "kspec",
    version,
    about = "Check K-YAML reachability claims against stack-machine programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct BackendArgs {
    /// builtin, exec:<command with {spec} {program} {claim}> or stub:<script>
    #[arg(long, env = "KSPEC_BACKEND", default_value = "builtin")]
    pub backend: String,
    /// Per-job time limit in seconds
    #[arg(long, default_value_t = 180.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl BackendArgs {
    fn config(&self) -> Result<BackendConfig, String> {
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            return Err("--timeout must be positive".into());
        }
        let mut cfg =
            BackendConfig::parse(&self.backend, Duration::from_secs_f64(self.timeout)).map_err(|e| e.to_string())?;
        cfg.seed = self.seed;
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Emit the claims of a spec as a K module
    Compile {
        spec: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Module name (default: upper-cased file stem with -SPEC)
        #[arg(long)]
        module: Option<String>,
    },
    /// Prove the claims of one spec against one program
    Prove {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        claim: Option<String>,
        #[arg(long, num_args = 1..)]
        lemmas: Vec<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Write mutants of a program
    Mutate {
        program: PathBuf,
        /// Comma-separated operators (DUP_CALL, CONST_REPLACE, ...); all by default
        #[arg(long, value_delimiter = ',')]
        ops: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep at most this many mutants per operator, chosen by the seed
        #[arg(long)]
        per_op: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Prove every claim of the specs against every program
    Matrix {
        #[arg(long, num_args = 1.., required = true)]
        specs: Vec<PathBuf>,
        #[arg(long, num_args = 0..)]
        programs: Vec<PathBuf>,
        #[arg(long, num_args = 1..)]
        lemmas: Vec<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(short = 'j', long, default_value_t = 1)]
        jobs: usize,
        /// html, csv or md
        #[arg(long, default_value = "html")]
        report: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Execute a program on concrete calldata
    Run {
        program: PathBuf,
        /// Calldata as hex, with or without 0x
        #[arg(long, default_value = "")]
        calldata: String,
        /// Storage entries as slot=value
        #[arg(long, value_delimiter = ',')]
        storage: Vec<String>,
        /// Return codes of successive calls
        #[arg(long, value_delimiter = ',')]
        call_returns: Vec<String>,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
    },
}

fn word(s: &str) -> Result<U256, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x") {
        Some(hex) => U256::from_str_radix(hex, 16),
        None => U256::from_str_radix(s, 10),
    };
    parsed.map_err(|_| format!("`{s}` is not a 256-bit number"))
}

fn hex_bytes(s: &str) -> Result<Vec<u8>, String> {
    let s = s.trim().trim_start_matches("0x");
    if !s.len().is_multiple_of(2) {
        return Err("calldata hex has an odd number of digits".into());
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).map_err(|_| format!("bad hex near `{}`", &s[i..])))
        .collect()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn default_module(spec: &Path) -> String {
    format!("{}-SPEC", stem(spec).to_ascii_uppercase().replace('_', "-"))
}

/// Runs the command line and returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "kspec: {msg}");
            EXIT_USAGE
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    let io = |e: std::io::Error| e.to_string();
    match cli.command {
        Command::Compile { spec, output, module } => {
            let cs = load_claims(&spec, &[]).map_err(|e| e.to_string())?;
            let name = module.unwrap_or_else(|| default_module(&spec));
            let text = emit_k_module(&cs, &name);
            match output {
                Some(p) => fs::write(&p, text).map_err(io)?,
                None => out.write_all(text.as_bytes()).map_err(io)?,
            }
            Ok(EXIT_OK)
        }
        Command::Prove {
            spec,
            program,
            claim,
            lemmas,
            backend,
        } => {
            let cfg = backend.config()?;
            let cs = load_claims(&spec, &lemmas).map_err(|e| e.to_string())?;
            load_program(&program).map_err(|e| e.to_string())?;
            let names: Vec<String> = match claim {
                Some(c) if cs.get(&c).is_none() => return Err(format!("no claim named `{c}` in {}", spec.display())),
                Some(c) => vec![c],
                None => cs.names().into_iter().map(String::from).collect(),
            };
            let mut all = true;
            for name in names {
                let job = Job {
                    claim: name.clone(),
                    spec: spec.clone(),
                    program: program.clone(),
                    lemmas: lemmas.clone(),
                };
                let r = run_job(&cfg, &job).map_err(|e| e.to_string())?;
                writeln!(out, "{name}: {r}").map_err(io)?;
                if r.verdict != VerdictKind::ProvedTrue {
                    all = false;
                    for line in r.diagnostic.lines() {
                        writeln!(out, "    {line}").map_err(io)?;
                    }
                }
            }
            Ok(if all { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Mutate {
            program,
            ops,
            seed,
            per_op,
            output,
        } => {
            let p = load_program(&program).map_err(|e| e.to_string())?;
            let ops: Vec<MutationOperator> = if ops.is_empty() {
                MutationOperator::ALL.to_vec()
            } else {
                ops.iter()
                    .map(|o| {
                        o.parse()
                            .map_err(|e: kspec_core::mutagen::UnknownOperator| e.to_string())
                    })
                    .collect::<Result<_, _>>()?
            };
            let m = match per_op {
                Some(k) => sample_mutants(&p, &ops, k, seed),
                None => generate_mutants(&p, &ops),
            };
            for s in &m.skipped {
                writeln!(err, "warning: {s}").map_err(io)?;
            }
            let paths = write_mutants(&m, &output).map_err(io)?;
            for path in paths {
                writeln!(out, "{}", path.display()).map_err(io)?;
            }
            Ok(EXIT_OK)
        }
        Command::Matrix {
            specs,
            programs,
            lemmas,
            backend,
            jobs,
            report,
            output,
        } => {
            let fmt: ReportFormat = report.parse()?;
            if jobs == 0 {
                return Err("--jobs must be at least 1".into());
            }
            let cfg = RunConfig {
                specs,
                programs,
                lemmas,
                backend: backend.config()?,
                parallelism: jobs,
                seed: backend.seed,
            };
            if cfg.programs.is_empty() {
                writeln!(err, "warning: no programs given; the matrix is empty").map_err(io)?;
            }
            let m = run_matrix(&cfg).map_err(|e| e.to_string())?;
            fs::write(&output, render_report(&m, fmt)).map_err(io)?;
            for p in &m.programs {
                let proved = m
                    .column(p)
                    .iter()
                    .filter(|(_, r)| r.verdict == VerdictKind::ProvedTrue)
                    .count();
                let tag = if crate::matrix::is_mutant(p) {
                    format!("mutant test {}", m.kill(p))
                } else if m.all_proved(p) {
                    "all proved".to_string()
                } else {
                    "NOT all proved".to_string()
                };
                writeln!(out, "{p}: {proved}/{} proved true, {tag}", m.claims.len()).map_err(io)?;
            }
            Ok(if m.succeeded() { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Run {
            program,
            calldata,
            storage,
            call_returns,
            steps,
        } => {
            let p = load_program(&program).map_err(|e| e.to_string())?;
            let mut slots = BTreeMap::new();
            for entry in storage.iter().filter(|s| !s.is_empty()) {
                let (k, v) = entry
                    .split_once('=')
                    .ok_or_else(|| format!("storage entry `{entry}` is not slot=value"))?;
                slots.insert(word(k)?, word(v)?);
            }
            let codes = call_returns
                .iter()
                .filter(|s| !s.is_empty())
                .map(|s| word(s))
                .collect::<Result<Vec<_>, _>>()?;
            let tx = Tx::new(hex_bytes(&calldata)?)
                .with_storage(slots)
                .with_call_returns(codes);
            let r = run_transaction(&p, &tx, steps);
            writeln!(out, "status: {}", r.status).map_err(io)?;
            if let Some(f) = r.fault {
                writeln!(out, "fault: {f}").map_err(io)?;
            }
            writeln!(out, "output: 0x{}", hex(&r.output)).map_err(io)?;
            for (k, v) in &r.storage {
                writeln!(out, "storage[{k}] = {v}").map_err(io)?;
            }
            writeln!(out, "refund: {}", r.refund).map_err(io)?;
            for c in &r.call_log {
                writeln!(
                    out,
                    "call #{} at {}: dest {} value {} gas {} args {}+{} ret {}+{}",
                    c.index, c.pc, c.dest, c.value, c.gas, c.arg_offset, c.arg_len, c.ret_offset, c.ret_len
                )
                .map_err(io)?;
            }
            writeln!(out, "steps: {}", r.steps).map_err(io)?;
            Ok(EXIT_OK)
        }
    }
}
