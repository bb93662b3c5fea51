//! Prover backends: the builtin symbolic engine, an external command, or a
//! scripted stub.

use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use kspec_core::symexec::{prove, Clock, ProveOptions, VerdictKind};
use wait_timeout::ChildExt;

use crate::spec::{load_claims, load_program, stem, LoadError};

/// Slack allowed on top of the time limit before a job is abandoned.
pub const GRACE: Duration = Duration::from_secs(1);

#[derive(Clone, Debug, PartialEq)]
pub enum BackendKind {
    Builtin,
    /// Shell command with `{spec}`, `{program}` and `{claim}` placeholders.
    External(String),
    Stub(StubScript),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub time_limit: Duration,
    pub seed: u64,
}

impl BackendConfig {
    pub fn new(kind: BackendKind, time_limit: Duration) -> BackendConfig {
        BackendConfig {
            kind,
            time_limit,
            seed: 0,
        }
    }

    /// Parses `builtin`, `exec:<command>` or `stub:<file>`.
    pub fn parse(spec: &str, time_limit: Duration) -> Result<BackendConfig, BackendError> {
        let kind = if spec == "builtin" {
            BackendKind::Builtin
        } else if let Some(cmd) = spec.strip_prefix("exec:") {
            if !cmd.contains("{spec}") || !cmd.contains("{program}") {
                return Err(BackendError::BackendUnavailable(format!(
                    "external command `{cmd}` must mention {{spec}} and {{program}}"
                )));
            }
            BackendKind::External(cmd.to_string())
        } else if let Some(path) = spec.strip_prefix("stub:") {
            BackendKind::Stub(StubScript::load(Path::new(path))?)
        } else {
            return Err(BackendError::BackendUnavailable(format!(
                "unknown backend `{spec}` (expected builtin, exec:<cmd> or stub:<file>)"
            )));
        };
        Ok(BackendConfig::new(kind, time_limit))
    }

    /// Short label for report headers.
    pub fn label(&self) -> String {
        match &self.kind {
            BackendKind::Builtin => "builtin".into(),
            BackendKind::External(cmd) => format!("exec:{cmd}"),
            BackendKind::Stub(s) => format!("stub:{}", s.source),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("stub script has no entry for claim `{claim}` on program `{program}`")]
    ScriptMissingEntry { claim: String, program: String },
    #[error("{path}:{line}: {message}")]
    StubSyntax { path: String, line: usize, message: String },
    #[error(transparent)]
    Load(#[from] LoadError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobResult {
    pub verdict: VerdictKind,
    pub elapsed: Duration,
    pub diagnostic: String,
}

impl JobResult {
    pub fn error(elapsed: Duration, diagnostic: impl Into<String>) -> JobResult {
        JobResult {
            verdict: VerdictKind::Error,
            elapsed,
            diagnostic: diagnostic.into(),
        }
    }
}

/// One (claim, program) pairing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Job {
    pub claim: String,
    pub spec: PathBuf,
    pub program: PathBuf,
    pub lemmas: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StubEntry {
    pub claim: String,
    pub program: String,
    pub verdict: VerdictKind,
    pub delay: Duration,
}

/// Lines of `claim program verdict delay_seconds`; `*` matches anything,
/// `#` starts a comment, the first matching line wins.
#[derive(Clone, Debug, PartialEq)]
pub struct StubScript {
    pub source: String,
    pub entries: Vec<StubEntry>,
}

fn parse_verdict(s: &str) -> Option<VerdictKind> {
    match s.to_ascii_lowercase().replace(['-', '_'], " ").as_str() {
        "proved" | "proved true" | "true" => Some(VerdictKind::ProvedTrue),
        "error" => Some(VerdictKind::Error),
        "timeout" => Some(VerdictKind::Timeout),
        _ => None,
    }
}

impl StubScript {
    pub fn parse(source: &str, text: &str) -> Result<StubScript, BackendError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| BackendError::StubSyntax {
                path: source.to_string(),
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [claim, program, verdict, delay] = fields[..] else {
                return Err(bad(format!("expected 4 fields, found {}", fields.len())));
            };
            let verdict = parse_verdict(verdict).ok_or_else(|| bad(format!("unknown verdict `{verdict}`")))?;
            let delay: f64 = delay
                .parse()
                .ok()
                .filter(|d: &f64| d.is_finite() && *d >= 0.0)
                .ok_or_else(|| bad(format!("bad delay `{delay}`")))?;
            entries.push(StubEntry {
                claim: claim.to_string(),
                program: program.to_string(),
                verdict,
                delay: Duration::from_secs_f64(delay),
            });
        }
        Ok(StubScript {
            source: source.to_string(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<StubScript, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::BackendUnavailable(format!("{}: {e}", path.display())))?;
        StubScript::parse(&path.display().to_string(), &text)
    }

    pub fn lookup(&self, claim: &str, program: &str) -> Option<&StubEntry> {
        self.entries
            .iter()
            .find(|e| (e.claim == "*" || e.claim == claim) && (e.program == "*" || e.program == program))
    }
}

/// Wall-clock deadline for the builtin prover.
pub struct Deadline {
    start: Instant,
    limit: Duration,
}

impl Deadline {
    pub fn new(limit: Duration) -> Deadline {
        Deadline {
            start: Instant::now(),
            limit,
        }
    }
}

impl Clock for Deadline {
    fn elapsed_ms(&self) -> u64 {
        self.start.elapsed().as_millis() as u64
    }

    fn expired(&self) -> bool {
        self.start.elapsed() >= self.limit
    }
}

impl fmt::Display for JobResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({:.1}s)", self.verdict, self.elapsed.as_secs_f64())
    }
}

fn timeout(limit: Duration, detail: &str) -> JobResult {
    JobResult {
        verdict: VerdictKind::Timeout,
        elapsed: limit,
        diagnostic: format!("time limit of {:.1}s reached{detail}", limit.as_secs_f64()),
    }
}

fn run_builtin(cfg: &BackendConfig, job: &Job) -> Result<JobResult, BackendError> {
    let cs = load_claims(&job.spec, &job.lemmas)?;
    let program = load_program(&job.program)?;
    let opts = ProveOptions {
        seed: cfg.seed,
        ..ProveOptions::default()
    };
    let limit = cfg.time_limit;
    let claim = job.claim.clone();
    let (tx, rx) = mpsc::channel();
    let start = Instant::now();
    // Detached so a runaway proof cannot hold the caller past the limit;
    // the deadline clock stops it soon after.
    thread::spawn(move || {
        let v = prove(&program, &cs, &claim, &opts, &Deadline::new(limit));
        let _ = tx.send(v);
    });
    let v = match rx.recv_timeout(limit + GRACE) {
        Ok(v) => v,
        Err(mpsc::RecvTimeoutError::Timeout) => return Ok(timeout(limit, "")),
        Err(mpsc::RecvTimeoutError::Disconnected) => {
            return Ok(JobResult::error(start.elapsed(), "prover crashed"));
        }
    };
    let mut diagnostic = v.detail.clone();
    if let Some(cx) = &v.counterexample {
        diagnostic.push_str(&format!("\ncounterexample: {}", describe_counterexample(cx)));
    }
    let elapsed = start.elapsed();
    Ok(JobResult {
        verdict: v.kind,
        elapsed: if v.kind == VerdictKind::Timeout {
            elapsed.min(limit)
        } else {
            elapsed
        },
        diagnostic,
    })
}

pub fn describe_counterexample(cx: &kspec_core::symexec::Counterexample) -> String {
    let vars: Vec<String> = cx.env.iter().map(|(k, v)| format!("{k} = {v}")).collect();
    format!(
        "{} | calldata 0x{} | {}",
        vars.join(", "),
        cx.tx.calldata.iter().map(|b| format!("{b:02x}")).collect::<String>(),
        cx.reason
    )
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

fn run_external(cfg: &BackendConfig, template: &str, job: &Job) -> Result<JobResult, BackendError> {
    let cmd = template
        .replace("{spec}", &shell_quote(&job.spec.display().to_string()))
        .replace("{program}", &shell_quote(&job.program.display().to_string()))
        .replace("{claim}", &shell_quote(&job.claim));
    let start = Instant::now();
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| BackendError::BackendUnavailable(format!("cannot start `{cmd}`: {e}")))?;
    let drain = |pipe: Option<Box<dyn Read + Send>>| {
        thread::spawn(move || {
            let mut buf = String::new();
            if let Some(mut p) = pipe {
                let _ = p.read_to_string(&mut buf);
            }
            buf
        })
    };
    let out = drain(child.stdout.take().map(|p| Box::new(p) as Box<dyn Read + Send>));
    let err = drain(child.stderr.take().map(|p| Box::new(p) as Box<dyn Read + Send>));
    let status = child
        .wait_timeout(cfg.time_limit)
        .map_err(|e| BackendError::BackendUnavailable(e.to_string()))?;
    let Some(status) = status else {
        let _ = child.kill();
        let _ = child.wait();
        return Ok(timeout(cfg.time_limit, &format!(" running `{cmd}`")));
    };
    let elapsed = start.elapsed();
    let mut diagnostic = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    if !stderr.is_empty() {
        if !diagnostic.is_empty() && !diagnostic.ends_with('\n') {
            diagnostic.push('\n');
        }
        diagnostic.push_str(&stderr);
    }
    let verdict = if status.success() {
        VerdictKind::ProvedTrue
    } else {
        VerdictKind::Error
    };
    if !status.success() {
        diagnostic = format!("{status}\n{diagnostic}");
    }
    Ok(JobResult {
        verdict,
        elapsed,
        diagnostic: diagnostic.trim_end().to_string(),
    })
}

fn run_stub(cfg: &BackendConfig, script: &StubScript, job: &Job) -> Result<JobResult, BackendError> {
    let program = stem(&job.program);
    let entry = script
        .lookup(&job.claim, &program)
        .ok_or_else(|| BackendError::ScriptMissingEntry {
            claim: job.claim.clone(),
            program: program.clone(),
        })?;
    if entry.delay >= cfg.time_limit {
        thread::sleep(cfg.time_limit);
        return Ok(timeout(cfg.time_limit, " (scripted)"));
    }
    thread::sleep(entry.delay);
    Ok(JobResult {
        verdict: entry.verdict,
        elapsed: entry.delay,
        diagnostic: format!("scripted by {}", script.source),
    })
}

/// Runs one job to completion or to the time limit.
pub fn run_job(cfg: &BackendConfig, job: &Job) -> Result<JobResult, BackendError> {
    for p in [&job.spec, &job.program].into_iter().chain(&job.lemmas) {
        if !matches!(cfg.kind, BackendKind::Stub(_)) && !p.exists() {
            return Err(LoadError::Io {
                path: p.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            }
            .into());
        }
    }
    match &cfg.kind {
        BackendKind::Builtin => run_builtin(cfg, job),
        BackendKind::External(t) => run_external(cfg, t, job),
        BackendKind::Stub(s) => run_stub(cfg, s, job),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stub_lines() {
        let s = StubScript::parse(
            "t",
            "# comment\ncall-failure call_7 error 2\n* call_7 proved 0.5  # rest\n* * timeout 10\n",
        )
        .unwrap();
        assert_eq!(s.lookup("call-failure", "call_7").unwrap().verdict, VerdictKind::Error);
        assert_eq!(
            s.lookup("call-failure", "call_7").unwrap().delay,
            Duration::from_secs(2)
        );
        assert_eq!(s.lookup("other", "call_7").unwrap().verdict, VerdictKind::ProvedTrue);
        assert_eq!(s.lookup("other", "x").unwrap().verdict, VerdictKind::Timeout);
        assert!(StubScript::parse("t", "a b c").is_err());
        assert!(StubScript::parse("t", "a b maybe 1").is_err());
        assert!(StubScript::parse("t", "a b error -1").is_err());
    }

    #[test]
    fn backend_strings() {
        let l = Duration::from_secs(1);
        assert_eq!(BackendConfig::parse("builtin", l).unwrap().kind, BackendKind::Builtin);
        assert!(matches!(
            BackendConfig::parse("exec:prove {spec} {program}", l).unwrap().kind,
            BackendKind::External(_)
        ));
        assert!(BackendConfig::parse("exec:prove", l).is_err());
        assert!(BackendConfig::parse("stub:/nonexistent/file", l).is_err());
        assert!(BackendConfig::parse("kprove", l).is_err());
    }

    #[test]
    fn quoting() {
        assert_eq!(shell_quote("a b"), "'a b'");
        assert_eq!(shell_quote("it's"), r"'it'\''s'");
    }
}
