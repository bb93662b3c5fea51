mod common;

use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use common::corpus;
use kspec::backend::{BackendConfig, BackendKind, StubScript};
use kspec::matrix::{run_matrix, MatrixError, ReportFormat, RunConfig};
use kspec::report::{parse_csv, render_report, without_timings};
use kspec_core::symexec::VerdictKind;
use proptest::prelude::*;

const CLAIMS: [&str; 7] = [
    "executor-invalid",
    "sigcheck-fail-revert",
    "ownercheck-fail-revert",
    "call-skipped",
    "call-once",
    "call-failure",
    "call-success",
];

fn stub_config(script: &str) -> BackendConfig {
    BackendConfig::new(
        BackendKind::Stub(StubScript::parse("generated", script).unwrap()),
        Duration::from_secs(2),
    )
}

fn run(
    specs: Vec<PathBuf>,
    programs: Vec<PathBuf>,
    backend: BackendConfig,
    jobs: usize,
) -> Result<kspec::matrix::ResultMatrix, MatrixError> {
    run_matrix(&RunConfig {
        specs,
        programs,
        lemmas: vec![],
        backend,
        parallelism: jobs,
        seed: 3,
    })
}

fn wallet_programs(n: usize) -> (tempfile::TempDir, Vec<PathBuf>) {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(corpus("wallet/wallet.mvm")).unwrap();
    let paths = (0..n)
        .map(|i| {
            let p = dir.path().join(format!("w{i}.mvm"));
            fs::write(&p, &src).unwrap();
            p
        })
        .collect();
    (dir, paths)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parallel_runs_match_serial(
        verdicts in prop::collection::vec(prop::sample::select(vec!["proved", "error", "timeout"]), 7),
        programs in 1usize..4,
        jobs in 2usize..9,
    ) {
        let script: String = CLAIMS.iter().zip(&verdicts).map(|(c, v)| format!("{c} * {v} 0\n")).collect();
        let (_dir, progs) = wallet_programs(programs);
        let spec = vec![corpus("wallet/wallet.yaml")];
        let serial = run(spec.clone(), progs.clone(), stub_config(&script), 1).unwrap();
        let parallel = run(spec, progs, stub_config(&script), jobs).unwrap();
        let csv = |m| without_timings(&render_report(m, ReportFormat::Csv));
        prop_assert_eq!(csv(&serial), csv(&parallel));
        prop_assert_eq!(serial.cells.len(), 7 * programs);
        for ((claim, _), r) in &serial.cells {
            let i = CLAIMS.iter().position(|c| c == claim).unwrap();
            prop_assert_eq!(r.verdict.label().split(' ').next().unwrap(), verdicts[i]);
        }
    }
}

#[test]
fn builtin_matrix_round_trips_through_csv() {
    let m = run(
        vec![corpus("requires00/requires00.yaml"), corpus("simple00/simple00.yaml")],
        vec![corpus("requires00/requires00.mvm"), corpus("simple00/simple00.mvm")],
        BackendConfig::new(BackendKind::Builtin, Duration::from_secs(30)),
        3,
    )
    .unwrap();
    assert_eq!(m.claims, ["a0gt0", "a0le0", "simple00"]);
    assert_eq!(m.cell("a0gt0", "requires00").unwrap().verdict, VerdictKind::ProvedTrue);
    assert_eq!(m.cell("simple00", "requires00").unwrap().verdict, VerdictKind::Error);
    assert!(!m.succeeded());
    assert_eq!(parse_csv(&render_report(&m, ReportFormat::Csv)).unwrap(), m);
}

#[test]
fn problems_are_reported_before_any_job_runs() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.yaml");
    fs::write(&bad, "- name: a\n  if: {match: {nonsense: X}}\n").unwrap();
    let builtin = || BackendConfig::new(BackendKind::Builtin, Duration::from_secs(5));
    let err = run(vec![bad], vec![corpus("simple00/simple00.mvm")], builtin(), 1).unwrap_err();
    assert!(matches!(err, MatrixError::CompileFailure(_)), "{err}");

    let spec = corpus("requires00/requires00.yaml");
    let err = run(vec![spec.clone(), spec.clone()], vec![], builtin(), 1).unwrap_err();
    assert!(matches!(err, MatrixError::DuplicateClaim { .. }), "{err}");

    let prog = corpus("simple00/simple00.mvm");
    let err = run(vec![spec.clone()], vec![prog.clone(), prog.clone()], builtin(), 1).unwrap_err();
    assert!(matches!(err, MatrixError::DuplicateProgram(_)), "{err}");

    let err = run(vec![spec], vec![prog], builtin(), 0).unwrap_err();
    assert!(matches!(err, MatrixError::NoWorkers));
}

#[test]
fn unscripted_jobs_become_errors() {
    let (_dir, progs) = wallet_programs(1);
    let m = run(
        vec![corpus("wallet/wallet.yaml")],
        progs,
        stub_config("call-once * proved 0\n"),
        2,
    )
    .unwrap();
    assert_eq!(m.cell("call-once", "w0").unwrap().verdict, VerdictKind::ProvedTrue);
    let r = m.cell("call-success", "w0").unwrap();
    assert_eq!(r.verdict, VerdictKind::Error);
    assert!(r.diagnostic.contains("no entry"), "{}", r.diagnostic);
}
