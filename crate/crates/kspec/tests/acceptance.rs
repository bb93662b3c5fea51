//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::thread;
use std::time::{Duration, Instant};

use common::{all_examples, corpus, example, Example};
use kspec::backend::{BackendConfig, BackendKind, StubScript};
use kspec::matrix::{run_matrix, ReportFormat, ResultMatrix, RunConfig};
use kspec::mutate::write_mutants;
use kspec::report::{render_report, without_timings};
use kspec::spec::{load_claims, load_program};
use kspec_core::claims::{claims_equal, emit_k_module, Claim, ClaimSet};
use kspec_core::mutagen::{distinguishing_tx, generate_mutants, KillOutcome, Mutant, MutationOperator};
use kspec_core::symexec::{
    build_tx, check_concrete, check_result, pre_holds, prepare_claim, prove, ConcreteOutcome, NoClock, PreparedClaim,
    ProveOptions, Sampler, VerdictKind, CONCRETE_STEP_LIMIT,
};
use kspec_core::term::{Env, Term, Value};
use kspec_core::vm::{run_transaction, Instr, Program, Status, Tx, U256};

/// Wall-clock budget for the walkthrough corpus.
const WALKTHROUGH_BUDGET: Duration = Duration::from_secs(60);
/// Per-job limit for builtin proofs.
const PROOF_LIMIT: Duration = Duration::from_secs(30);
/// Concrete transactions replayed per proved claim.
const SOUNDNESS_SAMPLES: usize = 500;
/// Give up drawing precondition-satisfying samples after this many tries.
const SOUNDNESS_DRAWS: usize = 50_000;
/// Signature `v` values range over 0..2^BRUTE_FORCE_BITS.
const BRUTE_FORCE_BITS: u32 = 8;
const MIN_MUTANTS: usize = 6;
/// Transactions sampled per claim when looking for a distinguishing input.
const DISTINGUISHING_SAMPLES: usize = 100;
const STUB_LIMIT: Duration = Duration::from_secs(2);
/// Ceiling on a stubbed job that times out.
const STUB_JOB_CEILING: Duration = Duration::from_secs(3);
const SEED: u64 = 7;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn workers() -> usize {
    thread::available_parallelism().map(|n| n.get()).unwrap_or(2).min(8)
}

fn builtin() -> BackendConfig {
    BackendConfig::new(BackendKind::Builtin, PROOF_LIMIT)
}

fn matrix(
    specs: Vec<PathBuf>,
    programs: Vec<PathBuf>,
    lemmas: Vec<PathBuf>,
    backend: BackendConfig,
) -> Result<ResultMatrix, String> {
    run_matrix(&RunConfig {
        specs,
        programs,
        lemmas,
        backend,
        parallelism: workers(),
        seed: SEED,
    })
    .map_err(|e| e.to_string())
}

fn failing(m: &ResultMatrix, program: &str) -> Vec<String> {
    m.column(program)
        .into_iter()
        .filter(|(_, r)| r.verdict != VerdictKind::ProvedTrue)
        .map(|(c, _)| c.to_string())
        .collect()
}

fn wallet_mutants() -> Vec<Mutant> {
    let p = load_program(&corpus("wallet/wallet.mvm")).unwrap();
    let ops = [
        MutationOperator::DupCall,
        MutationOperator::ConstReplace,
        MutationOperator::DropRequire,
    ];
    generate_mutants(&p, &ops).mutants
}

fn write_wallet_mutants(dir: &Path) -> Vec<PathBuf> {
    let m = kspec_core::mutagen::Mutation {
        mutants: wallet_mutants(),
        skipped: vec![],
    };
    write_mutants(&m, dir).unwrap()
}

fn walkthrough() -> Outcome {
    let examples = [
        example("simple00", "simple00", &[]),
        example("simple02", "simple02", &[]),
        example("staticarray00", "staticarray00", &[]),
        example("requires00", "requires00", &[]),
        example("staticloop00", "staticloop00", &[]),
        example("ecrecover00", "ecrecover00", &[]),
        example("storage00", "storage00", &[]),
    ];
    let start = Instant::now();
    let mut proved = 0;
    for ex in &examples {
        for (claim, r) in ex.prove_all(PROOF_LIMIT) {
            ensure(r.verdict == VerdictKind::ProvedTrue, || {
                format!("{claim} in {}: {} {}", ex.spec.display(), r.verdict, r.diagnostic)
            })?;
            proved += 1;
        }
    }
    let took = start.elapsed();
    ensure(took < WALKTHROUGH_BUDGET, || format!("took {took:?}"))?;
    Ok(format!(
        "{proved} claims over {} programs proved true in {:.2}s",
        examples.len(),
        took.as_secs_f64()
    ))
}

fn verdict_of(ex: &Example, claim: &str) -> (VerdictKind, String) {
    let r = kspec::backend::run_job(&builtin(), &ex.job(claim)).unwrap();
    (r.verdict, r.diagnostic)
}

fn rsstore_lemma() -> Outcome {
    let (v, diag) = verdict_of(&example("storage01", "storage01", &[]), "storage01");
    ensure(v == VerdictKind::Error && diag.contains("Rsstore("), || {
        format!("without the lemma: {v}: {diag}")
    })?;
    let (with, d2) = verdict_of(&example("storage01", "storage01", &["rsstore.lemma"]), "storage01");
    ensure(with == VerdictKind::ProvedTrue, || {
        format!("with the lemma: {with}: {d2}")
    })?;
    Ok("error with a stuck Rsstore term without the lemma, proved true with it".into())
}

fn chop_lemma() -> Outcome {
    let text = fs::read_to_string(corpus("storage02/chop.lemma")).unwrap();
    ensure(
        text.lines()
            .any(|l| l.trim() == "rule chop(I) => 0 requires I ==Int pow256"),
        || "chop.lemma does not hold the rule verbatim".into(),
    )?;
    let (v, diag) = verdict_of(&example("storage02", "storage02", &[]), "overflow");
    ensure(v == VerdictKind::Error && diag.contains("chop("), || {
        format!("without the lemma: {v}: {diag}")
    })?;
    let (with, d2) = verdict_of(&example("storage02", "storage02", &["chop.lemma"]), "overflow");
    ensure(with == VerdictKind::ProvedTrue, || {
        format!("with the lemma: {with}: {d2}")
    })?;
    let (nov, d3) = verdict_of(&example("storage02", "storage02", &[]), "no-overflow");
    ensure(nov == VerdictKind::ProvedTrue, || format!("no-overflow: {nov}: {d3}"))?;
    Ok("overflow: error without chop lemma, proved true with it; no-overflow needs none".into())
}

/// Claim bodies of an emitted module with names removed, sorted.
fn claim_bodies(k: &str) -> Vec<String> {
    let mut bodies = Vec::new();
    let mut cur: Option<String> = None;
    for line in k.lines() {
        if line.trim_start().starts_with("claim [") {
            bodies.extend(cur.take());
            cur = Some(String::new());
        } else if line.trim() == "endmodule" {
            bodies.extend(cur.take());
        } else if let Some(c) = cur.as_mut() {
            c.push_str(line.trim_end());
            c.push('\n');
        }
    }
    let mut bodies: Vec<String> = bodies.into_iter().map(|b| b.trim().to_string()).collect();
    bodies.sort();
    bodies
}

fn inheritance() -> Outcome {
    let short = load_claims(&corpus("requires00/requires00.yaml"), &[]).map_err(|e| e.to_string())?;
    let verbose = load_claims(&corpus("requires00/requires00-verbose.yaml"), &[]).map_err(|e| e.to_string())?;
    ensure(claims_equal(&short, &verbose), || "claim sets differ".into())?;
    let (a, b) = (emit_k_module(&short, "A"), emit_k_module(&verbose, "A"));
    let (ba, bb) = (claim_bodies(&a), claim_bodies(&b));
    ensure(!ba.is_empty() && ba == bb, || {
        format!("emitted claims differ:\n{a}\n{b}")
    })?;
    Ok(format!(
        "{} claims equal; emitted K differs only in names and order",
        short.claims.len()
    ))
}

fn set_int(env: &mut Env, name: &str, v: u64) {
    env.insert(name.to_string(), Value::int(v));
}

/// The (pre, status) pairs a claim set admits over the reduced domain.
fn admitted(program: &Program, cs: &ClaimSet, base_env: &Env, only: Option<&str>) -> BTreeSet<(u64, u64, bool)> {
    let prepared: Vec<(String, PreparedClaim)> = cs
        .claims
        .iter()
        .filter(|c| only.is_none_or(|n| c.name == n))
        .map(|c| (c.name.clone(), prepare_claim(c).unwrap()))
        .collect();
    let mut out = BTreeSet::new();
    let top = 1u64 << BRUTE_FORCE_BITS;
    for v0 in 0..top {
        for v1 in 0..top {
            let mut env = base_env.clone();
            set_int(&mut env, "V0", v0);
            set_int(&mut env, "V1", v1);
            let tx = build_tx(&prepared[0].1, &env).expect("calldata for the reduced domain");
            let r = run_transaction(program, &tx, CONCRETE_STEP_LIMIT);
            let mut ok = r.clone();
            ok.status = Status::Success;
            let mut reverted = r;
            reverted.status = Status::Revert;
            reverted.output.clear();
            reverted.storage = tx.storage.clone();
            for (_, p) in &prepared {
                if !pre_holds(p, &env) {
                    continue;
                }
                for (success, cand) in [(true, &ok), (false, &reverted)] {
                    if check_result(p, &env, &tx, cand) == Ok(None) {
                        out.insert((v0, v1, success));
                    }
                }
            }
        }
    }
    out
}

fn superfluous_conjunct() -> Outcome {
    let weak = example("ecrecoverloop01", "ecrecoverloop01", &[]);
    let strong = example("ecrecoverloop01", "ecrecoverloop01-sig1-invalid", &[]);
    let program = weak.program();
    let (wc, sc) = (weak.claims(), strong.claims());
    let mut base_env = Sampler::new(&prepare_claim(&wc.claims[0]).unwrap(), SEED).next_env();
    for (name, v) in [
        ("H", 0x1234u64),
        ("R0", 11),
        ("R1", 12),
        ("S0", 13),
        ("S1", 14),
        ("DATA_LEN", 0),
        ("DATA", 0),
    ] {
        set_int(&mut base_env, name, v);
    }
    let a = admitted(&program, &wc, &base_env, None);
    let b = admitted(&program, &sc, &base_env, None);
    ensure(a == b, || {
        format!("{} pairs differ", a.symmetric_difference(&b).count())
    })?;
    let only_weak = admitted(&program, &wc, &base_env, Some("sig1-invalid"));
    let only_strong = admitted(&program, &sc, &base_env, Some("sig1-invalid"));
    ensure(
        only_strong.is_subset(&only_weak) && only_strong.len() < only_weak.len(),
        || "the extra conjunct does not narrow sig1-invalid".into(),
    )?;
    for (claim, r) in strong.prove_all(PROOF_LIMIT) {
        ensure(r.verdict == VerdictKind::ProvedTrue, || {
            format!("strong {claim}: {} {}", r.verdict, r.diagnostic)
        })?;
    }
    let paths = |cs: &ClaimSet| prove(&program, cs, "sig1-invalid", &ProveOptions::default(), &NoClock).paths;
    let (pw, ps) = (paths(&wc), paths(&sc));
    ensure(ps <= pw, || format!("the extra conjunct adds paths: {pw} -> {ps}"))?;
    Ok(format!(
        "{} admitted (pre, status) pairs identical over 2^{} inputs; strengthened spec proves, sig1-invalid paths {pw} -> {ps}",
        a.len(),
        2 * BRUTE_FORCE_BITS
    ))
}

fn check_soundness(program: &Program, claim: &Claim) -> Result<usize, String> {
    let p = prepare_claim(claim).map_err(|e| e.to_string())?;
    let mut sampler = Sampler::new(&p, SEED);
    let mut checked = 0;
    for _ in 0..SOUNDNESS_DRAWS {
        if checked == SOUNDNESS_SAMPLES {
            break;
        }
        match check_concrete(program, &p, &sampler.next_env()).0 {
            ConcreteOutcome::Holds => checked += 1,
            ConcreteOutcome::Excluded => {}
            ConcreteOutcome::Violated(why) => return Err(format!("{}: violated: {why}", claim.name)),
            ConcreteOutcome::EvalError(e) => return Err(format!("{}: {e}", claim.name)),
        }
    }
    ensure(checked == SOUNDNESS_SAMPLES, || {
        format!("{}: only {checked} samples met the precondition", claim.name)
    })?;
    Ok(checked)
}

fn soundness() -> Outcome {
    let mut claims = 0;
    let mut txs = 0;
    for ex in all_examples() {
        let program = ex.program();
        let cs = ex.claims();
        for (name, r) in ex.prove_all(PROOF_LIMIT) {
            if r.verdict != VerdictKind::ProvedTrue {
                continue;
            }
            txs += check_soundness(&program, cs.get(&name).unwrap())?;
            claims += 1;
        }
    }
    ensure(claims > 0, || "nothing proved".into())?;
    Ok(format!(
        "{claims} proved claims, {txs} concrete transactions, 0 violations"
    ))
}

/// Transactions drawn from each claim's precondition.
fn sample_txs(cs: &ClaimSet) -> Vec<Tx> {
    let mut txs = Vec::new();
    for c in &cs.claims {
        let p = prepare_claim(c).unwrap();
        let mut s = Sampler::new(&p, SEED);
        let mut n = 0;
        for _ in 0..SOUNDNESS_DRAWS {
            if n == DISTINGUISHING_SAMPLES {
                break;
            }
            let env = s.next_env();
            if pre_holds(&p, &env) {
                if let Some(tx) = build_tx(&p, &env) {
                    txs.push(tx);
                    n += 1;
                }
            }
        }
    }
    txs
}

fn typehash_site(p: &Program) -> usize {
    let typehash =
        U256::from_str_radix("3ee892349ae4bbe61dce18f95115b5dc02daf49204cc602458cd4c1f540d56d7", 16).unwrap();
    p.instrs
        .iter()
        .position(|i| *i == Instr::Push(typehash))
        .expect("type hash push")
}

fn mutation_kill() -> Outcome {
    let base = load_program(&corpus("wallet/wallet.mvm")).unwrap();
    let mutants = wallet_mutants();
    ensure(mutants.len() >= MIN_MUTANTS, || {
        format!("only {} mutants", mutants.len())
    })?;
    for op in [
        MutationOperator::DupCall,
        MutationOperator::ConstReplace,
        MutationOperator::DropRequire,
    ] {
        ensure(mutants.iter().any(|m| m.op == op), || format!("no {} mutant", op.id()))?;
    }
    let dir = tempfile::tempdir().unwrap();
    let mut programs = vec![corpus("wallet/wallet.mvm")];
    programs.extend(write_wallet_mutants(dir.path()));
    let m = matrix(vec![corpus("wallet/wallet.yaml")], programs, vec![], builtin())?;
    ensure(m.all_proved("wallet"), || {
        format!("original fails {:?}", failing(&m, "wallet"))
    })?;

    let txs = sample_txs(&load_claims(&corpus("wallet/wallet.yaml"), &[]).unwrap());
    let (mut killed, mut equivalent) = (0, 0);
    for mu in &mutants {
        let id = mu.id();
        if distinguishing_tx(&base, &mu.program, &txs, CONCRETE_STEP_LIMIT).is_none() {
            equivalent += 1;
            continue;
        }
        ensure(m.kill(&id) == KillOutcome::Pass, || format!("{id} survives"))?;
        killed += 1;
    }

    let dup = mutants.iter().find(|m| m.op == MutationOperator::DupCall).unwrap().id();
    let dup_fails = failing(&m, &dup);
    ensure(
        !dup_fails.is_empty() && dup_fails.iter().all(|c| c.starts_with("call-")),
        || format!("{dup} fails {dup_fails:?}"),
    )?;
    let th = mutants
        .iter()
        .find(|m| m.op == MutationOperator::ConstReplace && m.site == typehash_site(&base))
        .unwrap()
        .id();
    let th_fails = failing(&m, &th);
    ensure(
        th_fails.len() * 2 > m.claims.len() && !th_fails.iter().any(|c| c == "executor-invalid"),
        || format!("{th} fails {th_fails:?}"),
    )?;
    Ok(format!(
        "{} mutants, {killed} killed, {equivalent} equivalent; {dup} fails only {}; {th} fails {} of {}",
        mutants.len(),
        dup_fails.join("/"),
        th_fails.len(),
        m.claims.len()
    ))
}

fn timeouts() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mu = wallet_mutants()
        .into_iter()
        .find(|m| m.id() == "wallet__const_replace_9")
        .ok_or("no wallet__const_replace_9 mutant")?;
    let mpath = dir.path().join("wallet__const_replace_9.mvm");
    fs::write(&mpath, mu.program.disassemble()).unwrap();
    let script = corpus("stubs/typehash-zero.stub");
    let backend = BackendConfig::new(
        BackendKind::Stub(StubScript::load(&script).map_err(|e| e.to_string())?),
        STUB_LIMIT,
    );
    let start = Instant::now();
    let m = matrix(
        vec![corpus("wallet/wallet.yaml")],
        vec![corpus("wallet/wallet.mvm"), mpath],
        vec![],
        backend,
    )?;
    let took = start.elapsed();
    ensure(m.all_proved("wallet"), || "original row not all proved".into())?;
    let row = m.column("wallet__const_replace_9");
    let proved: Vec<&str> = row
        .iter()
        .filter(|(_, r)| r.verdict == VerdictKind::ProvedTrue)
        .map(|(c, _)| *c)
        .collect();
    let timed_out = row.iter().filter(|(_, r)| r.verdict == VerdictKind::Timeout).count();
    ensure(proved == ["executor-invalid"] && timed_out == 6, || {
        format!("row: proved {proved:?}, {timed_out} timeouts")
    })?;
    let slowest = row.iter().map(|(_, r)| r.elapsed).max().unwrap();
    ensure(slowest < STUB_JOB_CEILING, || {
        format!("a timed-out job took {slowest:?}")
    })?;
    let html = render_report(&m, ReportFormat::Html);
    ensure(html.matches(">timeout</td>").count() == 6, || {
        "report does not show six timeouts".into()
    })?;
    ensure(html.contains("mutant test PASS: 6 of 7 rules failed"), || {
        "missing kill line".into()
    })?;

    let dup_script = corpus("stubs/double-call.stub");
    let backend = BackendConfig::new(
        BackendKind::Stub(StubScript::load(&dup_script).map_err(|e| e.to_string())?),
        STUB_LIMIT,
    );
    let dpath = dir.path().join("wallet__dup_call_53.mvm");
    fs::write(&dpath, "STOP\n").unwrap();
    let d = matrix(vec![corpus("wallet/wallet.yaml")], vec![dpath], vec![], backend)?;
    ensure(
        failing(&d, "wallet__dup_call_53") == ["call-failure", "call-success"],
        || "double-call row".into(),
    )?;
    Ok(format!(
        "1 proved / 6 timeout row, slowest job {:.2}s under a {}s limit, matrix {:.1}s",
        slowest.as_secs_f64(),
        STUB_LIMIT.as_secs(),
        took.as_secs_f64()
    ))
}

/// Every counterexample the prover emits for `mutant` must replay as a violation.
fn replay_counterexamples(mutant: &Program, cs: &ClaimSet) -> Result<(usize, usize), String> {
    let (mut emitted, mut replayed) = (0, 0);
    for c in &cs.claims {
        let v = prove(mutant, cs, &c.name, &ProveOptions::default(), &NoClock);
        let Some(cx) = v.counterexample else { continue };
        emitted += 1;
        let p = prepare_claim(c).unwrap();
        let r = run_transaction(mutant, &cx.tx, CONCRETE_STEP_LIMIT);
        if r == cx.result && pre_holds(&p, &cx.env) && matches!(check_result(&p, &cx.env, &cx.tx, &r), Ok(Some(_))) {
            replayed += 1;
        }
    }
    Ok((emitted, replayed))
}

fn counterexamples() -> Outcome {
    let ex = example("simple00", "simple00", &[]);
    let cs = ex.claims();
    let six = generate_mutants(&ex.program(), &[MutationOperator::OffByOne])
        .mutants
        .into_iter()
        .find(|m| m.program.instrs[0] == Instr::Push(U256::from(6u8)))
        .ok_or("no return-6 mutant")?;
    let v = prove(&six.program, &cs, "simple00", &ProveOptions::default(), &NoClock);
    ensure(v.kind == VerdictKind::Error, || format!("return-6 mutant: {}", v.kind))?;
    let cx = v.counterexample.ok_or("no counterexample for the return-6 mutant")?;
    let r = run_transaction(&six.program, &cx.tx, CONCRETE_STEP_LIMIT);
    let p = prepare_claim(cs.get("simple00").unwrap()).unwrap();
    ensure(matches!(check_result(&p, &cx.env, &cx.tx, &r), Ok(Some(_))), || {
        "replay does not violate".into()
    })?;

    let jobs: Vec<(Program, ClaimSet)> = all_examples()
        .into_iter()
        .flat_map(|ex| {
            let cs = ex.claims();
            generate_mutants(&ex.program(), &MutationOperator::ALL)
                .mutants
                .into_iter()
                .map(move |m| (m.program, cs.clone()))
        })
        .collect();
    let n = jobs.len();
    let chunk = n.div_ceil(workers());
    let totals: Vec<Result<(usize, usize), String>> = thread::scope(|s| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    let mut t = (0, 0);
                    for (prog, cs) in part {
                        let (e, r) = replay_counterexamples(prog, cs)?;
                        t = (t.0 + e, t.1 + r);
                    }
                    Ok(t)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let (mut emitted, mut replayed) = (0, 0);
    for t in totals {
        let (e, r) = t?;
        emitted += e;
        replayed += r;
    }
    ensure(emitted > 0 && emitted == replayed, || {
        format!("{replayed} of {emitted} counterexamples replay")
    })?;
    Ok(format!(
        "return-6 counterexample replays; {replayed}/{emitted} counterexamples over {n} mutants replay as violations"
    ))
}

fn call_log() -> Outcome {
    let base = example("wallet", "wallet", &[]);
    let cs = base.claims();
    let once = prove(&base.program(), &cs, "call-once", &ProveOptions::default(), &NoClock);
    ensure(once.kind == VerdictKind::ProvedTrue, || {
        format!("call-once on the original: {}", once.detail)
    })?;
    let dup = wallet_mutants()
        .into_iter()
        .find(|m| m.op == MutationOperator::DupCall)
        .unwrap();
    let v = prove(&dup.program, &cs, "call-once", &ProveOptions::default(), &NoClock);
    ensure(v.kind == VerdictKind::Error, || {
        format!("call-once on {}: {}", dup.id(), v.kind)
    })?;
    let skipped = cs.get("call-skipped").unwrap();
    ensure(skipped.post_cells.get("callLog") == Some(&Term::Tuple(vec![])), || {
        "call-skipped callLog is not ()".into()
    })?;
    let s = prove(&base.program(), &cs, "call-skipped", &ProveOptions::default(), &NoClock);
    ensure(s.kind == VerdictKind::ProvedTrue, || {
        format!("call-skipped: {}", s.detail)
    })?;
    Ok(format!(
        "call-once proves on the original and errors on {}; call-skipped proves with callLog ()",
        dup.id()
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut programs: Vec<String> = vec![corpus("wallet/wallet.mvm").display().to_string()];
    programs.extend(
        write_wallet_mutants(dir.path())
            .iter()
            .take(8)
            .map(|p| p.display().to_string()),
    );
    let spec = corpus("wallet/wallet.yaml").display().to_string();
    let run = |out: &Path| {
        let mut args = vec!["matrix", "--specs", &spec, "--programs"];
        args.extend(programs.iter().map(String::as_str));
        args.extend([
            "--backend",
            "builtin",
            "--seed",
            "11",
            "--jobs",
            "4",
            "--report",
            "csv",
            "-o",
            out.to_str().unwrap(),
        ]);
        let o = Command::new(env!("CARGO_BIN_EXE_kspec")).args(&args).output().unwrap();
        (o.status.code(), fs::read_to_string(out).unwrap_or_default())
    };
    let (c1, a) = run(&dir.path().join("a.csv"));
    let (c2, b) = run(&dir.path().join("b.csv"));
    ensure(c1 == Some(0) && c1 == c2, || format!("exit codes {c1:?} {c2:?}"))?;
    let (a, b) = (without_timings(&a), without_timings(&b));
    ensure(a.lines().filter(|l| l.starts_with("cell,")).count() == 9 * 7, || {
        "unexpected cell count".into()
    })?;
    ensure(a == b, || "reports differ".into())?;
    Ok(format!(
        "two runs give identical {}-byte CSV reports without timings",
        a.len()
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("walkthrough corpus proves", walkthrough),
        ("Rsstore lemma necessity", rsstore_lemma),
        ("chop lemma necessity", chop_lemma),
        ("inheritance equivalence", inheritance),
        ("superfluous conjunct equivalence", superfluous_conjunct),
        ("soundness of proved claims", soundness),
        ("mutation kill test", mutation_kill),
        ("timeout handling", timeouts),
        ("counterexample validity", counterexamples),
        ("call-log properties", call_log),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
