use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::*;
use crate::claims::{Claim, ClaimSet};
use crate::term::{parse_lemma, parse_term_as, Sort};
use crate::vm::assemble;

fn claim(name: &str, pre: &[(&str, &str)], wh: &[&str], post: &[(&str, &str)]) -> Claim {
    let cells = |cs: &[(&str, &str)]| {
        cs.iter()
            .map(|(c, t)| {
                let sort = crate::kyaml::cell_sort(c).unwrap();
                ((*c).to_string(), parse_term_as(t, sort).unwrap())
            })
            .collect()
    };
    Claim {
        name: name.into(),
        pre_cells: cells(pre),
        pre_constraints: wh.iter().map(|w| parse_term_as(w, Sort::Bool).unwrap()).collect(),
        post_cells: cells(post),
        post_constraints: Vec::new(),
    }
}

fn set(claims: Vec<Claim>, lemmas: &[&str]) -> ClaimSet {
    ClaimSet {
        claims,
        lemmas: lemmas.iter().map(|l| parse_lemma(l).unwrap()).collect(),
    }
}

fn verdict(src: &str, cs: &ClaimSet, name: &str) -> Verdict {
    let p = assemble("t", src).unwrap();
    prove(&p, cs, name, &ProveOptions::default(), &NoClock)
}

const CD1: &str = "#abiCallData2(\"execute(uint256)\", A0)";
const RANGE: [&str; 2] = ["0 <=Int A0", "A0 <Int pow256"];

const REQUIRES: &str = "
    CALLDATALOAD 4
    PUSH 0
    LT
    JUMPI ok
    PUSH 0
    PUSH 0
    REVERT
ok:
    PUSH 1
    RETURNW
";

#[test]
fn require_splits_into_two_paths() {
    let p = assemble("requires", REQUIRES).unwrap();
    let c = claim("c", &[("callData", CD1)], &RANGE, &[]);
    let s = init_state(&p, &c).unwrap();
    let x = explore(&p, s, &[], Budget::default()).unwrap();
    assert_eq!(x.terminals.len(), 2);
    assert_eq!(branch_count(&p), 1);
    let statuses: Vec<String> = x.terminals.iter().map(|t| t.status.to_string()).collect();
    assert!(statuses.contains(&"EVMC_REVERT".into()) && statuses.contains(&"EVMC_SUCCESS".into()));
}

#[test]
fn require_claims_prove_and_fail() {
    let good = claim(
        "gt0",
        &[("callData", CD1)],
        &["0 <Int A0", "A0 <Int pow256"],
        &[("output", "#buf(32, 1)"), ("statusCode", "EVMC_SUCCESS")],
    );
    let le0 = claim(
        "le0",
        &[("callData", CD1)],
        &["A0 ==Int 0"],
        &[("statusCode", "EVMC_REVERT")],
    );
    let wrong = claim("wrong", &[("callData", CD1)], &RANGE, &[("statusCode", "EVMC_SUCCESS")]);
    let cs = set(vec![good, le0, wrong], &[]);
    assert_eq!(verdict(REQUIRES, &cs, "gt0").kind, VerdictKind::ProvedTrue);
    assert_eq!(verdict(REQUIRES, &cs, "le0").kind, VerdictKind::ProvedTrue);
    let v = verdict(REQUIRES, &cs, "wrong");
    assert_eq!(v.kind, VerdictKind::Error);
    let cx = v.counterexample.expect("A0 = 0 reverts");
    assert_eq!(cx.env["A0"].as_int().unwrap(), &0.into());
    assert_eq!(verdict(REQUIRES, &cs, "missing").kind, VerdictKind::Error);
}

#[test]
fn unrolled_loop_adds_three() {
    let src = "
        CALLDATALOAD 4
        PUSH 3
    loop:
        DUP 1
        ISZERO
        JUMPI done
        SWAP 1
        PUSH 1
        ADD
        SWAP 1
        PUSH 1
        SWAP 1
        SUB
        JUMP loop
    done:
        POP
        RETURNW
    ";
    let c = claim(
        "loop",
        &[("callData", CD1)],
        &["0 <=Int A0", "A0 <Int pow256 -Int 3"],
        &[("output", "#buf(32, A0 +Int 3)"), ("statusCode", "EVMC_SUCCESS")],
    );
    let cs = set(vec![c], &[]);
    let v = verdict(src, &cs, "loop");
    assert_eq!(v.kind, VerdictKind::ProvedTrue, "{}", v.detail);
    assert_eq!(v.paths, 1);
}

#[test]
fn storage_overflow_needs_the_chop_lemma() {
    let src = "
        PUSH 0
        SLOAD
        PUSH 1
        ADD
        PUSH 0
        SSTORE
        STOP
    ";
    let c = claim(
        "wrap",
        &[("storage", "store(S, 0, X)")],
        &["X ==Int pow256 -Int 1"],
        &[("storage", "store(S, 0, 0)"), ("statusCode", "EVMC_SUCCESS")],
    );
    let plain = set(vec![c.clone()], &[]);
    let v = verdict(src, &plain, "wrap");
    assert_ne!(v.kind, VerdictKind::ProvedTrue);
    let with = set(vec![c], &["rule chop(I) => 0 requires I ==Int pow256"]);
    let v = verdict(src, &with, "wrap");
    assert_eq!(v.kind, VerdictKind::ProvedTrue, "{}", v.detail);
}

#[test]
fn refund_needs_the_rsstore_lemma() {
    let src = "
        PUSH 7
        PUSH 0
        SSTORE
        STOP
    ";
    let c = claim(
        "refund",
        &[("storage", "S")],
        &[],
        &[
            ("refund", "0"),
            ("statusCode", "EVMC_SUCCESS"),
            ("storage", "store(S, 0, 7)"),
        ],
    );
    let plain = set(vec![c.clone()], &[]);
    let v = verdict(src, &plain, "refund");
    assert_eq!(v.kind, VerdictKind::Error);
    assert!(v.detail.contains("unproven obligation"), "{}", v.detail);
    let with = set(
        vec![c],
        &["rule Rsstore(BYZANTIUM, NEW, CURR, ORIG) => 0 requires NEW =/=Int 0"],
    );
    let v = verdict(src, &with, "refund");
    assert_eq!(v.kind, VerdictKind::ProvedTrue, "{}", v.detail);
}

#[test]
fn constant_return() {
    let c = claim(
        "const",
        &[("callData", "#abiCallData2(\"execute()\", ())")],
        &[],
        &[("output", "#buf(32, 42)"), ("statusCode", "EVMC_SUCCESS")],
    );
    let cs = set(vec![c], &[]);
    let v = verdict("PUSH 42\nRETURNW", &cs, "const");
    assert_eq!(v.kind, VerdictKind::ProvedTrue);
    assert_eq!(v.steps, 2);
}

#[test]
fn endless_loop_times_out() {
    let c = claim("spin", &[("callData", CD1)], &RANGE, &[("statusCode", "EVMC_SUCCESS")]);
    let cs = set(vec![c], &[]);
    let v = verdict("top:\nJUMP top", &cs, "spin");
    assert_eq!(v.kind, VerdictKind::Timeout);
    let forking = "
    top:
        CALLDATALOAD 4
        JUMPI top
        JUMP top
    ";
    assert_eq!(verdict(forking, &cs, "spin").kind, VerdictKind::Timeout);
}

#[test]
fn pruning_does_not_change_verdicts() {
    let c = claim(
        "gt0",
        &[("callData", CD1)],
        &["0 <Int A0", "A0 <Int pow256"],
        &[("statusCode", "EVMC_SUCCESS")],
    );
    let cs = set(vec![c], &[]);
    let p = assemble("r", REQUIRES).unwrap();
    let on = prove(&p, &cs, "gt0", &ProveOptions::default(), &NoClock);
    let off = prove(
        &p,
        &cs,
        "gt0",
        &ProveOptions {
            prune: false,
            ..ProveOptions::default()
        },
        &NoClock,
    );
    assert_eq!(on.kind, off.kind);
    assert!(off.paths >= on.paths);
}
