use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::claims::{Claim, ClaimSet};
use crate::term::{Lemma, Simplifier, Term};
use crate::vm::Program;

use super::concrete::{find_counterexample, prepare_claim, Counterexample};
use super::solver::{is_satisfiable_with, refuted, SolverAnswer};
use super::{describe_state, state_from, Budget, Clock, ExploreError, Explorer, SymState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VerdictKind {
    ProvedTrue,
    Error,
    Timeout,
}

impl VerdictKind {
    pub fn label(self) -> &'static str {
        match self {
            VerdictKind::ProvedTrue => "proved true",
            VerdictKind::Error => "error",
            VerdictKind::Timeout => "timeout",
        }
    }

    pub fn from_label(s: &str) -> Option<VerdictKind> {
        [VerdictKind::ProvedTrue, VerdictKind::Error, VerdictKind::Timeout]
            .into_iter()
            .find(|k| k.label() == s)
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub detail: String,
    /// Present only for errors confirmed by a concrete replay.
    pub counterexample: Option<Counterexample>,
    pub elapsed_ms: u64,
    pub paths: usize,
    pub steps: usize,
}

impl Verdict {
    fn new(kind: VerdictKind, detail: impl Into<String>) -> Verdict {
        Verdict {
            kind,
            detail: detail.into(),
            counterexample: None,
            elapsed_ms: 0,
            paths: 0,
            steps: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Entailment {
    Holds,
    Violated(String),
    Unknown(String),
}

fn obligations(cell: &str, actual: &Term, pattern: &Term, out: &mut Vec<(String, Term)>) {
    match (pattern, actual) {
        (Term::Var(v), _) if v.is_wildcard() => {}
        (Term::Tuple(ps), Term::Tuple(xs)) => {
            if ps.len() != xs.len() {
                out.push((
                    format!("{cell} has {} entries, expected {}", xs.len(), ps.len()),
                    Term::bool(false),
                ));
                return;
            }
            for (p, x) in ps.iter().zip(xs) {
                obligations(cell, x, p, out);
            }
        }
        _ => out.push((
            format!("{cell}: {actual} == {pattern}"),
            Term::eq(actual.clone(), pattern.clone()),
        )),
    }
}

/// Checks one terminal state against the claim's postcondition. Cells
/// mentioned only in the precondition must be unchanged.
pub fn check_entailment(t: &SymState, c: &Claim, lemmas: &[Lemma]) -> Entailment {
    if let Some(why) = &t.stuck {
        return Entailment::Unknown(why.clone());
    }
    match refuted(&t.path, lemmas) {
        Ok(true) => return Entailment::Holds,
        Ok(false) => {}
        Err(e) => return Entailment::Unknown(e.to_string()),
    }
    let c = match prepare_claim(c) {
        Ok(p) => p.claim,
        Err(e) => return Entailment::Unknown(e.to_string()),
    };
    let mut obs = Vec::new();
    for (cell, pre, post) in c.cells() {
        let Some(target) = post.or(pre) else { continue };
        let Some(actual) = t.cell(cell) else {
            return Entailment::Unknown(format!("cell `{cell}` has no final value"));
        };
        obligations(cell, &actual, target, &mut obs);
    }
    for p in &c.post_constraints {
        obs.push((format!("ensures {p}"), p.clone()));
    }
    let mut sim = Simplifier::new(lemmas).with_facts(&t.path);
    let mut violated = Vec::new();
    let mut stuck = Vec::new();
    for (label, ob) in obs {
        match sim.simplify(&ob) {
            Ok(r) if r.is_true() => {}
            Ok(r) if r.is_false() => violated.push(label),
            Ok(r) => stuck.push(format!("{label} (stuck at `{r}`)")),
            Err(e) => stuck.push(format!("{label} ({e})")),
        }
    }
    let state = describe_state(t);
    if !violated.is_empty() {
        let detail = format!("{} in final state {state}", violated.join("; "));
        return match is_satisfiable_with(&t.path, lemmas) {
            SolverAnswer::Sat => Entailment::Violated(detail),
            _ => Entailment::Unknown(format!("unproven obligation: {detail}")),
        };
    }
    if !stuck.is_empty() {
        return Entailment::Unknown(format!(
            "unproven obligation: {} in final state {state}",
            stuck.join("; ")
        ));
    }
    Entailment::Holds
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProveOptions {
    pub budget: Budget,
    pub prune: bool,
    pub counterexample_attempts: usize,
    pub seed: u64,
}

impl Default for ProveOptions {
    fn default() -> Self {
        ProveOptions {
            budget: Budget::default(),
            prune: true,
            counterexample_attempts: 200,
            seed: 0,
        }
    }
}

/// Proves one claim of `cs` (with its lemmas) against `program`.
pub fn prove(program: &Program, cs: &ClaimSet, claim: &str, opts: &ProveOptions, clock: &dyn Clock) -> Verdict {
    let mut v = prove_inner(program, cs, claim, opts, clock);
    v.elapsed_ms = clock.elapsed_ms();
    v
}

fn prove_inner(program: &Program, cs: &ClaimSet, name: &str, opts: &ProveOptions, clock: &dyn Clock) -> Verdict {
    let Some(claim) = cs.get(name) else {
        return Verdict::new(VerdictKind::Error, format!("no claim named `{name}`"));
    };
    let prepared = match prepare_claim(claim) {
        Ok(p) => p,
        Err(e) => return Verdict::new(VerdictKind::Error, e.to_string()),
    };
    let explorer = Explorer {
        lemmas: &cs.lemmas,
        budget: opts.budget,
        prune: opts.prune,
        clock,
    };
    let exploration = match explorer.run(program, state_from(&prepared)) {
        Ok(x) => x,
        Err(e @ (ExploreError::BudgetExceeded { .. } | ExploreError::Deadline { .. })) => {
            return Verdict::new(VerdictKind::Timeout, e.to_string())
        }
        Err(ExploreError::Term(e)) => return Verdict::new(VerdictKind::Error, e.to_string()),
    };
    let mut failures = Vec::new();
    let mut violated = false;
    for t in &exploration.terminals {
        match check_entailment(t, &prepared.claim, &cs.lemmas) {
            Entailment::Holds => {}
            Entailment::Violated(d) => {
                violated = true;
                failures.push(d);
            }
            Entailment::Unknown(d) => failures.push(d),
        }
        if clock.expired() {
            return Verdict::new(VerdictKind::Timeout, "deadline reached while checking final states");
        }
    }
    let mut v = if failures.is_empty() {
        Verdict::new(
            VerdictKind::ProvedTrue,
            format!(
                "{} final state(s) satisfy the postcondition",
                exploration.terminals.len()
            ),
        )
    } else {
        let mut v = Verdict::new(VerdictKind::Error, failures.join("\n"));
        if opts.counterexample_attempts > 0 {
            v.counterexample = find_counterexample(program, claim, opts.counterexample_attempts, opts.seed);
        }
        if violated && v.counterexample.is_none() {
            v.detail.push_str("\n(no concrete counterexample found)");
        }
        v
    };
    v.paths = exploration.terminals.len();
    v.steps = exploration.steps;
    v
}
