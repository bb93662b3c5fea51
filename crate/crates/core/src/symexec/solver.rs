//! A small satisfiability check: refutation by simplification and interval
//! reasoning, witnesses by sampling. `Unknown` is always a safe answer.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::term::simplify::flatten_conjuncts;
use crate::term::{eval_concrete, Env, Lemma, Simplifier, Term, TermError, Value, Var};

use super::concrete::Sampler;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverAnswer {
    Sat,
    Unsat,
    Unknown,
}

const MODEL_ATTEMPTS: usize = 256;

/// Simplifies each constraint under the atoms gathered so far. `None`
/// when one of them becomes `false`.
pub(crate) fn normalize(constraints: &[Term], lemmas: &[Lemma]) -> Result<Option<Vec<Term>>, TermError> {
    let mut facts: Vec<Term> = Vec::new();
    for c in constraints {
        let s = Simplifier::new(lemmas).with_facts(&facts).simplify(c)?;
        if s.is_false() {
            return Ok(None);
        }
        let mut atoms = Vec::new();
        flatten_conjuncts(&s, &mut atoms);
        for a in atoms {
            if !facts.contains(&a) {
                facts.push(a);
            }
        }
    }
    if refuted(&facts, lemmas)? {
        return Ok(None);
    }
    Ok(Some(facts))
}

/// Whether some fact simplifies to `false` under the others.
pub(crate) fn refuted(facts: &[Term], lemmas: &[Lemma]) -> Result<bool, TermError> {
    if facts.iter().any(Term::is_false) {
        return Ok(true);
    }
    for (i, f) in facts.iter().enumerate() {
        let others: Vec<Term> = facts
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, t)| t.clone())
            .collect();
        if Simplifier::new(lemmas).with_facts(&others).simplify(f)?.is_false() {
            return Ok(true);
        }
    }
    Ok(false)
}

fn all_hold(constraints: &[Term], env: &Env) -> bool {
    constraints
        .iter()
        .all(|c| matches!(eval_concrete(c, env), Ok(Value::Bool(true))))
}

/// Searches for an assignment satisfying every constraint.
pub fn find_model(constraints: &[Term], attempts: usize, seed: u64) -> Option<Env> {
    let mut vars: BTreeSet<Var> = BTreeSet::new();
    for c in constraints {
        vars.extend(c.free_vars());
    }
    let facts = normalize(constraints, &[]).ok().flatten()?;
    let mut sampler = Sampler::for_constraints(vars, constraints, &facts, seed);
    (0..attempts)
        .map(|_| sampler.next_env())
        .find(|env| all_hold(constraints, env))
}

/// Satisfiability of a conjunction of boolean terms.
pub fn is_satisfiable(constraints: &[Term]) -> SolverAnswer {
    is_satisfiable_with(constraints, &[])
}

pub(crate) fn is_satisfiable_with(constraints: &[Term], lemmas: &[Lemma]) -> SolverAnswer {
    let facts = match normalize(constraints, lemmas) {
        Ok(Some(f)) => f,
        Ok(None) => return SolverAnswer::Unsat,
        Err(_) => return SolverAnswer::Unknown,
    };
    if facts.is_empty() {
        return SolverAnswer::Sat;
    }
    match find_model(constraints, MODEL_ATTEMPTS, 0x5eed) {
        Some(_) => SolverAnswer::Sat,
        None => SolverAnswer::Unknown,
    }
}
