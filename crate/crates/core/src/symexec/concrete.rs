//! Concrete instances of claims: building transactions from variable
//! assignments, checking results, sampling and counterexample search.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::claims::Claim;
use crate::term::matching::subst;
use crate::term::simplify::flatten_conjuncts;
use crate::term::{eval_concrete, match_pattern, Bindings, Env, Simplifier, Sort, Sym, Term, Value, Var};
use crate::vm::{big_to_word, run_transaction, word_to_big, Program, Status, Tx, TxResult, U256};

/// Instruction limit for concrete replays.
pub const CONCRETE_STEP_LIMIT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InitError {
    #[error("cell `{cell}` starts as `{initial}` and cannot match `{pattern}`")]
    FixedCell {
        cell: String,
        pattern: String,
        initial: String,
    },
    #[error("unknown cell `{0}`")]
    UnknownCell(String),
}

/// A claim with fixed-start cells bound and input cells made explicit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreparedClaim {
    pub claim: Claim,
    /// Pre-constraints as normalised atoms; `[false]` when contradictory.
    pub facts: Vec<Term>,
    pub call_data: Term,
    pub storage: Term,
    pub call_returns: Term,
}

impl PreparedClaim {
    /// Every variable of the precondition and the inputs.
    pub fn variables(&self) -> BTreeSet<Var> {
        let mut vars = BTreeSet::new();
        for t in self.claim.pre_cells.values().chain(&self.claim.pre_constraints).chain([
            &self.call_data,
            &self.storage,
            &self.call_returns,
        ]) {
            vars.extend(t.free_vars());
        }
        vars
    }
}

/// Value a non-input cell holds before execution.
fn initial_term(cell: &str) -> Option<Term> {
    match cell {
        "output" => Some(Term::Concat(Vec::new())),
        "refund" | "pc" => Some(Term::int(0)),
        "callLog" | "readLog" | "writeLog" => Some(Term::Tuple(Vec::new())),
        _ => None,
    }
}

fn fresh_name(base: &str, taken: &BTreeSet<String>) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}_{i}"))
        .find(|n| !taken.contains(n))
        .unwrap()
}

/// Binds variables of cells whose start value is fixed (output, refund,
/// logs, pc) and names the inputs (calldata, storage, call returns).
pub fn prepare_claim(c: &Claim) -> Result<PreparedClaim, InitError> {
    let mut bindings = Bindings::new();
    for (cell, pattern) in &c.pre_cells {
        if crate::kyaml::cell_sort(cell).is_none() {
            return Err(InitError::UnknownCell(cell.clone()));
        }
        if cell == "statusCode" {
            if !pattern.is_wildcard() {
                return Err(InitError::FixedCell {
                    cell: cell.clone(),
                    pattern: pattern.to_string(),
                    initial: "RUNNING".into(),
                });
            }
            continue;
        }
        if let Some(init) = initial_term(cell) {
            let b = match_pattern(pattern, &init).ok_or_else(|| InitError::FixedCell {
                cell: cell.clone(),
                pattern: pattern.to_string(),
                initial: init.to_string(),
            })?;
            bindings.extend(b);
        }
    }
    let apply = |t: &Term| subst(t, &bindings);
    let claim = Claim {
        name: c.name.clone(),
        pre_cells: c.pre_cells.iter().map(|(k, v)| (k.clone(), apply(v))).collect(),
        pre_constraints: c.pre_constraints.iter().map(apply).collect(),
        post_cells: c.post_cells.iter().map(|(k, v)| (k.clone(), apply(v))).collect(),
        post_constraints: c.post_constraints.iter().map(apply).collect(),
    };
    let mut taken: BTreeSet<String> = BTreeSet::new();
    for t in claim
        .pre_cells
        .values()
        .chain(claim.post_cells.values())
        .chain(&claim.pre_constraints)
        .chain(&claim.post_constraints)
    {
        taken.extend(t.free_vars().into_iter().map(|v| v.name));
    }
    let mut input = |cell: &str, base: &str, sort: Sort| match claim.pre_cells.get(cell) {
        Some(t) if !t.is_wildcard() => t.clone(),
        _ => {
            let name = fresh_name(base, &taken);
            taken.insert(name.clone());
            Term::var(&name, sort)
        }
    };
    let call_data = input("callData", "CALLDATA", Sort::Bytes);
    let storage = input("storage", "STORAGE", Sort::Map);
    let call_returns = input("callReturns", "CALLRETURNS", Sort::Tuple);
    let facts = super::solver::normalize(&claim.pre_constraints, &[])
        .ok()
        .flatten()
        .unwrap_or_else(|| vec![Term::bool(false)]);
    Ok(PreparedClaim {
        claim,
        facts,
        call_data,
        storage,
        call_returns,
    })
}

fn words(v: &Value) -> Option<Vec<U256>> {
    match v {
        Value::Tuple(vs) => vs.iter().map(|x| x.as_int().map(big_to_word)).collect(),
        _ => None,
    }
}

/// Transaction for an assignment, or `None` when the inputs do not
/// evaluate to a calldata buffer, a map and a tuple of words.
pub fn build_tx(p: &PreparedClaim, env: &Env) -> Option<Tx> {
    let calldata = eval_concrete(&p.call_data, env).ok()?.as_bytes()?.to_vec();
    let storage = match eval_concrete(&p.storage, env).ok()? {
        Value::Map(m) => m.iter().map(|(k, v)| (big_to_word(k), big_to_word(v))).collect(),
        _ => return None,
    };
    let call_returns = words(&eval_concrete(&p.call_returns, env).ok()?)?;
    Some(Tx {
        calldata,
        storage,
        call_returns,
    })
}

fn tuple_of_words(items: impl IntoIterator<Item = Vec<BigInt>>) -> Value {
    Value::Tuple(
        items
            .into_iter()
            .map(|r| Value::Tuple(r.into_iter().map(Value::Int).collect()))
            .collect(),
    )
}

/// Final value of a cell after a concrete run.
pub fn result_cell(cell: &str, tx: &Tx, r: &TxResult) -> Option<Value> {
    let w = word_to_big;
    Some(match cell {
        "callData" => Value::Bytes(tx.calldata.clone()),
        "output" => Value::Bytes(r.output.clone()),
        "statusCode" => Value::Const(match r.status {
            Status::Success => Sym::Success,
            Status::Revert => Sym::Revert,
            Status::Running => return None,
        }),
        "storage" => Value::map(r.storage.iter().map(|(k, v)| (w(k), w(v)))),
        "refund" => Value::Int(r.refund.clone()),
        "callLog" => tuple_of_words(r.call_log.iter().map(|c| {
            vec![
                BigInt::from(c.index),
                BigInt::from(c.pc),
                w(&c.dest),
                w(&c.value),
                w(&c.gas),
                w(&c.arg_offset),
                w(&c.arg_len),
                w(&c.ret_offset),
                w(&c.ret_len),
            ]
        })),
        "readLog" => tuple_of_words(r.read_log.iter().map(|x| vec![BigInt::from(x.pc), w(&x.slot)])),
        "writeLog" => tuple_of_words(
            r.write_log
                .iter()
                .map(|x| vec![BigInt::from(x.pc), w(&x.slot), w(&x.value)]),
        ),
        "pc" => Value::Int(BigInt::from(r.pc)),
        "callReturns" => Value::Tuple(tx.call_returns.iter().map(|c| Value::Int(w(c))).collect()),
        _ => return None,
    })
}

/// Whether a concrete value matches a pattern; wildcards match anything.
fn value_matches(pattern: &Term, value: &Value, env: &Env) -> Result<bool, String> {
    match (pattern, value) {
        (Term::Var(v), _) if v.is_wildcard() => Ok(true),
        (Term::Tuple(ps), Value::Tuple(vs)) => {
            if ps.len() != vs.len() {
                return Ok(false);
            }
            for (p, v) in ps.iter().zip(vs) {
                if !value_matches(p, v, env)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        _ => eval_concrete(pattern, env)
            .map(|p| &p == value)
            .map_err(|e| e.to_string()),
    }
}

fn holds(t: &Term, env: &Env) -> Result<bool, String> {
    match eval_concrete(t, env) {
        Ok(Value::Bool(b)) => Ok(b),
        Ok(other) => Err(format!("constraint `{t}` evaluated to {other}")),
        Err(e) => Err(e.to_string()),
    }
}

/// Whether the precondition's constraints hold under `env`.
pub fn pre_holds(p: &PreparedClaim, env: &Env) -> bool {
    p.claim.pre_constraints.iter().all(|c| holds(c, env) == Ok(true))
}

/// Checks a finished run against the postcondition. `Ok(None)` means it
/// holds; `Ok(Some(reason))` describes a violation.
pub fn check_result(p: &PreparedClaim, env: &Env, tx: &Tx, r: &TxResult) -> Result<Option<String>, String> {
    for (cell, pre, post) in p.claim.cells() {
        let Some(target) = post.or(pre) else { continue };
        let actual = result_cell(cell, tx, r).ok_or_else(|| format!("unknown cell `{cell}`"))?;
        if !value_matches(target, &actual, env)? {
            let expected = match eval_concrete(target, env) {
                Ok(v) => v.to_string(),
                Err(_) => target.to_string(),
            };
            return Ok(Some(format!("cell `{cell}` is {actual}, expected {expected}")));
        }
    }
    for c in &p.claim.post_constraints {
        if !holds(c, env)? {
            return Ok(Some(format!("`{c}` does not hold")));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConcreteOutcome {
    Holds,
    Violated(String),
    /// The assignment does not satisfy the precondition.
    Excluded,
    EvalError(String),
}

/// Runs the claim instance given by `env` and checks the postcondition.
pub fn check_concrete(program: &Program, p: &PreparedClaim, env: &Env) -> (ConcreteOutcome, Option<(Tx, TxResult)>) {
    if !pre_holds(p, env) {
        return (ConcreteOutcome::Excluded, None);
    }
    let Some(tx) = build_tx(p, env) else {
        return (ConcreteOutcome::Excluded, None);
    };
    let r = run_transaction(program, &tx, CONCRETE_STEP_LIMIT);
    let outcome = match check_result(p, env, &tx, &r) {
        Ok(None) => ConcreteOutcome::Holds,
        Ok(Some(reason)) => ConcreteOutcome::Violated(reason),
        Err(e) => ConcreteOutcome::EvalError(e),
    };
    (outcome, Some((tx, r)))
}

/// A confirmed violation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub env: Env,
    pub tx: Tx,
    pub result: TxResult,
    pub reason: String,
}

/// Samples assignments and replays them until one violates the
/// postcondition. Boundary values are tried first.
pub fn find_counterexample(program: &Program, claim: &Claim, attempts: usize, seed: u64) -> Option<Counterexample> {
    let p = prepare_claim(claim).ok()?;
    let mut sampler = Sampler::new(&p, seed);
    for _ in 0..attempts {
        let env = sampler.next_env();
        if let (ConcreteOutcome::Violated(reason), Some((tx, result))) = check_concrete(program, &p, &env) {
            return Some(Counterexample {
                env,
                tx,
                result,
                reason,
            });
        }
    }
    None
}

/// Draws variable assignments for a precondition: boundary values first,
/// then random ones, with simple equalities solved directly.
pub struct Sampler {
    vars: Vec<Var>,
    ranges: BTreeMap<String, (BigInt, BigInt)>,
    atoms: Vec<Term>,
    rng: ChaCha8Rng,
    round: usize,
}

const BOUNDARY_ROUNDS: usize = 4;

fn word_max() -> BigInt {
    (BigInt::one() << 256) - 1
}

impl Sampler {
    pub fn new(p: &PreparedClaim, seed: u64) -> Sampler {
        Sampler::for_constraints(p.variables(), &p.claim.pre_constraints, &p.facts, seed)
    }

    /// `constraints` drive equality solving; `facts` (normalised) give
    /// the ranges of integer variables.
    pub fn for_constraints(vars: BTreeSet<Var>, constraints: &[Term], facts: &[Term], seed: u64) -> Sampler {
        let mut atoms = Vec::new();
        for c in constraints {
            flatten_conjuncts(c, &mut atoms);
        }
        let sim = Simplifier::new(&[]).with_facts(facts);
        let mut ranges = BTreeMap::new();
        for v in vars.iter().filter(|v| v.sort == Sort::Int) {
            let iv = sim.bounds(&Term::Var(v.clone()));
            let lo = iv.lo.clone().unwrap_or_else(BigInt::zero);
            let mut hi = iv.hi.clone().unwrap_or_else(word_max);
            if hi < lo {
                hi = &lo + word_max();
            }
            ranges.insert(v.name.clone(), (lo, hi));
        }
        Sampler {
            vars: vars.into_iter().collect(),
            ranges,
            atoms,
            rng: ChaCha8Rng::seed_from_u64(seed),
            round: 0,
        }
    }

    fn uniform(&mut self, lo: &BigInt, hi: &BigInt) -> BigInt {
        let span: BigInt = hi - lo + 1;
        let bytes = (span.bits() / 8 + 9) as usize;
        let mut buf = vec![0u8; bytes];
        self.rng.fill(&mut buf[..]);
        lo + BigInt::from_bytes_be(Sign::Plus, &buf).mod_floor(&span)
    }

    fn int_value(&mut self, name: &str) -> BigInt {
        let (lo, hi) = self
            .ranges
            .get(name)
            .cloned()
            .unwrap_or_else(|| (BigInt::zero(), word_max()));
        let clamp = |v: BigInt| {
            if v < lo {
                lo.clone()
            } else if v > hi {
                hi.clone()
            } else {
                v
            }
        };
        match self.round {
            0 => lo.clone(),
            1 => clamp(&lo + 1),
            2 => hi.clone(),
            3 => clamp(&hi - 1),
            _ => match self.rng.gen_range(0..10) {
                0 => lo.clone(),
                1 => clamp(&lo + 1),
                2 => hi.clone(),
                3 => clamp(BigInt::from(self.rng.gen_range(27..=28))),
                4 => {
                    let top = clamp(&lo + 16);
                    self.uniform(&lo, &top)
                }
                _ => self.uniform(&lo, &hi),
            },
        }
    }

    fn word(&mut self) -> BigInt {
        match self.rng.gen_range(0..4) {
            0 => BigInt::zero(),
            1 => BigInt::from(self.rng.gen_range(1..100u32)),
            2 => word_max(),
            _ => self.uniform(&BigInt::zero(), &word_max()),
        }
    }

    fn value(&mut self, v: &Var) -> Option<Value> {
        Some(match v.sort {
            Sort::Int => Value::Int(self.int_value(&v.name)),
            Sort::Bool => Value::Bool(self.rng.gen()),
            Sort::Bytes => {
                let len = [0usize, 1, 4, 32, 36, 64][self.rng.gen_range(0..6)];
                let mut b = vec![0u8; len];
                self.rng.fill(&mut b[..]);
                Value::Bytes(b)
            }
            Sort::Map => {
                let entries: Vec<(BigInt, BigInt)> = (0..4u32).map(|k| (BigInt::from(k), self.word())).collect();
                Value::map(entries)
            }
            Sort::Tuple => Value::Tuple((0..4).map(|_| Value::int(self.rng.gen_range(0..=1u8))).collect()),
            _ => return None,
        })
    }

    /// Solves `X == e` and `select(M, k) == e` atoms where the other side
    /// evaluates; for a disjunction, one disjunct picked at random.
    fn repair(&mut self, env: &mut Env) {
        let mut atoms = self.atoms.clone();
        let mut i = 0;
        while i < atoms.len() {
            if let Term::Apply(Sym::Or, ds) = &atoms[i] {
                let pick = ds[self.rng.gen_range(0..2)].clone();
                flatten_conjuncts(&pick, &mut atoms);
            }
            i += 1;
        }
        for a in &atoms {
            let Term::Apply(Sym::Eq, s) = a else { continue };
            for (target, other) in [(&s[0], &s[1]), (&s[1], &s[0])] {
                if assign(target, other, env) {
                    break;
                }
            }
        }
    }

    /// The next candidate assignment.
    pub fn next_env(&mut self) -> Env {
        let mut env = Env::new();
        for v in self.vars.clone() {
            if let Some(val) = self.value(&v) {
                env.insert(v.name.clone(), val);
            }
        }
        for _ in 0..2 {
            self.repair(&mut env);
        }
        self.round += 1;
        env
    }

    /// True while the deterministic boundary rounds are being produced.
    pub fn in_boundary_phase(&self) -> bool {
        self.round < BOUNDARY_ROUNDS
    }
}

fn assign(target: &Term, other: &Term, env: &mut Env) -> bool {
    match target {
        Term::Var(v) if !v.is_wildcard() && !other.free_vars().contains(v) => match eval_concrete(other, env) {
            Ok(val) => {
                env.insert(v.name.clone(), val);
                true
            }
            Err(_) => false,
        },
        Term::Apply(Sym::Select, s) => {
            let Term::Var(m) = &s[0] else { return false };
            let (Ok(Value::Int(k)), Ok(Value::Int(val))) = (eval_concrete(&s[1], env), eval_concrete(other, env))
            else {
                return false;
            };
            let Some(Value::Map(entries)) = env.get(&m.name) else {
                return false;
            };
            let mut entries: Vec<(BigInt, BigInt)> = entries.clone().into_iter().collect();
            entries.push((k, val));
            env.insert(m.name.clone(), Value::map(entries));
            true
        }
        _ => false,
    }
}
