//! Symbolic execution of programs against claims.
//!
//! A claim's precondition seeds one symbolic state. Exploration is
//! depth-first, false branch first; a branch whose condition simplifies to
//! `false` under the path condition is pruned. Every terminal state is then
//! checked against the postcondition.

mod concrete;
mod prove;
mod solver;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::ToPrimitive;

use crate::claims::Claim;
use crate::term::simplify::flatten_conjuncts;
use crate::term::{Lemma, Simplifier, Sort, Sym, Term, TermError};
use crate::vm::{word_to_big, Fault, Instr, Program, Status, MAX_MEMORY, MAX_STACK};

pub use concrete::{
    build_tx, check_concrete, check_result, find_counterexample, pre_holds, prepare_claim, result_cell,
    ConcreteOutcome, Counterexample, InitError, PreparedClaim, Sampler, CONCRETE_STEP_LIMIT,
};
pub use prove::{check_entailment, prove, Entailment, ProveOptions, Verdict, VerdictKind};
pub use solver::{find_model, is_satisfiable, SolverAnswer};

pub const DEFAULT_MAX_STEPS: usize = 50_000;
pub const DEFAULT_MAX_PATHS: usize = 4_096;

/// Source of elapsed time and of an external deadline.
pub trait Clock {
    fn elapsed_ms(&self) -> u64;
    fn expired(&self) -> bool;
}

/// A clock that never expires and reports no elapsed time.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_ms(&self) -> u64 {
        0
    }

    fn expired(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_steps: usize,
    pub max_paths: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_steps: DEFAULT_MAX_STEPS,
            max_paths: DEFAULT_MAX_PATHS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExploreError {
    #[error("budget exceeded after {steps} steps and {paths} paths (deepest pc {deepest_pc})")]
    BudgetExceeded {
        steps: usize,
        paths: usize,
        deepest_pc: usize,
    },
    #[error("deadline reached after {steps} steps (deepest pc {deepest_pc})")]
    Deadline { steps: usize, deepest_pc: usize },
    #[error(transparent)]
    Term(#[from] TermError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymState {
    pub pc: usize,
    pub stack: Vec<Term>,
    /// Memory as a buffer term of literal length `mem_len`.
    pub memory: Term,
    pub mem_len: usize,
    pub call_data: Term,
    pub output: Term,
    pub status: Status,
    pub storage: Term,
    pub orig_storage: Term,
    pub refund: Term,
    pub call_log: Vec<Term>,
    pub read_log: Vec<Term>,
    pub write_log: Vec<Term>,
    pub call_returns: Term,
    pub path: Vec<Term>,
    pub fault: Option<Fault>,
    /// Set when execution cannot continue symbolically.
    pub stuck: Option<String>,
    reserved: BTreeSet<String>,
    fresh: usize,
}

impl SymState {
    pub fn is_terminal(&self) -> bool {
        self.status != Status::Running || self.stuck.is_some()
    }

    /// Current content of a registered cell.
    pub fn cell(&self, name: &str) -> Option<Term> {
        Some(match name {
            "callData" => self.call_data.clone(),
            "output" => self.output.clone(),
            "statusCode" => match self.status {
                Status::Success => Term::constant(Sym::Success),
                Status::Revert => Term::constant(Sym::Revert),
                Status::Running => return None,
            },
            "storage" => self.storage.clone(),
            "refund" => self.refund.clone(),
            "callLog" => Term::Tuple(self.call_log.clone()),
            "readLog" => Term::Tuple(self.read_log.clone()),
            "writeLog" => Term::Tuple(self.write_log.clone()),
            "pc" => Term::int(self.pc),
            "callReturns" => self.call_returns.clone(),
            _ => return None,
        })
    }

    fn fresh_var(&mut self, base: &str, sort: Sort) -> Term {
        loop {
            let name = format!("{base}_{}", self.fresh);
            self.fresh += 1;
            if self.reserved.insert(name.clone()) {
                return Term::var(&name, sort);
            }
        }
    }

    fn halt(&mut self, status: Status) {
        self.status = status;
        if status == Status::Revert {
            self.storage = self.orig_storage.clone();
            self.refund = Term::int(0);
        }
    }

    fn fault(&mut self, f: Fault) {
        self.fault = Some(f);
        self.output = empty_bytes();
        self.halt(Status::Revert);
    }
}

fn empty_bytes() -> Term {
    Term::Concat(Vec::new())
}

/// Initial state for a claim: inputs from the precondition (fresh
/// variables where unmentioned), pre-constraints as the path condition.
pub fn init_state(program: &Program, claim: &Claim) -> Result<SymState, InitError> {
    let prepared = prepare_claim(claim)?;
    let _ = program;
    Ok(state_from(&prepared))
}

pub(crate) fn state_from(p: &PreparedClaim) -> SymState {
    let mut reserved = BTreeSet::new();
    for v in p.variables() {
        reserved.insert(v.name);
    }
    SymState {
        pc: 0,
        stack: Vec::new(),
        memory: empty_bytes(),
        mem_len: 0,
        call_data: p.call_data.clone(),
        output: empty_bytes(),
        status: Status::Running,
        storage: p.storage.clone(),
        orig_storage: p.storage.clone(),
        refund: Term::int(0),
        call_log: Vec::new(),
        read_log: Vec::new(),
        write_log: Vec::new(),
        call_returns: p.call_returns.clone(),
        path: p.facts.clone(),
        fault: None,
        stuck: None,
        reserved,
        fresh: 0,
    }
}

#[derive(Clone, Debug)]
pub struct Exploration {
    pub terminals: Vec<SymState>,
    pub steps: usize,
    pub pruned: usize,
}

/// Exploration settings.
pub struct Explorer<'a> {
    pub lemmas: &'a [Lemma],
    pub budget: Budget,
    /// Drop branches whose condition is refuted. When off, such branches
    /// carry `false` in their path condition and run to completion.
    pub prune: bool,
    pub clock: &'a dyn Clock,
}

/// Depth-first exploration with the default settings and no deadline.
pub fn explore(program: &Program, s: SymState, lemmas: &[Lemma], budget: Budget) -> Result<Exploration, ExploreError> {
    Explorer {
        lemmas,
        budget,
        prune: true,
        clock: &NoClock,
    }
    .run(program, s)
}

fn literal_usize(t: &Term) -> Option<usize> {
    t.as_int().and_then(|v| v.to_usize())
}

fn word_op(sym: Sym, a: Term, b: Term) -> Term {
    Term::unary(Sym::Chop, Term::binary(sym, a, b))
}

fn bool_word(b: Term) -> Term {
    Term::unary(Sym::Bool2Word, b)
}

impl Explorer<'_> {
    pub fn run(&self, program: &Program, s: SymState) -> Result<Exploration, ExploreError> {
        let mut work = vec![s];
        let mut terminals = Vec::new();
        let mut steps = 0usize;
        let mut pruned = 0usize;
        let mut deepest = 0usize;
        while let Some(mut st) = work.pop() {
            loop {
                if st.is_terminal() {
                    terminals.push(st);
                    if terminals.len() > self.budget.max_paths {
                        return Err(ExploreError::BudgetExceeded {
                            steps,
                            paths: terminals.len(),
                            deepest_pc: deepest,
                        });
                    }
                    break;
                }
                if steps >= self.budget.max_steps {
                    return Err(ExploreError::BudgetExceeded {
                        steps,
                        paths: terminals.len(),
                        deepest_pc: deepest,
                    });
                }
                if steps.is_multiple_of(64) && self.clock.expired() {
                    return Err(ExploreError::Deadline {
                        steps,
                        deepest_pc: deepest,
                    });
                }
                steps += 1;
                deepest = deepest.max(st.pc);
                let mut next = self.step(program, st)?;
                match next.len() {
                    0 => {
                        pruned += 1;
                        break;
                    }
                    1 => st = next.pop().unwrap(),
                    _ => {
                        let first = next.remove(0);
                        while let Some(other) = next.pop() {
                            work.push(other);
                        }
                        st = first;
                    }
                }
            }
        }
        Ok(Exploration {
            terminals,
            steps,
            pruned,
        })
    }

    fn simp(&self, st: &SymState, t: Term) -> Result<Term, TermError> {
        Simplifier::new(self.lemmas).with_facts(&st.path).simplify(&t)
    }

    /// Adds `cond` to the path condition. Returns `false` when the
    /// branch is refuted and pruning is on.
    fn assume(&self, st: &mut SymState, cond: Term) -> Result<bool, TermError> {
        let c = self.simp(st, cond)?;
        if c.is_true() {
            return Ok(true);
        }
        if c.is_false() {
            if self.prune {
                return Ok(false);
            }
            st.path.push(c);
            return Ok(true);
        }
        let mut atoms = Vec::new();
        flatten_conjuncts(&c, &mut atoms);
        for a in atoms {
            if !st.path.contains(&a) {
                st.path.push(a);
            }
        }
        if self.prune && solver::refuted(&st.path, self.lemmas)? {
            return Ok(false);
        }
        Ok(true)
    }

    /// Two-way split on `cond`: the `false` side first.
    fn fork(&self, st: SymState, cond: Term) -> Result<(Option<SymState>, Option<SymState>), TermError> {
        let c = self.simp(&st, cond)?;
        if c.is_true() {
            return Ok((None, Some(st)));
        }
        if c.is_false() {
            return Ok((Some(st), None));
        }
        let mut no = st.clone();
        let mut yes = st;
        let no = if self.assume(&mut no, Term::not(c.clone()))? {
            Some(no)
        } else {
            None
        };
        let yes = if self.assume(&mut yes, c)? { Some(yes) } else { None };
        Ok((no, yes))
    }

    fn need_literal(&self, st: &mut SymState, t: &Term, what: &str) -> Option<usize> {
        let v = literal_usize(t);
        if v.is_none() {
            st.stuck = Some(format!("{what} `{t}` at pc {} is not a literal", st.pc));
        }
        v
    }

    fn push(&self, st: &mut SymState, t: Term) -> Result<(), TermError> {
        if st.stack.len() >= MAX_STACK {
            st.fault(Fault::StackOverflow);
            return Ok(());
        }
        let t = self.simp(st, t)?;
        st.stack.push(t);
        Ok(())
    }

    fn range(&self, st: &SymState, off: usize, len: usize) -> Term {
        Term::app(Sym::Range, vec![st.memory.clone(), Term::int(off), Term::int(len)])
    }

    /// Executes one instruction; returns the successor states.
    fn step(&self, program: &Program, mut st: SymState) -> Result<Vec<SymState>, TermError> {
        let Some(ins) = program.instrs.get(st.pc).cloned() else {
            st.output = empty_bytes();
            st.halt(Status::Success);
            return Ok(vec![st]);
        };
        let (pops, _) = ins.stack_effect();
        if st.stack.len() < pops {
            st.fault(Fault::StackUnderflow);
            return Ok(vec![st]);
        }
        let pc = st.pc;
        let mut next = pc + 1;
        macro_rules! pop {
            () => {
                st.stack.pop().unwrap()
            };
        }
        match &ins {
            Instr::Push(w) => self.push(&mut st, Term::Int(word_to_big(w)))?,
            Instr::Pop => {
                pop!();
            }
            Instr::Dup(k) => {
                let t = st.stack[st.stack.len() - *k as usize].clone();
                self.push(&mut st, t)?;
            }
            Instr::Swap(k) => {
                let n = st.stack.len();
                st.stack.swap(n - 1, n - 1 - *k as usize);
            }
            Instr::Add | Instr::Sub | Instr::Mul => {
                let a = pop!();
                let b = pop!();
                let sym = match ins {
                    Instr::Add => Sym::Add,
                    Instr::Sub => Sym::Sub,
                    _ => Sym::Mul,
                };
                self.push(&mut st, word_op(sym, a, b))?;
            }
            Instr::Gt | Instr::Lt | Instr::Eq => {
                let a = pop!();
                let b = pop!();
                let cmp = match ins {
                    Instr::Gt => Term::binary(Sym::Lt, b, a),
                    Instr::Lt => Term::binary(Sym::Lt, a, b),
                    _ => Term::eq(a, b),
                };
                self.push(&mut st, bool_word(cmp))?;
            }
            Instr::IsZero => {
                let a = pop!();
                self.push(&mut st, bool_word(Term::eq(a, Term::int(0))))?;
            }
            Instr::And | Instr::Or => {
                let a = pop!();
                let b = pop!();
                let sym = if ins == Instr::And { Sym::AndWord } else { Sym::OrWord };
                self.push(&mut st, Term::binary(sym, a, b))?;
            }
            Instr::Not => {
                let a = pop!();
                self.push(&mut st, Term::unary(Sym::NotWord, a))?;
            }
            Instr::CallDataLoad(imm) => {
                let off = match imm {
                    Some(o) => Term::Int(word_to_big(o)),
                    None => pop!(),
                };
                let r = Term::app(Sym::Range, vec![st.call_data.clone(), off, Term::int(32)]);
                self.push(&mut st, Term::unary(Sym::AsWord, r))?;
            }
            Instr::CallDataSize => {
                let t = Term::unary(Sym::Len, st.call_data.clone());
                self.push(&mut st, t)?;
            }
            Instr::MLoad => {
                let off = pop!();
                let Some(o) = self.need_literal(&mut st, &off, "memory offset") else {
                    return Ok(vec![st]);
                };
                if o + 32 > MAX_MEMORY {
                    st.fault(Fault::OutOfBoundsMemory);
                    return Ok(vec![st]);
                }
                let t = Term::unary(Sym::AsWord, self.range(&st, o, 32));
                self.push(&mut st, t)?;
            }
            Instr::MStore => {
                let off = pop!();
                let v = pop!();
                let Some(o) = self.need_literal(&mut st, &off, "memory offset") else {
                    return Ok(vec![st]);
                };
                if o + 32 > MAX_MEMORY {
                    st.fault(Fault::OutOfBoundsMemory);
                    return Ok(vec![st]);
                }
                if o + 32 > st.mem_len {
                    let grow = Term::buf(Term::int(o + 32 - st.mem_len), Term::int(0));
                    st.memory = Term::Concat(vec![st.memory.clone(), grow]);
                    st.mem_len = o + 32;
                }
                let rest = st.mem_len - o - 32;
                let mem = Term::Concat(vec![
                    self.range(&st, 0, o),
                    Term::buf(Term::int(32), v),
                    self.range(&st, o + 32, rest),
                ]);
                st.memory = self.simp(&st, mem)?;
            }
            Instr::SLoad => {
                let slot = pop!();
                st.read_log.push(Term::Tuple(vec![Term::int(pc), slot.clone()]));
                let t = Term::binary(Sym::Select, st.storage.clone(), slot);
                self.push(&mut st, t)?;
            }
            Instr::SStore => {
                let slot = pop!();
                let value = pop!();
                let curr = Term::binary(Sym::Select, st.storage.clone(), slot.clone());
                let orig = Term::binary(Sym::Select, st.orig_storage.clone(), slot.clone());
                let refund = Term::app(
                    Sym::Rsstore,
                    vec![Term::constant(Sym::Byzantium), value.clone(), curr, orig],
                );
                st.refund = self.simp(&st, Term::binary(Sym::Add, st.refund.clone(), refund))?;
                st.write_log
                    .push(Term::Tuple(vec![Term::int(pc), slot.clone(), value.clone()]));
                let storage = Term::app(Sym::Store, vec![st.storage.clone(), slot, value]);
                st.storage = self.simp(&st, storage)?;
            }
            Instr::Sha3 => {
                let off = pop!();
                let len = pop!();
                let Some(o) = self.need_literal(&mut st, &off, "hash offset") else {
                    return Ok(vec![st]);
                };
                let Some(l) = self.need_literal(&mut st, &len, "hash length") else {
                    return Ok(vec![st]);
                };
                if o.checked_add(l).is_none_or(|e| e > MAX_MEMORY) {
                    st.fault(Fault::OutOfBoundsMemory);
                    return Ok(vec![st]);
                }
                let t = Term::unary(Sym::Keccak, self.range(&st, o, l));
                self.push(&mut st, t)?;
            }
            Instr::Ecrec => {
                let args: Vec<Term> = (0..4).map(|_| pop!()).collect();
                st.pc = next;
                let empty = Term::app(Sym::EcrecEmpty, args.clone());
                let (valid, invalid) = self.fork(st, empty)?;
                let mut out = Vec::new();
                if let Some(mut s) = invalid {
                    self.push(&mut s, Term::int(0))?;
                    out.push(s);
                }
                if let Some(mut s) = valid {
                    self.push(&mut s, Term::app(Sym::SymEcrec, args))?;
                    out.push(s);
                }
                return Ok(out);
            }
            Instr::Call => {
                let args: Vec<Term> = (0..7).map(|_| pop!()).collect();
                let index = st.call_log.len();
                let mut record = vec![Term::int(index), Term::int(pc)];
                record.extend(args);
                st.call_log.push(Term::Tuple(record));
                let scripted = match &st.call_returns {
                    Term::Tuple(codes) => codes.get(index).cloned(),
                    _ => None,
                };
                let code = match scripted {
                    Some(c) => Term::unary(Sym::Chop, c),
                    None => {
                        let v = st.fresh_var("CALLRET", Sort::Int);
                        st.path.push(Term::binary(Sym::Le, Term::int(0), v.clone()));
                        st.path.push(Term::binary(Sym::Le, v.clone(), Term::int(1)));
                        v
                    }
                };
                self.push(&mut st, code)?;
            }
            Instr::Jump(t) => next = *t,
            Instr::JumpI(t) => {
                let c = pop!();
                let cond = Term::not(Term::eq(c, Term::int(0)));
                let (no, yes) = self.fork(st, cond)?;
                let mut out = Vec::new();
                if let Some(mut s) = no {
                    s.pc = next;
                    out.push(s);
                }
                if let Some(mut s) = yes {
                    s.pc = *t;
                    out.push(s);
                }
                return Ok(out);
            }
            Instr::ReturnW => {
                let v = pop!();
                st.output = self.simp(&st, Term::buf(Term::int(32), v))?;
                st.halt(Status::Success);
                return Ok(vec![st]);
            }
            Instr::Return => {
                let off = pop!();
                let len = pop!();
                let Some(o) = self.need_literal(&mut st, &off, "return offset") else {
                    return Ok(vec![st]);
                };
                let Some(l) = self.need_literal(&mut st, &len, "return length") else {
                    return Ok(vec![st]);
                };
                if o.checked_add(l).is_none_or(|e| e > MAX_MEMORY) {
                    st.fault(Fault::OutOfBoundsMemory);
                    return Ok(vec![st]);
                }
                st.output = self.simp(&st, self.range(&st, o, l))?;
                st.halt(Status::Success);
                return Ok(vec![st]);
            }
            Instr::Revert => {
                st.output = empty_bytes();
                st.halt(Status::Revert);
                return Ok(vec![st]);
            }
            Instr::Stop => {
                st.output = empty_bytes();
                st.halt(Status::Success);
                return Ok(vec![st]);
            }
        }
        if st.status == Status::Running && st.stuck.is_none() {
            st.pc = next;
        }
        Ok(vec![st])
    }
}

/// Number of conditional jumps, for path-count bounds.
pub fn branch_count(p: &Program) -> usize {
    p.instrs
        .iter()
        .filter(|i| matches!(i, Instr::JumpI(_) | Instr::Ecrec))
        .count()
}

pub(crate) fn describe_state(st: &SymState) -> String {
    let mut s = format!("pc {} status {}", st.pc, st.status);
    if let Some(f) = st.fault {
        s.push_str(&format!(" ({f})"));
    }
    if !st.path.is_empty() {
        let conds: Vec<String> = st.path.iter().map(ToString::to_string).collect();
        s.push_str(&format!(" under {}", conds.join(" andBool ")));
    }
    s
}

#[cfg(test)]
mod tests;
