//! Mutation operators over assembled programs.
//!
//! Every operator yields one mutant per applicable site. Jump targets and
//! labels are remapped when a mutation changes the program length.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::vm::{run_transaction, Instr, Program, Tx, U256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MutationOperator {
    DupCall,
    ConstReplace,
    DropRequire,
    NegateBranch,
    OffByOne,
    SwapCmp,
}

impl MutationOperator {
    pub const ALL: [MutationOperator; 6] = [
        MutationOperator::DupCall,
        MutationOperator::ConstReplace,
        MutationOperator::DropRequire,
        MutationOperator::NegateBranch,
        MutationOperator::OffByOne,
        MutationOperator::SwapCmp,
    ];

    pub fn id(self) -> &'static str {
        match self {
            MutationOperator::DupCall => "DUP_CALL",
            MutationOperator::ConstReplace => "CONST_REPLACE",
            MutationOperator::DropRequire => "DROP_REQUIRE",
            MutationOperator::NegateBranch => "NEGATE_BRANCH",
            MutationOperator::OffByOne => "OFF_BY_ONE",
            MutationOperator::SwapCmp => "SWAP_CMP",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            MutationOperator::DupCall => "issue a CALL twice with the same arguments",
            MutationOperator::ConstReplace => "replace a PUSH immediate by 0 (by 1 when it is 0)",
            MutationOperator::DropRequire => "remove a comparison and the JUMPI guarding a revert",
            MutationOperator::NegateBranch => "insert ISZERO before a JUMPI",
            MutationOperator::OffByOne => "increment a PUSH immediate",
            MutationOperator::SwapCmp => "exchange GT and LT",
        }
    }
}

impl fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown mutation operator `{0}`")]
pub struct UnknownOperator(pub String);

impl FromStr for MutationOperator {
    type Err = UnknownOperator;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        MutationOperator::ALL
            .into_iter()
            .find(|op| op.id() == norm)
            .ok_or_else(|| UnknownOperator(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MutateError {
    #[error("{op}: no applicable site in `{program}`")]
    NoApplicableSite { op: MutationOperator, program: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mutant {
    pub base: String,
    pub op: MutationOperator,
    /// Instruction index in the base program.
    pub site: usize,
    pub program: Program,
}

impl Mutant {
    pub fn id(&self) -> String {
        mutant_id(&self.base, self.op, self.site)
    }
}

pub fn mutant_id(base: &str, op: MutationOperator, site: usize) -> String {
    format!("{base}__{}_{site}", op.id().to_ascii_lowercase())
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Mutation {
    pub mutants: Vec<Mutant>,
    pub skipped: Vec<MutateError>,
}

/// Replaces `instrs[at..at + len]` by `with`. Jumps into the removed range
/// land at its start; later targets shift.
fn splice(p: &Program, at: usize, len: usize, with: Vec<Instr>) -> Program {
    let grown = with.len();
    let remap = |t: usize| {
        if t <= at {
            t
        } else if t < at + len {
            at
        } else {
            t + grown - len
        }
    };
    let mut instrs: Vec<Instr> = Vec::with_capacity(p.instrs.len() + grown);
    instrs.extend(p.instrs[..at].iter().cloned());
    instrs.extend(with);
    instrs.extend(p.instrs[at + len..].iter().cloned());
    let instrs = instrs
        .into_iter()
        .map(|i| match i.jump_target() {
            Some(t) => i.with_target(remap(t)),
            None => i,
        })
        .collect();
    let labels: BTreeMap<String, usize> = p.labels.iter().map(|(l, t)| (l.clone(), remap(*t))).collect();
    Program {
        name: p.name.clone(),
        instrs,
        labels,
    }
}

fn replaced(p: &Program, at: usize, with: Instr) -> Program {
    let mut q = p.clone();
    q.instrs[at] = with;
    q
}

fn is_comparison(i: &Instr) -> bool {
    matches!(i, Instr::Gt | Instr::Lt | Instr::Eq | Instr::IsZero)
}

/// Whether straight-line execution from `from` ends in REVERT.
fn reverts_from(p: &Program, from: usize) -> bool {
    for i in p.instrs.iter().skip(from) {
        match i {
            Instr::Revert => return true,
            Instr::Jump(_) | Instr::JumpI(_) => return false,
            i if i.is_terminal() => return false,
            _ => {}
        }
    }
    false
}

/// A JUMPI at `j` guards a revert when either its target or its
/// fall-through reaches REVERT without branching.
fn drop_require(p: &Program, j: usize) -> Option<Program> {
    let Instr::JumpI(target) = p.instrs[j] else { return None };
    let into_revert = reverts_from(p, target);
    let falls_into_revert = reverts_from(p, j + 1);
    if into_revert == falls_into_revert {
        return None;
    }
    let (start, pops) = match j.checked_sub(1).map(|c| &p.instrs[c]) {
        Some(c) if is_comparison(c) && !p.labels.values().any(|&t| t == j) => (j - 1, c.stack_effect().0),
        _ => (j, 1),
    };
    let mut with = alloc::vec![Instr::Pop; pops];
    if falls_into_revert {
        with.push(Instr::Jump(target));
    }
    Some(splice(p, start, j + 1 - start, with))
}

fn apply(p: &Program, op: MutationOperator, site: usize) -> Option<Program> {
    let instr = &p.instrs[site];
    match op {
        MutationOperator::DupCall => matches!(instr, Instr::Call).then(|| {
            let mut with = alloc::vec![Instr::Dup(7); 7];
            with.extend([Instr::Call, Instr::Pop]);
            splice(p, site, 0, with)
        }),
        MutationOperator::ConstReplace => match instr {
            Instr::Push(v) => {
                let new = if v.is_zero() { U256::from(1u8) } else { U256::ZERO };
                Some(replaced(p, site, Instr::Push(new)))
            }
            _ => None,
        },
        MutationOperator::OffByOne => match instr {
            Instr::Push(v) => Some(replaced(p, site, Instr::Push(v.wrapping_add(U256::from(1u8))))),
            _ => None,
        },
        MutationOperator::DropRequire => drop_require(p, site),
        MutationOperator::NegateBranch => {
            matches!(instr, Instr::JumpI(_)).then(|| splice(p, site, 0, alloc::vec![Instr::IsZero]))
        }
        MutationOperator::SwapCmp => match instr {
            Instr::Gt => Some(replaced(p, site, Instr::Lt)),
            Instr::Lt => Some(replaced(p, site, Instr::Gt)),
            _ => None,
        },
    }
}

/// All mutants of `p` under `ops`, ordered by operator then site.
pub fn generate_mutants(p: &Program, ops: &[MutationOperator]) -> Mutation {
    let mut out = Mutation::default();
    let mut seen = ops.to_vec();
    seen.sort();
    seen.dedup();
    for op in seen {
        let before = out.mutants.len();
        for site in 0..p.instrs.len() {
            if let Some(program) = apply(p, op, site) {
                let mutant = Mutant {
                    base: p.name.clone(),
                    op,
                    site,
                    program: Program {
                        name: mutant_id(&p.name, op, site),
                        ..program
                    },
                };
                out.mutants.push(mutant);
            }
        }
        if out.mutants.len() == before {
            out.skipped.push(MutateError::NoApplicableSite {
                op,
                program: p.name.clone(),
            });
        }
    }
    out
}

/// Like [`generate_mutants`] but keeps at most `per_op` mutants per
/// operator, chosen by `seed`.
pub fn sample_mutants(p: &Program, ops: &[MutationOperator], per_op: usize, seed: u64) -> Mutation {
    let all = generate_mutants(p, ops);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_op: BTreeMap<MutationOperator, Vec<Mutant>> = BTreeMap::new();
    for m in all.mutants {
        by_op.entry(m.op).or_default().push(m);
    }
    let mut mutants = Vec::new();
    for (_, group) in by_op {
        let mut picked: Vec<Mutant> = group
            .choose_multiple(&mut rng, per_op.min(group.len()))
            .cloned()
            .collect();
        picked.sort_by_key(|m| m.site);
        mutants.extend(picked);
    }
    Mutation {
        mutants,
        skipped: all.skipped,
    }
}

/// Index of the first transaction on which the two programs disagree.
pub fn distinguishing_tx(base: &Program, mutant: &Program, txs: &[Tx], step_limit: usize) -> Option<usize> {
    txs.iter().position(|tx| {
        let a = run_transaction(base, tx, step_limit);
        let b = run_transaction(mutant, tx, step_limit);
        (&a.status, &a.output, &a.storage, &a.refund, &a.call_log)
            != (&b.status, &b.output, &b.storage, &b.refund, &b.call_log)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KillOutcome {
    /// At least one claim failed: the suite caught the mutant.
    Pass,
    /// Every claim proved: the mutant survived.
    Fail,
}

impl fmt::Display for KillOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KillOutcome::Pass => "PASS",
            KillOutcome::Fail => "FAIL",
        })
    }
}

pub fn classify_kill<I>(verdicts: I) -> KillOutcome
where
    I: IntoIterator<Item = crate::symexec::VerdictKind>,
{
    if verdicts
        .into_iter()
        .any(|v| v != crate::symexec::VerdictKind::ProvedTrue)
    {
        KillOutcome::Pass
    } else {
        KillOutcome::Fail
    }
}
