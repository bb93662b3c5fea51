//! The miniature stack machine: instruction set, `.mvm` assembly and the
//! concrete interpreter.
//!
//! Source format: one instruction per line, `;` starts a comment, `name:`
//! defines a label (optionally followed by an instruction on the same
//! line). Jump targets are labels.

pub mod abi;
mod interp;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, Sign};
use num_traits::Num;
pub use ruint::aliases::U256;

pub use interp::{
    run_transaction, CallRecord, Fault, MachineState, ReadRecord, Status, Tx, TxResult, WriteRecord,
    DEFAULT_CALL_RETURN, MAX_MEMORY, MAX_STACK,
};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Instr {
    Push(U256),
    Pop,
    Dup(u8),
    Swap(u8),
    Add,
    Sub,
    Mul,
    Gt,
    Lt,
    Eq,
    IsZero,
    And,
    Or,
    Not,
    /// Immediate offset, or pop it from the stack when absent.
    CallDataLoad(Option<U256>),
    CallDataSize,
    MLoad,
    MStore,
    SLoad,
    SStore,
    Sha3,
    Ecrec,
    Call,
    Jump(usize),
    JumpI(usize),
    ReturnW,
    Return,
    Revert,
    Stop,
}

impl Instr {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Instr::Push(_) => "PUSH",
            Instr::Pop => "POP",
            Instr::Dup(_) => "DUP",
            Instr::Swap(_) => "SWAP",
            Instr::Add => "ADD",
            Instr::Sub => "SUB",
            Instr::Mul => "MUL",
            Instr::Gt => "GT",
            Instr::Lt => "LT",
            Instr::Eq => "EQ",
            Instr::IsZero => "ISZERO",
            Instr::And => "AND",
            Instr::Or => "OR",
            Instr::Not => "NOT",
            Instr::CallDataLoad(_) => "CALLDATALOAD",
            Instr::CallDataSize => "CALLDATASIZE",
            Instr::MLoad => "MLOAD",
            Instr::MStore => "MSTORE",
            Instr::SLoad => "SLOAD",
            Instr::SStore => "SSTORE",
            Instr::Sha3 => "SHA3",
            Instr::Ecrec => "ECREC",
            Instr::Call => "CALL",
            Instr::Jump(_) => "JUMP",
            Instr::JumpI(_) => "JUMPI",
            Instr::ReturnW => "RETURNW",
            Instr::Return => "RETURN",
            Instr::Revert => "REVERT",
            Instr::Stop => "STOP",
        }
    }

    /// Items popped and pushed.
    pub fn stack_effect(&self) -> (usize, usize) {
        match self {
            Instr::Push(_) | Instr::CallDataSize | Instr::CallDataLoad(Some(_)) => (0, 1),
            Instr::Pop => (1, 0),
            Instr::Dup(k) => (*k as usize, *k as usize + 1),
            Instr::Swap(k) => (*k as usize + 1, *k as usize + 1),
            Instr::Add | Instr::Sub | Instr::Mul | Instr::Gt | Instr::Lt | Instr::Eq | Instr::And | Instr::Or => (2, 1),
            Instr::IsZero | Instr::Not | Instr::CallDataLoad(None) | Instr::MLoad | Instr::SLoad => (1, 1),
            Instr::MStore | Instr::SStore => (2, 0),
            Instr::Sha3 => (2, 1),
            Instr::Ecrec => (4, 1),
            Instr::Call => (7, 1),
            Instr::Jump(_) | Instr::Stop | Instr::Revert => (0, 0),
            Instr::JumpI(_) | Instr::ReturnW => (1, 0),
            Instr::Return => (2, 0),
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Instr::Stop | Instr::Return | Instr::ReturnW | Instr::Revert)
    }

    pub fn jump_target(&self) -> Option<usize> {
        match self {
            Instr::Jump(t) | Instr::JumpI(t) => Some(*t),
            _ => None,
        }
    }

    pub(crate) fn with_target(&self, target: usize) -> Instr {
        match self {
            Instr::Jump(_) => Instr::Jump(target),
            Instr::JumpI(_) => Instr::JumpI(target),
            other => other.clone(),
        }
    }
}

/// An assembled program. Labels are kept for readable disassembly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    pub instrs: Vec<Instr>,
    pub labels: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssembleError {
    #[error("line {line}: unknown opcode `{opcode}`")]
    UnknownOpcode { line: usize, opcode: String },
    #[error("line {line}: bad operand: {message}")]
    BadOperand { line: usize, message: String },
    #[error("line {line}: undefined label `{label}`")]
    UndefinedLabel { line: usize, label: String },
    #[error("line {line}: label `{label}` defined twice")]
    DuplicateLabel { line: usize, label: String },
}

pub fn word_to_big(w: &U256) -> BigInt {
    BigInt::from_bytes_be(Sign::Plus, &w.to_be_bytes::<32>())
}

/// `v mod 2^256` as a machine word.
pub fn big_to_word(v: &BigInt) -> U256 {
    let bytes = crate::term::standin::to_be_bytes(v, 32);
    U256::from_be_slice(&bytes)
}

fn parse_word(text: &str, line: usize) -> Result<U256, AssembleError> {
    let bad = |message: String| AssembleError::BadOperand { line, message };
    let v = if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        BigInt::from_str_radix(hex, 16)
    } else {
        BigInt::from_str_radix(text, 10)
    }
    .map_err(|_| bad(alloc::format!("`{text}` is not a number")))?;
    if v < BigInt::from(0) || v >= (BigInt::from(1) << 256) {
        return Err(bad(alloc::format!("`{text}` does not fit in a word")));
    }
    Ok(big_to_word(&v))
}

fn is_label(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

enum Pending {
    Ready(Instr),
    Jump {
        label: String,
        conditional: bool,
        line: usize,
    },
}

/// Assembles `.mvm` text.
pub fn assemble(name: &str, text: &str) -> Result<Program, AssembleError> {
    let mut pending = Vec::new();
    let mut labels = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut body = raw.split(';').next().unwrap_or("").trim();
        if let Some(colon) = body.find(':') {
            let label = body[..colon].trim();
            if is_label(label) {
                if labels.insert(label.to_string(), pending.len()).is_some() {
                    return Err(AssembleError::DuplicateLabel {
                        line,
                        label: label.to_string(),
                    });
                }
                body = body[colon + 1..].trim();
            }
        }
        if body.is_empty() {
            continue;
        }
        let mut parts = body.split_whitespace();
        let op = parts.next().unwrap().to_ascii_uppercase();
        let operands: Vec<&str> = parts.collect();
        let bad = |message: &str| AssembleError::BadOperand {
            line,
            message: alloc::format!("{op}: {message}"),
        };
        let arity = |n: usize| {
            if operands.len() == n {
                Ok(())
            } else {
                Err(bad(&alloc::format!(
                    "expected {n} operand(s), found {}",
                    operands.len()
                )))
            }
        };
        let small = |lo: u8, hi: u8| -> Result<u8, AssembleError> {
            arity(1)?;
            operands[0]
                .parse::<u8>()
                .ok()
                .filter(|k| (lo..=hi).contains(k))
                .ok_or_else(|| bad(&alloc::format!("expected an index in {lo}..={hi}")))
        };
        let simple = |ins: Instr| arity(0).map(|_| Pending::Ready(ins));
        let item = match op.as_str() {
            "PUSH" => {
                arity(1)?;
                Pending::Ready(Instr::Push(parse_word(operands[0], line)?))
            }
            "POP" => simple(Instr::Pop)?,
            "DUP" => Pending::Ready(Instr::Dup(small(1, 16)?)),
            "SWAP" => Pending::Ready(Instr::Swap(small(1, 16)?)),
            "ADD" => simple(Instr::Add)?,
            "SUB" => simple(Instr::Sub)?,
            "MUL" => simple(Instr::Mul)?,
            "GT" => simple(Instr::Gt)?,
            "LT" => simple(Instr::Lt)?,
            "EQ" => simple(Instr::Eq)?,
            "ISZERO" => simple(Instr::IsZero)?,
            "AND" => simple(Instr::And)?,
            "OR" => simple(Instr::Or)?,
            "NOT" => simple(Instr::Not)?,
            "CALLDATALOAD" => match operands.len() {
                0 => Pending::Ready(Instr::CallDataLoad(None)),
                1 => Pending::Ready(Instr::CallDataLoad(Some(parse_word(operands[0], line)?))),
                _ => return Err(bad("expected at most one operand")),
            },
            "CALLDATASIZE" => simple(Instr::CallDataSize)?,
            "MLOAD" => simple(Instr::MLoad)?,
            "MSTORE" => simple(Instr::MStore)?,
            "SLOAD" => simple(Instr::SLoad)?,
            "SSTORE" => simple(Instr::SStore)?,
            "SHA3" => simple(Instr::Sha3)?,
            "ECREC" => simple(Instr::Ecrec)?,
            "CALL" => simple(Instr::Call)?,
            "RETURNW" => simple(Instr::ReturnW)?,
            "RETURN" => simple(Instr::Return)?,
            "REVERT" => simple(Instr::Revert)?,
            "STOP" => simple(Instr::Stop)?,
            "JUMP" | "JUMPI" => {
                arity(1)?;
                if !is_label(operands[0]) {
                    return Err(bad("expected a label"));
                }
                Pending::Jump {
                    label: operands[0].to_string(),
                    conditional: op == "JUMPI",
                    line,
                }
            }
            _ => {
                return Err(AssembleError::UnknownOpcode {
                    line,
                    opcode: op.to_string(),
                })
            }
        };
        pending.push(item);
    }
    let instrs = pending
        .into_iter()
        .map(|p| match p {
            Pending::Ready(i) => Ok(i),
            Pending::Jump {
                label,
                conditional,
                line,
            } => {
                let t = *labels
                    .get(&label)
                    .ok_or(AssembleError::UndefinedLabel { line, label })?;
                Ok(if conditional { Instr::JumpI(t) } else { Instr::Jump(t) })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Program {
        name: name.to_string(),
        instrs,
        labels,
    })
}

impl Program {
    pub fn new(name: &str, instrs: Vec<Instr>) -> Program {
        Program {
            name: name.to_string(),
            instrs,
            labels: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    /// Label name used for `target` in disassembly.
    fn label_for(&self, target: usize) -> String {
        self.labels
            .iter()
            .find(|(_, t)| **t == target)
            .map(|(n, _)| n.clone())
            .unwrap_or_else(|| alloc::format!("L{target}"))
    }

    /// Assembly text that reassembles to the same instructions.
    pub fn disassemble(&self) -> String {
        let mut targets: BTreeMap<usize, String> = BTreeMap::new();
        for ins in &self.instrs {
            if let Some(t) = ins.jump_target() {
                targets.entry(t).or_insert_with(|| self.label_for(t));
            }
        }
        let mut out = String::new();
        for (i, ins) in self.instrs.iter().enumerate() {
            if let Some(l) = targets.get(&i) {
                out.push_str(l);
                out.push_str(":\n");
            }
            out.push_str("  ");
            out.push_str(&ins.to_string_with(|t| targets[&t].clone()));
            out.push('\n');
        }
        if let Some(l) = targets.get(&self.instrs.len()) {
            out.push_str(l);
            out.push_str(":\n");
        }
        out
    }
}

impl Instr {
    fn to_string_with(&self, label: impl Fn(usize) -> String) -> String {
        match self {
            Instr::Push(w) => alloc::format!("PUSH {}", word_to_big(w)),
            Instr::Dup(k) => alloc::format!("DUP {k}"),
            Instr::Swap(k) => alloc::format!("SWAP {k}"),
            Instr::CallDataLoad(Some(o)) => alloc::format!("CALLDATALOAD {}", word_to_big(o)),
            Instr::Jump(t) | Instr::JumpI(t) => alloc::format!("{} {}", self.mnemonic(), label(*t)),
            other => other.mnemonic().to_string(),
        }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_with(|t| alloc::format!("@{t}")))
    }
}
