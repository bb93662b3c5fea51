use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;

use super::{big_to_word, word_to_big, Instr, Program, U256};
use crate::term::eval::rsstore;
use crate::term::standin;

/// Largest addressable memory, in bytes.
pub const MAX_MEMORY: usize = 1 << 20;
pub const MAX_STACK: usize = 1024;
/// Return code of a CALL that has no scripted entry.
pub const DEFAULT_CALL_RETURN: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Running,
    Success,
    Revert,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Running => "RUNNING",
            Status::Success => "EVMC_SUCCESS",
            Status::Revert => "EVMC_REVERT",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fault {
    StepLimitExceeded,
    StackUnderflow,
    StackOverflow,
    OutOfBoundsMemory,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fault::StepLimitExceeded => "step limit exceeded",
            Fault::StackUnderflow => "stack underflow",
            Fault::StackOverflow => "stack overflow",
            Fault::OutOfBoundsMemory => "memory access out of bounds",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CallRecord {
    pub index: usize,
    pub pc: usize,
    pub dest: U256,
    pub value: U256,
    pub gas: U256,
    pub arg_offset: U256,
    pub arg_len: U256,
    pub ret_offset: U256,
    pub ret_len: U256,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ReadRecord {
    pub pc: usize,
    pub slot: U256,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WriteRecord {
    pub pc: usize,
    pub slot: U256,
    pub value: U256,
}

/// Transaction inputs. `call_returns[i]` is the code returned by the i-th CALL.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tx {
    pub calldata: Vec<u8>,
    pub storage: BTreeMap<U256, U256>,
    pub call_returns: Vec<U256>,
}

impl Tx {
    pub fn new(calldata: Vec<u8>) -> Tx {
        Tx {
            calldata,
            ..Tx::default()
        }
    }

    pub fn with_storage(mut self, storage: BTreeMap<U256, U256>) -> Tx {
        self.storage = storage;
        self
    }

    pub fn with_call_returns(mut self, codes: Vec<U256>) -> Tx {
        self.call_returns = codes;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TxResult {
    pub status: Status,
    pub output: Vec<u8>,
    /// Zero-valued slots are omitted.
    pub storage: BTreeMap<U256, U256>,
    pub refund: BigInt,
    pub call_log: Vec<CallRecord>,
    pub read_log: Vec<ReadRecord>,
    pub write_log: Vec<WriteRecord>,
    pub fault: Option<Fault>,
    /// Index of the halting instruction, or the program length when
    /// execution ran off the end.
    pub pc: usize,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct MachineState<'p> {
    pub program: &'p Program,
    pub pc: usize,
    pub stack: Vec<U256>,
    pub memory: Vec<u8>,
    pub calldata: Vec<u8>,
    pub output: Vec<u8>,
    pub status: Status,
    pub storage: BTreeMap<U256, U256>,
    pub original: BTreeMap<U256, U256>,
    pub refund: BigInt,
    pub call_log: Vec<CallRecord>,
    pub read_log: Vec<ReadRecord>,
    pub write_log: Vec<WriteRecord>,
    pub call_returns: Vec<U256>,
    pub fault: Option<Fault>,
}

fn bool_word(b: bool) -> U256 {
    if b {
        U256::from(1)
    } else {
        U256::ZERO
    }
}

fn load(storage: &BTreeMap<U256, U256>, slot: &U256) -> U256 {
    storage.get(slot).copied().unwrap_or(U256::ZERO)
}

impl<'p> MachineState<'p> {
    pub fn new(program: &'p Program, tx: &Tx) -> Self {
        let storage: BTreeMap<U256, U256> = tx
            .storage
            .iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|(k, v)| (*k, *v))
            .collect();
        MachineState {
            program,
            pc: 0,
            stack: Vec::new(),
            memory: Vec::new(),
            calldata: tx.calldata.clone(),
            output: Vec::new(),
            status: Status::Running,
            original: storage.clone(),
            storage,
            refund: BigInt::from(0),
            call_log: Vec::new(),
            read_log: Vec::new(),
            write_log: Vec::new(),
            call_returns: tx.call_returns.clone(),
            fault: None,
        }
    }

    fn pop(&mut self) -> Result<U256, Fault> {
        self.stack.pop().ok_or(Fault::StackUnderflow)
    }

    fn push(&mut self, w: U256) -> Result<(), Fault> {
        if self.stack.len() >= MAX_STACK {
            return Err(Fault::StackOverflow);
        }
        self.stack.push(w);
        Ok(())
    }

    /// Byte range `[off, off+len)` validated against the memory limit.
    fn range(off: U256, len: U256) -> Result<(usize, usize), Fault> {
        let off: usize = off.try_into().map_err(|_| Fault::OutOfBoundsMemory)?;
        let len: usize = len.try_into().map_err(|_| Fault::OutOfBoundsMemory)?;
        match off.checked_add(len) {
            Some(end) if end <= MAX_MEMORY => Ok((off, len)),
            _ => Err(Fault::OutOfBoundsMemory),
        }
    }

    fn read_memory(&self, off: usize, len: usize) -> Vec<u8> {
        crate::term::eval::slice_padded(&self.memory, &BigInt::from(off), len)
    }

    fn write_memory(&mut self, off: usize, data: &[u8]) {
        if self.memory.len() < off + data.len() {
            self.memory.resize(off + data.len(), 0);
        }
        self.memory[off..off + data.len()].copy_from_slice(data);
    }

    fn halt(&mut self, status: Status) {
        self.status = status;
        if status == Status::Revert {
            self.storage = self.original.clone();
            self.refund = BigInt::from(0);
        }
    }

    /// Executes one instruction. Faults halt with REVERT.
    pub fn step(&mut self) {
        if self.status != Status::Running {
            return;
        }
        if let Err(f) = self.exec() {
            self.fault = Some(f);
            self.output.clear();
            self.halt(Status::Revert);
        }
    }

    fn exec(&mut self) -> Result<(), Fault> {
        let Some(ins) = self.program.instrs.get(self.pc) else {
            self.halt(Status::Success);
            return Ok(());
        };
        let (pops, _) = ins.stack_effect();
        if self.stack.len() < pops {
            return Err(Fault::StackUnderflow);
        }
        let mut next = self.pc + 1;
        match ins {
            Instr::Push(w) => self.push(*w)?,
            Instr::Pop => {
                self.pop()?;
            }
            Instr::Dup(k) => {
                let w = self.stack[self.stack.len() - *k as usize];
                self.push(w)?;
            }
            Instr::Swap(k) => {
                let n = self.stack.len();
                self.stack.swap(n - 1, n - 1 - *k as usize);
            }
            Instr::Add | Instr::Sub | Instr::Mul | Instr::Gt | Instr::Lt | Instr::Eq | Instr::And | Instr::Or => {
                let a = self.pop()?;
                let b = self.pop()?;
                let r = match ins {
                    Instr::Add => a.wrapping_add(b),
                    Instr::Sub => a.wrapping_sub(b),
                    Instr::Mul => a.wrapping_mul(b),
                    Instr::Gt => bool_word(a > b),
                    Instr::Lt => bool_word(a < b),
                    Instr::Eq => bool_word(a == b),
                    Instr::And => a & b,
                    _ => a | b,
                };
                self.push(r)?;
            }
            Instr::IsZero => {
                let a = self.pop()?;
                self.push(bool_word(a.is_zero()))?;
            }
            Instr::Not => {
                let a = self.pop()?;
                self.push(!a)?;
            }
            Instr::CallDataLoad(imm) => {
                let off = match imm {
                    Some(o) => *o,
                    None => self.pop()?,
                };
                let bytes = crate::term::eval::slice_padded(&self.calldata, &word_to_big(&off), 32);
                self.push(U256::from_be_slice(&bytes))?;
            }
            Instr::CallDataSize => self.push(U256::from(self.calldata.len()))?,
            Instr::MLoad => {
                let off = self.pop()?;
                let (o, _) = Self::range(off, U256::from(32))?;
                let w = U256::from_be_slice(&self.read_memory(o, 32));
                self.push(w)?;
            }
            Instr::MStore => {
                let off = self.pop()?;
                let v = self.pop()?;
                let (o, _) = Self::range(off, U256::from(32))?;
                self.write_memory(o, &v.to_be_bytes::<32>());
            }
            Instr::SLoad => {
                let slot = self.pop()?;
                self.read_log.push(ReadRecord { pc: self.pc, slot });
                let v = load(&self.storage, &slot);
                self.push(v)?;
            }
            Instr::SStore => {
                let slot = self.pop()?;
                let value = self.pop()?;
                let curr = load(&self.storage, &slot);
                self.refund += rsstore(&word_to_big(&value), &word_to_big(&curr));
                self.write_log.push(WriteRecord {
                    pc: self.pc,
                    slot,
                    value,
                });
                if value.is_zero() {
                    self.storage.remove(&slot);
                } else {
                    self.storage.insert(slot, value);
                }
            }
            Instr::Sha3 => {
                let off = self.pop()?;
                let len = self.pop()?;
                let (o, l) = Self::range(off, len)?;
                let h = standin::keccak(&self.read_memory(o, l));
                self.push(big_to_word(&h))?;
            }
            Instr::Ecrec => {
                let mut w = [U256::ZERO; 4];
                for slot in w.iter_mut() {
                    *slot = self.pop()?;
                }
                let [h, v, r, s] = w.map(|x| word_to_big(&x));
                self.push(big_to_word(&standin::ecrecover(&h, &v, &r, &s)))?;
            }
            Instr::Call => {
                let mut w = [U256::ZERO; 7];
                for slot in w.iter_mut() {
                    *slot = self.pop()?;
                }
                let [dest, value, gas, arg_offset, arg_len, ret_offset, ret_len] = w;
                let index = self.call_log.len();
                self.call_log.push(CallRecord {
                    index,
                    pc: self.pc,
                    dest,
                    value,
                    gas,
                    arg_offset,
                    arg_len,
                    ret_offset,
                    ret_len,
                });
                let code = self
                    .call_returns
                    .get(index)
                    .copied()
                    .unwrap_or(U256::from(DEFAULT_CALL_RETURN));
                self.push(code)?;
            }
            Instr::Jump(t) => next = *t,
            Instr::JumpI(t) => {
                if !self.pop()?.is_zero() {
                    next = *t;
                }
            }
            Instr::ReturnW => {
                let w = self.pop()?;
                self.output = w.to_be_bytes::<32>().to_vec();
                self.halt(Status::Success);
                return Ok(());
            }
            Instr::Return => {
                let off = self.pop()?;
                let len = self.pop()?;
                let (o, l) = Self::range(off, len)?;
                self.output = self.read_memory(o, l);
                self.halt(Status::Success);
                return Ok(());
            }
            Instr::Revert => {
                self.halt(Status::Revert);
                return Ok(());
            }
            Instr::Stop => {
                self.halt(Status::Success);
                return Ok(());
            }
        }
        self.pc = next;
        Ok(())
    }

    pub fn into_result(self, steps: usize) -> TxResult {
        TxResult {
            status: self.status,
            output: self.output,
            storage: self.storage,
            refund: self.refund,
            call_log: self.call_log,
            read_log: self.read_log,
            write_log: self.write_log,
            fault: self.fault,
            pc: self.pc,
            steps,
        }
    }
}

/// Runs `tx` to completion or until `step_limit` instructions have executed.
pub fn run_transaction(program: &Program, tx: &Tx, step_limit: usize) -> TxResult {
    let mut st = MachineState::new(program, tx);
    let mut steps = 0;
    while st.status == Status::Running {
        if steps == step_limit {
            st.fault = Some(Fault::StepLimitExceeded);
            st.output.clear();
            st.halt(Status::Revert);
            break;
        }
        st.step();
        steps += 1;
    }
    st.into_result(steps)
}
