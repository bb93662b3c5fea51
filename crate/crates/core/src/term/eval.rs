//! Concrete evaluation of terms.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{standin, word_modulus, Sym, Term, TermError};
use crate::vm::abi;

/// Longest byte buffer evaluation will materialise.
pub const MAX_BUFFER: usize = 1 << 20;

/// A concrete value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    Bytes(Vec<u8>),
    /// Word-to-word map; keys and values reduced mod 2^256, zero values omitted.
    Map(BTreeMap<BigInt, BigInt>),
    Tuple(Vec<Value>),
    Str(String),
    Const(Sym),
}

/// Variable name to concrete value.
pub type Env = BTreeMap<String, Value>;

impl Value {
    pub fn int(v: impl Into<BigInt>) -> Value {
        Value::Int(v.into())
    }

    /// Builds a normalised map value.
    pub fn map<I: IntoIterator<Item = (BigInt, BigInt)>>(entries: I) -> Value {
        let w = word_modulus();
        let mut m = BTreeMap::new();
        for (k, v) in entries {
            let v = v.mod_floor(&w);
            let k = k.mod_floor(&w);
            if v.is_zero() {
                m.remove(&k);
            } else {
                m.insert(k, v);
            }
        }
        Value::Map(m)
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            Value::Bytes(b) => Some(b),
            _ => None,
        }
    }

    /// The value as a term: inverse of evaluation on ints, bools, constants,
    /// strings, tuples, byte strings and maps.
    pub fn to_term(&self, map_base: &str) -> Term {
        match self {
            Value::Int(v) => Term::Int(v.clone()),
            Value::Bool(b) => Term::bool(*b),
            Value::Const(s) => Term::constant(*s),
            Value::Str(s) => Term::Str(s.clone()),
            Value::Tuple(vs) => Term::Tuple(vs.iter().map(|v| v.to_term(map_base)).collect()),
            Value::Bytes(b) => Term::buf(Term::int(b.len()), Term::Int(BigInt::from_bytes_be(Sign::Plus, b))),
            Value::Map(m) => m.iter().fold(Term::var(map_base, super::Sort::Map), |acc, (k, v)| {
                Term::app(Sym::Store, alloc::vec![acc, Term::Int(k.clone()), Term::Int(v.clone())])
            }),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Bytes(b) => {
                f.write_str("0x")?;
                for byte in b {
                    write!(f, "{byte:02x}")?;
                }
                Ok(())
            }
            Value::Map(m) => {
                f.write_str("{")?;
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                f.write_str("}")
            }
            Value::Tuple(vs) => {
                f.write_str("(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Const(s) => f.write_str(s.name()),
        }
    }
}

fn err(msg: impl Into<String>) -> TermError {
    TermError::Eval(msg.into())
}

fn int(v: Value) -> Result<BigInt, TermError> {
    match v {
        Value::Int(i) => Ok(i),
        other => Err(err(alloc::format!("expected an integer, found {other}"))),
    }
}

fn boolean(v: Value) -> Result<bool, TermError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(err(alloc::format!("expected a boolean, found {other}"))),
    }
}

fn bytes(v: Value) -> Result<Vec<u8>, TermError> {
    match v {
        Value::Bytes(b) => Ok(b),
        other => Err(err(alloc::format!("expected bytes, found {other}"))),
    }
}

fn length(v: &BigInt) -> Result<usize, TermError> {
    if v.is_negative() {
        return Err(err(alloc::format!("negative buffer length {v}")));
    }
    v.to_usize()
        .filter(|n| *n <= MAX_BUFFER)
        .ok_or_else(|| err(alloc::format!("buffer length {v} too large")))
}

fn word(v: &BigInt) -> BigInt {
    v.mod_floor(&word_modulus())
}

fn bytes_to_int(b: &[u8]) -> BigInt {
    BigInt::from_bytes_be(Sign::Plus, b)
}

/// `len` bytes of `data` starting at `start`, zero-filled past the end.
pub(crate) fn slice_padded(data: &[u8], start: &BigInt, len: usize) -> Vec<u8> {
    let mut out = alloc::vec![0u8; len];
    if let Some(s) = start.to_usize() {
        if s < data.len() {
            let n = len.min(data.len() - s);
            out[..n].copy_from_slice(&data[s..s + n]);
        }
    }
    out
}

pub(crate) fn rsstore(new: &BigInt, curr: &BigInt) -> BigInt {
    if !curr.is_zero() && new.is_zero() {
        BigInt::from(15000)
    } else {
        BigInt::zero()
    }
}

/// Evaluates `t` with integer arithmetic and explicit `chop`.
pub fn eval_concrete(t: &Term, env: &Env) -> Result<Value, TermError> {
    let ev = |t: &Term| eval_concrete(t, env);
    match t {
        Term::Int(v) => Ok(Value::Int(v.clone())),
        Term::Str(s) => Ok(Value::Str(s.clone())),
        Term::Var(v) => env
            .get(&v.name)
            .cloned()
            .ok_or_else(|| TermError::UnboundVariable(v.name.clone())),
        Term::Tuple(elems) => Ok(Value::Tuple(elems.iter().map(ev).collect::<Result<_, _>>()?)),
        Term::Buf(len, content) => {
            let n = length(&int(ev(len)?)?)?;
            let c = match ev(content)? {
                Value::Bytes(b) => bytes_to_int(&b),
                other => int(other)?,
            };
            Ok(Value::Bytes(standin::to_be_bytes(&c, n)))
        }
        Term::Concat(segs) => {
            let mut out = Vec::new();
            for s in segs {
                out.extend(bytes(ev(s)?)?);
                if out.len() > MAX_BUFFER {
                    return Err(err("buffer too large"));
                }
            }
            Ok(Value::Bytes(out))
        }
        Term::Apply(sym, args) => eval_apply(*sym, args, env),
    }
}

fn eval_apply(sym: Sym, args: &[Term], env: &Env) -> Result<Value, TermError> {
    let ev = |i: usize| eval_concrete(&args[i], env);
    let ints = |i: usize| ev(i).and_then(int);
    let w = word_modulus;
    Ok(match sym {
        Sym::Add => Value::Int(ints(0)? + ints(1)?),
        Sym::Sub => Value::Int(ints(0)? - ints(1)?),
        Sym::Mul => Value::Int(ints(0)? * ints(1)?),
        Sym::Chop => Value::Int(word(&ints(0)?)),
        Sym::Pow256 => Value::Int(w()),
        Sym::Pow160 => Value::Int(BigInt::one() << 160),
        Sym::Pow16 => Value::Int(BigInt::one() << 16),
        Sym::Eq => Value::Bool(ev(0)? == ev(1)?),
        Sym::Ne => Value::Bool(ev(0)? != ev(1)?),
        Sym::Lt => Value::Bool(ints(0)? < ints(1)?),
        Sym::Le => Value::Bool(ints(0)? <= ints(1)?),
        Sym::Gt => Value::Bool(ints(0)? > ints(1)?),
        Sym::Ge => Value::Bool(ints(0)? >= ints(1)?),
        Sym::And => Value::Bool(boolean(ev(0)?)? && boolean(ev(1)?)?),
        Sym::Or => Value::Bool(boolean(ev(0)?)? || boolean(ev(1)?)?),
        Sym::Not => Value::Bool(!boolean(ev(0)?)?),
        Sym::True => Value::Bool(true),
        Sym::False => Value::Bool(false),
        Sym::Select => match ev(0)? {
            Value::Map(m) => Value::Int(m.get(&word(&ints(1)?)).cloned().unwrap_or_default()),
            other => return Err(err(alloc::format!("select on non-map {other}"))),
        },
        Sym::Store => match ev(0)? {
            Value::Map(m) => {
                let mut entries: Vec<_> = m.into_iter().collect();
                entries.push((ints(1)?, ints(2)?));
                Value::map(entries)
            }
            other => return Err(err(alloc::format!("store on non-map {other}"))),
        },
        Sym::Keccak => Value::Int(standin::keccak(&bytes(ev(0)?)?)),
        Sym::SymEcrec => Value::Int(standin::ecrecover(&ints(0)?, &ints(1)?, &ints(2)?, &ints(3)?)),
        Sym::EcrecEmpty => Value::Bool(standin::ecrecover(&ints(0)?, &ints(1)?, &ints(2)?, &ints(3)?).is_zero()),
        Sym::Rsstore => {
            ev(0)?;
            ints(3)?;
            Value::Int(rsstore(&ints(1)?, &ints(2)?))
        }
        Sym::Byzantium | Sym::Success | Sym::Revert => Value::Const(sym),
        Sym::AbiCallData => {
            let sig = match ev(0)? {
                Value::Str(s) => s,
                other => {
                    return Err(err(alloc::format!(
                        "calldata signature must be a string, found {other}"
                    )))
                }
            };
            let vals = match ev(1)? {
                Value::Tuple(vs) => vs,
                v => alloc::vec![v],
            };
            let shape = abi::parse_signature(&sig).map_err(|e| err(e.to_string()))?;
            if vals.len() != shape.arg_count() {
                return Err(err(abi::AbiError::ArityMismatch {
                    expected: shape.arg_count(),
                    found: vals.len(),
                }
                .to_string()));
            }
            let mut words = Vec::new();
            let mut tail = None;
            for (i, v) in vals.into_iter().enumerate() {
                if i < shape.words {
                    words.push(int(v)?);
                } else {
                    tail = Some(bytes(v)?);
                }
            }
            Value::Bytes(abi::encode_concrete(&sig, &words, tail.as_deref()).map_err(|e| err(e.to_string()))?)
        }
        Sym::Bool2Word => Value::Int(BigInt::from(u8::from(boolean(ev(0)?)?))),
        Sym::AndWord => Value::Int(word(&ints(0)?) & word(&ints(1)?)),
        Sym::OrWord => Value::Int(word(&ints(0)?) | word(&ints(1)?)),
        Sym::NotWord => Value::Int(w() - 1 - word(&ints(0)?)),
        Sym::AsWord => Value::Int(word(&bytes_to_int(&bytes(ev(0)?)?))),
        Sym::Range => {
            let data = bytes(ev(0)?)?;
            let start = ints(1)?;
            if start.is_negative() {
                return Err(err("negative range start"));
            }
            Value::Bytes(slice_padded(&data, &start, length(&ints(2)?)?))
        }
        Sym::Len => Value::Int(BigInt::from(bytes(ev(0)?)?.len())),
    })
}

#[cfg(test)]
mod tests {
    use super::super::parse_term;
    use super::*;

    fn env(pairs: &[(&str, Value)]) -> Env {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn chop_wraps() {
        let e = env(&[("X", Value::Int(word_modulus() - 1))]);
        assert_eq!(
            eval_concrete(&parse_term("chop(X + 1)").unwrap(), &e),
            Ok(Value::int(0))
        );
    }

    #[test]
    fn literals_and_maps() {
        assert_eq!(eval_concrete(&Term::int(5), &Env::new()), Ok(Value::int(5)));
        let e = env(&[("S", Value::map([(BigInt::zero(), BigInt::from(7))]))]);
        assert_eq!(
            eval_concrete(&parse_term("select(S, 0)").unwrap(), &e),
            Ok(Value::int(7))
        );
        assert_eq!(
            eval_concrete(&parse_term("select(store(S, 3, 9), 3)").unwrap(), &e),
            Ok(Value::int(9))
        );
    }

    #[test]
    fn unbound() {
        assert_eq!(
            eval_concrete(&parse_term("Y + 1").unwrap(), &Env::new()),
            Err(TermError::UnboundVariable("Y".into()))
        );
    }

    #[test]
    fn buffers() {
        let t = parse_term("#buf(2, 258) ++ #buf(1, 3)").unwrap();
        assert_eq!(eval_concrete(&t, &Env::new()), Ok(Value::Bytes(alloc::vec![1, 2, 3])));
        let t = parse_term("#range(#buf(2, 258) ++ #buf(1, 3), 1, 4)").unwrap();
        assert_eq!(
            eval_concrete(&t, &Env::new()),
            Ok(Value::Bytes(alloc::vec![2, 3, 0, 0]))
        );
        let t = parse_term("#len(#buf(2, 258) ++ #buf(1, 3))").unwrap();
        assert_eq!(eval_concrete(&t, &Env::new()), Ok(Value::int(3)));
    }

    #[test]
    fn refund_function() {
        let t = parse_term("Rsstore(BYZANTIUM, N, C, O)").unwrap();
        let e = env(&[("N", Value::int(0)), ("C", Value::int(4)), ("O", Value::int(4))]);
        assert_eq!(eval_concrete(&t, &e), Ok(Value::int(15000)));
        let e = env(&[("N", Value::int(5)), ("C", Value::int(4)), ("O", Value::int(4))]);
        assert_eq!(eval_concrete(&t, &e), Ok(Value::int(0)));
    }

    #[test]
    fn calldata_builder_matches_encoder() {
        let t = parse_term("#abiCallData2(\"execute(uint256[3])\", (1, 2, 3))").unwrap();
        let expected = abi::encode_concrete(
            "execute(uint256[3])",
            &[BigInt::from(1), BigInt::from(2), BigInt::from(3)],
            None,
        )
        .unwrap();
        assert_eq!(eval_concrete(&t, &Env::new()), Ok(Value::Bytes(expected)));
    }
}
