//! Calldata layout for `#abiCallData2`.
//!
//! A call is a 4-byte selector followed by one 32-byte word per static
//! argument (fixed arrays are flattened). A trailing `bytes` parameter adds an
//! offset word, a length word and the raw content. The content is not padded
//! to a word boundary.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;

use crate::term::standin;
use crate::term::{Sym, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AbiError {
    #[error("malformed signature `{0}`")]
    BadSignature(String),
    #[error("unsupported ABI type `{0}`")]
    UnsupportedType(String),
    #[error("signature expects {expected} argument(s), found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("argument {0} must be a byte buffer")]
    NotBytes(usize),
}

/// Shape of a supported function signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbiSignature {
    pub name: String,
    /// Number of 32-byte head words contributed by static parameters.
    pub words: usize,
    pub trailing_bytes: bool,
}

impl AbiSignature {
    pub fn arg_count(&self) -> usize {
        self.words + usize::from(self.trailing_bytes)
    }

    /// Byte offset of the dynamic tail, relative to the end of the selector.
    pub fn tail_offset(&self) -> usize {
        32 * (self.words + 1)
    }
}

fn static_words(ty: &str) -> Result<usize, AbiError> {
    let unsupported = || AbiError::UnsupportedType(ty.to_string());
    if let Some(open) = ty.rfind('[') {
        let inner = &ty[..open];
        let count = ty[open + 1..]
            .strip_suffix(']')
            .ok_or_else(unsupported)?
            .parse::<usize>()
            .map_err(|_| unsupported())?;
        return Ok(static_words(inner)? * count);
    }
    let sized = |prefix: &str, lo: usize, hi: usize, step: usize| -> Option<bool> {
        let rest = ty.strip_prefix(prefix)?;
        if rest.is_empty() {
            return Some(prefix != "bytes");
        }
        let n: usize = rest.parse().ok()?;
        Some(n >= lo && n <= hi && n.is_multiple_of(step))
    };
    let ok = matches!(ty, "address" | "bool")
        || sized("uint", 8, 256, 8) == Some(true)
        || sized("int", 8, 256, 8) == Some(true)
        || (ty != "bytes" && sized("bytes", 1, 32, 1) == Some(true));
    if ok {
        Ok(1)
    } else {
        Err(unsupported())
    }
}

/// Parses `name(type,...)`. Only static types and a final `bytes` are
/// supported.
pub fn parse_signature(sig: &str) -> Result<AbiSignature, AbiError> {
    let bad = || AbiError::BadSignature(sig.to_string());
    let open = sig.find('(').ok_or_else(bad)?;
    let name = &sig[..open];
    let params = sig[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(bad());
    }
    let mut out = AbiSignature {
        name: name.to_string(),
        words: 0,
        trailing_bytes: false,
    };
    if params.trim().is_empty() {
        return Ok(out);
    }
    let types: Vec<&str> = params.split(',').map(str::trim).collect();
    for (i, ty) in types.iter().enumerate() {
        if *ty == "bytes" && i + 1 == types.len() {
            out.trailing_bytes = true;
        } else {
            out.words += static_words(ty)?;
        }
    }
    Ok(out)
}

fn word(v: impl Into<BigInt>) -> Term {
    Term::buf(Term::int(32), Term::int(v))
}

/// Calldata as a buffer term. `args` is the flattened argument tuple; a
/// non-tuple term counts as a single argument.
pub fn abi_calldata(signature: &str, args: &Term) -> Result<Term, AbiError> {
    let sig = parse_signature(signature)?;
    let args: Vec<Term> = match args {
        Term::Tuple(elems) => elems.clone(),
        other => alloc::vec![other.clone()],
    };
    if args.len() != sig.arg_count() {
        return Err(AbiError::ArityMismatch {
            expected: sig.arg_count(),
            found: args.len(),
        });
    }
    let sel = standin::selector(signature);
    let mut segs = alloc::vec![Term::buf(
        Term::int(4),
        Term::int(BigInt::from_bytes_be(num_bigint::Sign::Plus, &sel))
    )];
    for a in &args[..sig.words] {
        segs.push(Term::buf(Term::int(32), a.clone()));
    }
    if sig.trailing_bytes {
        let data = args[sig.words].clone();
        let len = match &data {
            Term::Buf(l, _) => (**l).clone(),
            Term::Var(_) | Term::Concat(_) | Term::Apply(..) => Term::unary(Sym::Len, data.clone()),
            _ => return Err(AbiError::NotBytes(sig.words)),
        };
        segs.push(word(sig.tail_offset()));
        segs.push(Term::buf(Term::int(32), len));
        segs.push(data);
    }
    Ok(Term::Concat(segs))
}

/// Concrete calldata for word arguments and optional trailing bytes.
pub fn encode_concrete(signature: &str, words: &[BigInt], bytes: Option<&[u8]>) -> Result<Vec<u8>, AbiError> {
    let sig = parse_signature(signature)?;
    let found = words.len() + usize::from(bytes.is_some());
    if words.len() != sig.words || bytes.is_some() != sig.trailing_bytes {
        return Err(AbiError::ArityMismatch {
            expected: sig.arg_count(),
            found,
        });
    }
    let mut out = standin::selector(signature).to_vec();
    for w in words {
        out.extend(standin::to_be_bytes(w, 32));
    }
    if let Some(data) = bytes {
        out.extend(standin::to_be_bytes(&BigInt::from(sig.tail_offset()), 32));
        out.extend(standin::to_be_bytes(&BigInt::from(data.len()), 32));
        out.extend_from_slice(data);
    }
    Ok(out)
}
