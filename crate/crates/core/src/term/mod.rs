//! The term language shared by spec blocks, lemmas and the symbolic executor.
//!
//! Terms are plain immutable trees. Integers are arbitrary precision and
//! `+Int`/`-Int`/`*Int` are true integer operations; reduction modulo 2^256 is
//! always explicit through `chop`.

pub(crate) mod bounds;
pub(crate) mod eval;
mod lemma;
pub(crate) mod matching;
mod parse;
mod print;
pub(crate) mod simplify;
pub mod standin;

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

pub use bounds::Interval;
pub use eval::{eval_concrete, Env, Value};
pub use lemma::{parse_lemma, parse_lemma_file, Lemma};
pub use matching::{match_pattern, substitute, Bindings};
pub use parse::{parse_term, parse_term_as};
pub use print::InSort;
pub use simplify::{simplify, Simplifier, DEFAULT_STEP_BUDGET};

/// Errors raised by term parsing, sort checking, evaluation and simplification.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown symbol `{name}` at {line}:{column}")]
    UnknownSymbol { name: String, line: usize, column: usize },
    #[error("`{name}` expects {expected} argument(s), found {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("cannot evaluate: {0}")]
    Eval(String),
    #[error("rewriting did not terminate within {budget} steps; rules in the loop: {rules}")]
    NonTermination { budget: usize, rules: String },
}

/// Sorts of terms. Variables may only be declared with `Int`, `Bool`,
/// `Bytes` or `Map`; the wildcard `_` has sort `Any`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Int,
    Bool,
    Bytes,
    Map,
    Tuple,
    Str,
    Status,
    Fork,
    Any,
}

impl Sort {
    pub fn name(self) -> &'static str {
        match self {
            Sort::Int => "Int",
            Sort::Bool => "Bool",
            Sort::Bytes => "Bytes",
            Sort::Map => "Map",
            Sort::Tuple => "Tuple",
            Sort::Str => "String",
            Sort::Status => "StatusCode",
            Sort::Fork => "Schedule",
            Sort::Any => "Any",
        }
    }

    /// The sort a variable gets when it appears in a position of this sort
    /// without an explicit annotation.
    pub(crate) fn var_default(self) -> Sort {
        match self {
            Sort::Bool | Sort::Bytes | Sort::Map => self,
            _ => Sort::Int,
        }
    }

    pub(crate) fn from_annotation(s: &str) -> Option<Sort> {
        match s {
            "Int" => Some(Sort::Int),
            "Bool" => Some(Sort::Bool),
            "Bytes" => Some(Sort::Bytes),
            "Map" => Some(Sort::Map),
            _ => None,
        }
    }

    fn compatible(self, other: Sort) -> bool {
        self == other || self == Sort::Any || other == Sort::Any
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Broad classification of function symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Arith,
    Constant,
    Comparison,
    Boolean,
    Map,
    Uninterpreted,
    Refund,
    CalldataBuilder,
    /// Word-level helpers produced by the machine semantics.
    Word,
    /// Byte-buffer helpers produced by the machine semantics.
    Buffer,
}

macro_rules! symbols {
    ($( $variant:ident => $name:literal, $arity:literal, $kind:ident, $result:ident; )*) => {
        /// Every function symbol known to the term language.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Sym {
            $( $variant, )*
        }

        impl Sym {
            pub const ALL: &'static [Sym] = &[$( Sym::$variant, )*];

            /// Canonical (K-style) spelling.
            pub fn name(self) -> &'static str {
                match self { $( Sym::$variant => $name, )* }
            }

            pub fn arity(self) -> usize {
                match self { $( Sym::$variant => $arity, )* }
            }

            pub fn kind(self) -> SymbolKind {
                match self { $( Sym::$variant => SymbolKind::$kind, )* }
            }

            pub fn result_sort(self) -> Sort {
                match self { $( Sym::$variant => Sort::$result, )* }
            }
        }
    };
}

symbols! {
    Add => "+Int", 2, Arith, Int;
    Sub => "-Int", 2, Arith, Int;
    Mul => "*Int", 2, Arith, Int;
    Chop => "chop", 1, Arith, Int;
    Pow256 => "pow256", 0, Constant, Int;
    Pow160 => "pow160", 0, Constant, Int;
    Pow16 => "pow16", 0, Constant, Int;
    Eq => "==Int", 2, Comparison, Bool;
    Ne => "=/=Int", 2, Comparison, Bool;
    Lt => "<Int", 2, Comparison, Bool;
    Le => "<=Int", 2, Comparison, Bool;
    Gt => ">Int", 2, Comparison, Bool;
    Ge => ">=Int", 2, Comparison, Bool;
    And => "andBool", 2, Boolean, Bool;
    Or => "orBool", 2, Boolean, Bool;
    Not => "notBool", 1, Boolean, Bool;
    True => "true", 0, Constant, Bool;
    False => "false", 0, Constant, Bool;
    Select => "select", 2, Map, Int;
    Store => "store", 3, Map, Map;
    Keccak => "keccak256", 1, Uninterpreted, Int;
    SymEcrec => "#symEcrec", 4, Uninterpreted, Int;
    EcrecEmpty => "#ecrecEmpty", 4, Uninterpreted, Bool;
    Rsstore => "Rsstore", 4, Refund, Int;
    Byzantium => "BYZANTIUM", 0, Constant, Fork;
    AbiCallData => "#abiCallData2", 2, CalldataBuilder, Bytes;
    Success => "EVMC_SUCCESS", 0, Constant, Status;
    Revert => "EVMC_REVERT", 0, Constant, Status;
    Bool2Word => "bool2Word", 1, Word, Int;
    AndWord => "andWord", 2, Word, Int;
    OrWord => "orWord", 2, Word, Int;
    NotWord => "notWord", 1, Word, Int;
    AsWord => "#asWord", 1, Buffer, Int;
    Range => "#range", 3, Buffer, Bytes;
    Len => "#len", 1, Buffer, Int;
}

impl Sym {
    pub fn lookup(name: &str) -> Option<Sym> {
        Sym::ALL.iter().copied().find(|s| s.name() == name)
    }

    /// Expected sort of argument `index`.
    pub fn arg_sort(self, index: usize) -> Sort {
        use Sym::*;
        match (self, index) {
            (Eq | Ne, _) => Sort::Any,
            (And | Or | Not | Bool2Word, _) => Sort::Bool,
            (Select | Store, 0) => Sort::Map,
            (Keccak | AsWord | Len, 0) | (Range, 0) => Sort::Bytes,
            (Rsstore, 0) => Sort::Fork,
            (AbiCallData, 0) => Sort::Str,
            (AbiCallData, 1) => Sort::Any,
            _ => Sort::Int,
        }
    }

    pub(crate) fn infix_precedence(self) -> Option<u8> {
        use Sym::*;
        match self {
            Or => Some(2),
            And => Some(3),
            Eq | Ne | Lt | Le | Gt | Ge => Some(5),
            Add | Sub => Some(6),
            Mul => Some(7),
            _ => None,
        }
    }

    /// 0-ary symbols denoting distinct values (`true`, `EVMC_SUCCESS`, ...).
    pub(crate) fn is_value_constant(self) -> bool {
        matches!(
            self,
            Sym::True | Sym::False | Sym::Success | Sym::Revert | Sym::Byzantium
        )
    }
}

/// A symbolic variable with its declared sort.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: impl Into<String>, sort: Sort) -> Self {
        Var {
            name: name.into(),
            sort,
        }
    }

    pub fn is_wildcard(&self) -> bool {
        self.name == "_"
    }
}

/// A symbolic expression.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Int(BigInt),
    Var(Var),
    Apply(Sym, Vec<Term>),
    Tuple(Vec<Term>),
    /// `#buf(LEN, CONTENT)`: `LEN` bytes holding `CONTENT` big-endian.
    Buf(Box<Term>, Box<Term>),
    /// Concatenation of byte buffers (`A ++ B`).
    Concat(Vec<Term>),
    Str(String),
}

pub(crate) fn word_modulus() -> BigInt {
    BigInt::one() << 256
}

pub(crate) fn word_max() -> BigInt {
    word_modulus() - 1
}

impl Term {
    pub fn int(v: impl Into<BigInt>) -> Term {
        Term::Int(v.into())
    }

    pub fn var(name: &str, sort: Sort) -> Term {
        Term::Var(Var::new(name, sort))
    }

    pub fn wildcard() -> Term {
        Term::Var(Var::new("_", Sort::Any))
    }

    /// Builds an application, checking arity.
    pub fn apply(sym: Sym, args: Vec<Term>) -> Result<Term, TermError> {
        if args.len() != sym.arity() {
            return Err(TermError::ArityMismatch {
                name: sym.name().to_string(),
                expected: sym.arity(),
                found: args.len(),
            });
        }
        Ok(Term::Apply(sym, args))
    }

    pub(crate) fn app(sym: Sym, args: Vec<Term>) -> Term {
        debug_assert_eq!(args.len(), sym.arity(), "arity of {}", sym.name());
        Term::Apply(sym, args)
    }

    pub fn constant(sym: Sym) -> Term {
        Term::app(sym, Vec::new())
    }

    pub fn bool(b: bool) -> Term {
        Term::constant(if b { Sym::True } else { Sym::False })
    }

    pub fn buf(len: Term, content: Term) -> Term {
        Term::Buf(Box::new(len), Box::new(content))
    }

    pub fn binary(sym: Sym, a: Term, b: Term) -> Term {
        Term::app(sym, alloc::vec![a, b])
    }

    pub fn unary(sym: Sym, a: Term) -> Term {
        Term::app(sym, alloc::vec![a])
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Term) -> Term {
        Term::unary(Sym::Not, a)
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::binary(Sym::Eq, a, b)
    }

    pub fn and_all(mut conjuncts: Vec<Term>) -> Term {
        match conjuncts.len() {
            0 => Term::bool(true),
            1 => conjuncts.pop().unwrap(),
            _ => {
                let mut iter = conjuncts.into_iter();
                let first = iter.next().unwrap();
                iter.fold(first, |acc, t| Term::binary(Sym::And, acc, t))
            }
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Term::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Term::Apply(Sym::True, _))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Term::Apply(Sym::False, _))
    }

    pub fn is_wildcard(&self) -> bool {
        matches!(self, Term::Var(v) if v.is_wildcard())
    }

    /// Immediate subterms, left to right.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Int(_) | Term::Var(_) | Term::Str(_) => Vec::new(),
            Term::Apply(_, args) | Term::Tuple(args) | Term::Concat(args) => args.iter().collect(),
            Term::Buf(l, c) => alloc::vec![&**l, &**c],
        }
    }

    /// Rebuilds this node with new children (same count and order as [`Term::children`]).
    pub(crate) fn with_children(&self, mut kids: Vec<Term>) -> Term {
        match self {
            Term::Int(_) | Term::Var(_) | Term::Str(_) => self.clone(),
            Term::Apply(s, _) => Term::Apply(*s, kids),
            Term::Tuple(_) => Term::Tuple(kids),
            Term::Concat(_) => Term::Concat(kids),
            Term::Buf(..) => {
                let content = kids.pop().unwrap();
                let len = kids.pop().unwrap();
                Term::buf(len, content)
            }
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Replaces every occurrence of `from` with `to`.
    pub fn replace(&self, from: &Term, to: &Term) -> Term {
        if self == from {
            return to.clone();
        }
        let kids = self.children();
        if kids.is_empty() {
            return self.clone();
        }
        self.with_children(kids.into_iter().map(|k| k.replace(from, to)).collect())
    }

    /// Sort of this term, checking every application against the symbol table.
    pub fn sort(&self) -> Result<Sort, TermError> {
        match self {
            Term::Int(_) => Ok(Sort::Int),
            Term::Var(v) => Ok(v.sort),
            Term::Str(_) => Ok(Sort::Str),
            Term::Tuple(elems) => {
                for e in elems {
                    e.sort()?;
                }
                Ok(Sort::Tuple)
            }
            Term::Buf(len, content) => {
                expect_sort(len.sort()?, Sort::Int, "#buf length")?;
                let cs = content.sort()?;
                if !(cs.compatible(Sort::Int) || cs == Sort::Bytes) {
                    return Err(TermError::SortMismatch(alloc::format!(
                        "#buf content must be Int or Bytes, found {cs}"
                    )));
                }
                Ok(Sort::Bytes)
            }
            Term::Concat(segs) => {
                for s in segs {
                    expect_sort(s.sort()?, Sort::Bytes, "buffer segment")?;
                }
                Ok(Sort::Bytes)
            }
            Term::Apply(sym, args) => {
                if args.len() != sym.arity() {
                    return Err(TermError::ArityMismatch {
                        name: sym.name().to_string(),
                        expected: sym.arity(),
                        found: args.len(),
                    });
                }
                let sorts = args.iter().map(Term::sort).collect::<Result<Vec<_>, _>>()?;
                match sym {
                    Sym::Eq | Sym::Ne => {
                        if !sorts[0].compatible(sorts[1]) {
                            return Err(TermError::SortMismatch(alloc::format!(
                                "cannot compare {} with {}",
                                sorts[0],
                                sorts[1]
                            )));
                        }
                    }
                    Sym::AbiCallData => {
                        expect_sort(sorts[0], Sort::Str, "#abiCallData2 signature")?;
                    }
                    _ => {
                        for (i, s) in sorts.iter().enumerate() {
                            expect_sort(*s, sym.arg_sort(i), sym.name())?;
                        }
                    }
                }
                Ok(sym.result_sort())
            }
        }
    }

    /// Set of variables occurring in the term (the wildcard excluded).
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) if !v.is_wildcard() => {
                out.insert(v.clone());
            }
            _ => {
                for c in self.children() {
                    c.collect_vars(out);
                }
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Total byte length when every segment length is a literal.
    pub fn literal_len(&self) -> Option<BigInt> {
        match self {
            Term::Buf(l, _) => l.as_int().cloned(),
            Term::Concat(segs) => segs
                .iter()
                .map(Term::literal_len)
                .try_fold(BigInt::zero(), |acc, l| l.map(|l| acc + l)),
            _ => None,
        }
    }
}

/// Free variables of a term.
pub fn free_vars(t: &Term) -> BTreeSet<Var> {
    t.free_vars()
}

/// Canonical text of a term; the inverse of [`parse_term`].
pub fn print_term(t: &Term) -> String {
    t.to_string()
}

fn expect_sort(found: Sort, expected: Sort, what: &str) -> Result<(), TermError> {
    if found.compatible(expected) {
        Ok(())
    } else {
        Err(TermError::SortMismatch(alloc::format!(
            "{what} expects {expected}, found {found}"
        )))
    }
}
