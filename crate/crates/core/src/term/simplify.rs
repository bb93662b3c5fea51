//! Lemma-driven simplification.
//!
//! Rewriting is outermost-first: a node is rewritten at its root while any
//! rule applies, then its children are normalised left to right, then the
//! root is tried again. Builtin rules run before user lemmas. Every rewrite
//! counts against a step budget.
//!
//! A simplifier may carry facts (the path condition). Facts are atoms in
//! normal form; they decide atoms that appear verbatim, refute their
//! negations, and feed interval bounds.

use alloc::collections::VecDeque;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::bounds::{bounds, Interval};
use super::matching::{head_sort, match_pattern, subst};
use super::{standin, word_max, word_modulus, Lemma, Sort, Sym, Term, TermError};
use crate::vm::abi;

pub const DEFAULT_STEP_BUDGET: usize = 10_000;

const MAX_CONDITION_DEPTH: usize = 8;
const TRACE_LEN: usize = 64;

/// Simplifies `t` with the builtin rules and `lemmas`, without facts.
pub fn simplify(t: &Term, lemmas: &[Lemma]) -> Result<Term, TermError> {
    Simplifier::new(lemmas).simplify(t)
}

/// A configured simplifier. Cheap to build; holds no state between calls
/// besides the facts.
pub struct Simplifier<'a> {
    lemmas: &'a [Lemma],
    facts: Vec<Term>,
    budget: usize,
    steps: usize,
    depth: usize,
    trace: VecDeque<String>,
}

/// Splits conjunctions into atoms, dropping `true`.
pub(crate) fn flatten_conjuncts(t: &Term, out: &mut Vec<Term>) {
    match t {
        Term::Apply(Sym::And, args) => {
            flatten_conjuncts(&args[0], out);
            flatten_conjuncts(&args[1], out);
        }
        _ if t.is_true() => {}
        _ => out.push(t.clone()),
    }
}

/// Normal-form negation of an atom.
pub(crate) fn negate(t: &Term) -> Term {
    match t {
        Term::Apply(Sym::Not, a) => a[0].clone(),
        Term::Apply(Sym::Lt, a) => Term::binary(Sym::Le, a[1].clone(), a[0].clone()),
        Term::Apply(Sym::Le, a) => Term::binary(Sym::Lt, a[1].clone(), a[0].clone()),
        _ if t.is_true() => Term::bool(false),
        _ if t.is_false() => Term::bool(true),
        _ => Term::not(t.clone()),
    }
}

fn lit(t: &Term) -> Option<&BigInt> {
    t.as_int()
}

fn is_int_sorted(t: &Term) -> bool {
    matches!(head_sort(t), Sort::Int)
}

fn pow256(n: &BigInt) -> BigInt {
    BigInt::one() << (8 * n.to_usize().unwrap_or(0))
}

fn is_buffer(t: &Term) -> bool {
    matches!(t, Term::Buf(..) | Term::Concat(_))
}

fn segments(t: &Term) -> Vec<Term> {
    match t {
        Term::Concat(segs) => segs.iter().flat_map(segments).collect(),
        _ => alloc::vec![t.clone()],
    }
}

fn seg_len(t: &Term) -> Option<BigInt> {
    match t {
        Term::Buf(l, _) => lit(l).cloned(),
        _ => None,
    }
}

/// Bytes `[from, to)` of a literal buffer `#buf(n, c)`.
fn slice_literal(n: &BigInt, c: &BigInt, from: &BigInt, to: &BigInt) -> Term {
    let shift = 8 * (n - to).to_usize().unwrap_or(0);
    let width = to - from;
    let content = (c >> shift).mod_floor(&pow256(&width));
    Term::buf(Term::Int(width), Term::Int(content))
}

fn segment_eq(x: &Term, y: &Term) -> Term {
    if x == y {
        return Term::bool(true);
    }
    if let (Term::Buf(l1, a), Term::Buf(l2, b)) = (x, y) {
        if l1 == l2 {
            if let (Some(a), Some(b)) = (lit(a), lit(b)) {
                return Term::bool(a == b);
            }
            if lit(l1).is_some_and(|n| *n == BigInt::from(32)) {
                return Term::eq(
                    Term::unary(Sym::Chop, (**a).clone()),
                    Term::unary(Sym::Chop, (**b).clone()),
                );
            }
        }
    }
    Term::eq(x.clone(), y.clone())
}

/// Segment-wise comparison of two buffers, splitting literal segments to
/// align boundaries. `None` when the shapes cannot be aligned.
fn buffer_eq(a: &Term, b: &Term) -> Option<Term> {
    let mut xs: VecDeque<Term> = segments(a).into();
    let mut ys: VecDeque<Term> = segments(b).into();
    let total = |s: &VecDeque<Term>| {
        s.iter()
            .map(seg_len)
            .try_fold(BigInt::zero(), |acc, l| l.map(|l| acc + l))
    };
    if let (Some(ta), Some(tb)) = (total(&xs), total(&ys)) {
        if ta != tb {
            return Some(Term::bool(false));
        }
    }
    let mut conj = Vec::new();
    loop {
        match (xs.pop_front(), ys.pop_front()) {
            (None, None) => break,
            (Some(x), Some(y)) => match (seg_len(&x), seg_len(&y)) {
                (Some(lx), Some(ly)) if lx == ly => conj.push(segment_eq(&x, &y)),
                (Some(lx), Some(ly)) => {
                    let (long, short_len, long_len, long_is_x) = if lx > ly {
                        (&x, &ly, &lx, true)
                    } else {
                        (&y, &lx, &ly, false)
                    };
                    let Term::Buf(_, c) = long else { return None };
                    let c = lit(c)?;
                    let head = slice_literal(long_len, c, &BigInt::zero(), short_len);
                    let rest = slice_literal(long_len, c, short_len, long_len);
                    if long_is_x {
                        conj.push(segment_eq(&head, &y));
                        xs.push_front(rest);
                    } else {
                        conj.push(segment_eq(&x, &head));
                        ys.push_front(rest);
                    }
                }
                _ if x == y => {}
                _ => return None,
            },
            _ => return None,
        }
    }
    Some(Term::and_all(conj))
}

impl<'a> Simplifier<'a> {
    pub fn new(lemmas: &'a [Lemma]) -> Self {
        Simplifier {
            lemmas,
            facts: Vec::new(),
            budget: DEFAULT_STEP_BUDGET,
            steps: 0,
            depth: 0,
            trace: VecDeque::new(),
        }
    }

    /// Adds facts, which must already be in normal form.
    pub fn with_facts(mut self, facts: &[Term]) -> Self {
        for f in facts {
            flatten_conjuncts(f, &mut self.facts);
        }
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn facts(&self) -> &[Term] {
        &self.facts
    }

    /// Rewrite steps taken by the last call.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Interval of an integer term under the facts.
    pub fn bounds(&self, t: &Term) -> Interval {
        bounds(t, &self.facts)
    }

    pub fn simplify(&mut self, t: &Term) -> Result<Term, TermError> {
        self.steps = 0;
        self.trace.clear();
        self.norm(t.clone())
    }

    fn tick(&mut self, rule: String) -> Result<(), TermError> {
        self.steps += 1;
        if self.trace.len() == TRACE_LEN {
            self.trace.pop_front();
        }
        self.trace.push_back(rule);
        if self.steps > self.budget {
            let mut names: Vec<&String> = Vec::new();
            for r in &self.trace {
                if !names.contains(&r) {
                    names.push(r);
                }
            }
            let rules = names.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ");
            return Err(TermError::NonTermination {
                budget: self.budget,
                rules,
            });
        }
        Ok(())
    }

    fn norm(&mut self, mut t: Term) -> Result<Term, TermError> {
        loop {
            if let Some((next, rule)) = self.rewrite_root(&t)? {
                self.tick(rule)?;
                t = next;
                continue;
            }
            let kids = t.children();
            if kids.is_empty() {
                return Ok(t);
            }
            let mut new_kids = Vec::with_capacity(kids.len());
            for k in kids {
                new_kids.push(self.norm(k.clone())?);
            }
            let rebuilt = t.with_children(new_kids);
            if rebuilt == t {
                return Ok(t);
            }
            t = rebuilt;
            match self.rewrite_root(&t)? {
                Some((next, rule)) => {
                    self.tick(rule)?;
                    t = next;
                }
                None => return Ok(t),
            }
        }
    }

    /// Simplifies an auxiliary term inside the current call.
    fn decide(&mut self, t: Term) -> Result<Term, TermError> {
        if self.depth >= MAX_CONDITION_DEPTH {
            return Ok(t);
        }
        self.depth += 1;
        let r = self.norm(t);
        self.depth -= 1;
        r
    }

    fn rewrite_root(&mut self, t: &Term) -> Result<Option<(Term, String)>, TermError> {
        if let Some((next, rule)) = self.builtin(t)? {
            if &next != t {
                return Ok(Some((next, rule.to_string())));
            }
        }
        for (i, lemma) in self.lemmas.iter().enumerate() {
            let Some(b) = match_pattern(&lemma.lhs, t) else {
                continue;
            };
            if !lemma.condition.is_true() {
                let cond = subst(&lemma.condition, &b);
                if !self.decide(cond)?.is_true() {
                    continue;
                }
            }
            let next = subst(&lemma.rhs, &b);
            if &next != t {
                return Ok(Some((next, alloc::format!("lemma {} `{}`", i + 1, lemma))));
            }
        }
        Ok(None)
    }

    fn fact_value(&self, t: &Term) -> Option<bool> {
        if self.facts.is_empty() || t.is_true() || t.is_false() {
            return None;
        }
        if self.facts.contains(t) {
            return Some(true);
        }
        let neg = negate(t);
        if self.facts.contains(&neg) {
            return Some(false);
        }
        None
    }

    fn builtin(&mut self, t: &Term) -> Result<Option<(Term, &'static str)>, TermError> {
        let r = match t {
            Term::Buf(l, c) => self.buf_rules(l, c),
            Term::Concat(segs) => concat_rules(segs),
            Term::Apply(sym, args) => {
                if head_sort(t) == Sort::Bool {
                    if let Some(v) = self.fact_value(t) {
                        return Ok(Some((Term::bool(v), "path-fact")));
                    }
                }
                return self.apply_rules(*sym, args);
            }
            _ => None,
        };
        Ok(r)
    }

    fn buf_rules(&self, l: &Term, c: &Term) -> Option<(Term, &'static str)> {
        let n = lit(l)?;
        if n.is_negative() {
            return None;
        }
        if n.is_zero() {
            return Some((Term::Concat(Vec::new()), "buf-empty"));
        }
        if let Some(v) = lit(c) {
            let m = pow256(n);
            if v.is_negative() || *v >= m {
                return Some((Term::buf(l.clone(), Term::Int(v.mod_floor(&m))), "buf-literal"));
            }
        }
        if *n <= BigInt::from(32) {
            if let Term::Apply(Sym::Chop, inner) = c {
                return Some((Term::buf(l.clone(), inner[0].clone()), "buf-chop"));
            }
        }
        None
    }

    fn apply_rules(&mut self, sym: Sym, a: &[Term]) -> Result<Option<(Term, &'static str)>, TermError> {
        let w = word_modulus;
        let r = |t: Term, name: &'static str| Ok(Some((t, name)));
        match sym {
            Sym::Pow256 => return r(Term::Int(w()), "pow"),
            Sym::Pow160 => return r(Term::Int(BigInt::one() << 160), "pow"),
            Sym::Pow16 => return r(Term::Int(BigInt::one() << 16), "pow"),
            Sym::Add => {
                let (x, y) = (&a[0], &a[1]);
                match (lit(x), lit(y)) {
                    (Some(p), Some(q)) => return r(Term::Int(p + q), "add-fold"),
                    (Some(_), None) => return r(Term::binary(Sym::Add, y.clone(), x.clone()), "add-literal-right"),
                    (None, Some(q)) if q.is_zero() => return r(x.clone(), "add-zero"),
                    (None, Some(q)) => {
                        if let Term::Apply(Sym::Add, inner) = x {
                            if let Some(p) = lit(&inner[1]) {
                                return r(Term::binary(Sym::Add, inner[0].clone(), Term::Int(p + q)), "add-assoc");
                            }
                        }
                    }
                    (None, None) => {
                        if let Term::Apply(Sym::Add, inner) = y {
                            if lit(&inner[1]).is_some() {
                                let sum = Term::binary(Sym::Add, x.clone(), inner[0].clone());
                                return r(Term::binary(Sym::Add, sum, inner[1].clone()), "add-assoc");
                            }
                        }
                        if let Term::Apply(Sym::Add, inner) = x {
                            if lit(&inner[1]).is_some() {
                                let sum = Term::binary(Sym::Add, inner[0].clone(), y.clone());
                                return r(Term::binary(Sym::Add, sum, inner[1].clone()), "add-assoc");
                            }
                        }
                    }
                }
            }
            Sym::Sub => {
                let (x, y) = (&a[0], &a[1]);
                match (lit(x), lit(y)) {
                    (Some(p), Some(q)) => return r(Term::Int(p - q), "sub-fold"),
                    (None, Some(q)) => return r(Term::binary(Sym::Add, x.clone(), Term::Int(-q)), "sub-const"),
                    _ if x == y => return r(Term::int(0), "sub-self"),
                    _ => {}
                }
            }
            Sym::Mul => {
                let (x, y) = (&a[0], &a[1]);
                match (lit(x), lit(y)) {
                    (Some(p), Some(q)) => return r(Term::Int(p * q), "mul-fold"),
                    (Some(_), None) => return r(Term::binary(Sym::Mul, y.clone(), x.clone()), "mul-literal-right"),
                    (None, Some(q)) if q.is_one() => return r(x.clone(), "mul-one"),
                    (None, Some(q)) if q.is_zero() => return r(Term::int(0), "mul-zero"),
                    _ => {}
                }
            }
            Sym::Chop => {
                let x = &a[0];
                if let Some(v) = lit(x) {
                    return r(Term::Int(v.mod_floor(&w())), "chop-fold");
                }
                if let Term::Apply(Sym::Chop, _) = x {
                    return r(x.clone(), "chop-chop");
                }
                if is_int_sorted(x) && self.bounds(x).within(&BigInt::zero(), &word_max()) {
                    return r(x.clone(), "chop-in-range");
                }
            }
            Sym::Ne => return r(Term::not(Term::eq(a[0].clone(), a[1].clone())), "ne"),
            Sym::Gt => return r(Term::binary(Sym::Lt, a[1].clone(), a[0].clone()), "gt"),
            Sym::Ge => return r(Term::binary(Sym::Le, a[1].clone(), a[0].clone()), "ge"),
            Sym::Eq => return Ok(self.eq_rules(&a[0], &a[1])),
            Sym::Lt | Sym::Le => return Ok(self.order_rules(sym, &a[0], &a[1])),
            Sym::Not => {
                let x = &a[0];
                if x.is_true() || x.is_false() {
                    return r(Term::bool(x.is_false()), "not-fold");
                }
                if matches!(x, Term::Apply(Sym::Not | Sym::Lt | Sym::Le, _)) {
                    return r(negate(x), "not-push");
                }
            }
            Sym::And | Sym::Or => {
                let (x, y) = (&a[0], &a[1]);
                let unit = sym == Sym::And;
                if x.is_true() == unit && (x.is_true() || x.is_false()) {
                    return r(y.clone(), "bool-unit");
                }
                if y.is_true() == unit && (y.is_true() || y.is_false()) {
                    return r(x.clone(), "bool-unit");
                }
                if x.is_true() || x.is_false() || y.is_true() || y.is_false() {
                    return r(Term::bool(!unit), "bool-absorb");
                }
                if x == y {
                    return r(x.clone(), "bool-idempotent");
                }
                if negate(x) == *y {
                    return r(Term::bool(!unit), "bool-complement");
                }
            }
            Sym::Select => {
                let (m, k) = (&a[0], &a[1]);
                if let Some(v) = lit(k) {
                    if v.is_negative() || *v >= w() {
                        return r(
                            Term::binary(Sym::Select, m.clone(), Term::Int(v.mod_floor(&w()))),
                            "select-key",
                        );
                    }
                }
                if let Term::Apply(Sym::Chop, inner) = k {
                    return r(Term::binary(Sym::Select, m.clone(), inner[0].clone()), "select-key");
                }
                if let Term::Apply(Sym::Store, s) = m {
                    match self.same_key(&s[1], k)? {
                        Some(true) => return r(Term::unary(Sym::Chop, s[2].clone()), "select-store-hit"),
                        Some(false) => {
                            return r(Term::binary(Sym::Select, s[0].clone(), k.clone()), "select-store-miss")
                        }
                        None => {}
                    }
                }
            }
            Sym::Store => {
                let (m, k, v) = (&a[0], &a[1], &a[2]);
                let store = |m: Term, k: Term, v: Term| Term::app(Sym::Store, alloc::vec![m, k, v]);
                if let Some(kv) = lit(k) {
                    if kv.is_negative() || *kv >= w() {
                        return r(store(m.clone(), Term::Int(kv.mod_floor(&w())), v.clone()), "store-key");
                    }
                }
                if let Term::Apply(Sym::Chop, inner) = k {
                    return r(store(m.clone(), inner[0].clone(), v.clone()), "store-key");
                }
                if let Some(vv) = lit(v) {
                    if vv.is_negative() || *vv >= w() {
                        return r(
                            store(m.clone(), k.clone(), Term::Int(vv.mod_floor(&w()))),
                            "store-value",
                        );
                    }
                }
                if let Term::Apply(Sym::Chop, inner) = v {
                    return r(store(m.clone(), k.clone(), inner[0].clone()), "store-value");
                }
                if let Term::Apply(Sym::Select, s) = v {
                    if &s[0] == m && &s[1] == k {
                        return r(m.clone(), "store-unchanged");
                    }
                }
                if let Term::Apply(Sym::Store, s) = m {
                    if self.same_key(&s[1], k)? == Some(true) {
                        return r(store(s[0].clone(), k.clone(), v.clone()), "store-overwrite");
                    }
                    if let (Some(k1), Some(k2)) = (lit(&s[1]), lit(k)) {
                        if k2 < k1 {
                            let inner = store(s[0].clone(), k.clone(), v.clone());
                            return r(store(inner, s[1].clone(), s[2].clone()), "store-order");
                        }
                    }
                }
            }
            Sym::Keccak => {
                if let Term::Buf(l, c) = &a[0] {
                    if let (Some(n), Some(c)) = (lit(l), lit(c)) {
                        if let Some(n) = n.to_usize().filter(|n| *n <= super::eval::MAX_BUFFER) {
                            let data = standin::to_be_bytes(c, n);
                            return r(Term::Int(standin::keccak(&data)), "keccak-fold");
                        }
                    }
                }
                if let Term::Concat(segs) = &a[0] {
                    if segs.is_empty() {
                        return r(Term::Int(standin::keccak(&[])), "keccak-fold");
                    }
                }
            }
            Sym::SymEcrec | Sym::EcrecEmpty => {
                if a.iter().any(|x| matches!(x, Term::Apply(Sym::Chop, _))) {
                    let args = a
                        .iter()
                        .map(|x| match x {
                            Term::Apply(Sym::Chop, inner) => inner[0].clone(),
                            other => other.clone(),
                        })
                        .collect();
                    return r(Term::app(sym, args), "ecrec-unchop");
                }
                if let [Some(h), Some(v), Some(rr), Some(s)] = [lit(&a[0]), lit(&a[1]), lit(&a[2]), lit(&a[3])] {
                    let rec = standin::ecrecover(h, v, rr, s);
                    return if sym == Sym::SymEcrec {
                        r(Term::Int(rec), "ecrec-fold")
                    } else {
                        r(Term::bool(rec.is_zero()), "ecrec-fold")
                    };
                }
            }
            Sym::Rsstore => {
                if matches!(a[0], Term::Apply(Sym::Byzantium, _)) {
                    if let (Some(new), Some(curr), Some(_)) = (lit(&a[1]), lit(&a[2]), lit(&a[3])) {
                        return r(Term::Int(super::eval::rsstore(new, curr)), "rsstore-fold");
                    }
                }
            }
            Sym::AbiCallData => {
                if let Term::Str(sig) = &a[0] {
                    if let Ok(t) = abi::abi_calldata(sig, &a[1]) {
                        return r(t, "abi-calldata");
                    }
                }
            }
            Sym::Bool2Word => {
                let x = &a[0];
                if x.is_true() || x.is_false() {
                    return r(Term::int(u8::from(x.is_true())), "bool2word-fold");
                }
            }
            Sym::AndWord | Sym::OrWord => {
                let (x, y) = (&a[0], &a[1]);
                if let (Some(p), Some(q)) = (lit(x), lit(y)) {
                    let (p, q) = (p.mod_floor(&w()), q.mod_floor(&w()));
                    let v = if sym == Sym::AndWord { p & q } else { p | q };
                    return r(Term::Int(v), "bitwise-fold");
                }
                if let (Term::Apply(Sym::Bool2Word, p), Term::Apply(Sym::Bool2Word, q)) = (x, y) {
                    let op = if sym == Sym::AndWord { Sym::And } else { Sym::Or };
                    let b = Term::binary(op, p[0].clone(), q[0].clone());
                    return r(Term::unary(Sym::Bool2Word, b), "bitwise-bool");
                }
            }
            Sym::NotWord => {
                if let Some(p) = lit(&a[0]) {
                    return r(Term::Int(word_max() - p.mod_floor(&w())), "bitwise-fold");
                }
            }
            Sym::AsWord => {
                let segs = segments(&a[0]);
                if let Some(Term::Buf(l, c)) = segs.last() {
                    if let Some(n) = lit(l) {
                        if *n >= BigInt::from(32) {
                            return r(Term::unary(Sym::Chop, (**c).clone()), "asword");
                        }
                        if segs.len() == 1 {
                            if let Some(c) = lit(c) {
                                return r(Term::Int(c.mod_floor(&pow256(n))), "asword");
                            }
                        }
                    }
                }
                if segs.is_empty() {
                    return r(Term::int(0), "asword");
                }
            }
            Sym::Range => {
                if let (Some(start), Some(len)) = (lit(&a[1]), lit(&a[2])) {
                    if let Some(t) = range_slice(&a[0], start, len) {
                        return r(t, "range-slice");
                    }
                }
            }
            Sym::Len => match &a[0] {
                Term::Buf(l, _) => return r((**l).clone(), "len"),
                Term::Concat(segs) => {
                    let sum = segs
                        .iter()
                        .map(|s| Term::unary(Sym::Len, s.clone()))
                        .reduce(|x, y| Term::binary(Sym::Add, x, y))
                        .unwrap_or_else(|| Term::int(0));
                    return r(sum, "len");
                }
                Term::Apply(Sym::Range, args) => return r(args[2].clone(), "len"),
                _ => {}
            },
            _ => {}
        }
        Ok(None)
    }

    /// Whether two storage keys denote the same word, when decidable.
    fn same_key(&mut self, k1: &Term, k2: &Term) -> Result<Option<bool>, TermError> {
        if k1 == k2 {
            return Ok(Some(true));
        }
        let q = Term::eq(Term::unary(Sym::Chop, k1.clone()), Term::unary(Sym::Chop, k2.clone()));
        let d = self.decide(q)?;
        Ok(if d.is_true() {
            Some(true)
        } else if d.is_false() {
            Some(false)
        } else {
            None
        })
    }

    fn eq_rules(&self, x: &Term, y: &Term) -> Option<(Term, &'static str)> {
        let some = |t: Term, name: &'static str| Some((t, name));
        if x == y {
            return some(Term::bool(true), "eq-refl");
        }
        match (x, y) {
            (Term::Int(p), Term::Int(q)) => return some(Term::bool(p == q), "eq-fold"),
            (Term::Str(p), Term::Str(q)) => return some(Term::bool(p == q), "eq-fold"),
            (Term::Apply(f, _), Term::Apply(g, _)) if f.is_value_constant() && g.is_value_constant() => {
                return some(Term::bool(f == g), "eq-constants")
            }
            (Term::Apply(Sym::Keccak, p), Term::Apply(Sym::Keccak, q)) => {
                return some(Term::eq(p[0].clone(), q[0].clone()), "keccak-injective")
            }
            (Term::Apply(Sym::SymEcrec, args), Term::Int(z)) | (Term::Int(z), Term::Apply(Sym::SymEcrec, args))
                if z.is_zero() =>
            {
                return some(Term::app(Sym::EcrecEmpty, args.clone()), "ecrec-empty")
            }
            (Term::Apply(Sym::Store, p), Term::Apply(Sym::Store, q)) if p[0] == q[0] && p[1] == q[1] => {
                return some(
                    Term::eq(
                        Term::unary(Sym::Chop, p[2].clone()),
                        Term::unary(Sym::Chop, q[2].clone()),
                    ),
                    "eq-store",
                )
            }
            (Term::Tuple(p), Term::Tuple(q)) => {
                if p.len() != q.len() {
                    return some(Term::bool(false), "eq-tuple");
                }
                let conj = p.iter().zip(q).map(|(u, v)| Term::eq(u.clone(), v.clone())).collect();
                return some(Term::and_all(conj), "eq-tuple");
            }
            _ => {}
        }
        if is_buffer(x) && is_buffer(y) {
            if let Some(t) = buffer_eq(x, y) {
                return some(t, "eq-buffer");
            }
        }
        if let Term::Apply(Sym::Bool2Word, b) = x {
            if let Some(c) = lit(y) {
                let t = if c.is_zero() {
                    Term::not(b[0].clone())
                } else if c.is_one() {
                    b[0].clone()
                } else {
                    Term::bool(false)
                };
                return some(t, "eq-bool2word");
            }
        }
        if y.is_true() {
            return some(x.clone(), "eq-true");
        }
        if y.is_false() {
            return some(Term::not(x.clone()), "eq-false");
        }
        let swap = match (lit(x), lit(y)) {
            (Some(_), None) => true,
            (None, None) => x > y && !(y.is_true() || y.is_false()),
            _ => false,
        };
        if swap {
            return some(Term::eq(y.clone(), x.clone()), "eq-orient");
        }
        if let (Term::Apply(Sym::Add, s), Some(c2)) = (x, lit(y)) {
            if let Some(c1) = lit(&s[1]) {
                return some(Term::eq(s[0].clone(), Term::Int(c2 - c1)), "eq-linear");
            }
        }
        if is_int_sorted(x) && is_int_sorted(y) {
            let (bx, by) = (self.bounds(x), self.bounds(y));
            if bx.intersect(&by).is_empty() {
                return some(Term::bool(false), "eq-bounds");
            }
            if let (Some(p), Some(q)) = (bx.singleton(), by.singleton()) {
                return some(Term::bool(p == q), "eq-bounds");
            }
        }
        None
    }

    fn order_rules(&self, sym: Sym, x: &Term, y: &Term) -> Option<(Term, &'static str)> {
        let strict = sym == Sym::Lt;
        let some = |t: Term, name: &'static str| Some((t, name));
        if let (Some(p), Some(q)) = (lit(x), lit(y)) {
            return some(Term::bool(if strict { p < q } else { p <= q }), "cmp-fold");
        }
        if x == y {
            return some(Term::bool(!strict), "cmp-refl");
        }
        if let (Term::Apply(Sym::Add, s), Some(c2)) = (x, lit(y)) {
            if let Some(c1) = lit(&s[1]) {
                return some(Term::binary(sym, s[0].clone(), Term::Int(c2 - c1)), "cmp-linear");
            }
        }
        if let (Some(c2), Term::Apply(Sym::Add, s)) = (lit(x), y) {
            if let Some(c1) = lit(&s[1]) {
                return some(Term::binary(sym, Term::Int(c2 - c1), s[0].clone()), "cmp-linear");
            }
        }
        if !(is_int_sorted(x) && is_int_sorted(y)) {
            return None;
        }
        let (bx, by) = (self.bounds(x), self.bounds(y));
        if let (Some(hx), Some(ly)) = (&bx.hi, &by.lo) {
            if (strict && hx < ly) || (!strict && hx <= ly) {
                return some(Term::bool(true), "cmp-bounds");
            }
        }
        if let (Some(lx), Some(hy)) = (&bx.lo, &by.hi) {
            if (strict && lx >= hy) || (!strict && lx > hy) {
                return some(Term::bool(false), "cmp-bounds");
            }
        }
        None
    }
}

fn concat_rules(segs: &[Term]) -> Option<(Term, &'static str)> {
    if segs.iter().any(|s| matches!(s, Term::Concat(_))) {
        return Some((Term::Concat(segments(&Term::Concat(segs.to_vec()))), "concat-flatten"));
    }
    if segs.iter().any(|s| seg_len(s).is_some_and(|n| n.is_zero())) {
        let kept = segs
            .iter()
            .filter(|s| !seg_len(s).is_some_and(|n| n.is_zero()))
            .cloned()
            .collect();
        return Some((Term::Concat(kept), "concat-drop-empty"));
    }
    for i in 0..segs.len().saturating_sub(1) {
        if let (Term::Buf(l1, c1), Term::Buf(l2, c2)) = (&segs[i], &segs[i + 1]) {
            if let (Some(n1), Some(v1), Some(n2), Some(v2)) = (lit(l1), lit(c1), lit(l2), lit(c2)) {
                let merged = v1.mod_floor(&pow256(n1)) * pow256(n2) + v2.mod_floor(&pow256(n2));
                let mut out = segs.to_vec();
                out.splice(i..i + 2, [Term::buf(Term::Int(n1 + n2), Term::Int(merged))]);
                return Some((Term::Concat(out), "concat-merge"));
            }
        }
    }
    if segs.len() == 1 {
        return Some((segs[0].clone(), "concat-unwrap"));
    }
    None
}

/// `#range(buf, start, len)` over segments of literal length. Bytes past
/// the end read as zero.
fn range_slice(buf: &Term, start: &BigInt, len: &BigInt) -> Option<Term> {
    if start.is_negative() || len.is_negative() {
        return None;
    }
    let end = start + len;
    let mut out = Vec::new();
    let mut offset = BigInt::zero();
    for seg in segments(buf) {
        if offset >= end {
            break;
        }
        let n = seg_len(&seg)?;
        let seg_end = &offset + &n;
        let lo = start.max(&offset).clone();
        let hi = end.clone().min(seg_end.clone());
        if lo < hi {
            if lo == offset && hi == seg_end {
                out.push(seg.clone());
            } else {
                let Term::Buf(_, c) = &seg else { return None };
                let c = lit(c)?;
                out.push(slice_literal(&n, c, &(&lo - &offset), &(&hi - &offset)));
            }
        }
        offset = seg_end;
    }
    let covered = end.clone().min(offset.max(start.clone())) - start;
    if covered < *len {
        out.push(Term::buf(Term::Int(len - covered), Term::int(0)));
    }
    Some(Term::Concat(out))
}

#[cfg(test)]
mod tests {
    use super::super::{parse_lemma, parse_term};
    use super::*;

    fn s(text: &str) -> Term {
        simplify(&parse_term(text).unwrap(), &[]).unwrap()
    }

    fn facts(list: &[&str]) -> Vec<Term> {
        list.iter().map(|f| s(f)).collect()
    }

    fn with(fs: &[&str], text: &str, lemmas: &[Lemma]) -> Term {
        let fs = facts(fs);
        Simplifier::new(lemmas)
            .with_facts(&fs)
            .simplify(&parse_term(text).unwrap())
            .unwrap()
    }

    #[test]
    fn chop_lemma_on_pow256() {
        let l = parse_lemma("rule chop(I) => 0 requires I ==Int pow256").unwrap();
        assert_eq!(
            simplify(&parse_term("chop(pow256)").unwrap(), &[l]).unwrap(),
            Term::int(0)
        );
    }

    #[test]
    fn refund_lemma() {
        let l = parse_lemma("rule Rsstore(BYZANTIUM, NEW, CURR, ORIG) => 0 requires NEW =/=Int 0").unwrap();
        let t = parse_term("Rsstore(BYZANTIUM, 5, C, O)").unwrap();
        assert_eq!(simplify(&t, core::slice::from_ref(&l)).unwrap(), Term::int(0));
        assert_eq!(simplify(&t, &[]).unwrap(), t);
        let t = parse_term("Rsstore(BYZANTIUM, 0, C, O)").unwrap();
        assert_eq!(simplify(&t, &[l]).unwrap(), t);
    }

    #[test]
    fn map_axioms() {
        assert_eq!(s("select(store(S, 3, 9), 3)"), Term::int(9));
        assert_eq!(s("select(store(S, 3, 9), 4)"), parse_term("select(S, 4)").unwrap());
        assert_eq!(s("store(store(S, 1, A), 1, B)"), parse_term("store(S, 1, B)").unwrap());
        assert_eq!(
            s("store(store(S, 2, A), 1, B)"),
            parse_term("store(store(S, 1, B), 2, A)").unwrap()
        );
        assert_eq!(s("store(S, 0, select(S, 0))"), parse_term("S:Map").unwrap());
        assert_eq!(
            s("select(store(S, K, 9), J)"),
            parse_term("select(store(S, K, 9), J)").unwrap()
        );
    }

    #[test]
    fn arithmetic_normalisation() {
        assert_eq!(s("chop(2 + 3)"), Term::int(5));
        assert_eq!(s("1 + X + 2"), parse_term("X + 3").unwrap());
        assert_eq!(s("X - 1 + 1"), parse_term("X").unwrap());
        assert_eq!(s("X - X"), Term::int(0));
        assert_eq!(s("(A + 1) + (B + 2)"), parse_term("A + B + 3").unwrap());
        assert_eq!(s("chop(chop(X))"), parse_term("chop(X)").unwrap());
    }

    #[test]
    fn chop_needs_bounds_not_literals() {
        assert_eq!(
            with(&["0 <= A", "A < 10"], "chop(A + 3)", &[]),
            parse_term("A + 3").unwrap()
        );
        // an exact bound must not collapse the term to a literal
        let t = with(&["select(S0, 0) == pow256 - 1"], "chop(select(S0, 0) + 1)", &[]);
        assert_eq!(t, parse_term("chop(select(S0, 0) + 1)").unwrap());
        let l = parse_lemma("rule chop(I) => 0 requires I ==Int pow256").unwrap();
        let t = with(&["select(S0, 0) == pow256 - 1"], "chop(select(S0, 0) + 1)", &[l]);
        assert_eq!(t, Term::int(0));
    }

    #[test]
    fn comparisons_and_facts() {
        assert_eq!(s("3 < 4"), Term::bool(true));
        assert_eq!(s("A > 0"), parse_term("0 < A").unwrap());
        assert_eq!(s("notBool A > 0"), parse_term("A <= 0").unwrap());
        assert_eq!(s("A + 1 == 5"), parse_term("A == 4").unwrap());
        assert_eq!(s("5 == A"), parse_term("A == 5").unwrap());
        assert_eq!(with(&["0 < A"], "A > 0", &[]), Term::bool(true));
        assert_eq!(with(&["0 < A"], "A <= 0", &[]), Term::bool(false));
        assert_eq!(with(&["0 < A"], "A == 0", &[]), Term::bool(false));
        assert_eq!(with(&["A < 10"], "A < 11", &[]), Term::bool(true));
        assert_eq!(s("A > 0 andBool notBool A > 0"), Term::bool(false));
    }

    #[test]
    fn word_booleans() {
        assert_eq!(s("bool2Word(A < 10) == 0"), parse_term("10 <= A").unwrap());
        assert_eq!(s("notBool (bool2Word(A < 10) == 0)"), parse_term("A < 10").unwrap());
        assert_eq!(
            s("andWord(bool2Word(P:Bool), bool2Word(Q:Bool))"),
            parse_term("bool2Word(P:Bool andBool Q:Bool)").unwrap()
        );
        assert_eq!(s("bool2Word(2 < 1)"), Term::int(0));
    }

    #[test]
    fn keccak_is_injective_not_decided() {
        assert_eq!(
            s("keccak256(A) == keccak256(B)"),
            parse_term("A:Bytes == B:Bytes").unwrap()
        );
        let t = s("keccak256(#buf(32, X)) == keccak256(#buf(32, Y))");
        assert_eq!(t, parse_term("chop(X) == chop(Y)").unwrap());
    }

    #[test]
    fn buffers() {
        assert_eq!(s("#buf(32, X) == #buf(32, 5)"), parse_term("chop(X) == 5").unwrap());
        assert_eq!(s("(#buf(32, 1) ++ #buf(32, 2)) == #buf(64, 2)"), Term::bool(false));
        assert_eq!(s("#buf(4, 1) ++ #buf(2, 2)"), parse_term("#buf(6, 65538)").unwrap());
        assert_eq!(s("#len(#buf(4, 1) ++ #buf(L, D))"), parse_term("L + 4").unwrap());
        assert_eq!(
            s("#asWord(#range(#buf(4, 7) ++ #buf(32, A), 4, 32))"),
            parse_term("chop(A)").unwrap()
        );
        assert_eq!(s("#asWord(#range(#buf(4, 7), 4, 32))"), Term::int(0));
        assert_eq!(s("#range(#buf(2, 258), 1, 1)"), parse_term("#buf(1, 2)").unwrap());
        assert_eq!(s("#buf(32, chop(X))"), parse_term("#buf(32, X)").unwrap());
        assert_eq!(s("#buf(0, X) ++ #buf(32, X)"), parse_term("#buf(32, X)").unwrap());
    }

    #[test]
    fn calldata_builder_expands() {
        let t = s("#asWord(#range(#abiCallData2(\"execute(uint256[3])\", (A0, A1, A2)), 36, 32))");
        assert_eq!(t, parse_term("chop(A1)").unwrap());
    }

    #[test]
    fn loops_are_reported() {
        let ls = [
            parse_lemma("rule notWord(X) => andWord(X, X)").unwrap(),
            parse_lemma("rule andWord(X, X) => notWord(X)").unwrap(),
        ];
        match simplify(&parse_term("notWord(A)").unwrap(), &ls) {
            Err(TermError::NonTermination { budget, rules }) => {
                assert_eq!(budget, DEFAULT_STEP_BUDGET);
                assert!(rules.contains("lemma 1") && rules.contains("lemma 2"), "{rules}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn idempotent_on_samples() {
        for text in [
            "chop(select(store(S, 0, X + 1), 0) + 2) == 7",
            "#buf(4, 9) ++ #buf(32, A) ++ #buf(3, 1)",
            "notBool (A < B orBool B < A)",
        ] {
            let once = s(text);
            assert_eq!(simplify(&once, &[]).unwrap(), once);
        }
    }
}
