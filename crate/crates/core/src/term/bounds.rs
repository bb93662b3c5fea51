//! Interval reasoning over integer terms.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{word_max, Sym, Term};

/// A closed integer interval; `None` is unbounded on that side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Option<BigInt>,
    pub hi: Option<BigInt>,
}

impl Interval {
    pub fn full() -> Self {
        Interval { lo: None, hi: None }
    }

    pub fn exact(v: BigInt) -> Self {
        Interval {
            lo: Some(v.clone()),
            hi: Some(v),
        }
    }

    pub fn range(lo: BigInt, hi: BigInt) -> Self {
        Interval {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    pub fn word() -> Self {
        Interval::range(BigInt::zero(), word_max())
    }

    pub fn is_empty(&self) -> bool {
        matches!((&self.lo, &self.hi), (Some(l), Some(h)) if l > h)
    }

    pub fn singleton(&self) -> Option<&BigInt> {
        match (&self.lo, &self.hi) {
            (Some(l), Some(h)) if l == h => Some(l),
            _ => None,
        }
    }

    /// Whether every member lies in `[lo, hi]`.
    pub fn within(&self, lo: &BigInt, hi: &BigInt) -> bool {
        matches!((&self.lo, &self.hi), (Some(l), Some(h)) if l >= lo && h <= hi)
    }

    pub fn contains(&self, v: &BigInt) -> bool {
        self.lo.as_ref().is_none_or(|l| l <= v) && self.hi.as_ref().is_none_or(|h| v <= h)
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let lo = match (&self.lo, &other.lo) {
            (Some(a), Some(b)) => Some(a.max(b).clone()),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        let hi = match (&self.hi, &other.hi) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        Interval { lo, hi }
    }

    fn add(&self, o: &Interval) -> Interval {
        let f = |a: &Option<BigInt>, b: &Option<BigInt>| match (a, b) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        Interval {
            lo: f(&self.lo, &o.lo),
            hi: f(&self.hi, &o.hi),
        }
    }

    fn neg(&self) -> Interval {
        Interval {
            lo: self.hi.as_ref().map(|h| -h),
            hi: self.lo.as_ref().map(|l| -l),
        }
    }

    fn mul(&self, o: &Interval) -> Interval {
        if let (Some(a), Some(b), Some(c), Some(d)) = (&self.lo, &self.hi, &o.lo, &o.hi) {
            let ps = [a * c, a * d, b * c, b * d];
            let lo = ps.iter().min().unwrap().clone();
            let hi = ps.iter().max().unwrap().clone();
            return Interval::range(lo, hi);
        }
        let nonneg = |i: &Interval| i.lo.as_ref().is_some_and(|l| !l.is_negative());
        if nonneg(self) && nonneg(o) {
            return Interval {
                lo: Some(self.lo.as_ref().unwrap() * o.lo.as_ref().unwrap()),
                hi: None,
            };
        }
        Interval::full()
    }
}

fn intrinsic(t: &Term, facts: &[Term]) -> Interval {
    let b = |t: &Term| bounds(t, facts);
    match t {
        Term::Int(v) => Interval::exact(v.clone()),
        Term::Apply(sym, args) => match sym {
            Sym::Add => b(&args[0]).add(&b(&args[1])),
            Sym::Sub => b(&args[0]).add(&b(&args[1]).neg()),
            Sym::Mul => b(&args[0]).mul(&b(&args[1])),
            Sym::Chop => {
                let inner = b(&args[0]);
                if inner.within(&BigInt::zero(), &word_max()) {
                    inner
                } else {
                    Interval::word()
                }
            }
            Sym::Pow256 => Interval::exact(BigInt::one() << 256),
            Sym::Pow160 => Interval::exact(BigInt::one() << 160),
            Sym::Pow16 => Interval::exact(BigInt::one() << 16),
            Sym::Select | Sym::Keccak | Sym::AsWord | Sym::AndWord | Sym::OrWord | Sym::NotWord => Interval::word(),
            Sym::Bool2Word => Interval::range(BigInt::zero(), BigInt::one()),
            Sym::SymEcrec => Interval::range(BigInt::zero(), (BigInt::one() << 160) - 1),
            Sym::Rsstore => Interval::range(BigInt::zero(), BigInt::from(15000)),
            Sym::Len => Interval {
                lo: Some(BigInt::zero()),
                hi: None,
            },
            _ => Interval::full(),
        },
        _ => Interval::full(),
    }
}

/// What the fact atoms say about exactly `t`.
fn from_facts(t: &Term, facts: &[Term], mut acc: Interval) -> Interval {
    let one = BigInt::one();
    for f in facts {
        let Term::Apply(sym, args) = f else { continue };
        if args.len() != 2 {
            continue;
        }
        let (l, r) = (&args[0], &args[1]);
        let tight = match (sym, l.as_int(), r.as_int()) {
            (Sym::Lt, None, Some(c)) if l == t => Interval {
                lo: None,
                hi: Some(c - &one),
            },
            (Sym::Le, None, Some(c)) if l == t => Interval {
                lo: None,
                hi: Some(c.clone()),
            },
            (Sym::Gt, None, Some(c)) if l == t => Interval {
                lo: Some(c + &one),
                hi: None,
            },
            (Sym::Ge, None, Some(c)) if l == t => Interval {
                lo: Some(c.clone()),
                hi: None,
            },
            (Sym::Lt, Some(c), None) if r == t => Interval {
                lo: Some(c + &one),
                hi: None,
            },
            (Sym::Le, Some(c), None) if r == t => Interval {
                lo: Some(c.clone()),
                hi: None,
            },
            (Sym::Eq, None, Some(c)) if l == t => Interval::exact(c.clone()),
            (Sym::Eq, Some(c), None) if r == t => Interval::exact(c.clone()),
            _ => continue,
        };
        acc = acc.intersect(&tight);
    }
    // disequalities trim the ends
    for f in facts {
        if let Term::Apply(Sym::Not, inner) = f {
            if let Term::Apply(Sym::Eq, args) = &inner[0] {
                let c = match (args[0].as_int(), args[1].as_int()) {
                    (None, Some(c)) if &args[0] == t => c,
                    (Some(c), None) if &args[1] == t => c,
                    _ => continue,
                };
                if acc.lo.as_ref() == Some(c) {
                    acc.lo = Some(c + &one);
                }
                if acc.hi.as_ref() == Some(c) {
                    acc.hi = Some(c - &one);
                }
            }
        }
    }
    acc
}

/// Interval containing every value `t` can take when all `facts` hold.
pub(crate) fn bounds(t: &Term, facts: &[Term]) -> Interval {
    let base = intrinsic(t, facts);
    if t.as_int().is_some() {
        return base;
    }
    from_facts(t, facts, base)
}
