//! First-order matching and substitution.

use alloc::collections::BTreeMap;
use alloc::string::String;

use super::{Sort, Term, TermError};

/// Variable name to term.
pub type Bindings = BTreeMap<String, Term>;

/// Head sort of a term without a full check; used to respect declared
/// variable sorts while matching.
pub(crate) fn head_sort(t: &Term) -> Sort {
    match t {
        Term::Int(_) => Sort::Int,
        Term::Var(v) => v.sort,
        Term::Apply(sym, _) => sym.result_sort(),
        Term::Tuple(_) => Sort::Tuple,
        Term::Buf(..) | Term::Concat(_) => Sort::Bytes,
        Term::Str(_) => Sort::Str,
    }
}

fn sort_admits(declared: Sort, actual: Sort) -> bool {
    declared == Sort::Any || actual == Sort::Any || declared == actual
}

/// Bindings under which `pattern` becomes `subject`, if any. A variable that
/// occurs twice must match structurally equal subterms; `_` matches anything
/// and binds nothing.
pub fn match_pattern(pattern: &Term, subject: &Term) -> Option<Bindings> {
    let mut b = Bindings::new();
    if match_into(pattern, subject, &mut b) {
        Some(b)
    } else {
        None
    }
}

pub(crate) fn match_into(pattern: &Term, subject: &Term, b: &mut Bindings) -> bool {
    match (pattern, subject) {
        (Term::Var(v), _) if v.is_wildcard() => true,
        (Term::Var(v), _) => {
            if !sort_admits(v.sort, head_sort(subject)) {
                return false;
            }
            match b.get(&v.name) {
                Some(bound) => bound == subject,
                None => {
                    b.insert(v.name.clone(), subject.clone());
                    true
                }
            }
        }
        (Term::Int(a), Term::Int(c)) => a == c,
        (Term::Str(a), Term::Str(c)) => a == c,
        (Term::Apply(f, xs), Term::Apply(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_into(x, y, b))
        }
        (Term::Tuple(xs), Term::Tuple(ys)) | (Term::Concat(xs), Term::Concat(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_into(x, y, b))
        }
        (Term::Buf(l1, c1), Term::Buf(l2, c2)) => match_into(l1, l2, b) && match_into(c1, c2, b),
        _ => false,
    }
}

/// Replaces bound variables; fails if a binding's sort contradicts the
/// variable's declared sort.
pub fn substitute(t: &Term, b: &Bindings) -> Result<Term, TermError> {
    for (name, value) in b {
        if let Some(v) = t.free_vars().into_iter().find(|v| &v.name == name) {
            let actual = head_sort(value);
            if !sort_admits(v.sort, actual) {
                return Err(TermError::SortMismatch(alloc::format!(
                    "`{name}` is declared {} but bound to a term of sort {actual}",
                    v.sort
                )));
            }
        }
    }
    Ok(subst(t, b))
}

/// Substitution without sort checks, for bindings produced by matching.
pub(crate) fn subst(t: &Term, b: &Bindings) -> Term {
    match t {
        Term::Var(v) => b.get(&v.name).cloned().unwrap_or_else(|| t.clone()),
        Term::Int(_) | Term::Str(_) => t.clone(),
        _ => t.with_children(t.children().into_iter().map(|c| subst(c, b)).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_term, Sym};
    use super::*;

    #[test]
    fn variable_binds_literal() {
        let b = match_pattern(&parse_term("X").unwrap(), &Term::int(7)).unwrap();
        assert_eq!(b.get("X"), Some(&Term::int(7)));
    }

    #[test]
    fn chop_pattern() {
        let p = parse_term("chop(I)").unwrap();
        let b = match_pattern(&p, &parse_term("chop(pow256)").unwrap()).unwrap();
        assert_eq!(b.get("I"), Some(&Term::constant(Sym::Pow256)));
        assert!(match_pattern(&p, &parse_term("select(S, 0)").unwrap()).is_none());
    }

    #[test]
    fn nonlinear_patterns_need_equal_subterms() {
        let p = parse_term("X + X").unwrap();
        assert!(match_pattern(&p, &parse_term("A + A").unwrap()).is_some());
        assert!(match_pattern(&p, &parse_term("A + B").unwrap()).is_none());
    }

    #[test]
    fn sorts_are_respected() {
        let p = parse_term("X").unwrap();
        assert!(match_pattern(&p, &parse_term("S:Map").unwrap()).is_none());
        let mut b = Bindings::new();
        b.insert("X".into(), parse_term("true").unwrap());
        assert!(matches!(substitute(&p, &b), Err(TermError::SortMismatch(_))));
    }

    #[test]
    fn substitution_examples() {
        let mut b = Bindings::new();
        b.insert("X".into(), Term::int(4));
        assert_eq!(
            substitute(&parse_term("X + 1").unwrap(), &b).unwrap(),
            Term::binary(Sym::Add, Term::int(4), Term::int(1))
        );
        let ground = parse_term("chop(5) + 2").unwrap();
        assert_eq!(substitute(&ground, &b).unwrap(), ground);
    }
}
