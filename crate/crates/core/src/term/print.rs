//! Canonical rendering: K spellings, minimal parentheses, and sort
//! annotations only where a variable's sort differs from its position.

use core::fmt::{self, Write};

use super::{Sort, Sym, Term};

const ATOM: u8 = 9;
const NOT: u8 = 4;

fn precedence(t: &Term) -> u8 {
    match t {
        Term::Apply(Sym::Not, _) => NOT,
        Term::Apply(sym, args) if args.len() == 2 => sym.infix_precedence().unwrap_or(ATOM),
        Term::Concat(segs) if segs.len() >= 2 => 1,
        _ => ATOM,
    }
}

fn write_string(s: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        if c == '"' || c == '\\' {
            f.write_char('\\')?;
        }
        f.write_char(c)?;
    }
    f.write_char('"')
}

fn write_list<'a>(items: impl Iterator<Item = (&'a Term, Sort)>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for (i, (t, sort)) in items.enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_term(t, sort, f)?;
    }
    Ok(())
}

fn write_child(t: &Term, sort: Sort, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if precedence(t) < min {
        f.write_char('(')?;
        write_term(t, sort, f)?;
        f.write_char(')')
    } else {
        write_term(t, sort, f)
    }
}

fn write_term(t: &Term, expected: Sort, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Term::Int(v) => write!(f, "{v}"),
        Term::Str(s) => write_string(s, f),
        Term::Var(v) => {
            f.write_str(&v.name)?;
            let annotate =
                matches!(v.sort, Sort::Int | Sort::Bool | Sort::Bytes | Sort::Map) && v.sort != expected.var_default();
            if annotate {
                write!(f, ":{}", v.sort)?;
            }
            Ok(())
        }
        Term::Tuple(elems) => {
            f.write_char('(')?;
            write_list(elems.iter().map(|e| (e, Sort::Int)), f)?;
            if elems.len() == 1 {
                f.write_char(',')?;
            }
            f.write_char(')')
        }
        Term::Buf(len, content) => {
            f.write_str("#buf(")?;
            write_term(len, Sort::Int, f)?;
            f.write_str(", ")?;
            write_term(content, Sort::Int, f)?;
            f.write_char(')')
        }
        Term::Concat(segs) if segs.len() < 2 => {
            f.write_str("#concat(")?;
            write_list(segs.iter().map(|s| (s, Sort::Bytes)), f)?;
            f.write_char(')')
        }
        Term::Concat(segs) => {
            for (i, s) in segs.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ++ ")?;
                }
                write_child(s, Sort::Bytes, 2, f)?;
            }
            Ok(())
        }
        Term::Apply(Sym::Not, args) => {
            f.write_str("notBool ")?;
            let a = &args[0];
            if precedence(a) == NOT {
                write_term(a, Sort::Bool, f)
            } else {
                write_child(a, Sort::Bool, 5, f)
            }
        }
        Term::Apply(sym, args) => match sym.infix_precedence() {
            Some(p) if args.len() == 2 => {
                let (lmin, rmin) = if p == 5 { (6, 6) } else { (p, p + 1) };
                write_child(&args[0], sym.arg_sort(0), lmin, f)?;
                write!(f, " {} ", sym.name())?;
                write_child(&args[1], sym.arg_sort(1), rmin, f)
            }
            _ => {
                f.write_str(sym.name())?;
                if !args.is_empty() {
                    f.write_char('(')?;
                    write_list(args.iter().enumerate().map(|(i, a)| (a, sym.arg_sort(i))), f)?;
                    f.write_char(')')?;
                }
                Ok(())
            }
        },
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(self, Sort::Int, f)
    }
}

/// Renders a term in a position of the given sort, so that variables of
/// that sort print without annotation.
pub struct InSort<'a>(pub &'a Term, pub Sort);

impl fmt::Display for InSort<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(self.0, self.1, f)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_term, Var};
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn basic_forms() {
        assert_eq!(Term::int(0).to_string(), "0");
        assert_eq!(Term::unary(Sym::Chop, Term::var("I", Sort::Int)).to_string(), "chop(I)");
        assert_eq!(parse_term("A + B * C").unwrap().to_string(), "A +Int B *Int C");
        assert_eq!(parse_term("(A + B) * C").unwrap().to_string(), "(A +Int B) *Int C");
        assert_eq!(parse_term("A - (B - C)").unwrap().to_string(), "A -Int (B -Int C)");
        assert_eq!(
            parse_term("!(A < 3) && B:Bool").unwrap().to_string(),
            "notBool A <Int 3 andBool B"
        );
    }

    #[test]
    fn annotations_follow_position() {
        let t = Term::binary(Sym::Select, Term::var("S", Sort::Map), Term::int(0));
        assert_eq!(t.to_string(), "select(S, 0)");
        assert_eq!(Term::var("S", Sort::Map).to_string(), "S:Map");
        let t = Term::Tuple(vec![Term::Var(Var::new("X", Sort::Bytes))]);
        assert_eq!(t.to_string(), "(X:Bytes,)");
    }

    #[test]
    fn concat_and_strings() {
        let t = parse_term("#buf(4, 7) ++ (D ++ E)").unwrap();
        assert_eq!(t.to_string(), "#buf(4, 7) ++ (D ++ E)");
        assert_eq!(parse_term("#concat()").unwrap().to_string(), "#concat()");
        assert_eq!(Term::Str("a\"b".into()).to_string(), "\"a\\\"b\"");
    }

    #[test]
    fn reparse_is_identity_on_samples() {
        for text in [
            "chop(select(S0, 0) +Int 1)",
            "Rsstore(BYZANTIUM, NEW, CURR, ORIG)",
            "#abiCallData2(\"execute(bytes)\", (#buf(L, D),))",
            "notBool notBool X:Bool",
            "(A ==Int B) ==Int true",
            "A *Int -5 -Int -3",
            "store(M, K, V) ==Int store(M, K, 0)",
        ] {
            let t = parse_term(text).unwrap();
            assert_eq!(parse_term(&t.to_string()).unwrap(), t, "{text}");
        }
    }
}
