//! Lemma files: `rule LHS => RHS [requires COND]`, one per line, `//`
//! comments.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::matching::head_sort;
use super::{parse_term, parse_term_as, Sort, Term, TermError, Var};

/// A conditional rewrite rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lemma {
    pub lhs: Term,
    pub rhs: Term,
    /// `true` when the rule has no `requires` clause.
    pub condition: Term,
}

impl Lemma {
    pub fn new(lhs: Term, rhs: Term, condition: Term) -> Result<Lemma, TermError> {
        if matches!(lhs, Term::Var(_)) {
            return Err(TermError::Syntax {
                line: 1,
                column: 1,
                message: "a lemma's left-hand side cannot be a bare variable".into(),
            });
        }
        let bound = lhs.free_vars();
        for t in [&rhs, &condition] {
            if let Some(v) = t
                .free_vars()
                .into_iter()
                .find(|v| !bound.iter().any(|b| b.name == v.name))
            {
                return Err(TermError::UnboundVariable(v.name));
            }
        }
        Ok(Lemma { lhs, rhs, condition })
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {} => {}", self.lhs, self.rhs)?;
        if !self.condition.is_true() {
            write!(f, " requires {}", self.condition)?;
        }
        Ok(())
    }
}

/// Gives every variable the sort it has in the left-hand side.
fn align_sorts(t: Term, sorts: &BTreeMap<String, Sort>) -> Term {
    match t {
        Term::Var(v) => match sorts.get(&v.name) {
            Some(s) => Term::Var(Var::new(v.name, *s)),
            None => Term::Var(v),
        },
        Term::Int(_) | Term::Str(_) => t,
        other => {
            let kids = other
                .children()
                .into_iter()
                .map(|c| align_sorts(c.clone(), sorts))
                .collect();
            other.with_children(kids)
        }
    }
}

fn shift(e: TermError, line: usize, column: usize) -> TermError {
    match e {
        TermError::Syntax {
            line: l,
            column: c,
            message,
        } => TermError::Syntax {
            line: line + l - 1,
            column: if l == 1 { column + c - 1 } else { c },
            message,
        },
        TermError::UnknownSymbol {
            name,
            line: l,
            column: c,
        } => TermError::UnknownSymbol {
            name,
            line: line + l - 1,
            column: if l == 1 { column + c - 1 } else { c },
        },
        other => other,
    }
}

fn parse_at(text: &str, line: usize) -> Result<Lemma, TermError> {
    let syntax = |column: usize, message: &str| TermError::Syntax {
        line,
        column,
        message: message.to_string(),
    };
    let trimmed_start = text.len() - text.trim_start().len();
    let body = text.trim();
    let rest = body
        .strip_prefix("rule")
        .filter(|r| r.starts_with(char::is_whitespace))
        .ok_or_else(|| syntax(trimmed_start + 1, "expected `rule`"))?;
    let rest_col = trimmed_start + 5;
    let arrow = rest.find("=>").ok_or_else(|| syntax(rest_col, "expected `=>`"))?;
    let lhs_text = &rest[..arrow];
    let after = &rest[arrow + 2..];
    let (rhs_text, cond_text) = match after.find(" requires ") {
        Some(i) => (&after[..i], Some(&after[i + " requires ".len()..])),
        None => (after, None),
    };
    let rhs_col = rest_col + arrow + 2;
    let lhs = parse_term(lhs_text).map_err(|e| shift(e, line, rest_col))?;
    let sorts: BTreeMap<String, Sort> = lhs.free_vars().into_iter().map(|v| (v.name, v.sort)).collect();
    let rhs = parse_term_as(rhs_text, head_sort(&lhs)).map_err(|e| shift(e, line, rhs_col))?;
    let rhs = align_sorts(rhs, &sorts);
    let condition = match cond_text {
        Some(c) => {
            let col = rhs_col + rhs_text.len() + " requires ".len();
            align_sorts(parse_term_as(c, Sort::Bool).map_err(|e| shift(e, line, col))?, &sorts)
        }
        None => Term::bool(true),
    };
    Lemma::new(lhs, rhs, condition)
}

/// Parses a single `rule ...` line.
pub fn parse_lemma(text: &str) -> Result<Lemma, TermError> {
    parse_at(text, 1)
}

/// Parses a lemma file, skipping blank lines and `//` comments.
pub fn parse_lemma_file(text: &str) -> Result<Vec<Lemma>, TermError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find("//") {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_at(line, i + 1)?);
    }
    Ok(out)
}
