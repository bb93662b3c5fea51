//! K-YAML spec blocks: construction from raw (already de-serialised)
//! documents, validation, and inheritance resolution.
//!
//! A block that some other block inherits from is abstract: it is resolved
//! like any other block but never becomes a claim.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::term::{parse_term_as, Sort, Term, TermError};

/// Cells a spec may mention, with the sort of their contents.
pub const CELLS: &[(&str, Sort)] = &[
    ("callData", Sort::Bytes),
    ("output", Sort::Bytes),
    ("statusCode", Sort::Status),
    ("storage", Sort::Map),
    ("refund", Sort::Int),
    ("callLog", Sort::Tuple),
    ("readLog", Sort::Tuple),
    ("writeLog", Sort::Tuple),
    ("pc", Sort::Int),
    ("callReturns", Sort::Tuple),
];

pub fn cell_sort(name: &str) -> Option<Sort> {
    CELLS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Position of a cell in the registry; unknown cells sort last.
pub fn cell_rank(name: &str) -> usize {
    CELLS.iter().position(|(n, _)| *n == name).unwrap_or(CELLS.len())
}

/// One side (`if` or `then`) of a block.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CellClause {
    pub cells: BTreeMap<String, Term>,
    pub constraints: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecBlock {
    pub name: String,
    pub inherits: Option<String>,
    pub pre: CellClause,
    pub post: CellClause,
}

/// A block with its inheritance chain merged in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedBlock {
    pub name: String,
    pub pre: CellClause,
    pub post: CellClause,
    /// Inherited from by another block; produces no claim.
    pub is_abstract: bool,
}

impl ResolvedBlock {
    pub fn to_spec_block(&self) -> SpecBlock {
        SpecBlock {
            name: self.name.clone(),
            inherits: None,
            pre: self.pre.clone(),
            post: self.post.clone(),
        }
    }
}

/// A `where` entry before parsing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawConstraint {
    Term(String),
    /// `{not: TERM}`
    Not(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawClause {
    pub cells: Vec<(String, String)>,
    pub constraints: Vec<RawConstraint>,
}

/// A block as read from the document, terms still unparsed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawBlock {
    pub name: Option<String>,
    pub inherits: Option<String>,
    pub pre: RawClause,
    pub post: RawClause,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("YAML syntax: {0}")]
    YamlSyntax(String),
    #[error("unknown key `{key}` in {context}")]
    UnknownKey { key: String, context: String },
    #[error("block {index} has no name")]
    MissingName { index: usize },
    #[error("duplicate block name `{0}`")]
    DuplicateName(String),
    #[error("block `{block}`, {location}: {source}")]
    TermParse {
        block: String,
        location: String,
        source: TermError,
    },
    #[error("invalid spec: {}", first_error(.0))]
    Invalid(Vec<Diagnostic>),
}

fn first_error(d: &[Diagnostic]) -> String {
    d.iter()
        .find(|d| d.severity == Severity::Error)
        .map(|d| d.to_string())
        .unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    Cycle,
    DanglingInherits,
    UnknownCell,
    UnboundVariable,
    Sort,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub block: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: block `{}`: {}", self.block, self.message)
    }
}

fn parse_clause(block: &str, side: &str, raw: &RawClause) -> Result<CellClause, SpecError> {
    let mut out = CellClause::default();
    for (cell, text) in &raw.cells {
        let sort = cell_sort(cell).unwrap_or(Sort::Any);
        let t = parse_term_as(text, sort).map_err(|source| SpecError::TermParse {
            block: block.to_string(),
            location: alloc::format!("{side}.match.{cell}"),
            source,
        })?;
        out.cells.insert(cell.clone(), t);
    }
    for (i, c) in raw.constraints.iter().enumerate() {
        let (text, negated) = match c {
            RawConstraint::Term(t) => (t, false),
            RawConstraint::Not(t) => (t, true),
        };
        let t = parse_term_as(text, Sort::Bool).map_err(|source| SpecError::TermParse {
            block: block.to_string(),
            location: alloc::format!("{side}.where[{i}]"),
            source,
        })?;
        out.constraints.push(if negated { Term::not(t) } else { t });
    }
    Ok(out)
}

/// Parses the terms of raw blocks and checks names.
pub fn build_blocks(raw: &[RawBlock]) -> Result<Vec<SpecBlock>, SpecError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for (index, rb) in raw.iter().enumerate() {
        let name = rb.name.clone().ok_or(SpecError::MissingName { index })?;
        if !seen.insert(name.clone()) {
            return Err(SpecError::DuplicateName(name));
        }
        out.push(SpecBlock {
            pre: parse_clause(&name, "if", &rb.pre)?,
            post: parse_clause(&name, "then", &rb.post)?,
            inherits: rb.inherits.clone(),
            name,
        });
    }
    Ok(out)
}

/// Ancestors of `start`, root first, or the diagnostic that prevents it.
fn chain<'b>(start: &'b SpecBlock, by_name: &BTreeMap<&str, &'b SpecBlock>) -> Result<Vec<&'b SpecBlock>, Diagnostic> {
    let mut out = alloc::vec![start];
    let mut visited = BTreeSet::from([start.name.as_str()]);
    let mut cur = start;
    while let Some(parent) = &cur.inherits {
        let Some(p) = by_name.get(parent.as_str()) else {
            return Err(Diagnostic {
                severity: Severity::Error,
                kind: DiagnosticKind::DanglingInherits,
                block: cur.name.clone(),
                message: alloc::format!("inherits unknown block `{parent}`"),
            });
        };
        if !visited.insert(p.name.as_str()) {
            return Err(Diagnostic {
                severity: Severity::Error,
                kind: DiagnosticKind::Cycle,
                block: start.name.clone(),
                message: alloc::format!("inheritance cycle through `{}`", p.name),
            });
        }
        out.push(p);
        cur = p;
    }
    out.reverse();
    Ok(out)
}

fn merge(chain: &[&SpecBlock]) -> (CellClause, CellClause) {
    let mut pre = CellClause::default();
    let mut post = CellClause::default();
    for b in chain {
        for (dst, src) in [(&mut pre, &b.pre), (&mut post, &b.post)] {
            for (k, v) in &src.cells {
                dst.cells.insert(k.clone(), v.clone());
            }
            dst.constraints.extend(src.constraints.iter().cloned());
        }
    }
    (pre, post)
}

fn check_sorts(block: &str, clause: &CellClause, side: &str, out: &mut Vec<Diagnostic>) {
    let mut report = |kind, message: String| {
        out.push(Diagnostic {
            severity: Severity::Error,
            kind,
            block: block.to_string(),
            message,
        })
    };
    for (cell, t) in &clause.cells {
        let Some(expected) = cell_sort(cell) else {
            report(
                DiagnosticKind::UnknownCell,
                alloc::format!("unknown cell `{cell}` in `{side}`"),
            );
            continue;
        };
        match t.sort() {
            Ok(s) if s == expected || s == Sort::Any => {}
            Ok(s) => report(
                DiagnosticKind::Sort,
                alloc::format!("cell `{cell}` holds {expected}, found `{t}` of sort {s}"),
            ),
            Err(e) => report(DiagnosticKind::Sort, alloc::format!("cell `{cell}`: {e}")),
        }
    }
    for c in &clause.constraints {
        match c.sort() {
            Ok(Sort::Bool) | Ok(Sort::Any) => {}
            Ok(s) => report(
                DiagnosticKind::Sort,
                alloc::format!("`{side}` constraint `{c}` has sort {s}, expected Bool"),
            ),
            Err(e) => report(DiagnosticKind::Sort, alloc::format!("`{side}` constraint `{c}`: {e}")),
        }
    }
}

pub(crate) fn clause_vars(c: &CellClause) -> BTreeSet<String> {
    let mut vars = BTreeSet::new();
    for t in c.cells.values().chain(&c.constraints) {
        vars.extend(t.free_vars().into_iter().map(|v| v.name));
    }
    vars
}

/// Reports cycles, dangling parents, unknown cells, sort errors and (as
/// warnings) `then` variables never bound by the resolved `if`.
pub fn validate(blocks: &[SpecBlock]) -> Vec<Diagnostic> {
    let by_name: BTreeMap<&str, &SpecBlock> = blocks.iter().map(|b| (b.name.as_str(), b)).collect();
    let mut out = Vec::new();
    for b in blocks {
        check_sorts(&b.name, &b.pre, "if", &mut out);
        check_sorts(&b.name, &b.post, "then", &mut out);
        match chain(b, &by_name) {
            Err(d) => {
                if !out.contains(&d) {
                    out.push(d);
                }
            }
            Ok(ch) => {
                let (pre, post) = merge(&ch);
                let bound = clause_vars(&pre);
                for v in clause_vars(&post) {
                    if !bound.contains(&v) {
                        out.push(Diagnostic {
                            severity: Severity::Warning,
                            kind: DiagnosticKind::UnboundVariable,
                            block: b.name.clone(),
                            message: alloc::format!("variable `{v}` in `then` is not bound by `if`"),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Merges every block with its ancestors: child cells override the parent's
/// per cell, `where` lists concatenate parent first.
pub fn resolve_inheritance(blocks: &[SpecBlock]) -> Result<Vec<ResolvedBlock>, SpecError> {
    let diags = validate(blocks);
    if diags.iter().any(|d| d.severity == Severity::Error) {
        return Err(SpecError::Invalid(diags));
    }
    let by_name: BTreeMap<&str, &SpecBlock> = blocks.iter().map(|b| (b.name.as_str(), b)).collect();
    let parents: BTreeSet<&str> = blocks.iter().filter_map(|b| b.inherits.as_deref()).collect();
    blocks
        .iter()
        .map(|b| {
            let ch = chain(b, &by_name).map_err(|d| SpecError::Invalid(alloc::vec![d]))?;
            let (pre, post) = merge(&ch);
            Ok(ResolvedBlock {
                name: b.name.clone(),
                pre,
                post,
                is_abstract: parents.contains(b.name.as_str()),
            })
        })
        .collect()
}
