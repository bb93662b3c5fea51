//! Reachability claims and their K-style rendering.
//!
//! A cell mentioned only in the precondition is framed (unchanged by
//! execution); a cell mentioned only in the postcondition starts
//! unconstrained (`_`). Postcondition variables must be bound by the
//! precondition.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::kyaml::{cell_rank, cell_sort, clause_vars, ResolvedBlock};
use crate::term::{InSort, Lemma, Sort, Sym, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Claim {
    pub name: String,
    pub pre_cells: BTreeMap<String, Term>,
    pub pre_constraints: Vec<Term>,
    pub post_cells: BTreeMap<String, Term>,
    pub post_constraints: Vec<Term>,
}

impl Claim {
    /// Cells in registry order, each with its pre and post term.
    pub fn cells(&self) -> Vec<(&str, Option<&Term>, Option<&Term>)> {
        let mut names: Vec<&str> = self
            .pre_cells
            .keys()
            .chain(self.post_cells.keys())
            .map(String::as_str)
            .collect();
        names.sort_by_key(|n| (cell_rank(n), *n));
        names.dedup();
        names
            .into_iter()
            .map(|n| (n, self.pre_cells.get(n), self.post_cells.get(n)))
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClaimSet {
    pub claims: Vec<Claim>,
    pub lemmas: Vec<Lemma>,
}

impl ClaimSet {
    pub fn get(&self, name: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.claims.iter().map(|c| c.name.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClaimError {
    #[error("block `{block}`: variable `{var}` appears in `then` but is not bound by `if`")]
    UnboundPostVariable { block: String, var: String },
}

/// One claim per concrete (non-abstract) block.
pub fn expand(blocks: &[ResolvedBlock]) -> Result<ClaimSet, ClaimError> {
    let mut claims = Vec::new();
    for b in blocks.iter().filter(|b| !b.is_abstract) {
        let bound = clause_vars(&b.pre);
        if let Some(var) = clause_vars(&b.post).into_iter().find(|v| !bound.contains(v)) {
            return Err(ClaimError::UnboundPostVariable {
                block: b.name.clone(),
                var,
            });
        }
        claims.push(Claim {
            name: b.name.clone(),
            pre_cells: b.pre.cells.clone(),
            pre_constraints: b.pre.constraints.clone(),
            post_cells: b.post.cells.clone(),
            post_constraints: b.post.constraints.clone(),
        });
    }
    Ok(ClaimSet {
        claims,
        lemmas: Vec::new(),
    })
}

fn conjunct(t: &Term) -> String {
    match t {
        Term::Apply(Sym::Or, _) => alloc::format!("({t})"),
        _ => t.to_string(),
    }
}

fn write_conjunction(out: &mut String, keyword: &str, terms: &[Term]) {
    for (i, t) in terms.iter().enumerate() {
        let lead = if i == 0 { keyword } else { " andBool" };
        let pad = if i == 0 { "    " } else { "       " };
        let _ = writeln!(out, "{pad}{lead} {}", conjunct(t));
    }
}

/// Renders a K module with one `claim` per claim, in order.
pub fn emit_k_module(cs: &ClaimSet, module_name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "module {module_name}");
    let _ = writeln!(out, "  imports VERIFICATION");
    for l in &cs.lemmas {
        let _ = writeln!(out);
        let _ = writeln!(out, "  {l} [simplification]");
    }
    for c in &cs.claims {
        let _ = writeln!(out);
        let _ = writeln!(out, "  claim [{}]:", c.name);
        for (cell, pre, post) in c.cells() {
            let sort = cell_sort(cell).unwrap_or(Sort::Int);
            let body = match (pre, post) {
                (Some(p), Some(q)) => alloc::format!("{} => {}", InSort(p, sort), InSort(q, sort)),
                (Some(p), None) => InSort(p, sort).to_string(),
                (None, Some(q)) => alloc::format!("_ => {}", InSort(q, sort)),
                (None, None) => unreachable!(),
            };
            let _ = writeln!(out, "    <{cell}> {body} </{cell}>");
        }
        write_conjunction(&mut out, "requires", &c.pre_constraints);
        write_conjunction(&mut out, "ensures", &c.post_constraints);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "endmodule");
    out
}

fn sorted(ts: &[Term]) -> Vec<&Term> {
    let mut v: Vec<&Term> = ts.iter().collect();
    v.sort();
    v
}

/// Nameless comparison key: constraints are conjunctions, so their order
/// does not matter.
type Shape<'a> = (
    &'a BTreeMap<String, Term>,
    Vec<&'a Term>,
    &'a BTreeMap<String, Term>,
    Vec<&'a Term>,
);

fn shape(c: &Claim) -> Shape<'_> {
    (
        &c.pre_cells,
        sorted(&c.pre_constraints),
        &c.post_cells,
        sorted(&c.post_constraints),
    )
}

/// Equality up to claim names, claim order and conjunct order.
pub fn claims_equal(a: &ClaimSet, b: &ClaimSet) -> bool {
    if a.claims.len() != b.claims.len() {
        return false;
    }
    let mut xs: Vec<_> = a.claims.iter().map(shape).collect();
    let mut ys: Vec<_> = b.claims.iter().map(shape).collect();
    xs.sort();
    ys.sort();
    xs == ys
}
