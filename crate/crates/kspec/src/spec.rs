//! Reading K-YAML documents, lemma files and `.mvm` programs from disk.

use std::fs;
use std::path::{Path, PathBuf};

use kspec_core::claims::{expand, ClaimError, ClaimSet};
use kspec_core::kyaml::{build_blocks, resolve_inheritance, RawBlock, RawClause, RawConstraint, SpecBlock, SpecError};
use kspec_core::term::{parse_lemma_file, Lemma, TermError};
use kspec_core::vm::{assemble, AssembleError, Program};
use serde_yaml::{Mapping, Value};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Spec { path: PathBuf, source: SpecError },
    #[error("{path}: {source}")]
    Claims { path: PathBuf, source: ClaimError },
    #[error("{path}: {source}")]
    Lemma { path: PathBuf, source: TermError },
    #[error("{path}: {source}")]
    Assemble { path: PathBuf, source: AssembleError },
}

fn unknown(key: &Value, context: &str) -> SpecError {
    let key = match key {
        Value::String(s) => s.clone(),
        other => serde_yaml::to_string(other).unwrap_or_default().trim().to_string(),
    };
    SpecError::UnknownKey {
        key,
        context: context.to_string(),
    }
}

fn scalar(v: &Value, what: &str) -> Result<String, SpecError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(SpecError::YamlSyntax(format!("{what}: expected a string"))),
    }
}

fn mapping<'a>(v: &'a Value, what: &str) -> Result<&'a Mapping, SpecError> {
    match v {
        Value::Mapping(m) => Ok(m),
        Value::Null => {
            static EMPTY: std::sync::OnceLock<Mapping> = std::sync::OnceLock::new();
            Ok(EMPTY.get_or_init(Mapping::new))
        }
        _ => Err(SpecError::YamlSyntax(format!("{what}: expected a mapping"))),
    }
}

fn constraint(v: &Value, ctx: &str) -> Result<RawConstraint, SpecError> {
    if let Value::Mapping(m) = v {
        let mut out = None;
        for (k, t) in m {
            match k.as_str() {
                Some("not") => out = Some(RawConstraint::Not(scalar(t, ctx)?)),
                _ => return Err(unknown(k, ctx)),
            }
        }
        return out.ok_or_else(|| SpecError::YamlSyntax(format!("{ctx}: empty constraint")));
    }
    Ok(RawConstraint::Term(scalar(v, ctx)?))
}

fn clause(v: &Value, ctx: &str) -> Result<RawClause, SpecError> {
    let mut out = RawClause::default();
    for (k, body) in mapping(v, ctx)? {
        match k.as_str() {
            Some("match") => {
                for (cell, term) in mapping(body, ctx)? {
                    let cell = scalar(cell, ctx)?;
                    let term = scalar(term, &format!("{ctx}.match.{cell}"))?;
                    out.cells.push((cell, term));
                }
            }
            Some("where") => match body {
                Value::Sequence(items) => {
                    for item in items {
                        out.constraints.push(constraint(item, &format!("{ctx}.where"))?);
                    }
                }
                Value::Null => {}
                other => out.constraints.push(constraint(other, &format!("{ctx}.where"))?),
            },
            _ => return Err(unknown(k, ctx)),
        }
    }
    Ok(out)
}

/// Parses a K-YAML document into raw blocks, rejecting unknown keys.
pub fn parse_document(text: &str) -> Result<Vec<RawBlock>, SpecError> {
    let root: Value = serde_yaml::from_str(text).map_err(|e| SpecError::YamlSyntax(e.to_string()))?;
    let items = match root {
        Value::Sequence(items) => items,
        Value::Null => return Ok(Vec::new()),
        _ => {
            return Err(SpecError::YamlSyntax(
                "the document must be a list of spec blocks".into(),
            ))
        }
    };
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let ctx = format!("block {i}");
        let mut rb = RawBlock::default();
        for (k, v) in mapping(item, &ctx)? {
            match k.as_str() {
                Some("name") => rb.name = Some(scalar(v, &ctx)?),
                Some("inherits") => rb.inherits = Some(scalar(v, &ctx)?),
                Some("if") => rb.pre = clause(v, &format!("{ctx}.if"))?,
                Some("then") => rb.post = clause(v, &format!("{ctx}.then"))?,
                _ => return Err(unknown(k, &ctx)),
            }
        }
        out.push(rb);
    }
    Ok(out)
}

pub fn load_document(text: &str) -> Result<Vec<SpecBlock>, SpecError> {
    build_blocks(&parse_document(text)?)
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_spec(path: &Path) -> Result<ClaimSet, LoadError> {
    compile_text(&read(path)?, path)
}

/// Document text to claims (without lemmas); `path` labels errors.
pub fn compile_text(text: &str, path: &Path) -> Result<ClaimSet, LoadError> {
    let spec = |source| LoadError::Spec {
        path: path.to_path_buf(),
        source,
    };
    let blocks = load_document(text).map_err(spec)?;
    let resolved = resolve_inheritance(&blocks).map_err(spec)?;
    expand(&resolved).map_err(|source| LoadError::Claims {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_lemmas(path: &Path) -> Result<Vec<Lemma>, LoadError> {
    parse_lemma_file(&read(path)?).map_err(|source| LoadError::Lemma {
        path: path.to_path_buf(),
        source,
    })
}

/// A spec plus the lemma files that go with it.
pub fn load_claims(spec: &Path, lemmas: &[PathBuf]) -> Result<ClaimSet, LoadError> {
    let mut cs = load_spec(spec)?;
    for l in lemmas {
        cs.lemmas.extend(load_lemmas(l)?);
    }
    Ok(cs)
}

/// File stem, used as the program name.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "program".into())
}

pub fn load_program(path: &Path) -> Result<Program, LoadError> {
    assemble(&stem(path), &read(path)?).map_err(|source| LoadError::Assemble {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIMPLE: &str = r##"
- name: simple00
  if:
    match:
      callData: '#abiCallData2("execute()", ())'
  then:
    match:
      statusCode: EVMC_SUCCESS
      output: "#buf(32, 5)"
"##;

    #[test]
    fn one_block() {
        let blocks = load_document(SIMPLE).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].post.cells.len(), 2);
        assert!(load_document("[]").unwrap().is_empty());
        assert!(load_document("").unwrap().is_empty());
    }

    #[test]
    fn structural_errors() {
        let dup = "- name: a\n- name: a\n";
        assert_eq!(load_document(dup), Err(SpecError::DuplicateName("a".into())));
        assert_eq!(load_document("- if: {}\n"), Err(SpecError::MissingName { index: 0 }));
        assert!(matches!(
            load_document("- name: a\n  given: {}\n"),
            Err(SpecError::UnknownKey { key, .. }) if key == "given"
        ));
        assert!(matches!(
            load_document("- name: a\n  if: {matches: {}}\n"),
            Err(SpecError::UnknownKey { key, .. }) if key == "matches"
        ));
        assert!(matches!(load_document("- name: [a\n"), Err(SpecError::YamlSyntax(_))));
        assert!(matches!(load_document("name: a\n"), Err(SpecError::YamlSyntax(_))));
        assert!(matches!(
            load_document("- name: a\n  if: {match: {output: '#buf(32,'}}\n"),
            Err(SpecError::TermParse { .. })
        ));
    }

    #[test]
    fn negated_constraints() {
        let doc = "- name: a\n  if:\n    where:\n      - A0 <Int 5\n      - not: A0 ==Int 3\n";
        let b = load_document(doc).unwrap();
        assert_eq!(b[0].pre.constraints[1].to_string(), "notBool A0 ==Int 3");
    }
}
