//! Concrete term grammar.
//!
//! ```text
//! term    := or ('++' or)*
//! or      := and (('orBool' | '||') and)*
//! and     := not (('andBool' | '&&') not)*
//! not     := ('notBool' | '!') not | cmp
//! cmp     := add (CMP add)?          CMP: ==Int =/=Int <Int <=Int >Int >=Int == != < <= > >=
//! add     := mul (('+Int' | '+' | '-Int' | '-') mul)*
//! mul     := atom (('*Int' | '*') atom)*
//! atom    := INT | '-' INT | 0xHEX | STRING | '_' | VAR (':' SORT)?
//!          | name | name '(' args ')' | '#buf' '(' term ',' term ')' | '#concat' '(' args ')'
//!          | '(' ')' | '(' term ')' | '(' term ',' ')' | '(' term (',' term)+ ')'
//! ```
//!
//! Identifiers starting with an uppercase letter are variables unless they
//! name a constant (`EVMC_SUCCESS`, `EVMC_REVERT`, `BYZANTIUM`). Variables
//! without an annotation take their sort from their position.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::Num;

use super::{Sort, Sym, Term, TermError, Var};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Str(String),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    Colon,
    Eof,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

const OPERATORS: &[&str] = &[
    "=/=Int", "==Int", "<=Int", ">=Int", "+Int", "-Int", "*Int", "<Int", ">Int", "==", "!=", "<=", ">=", "++", "&&",
    "||", "+", "-", "*", "<", ">", "!",
];

fn lex(text: &str) -> Result<Vec<Spanned>, TermError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut line_start) = (0usize, 1usize, 0usize);
    while i < bytes.len() {
        let c = bytes[i];
        let column = i - line_start + 1;
        let err = |message: String| TermError::Syntax { line, column, message };
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = if c.is_ascii_digit() {
            let start = i;
            if c == b'0' && i + 1 < bytes.len() && (bytes[i + 1] == b'x' || bytes[i + 1] == b'X') {
                i += 2;
                while i < bytes.len() && bytes[i].is_ascii_hexdigit() {
                    i += 1;
                }
                let digits = &text[start + 2..i];
                if digits.is_empty() {
                    return Err(err("empty hex literal".into()));
                }
                Tok::Int(BigInt::from_str_radix(digits, 16).map_err(|e| err(e.to_string()))?)
            } else {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                Tok::Int(BigInt::from_str_radix(&text[start..i], 10).map_err(|e| err(e.to_string()))?)
            }
        } else if c == b'"' {
            i += 1;
            let mut s = String::new();
            loop {
                match bytes.get(i) {
                    None => return Err(err("unterminated string".into())),
                    Some(b'"') => {
                        i += 1;
                        break;
                    }
                    Some(b'\\') => {
                        match bytes.get(i + 1) {
                            Some(b'"') => s.push('"'),
                            Some(b'\\') => s.push('\\'),
                            _ => return Err(err("bad escape in string".into())),
                        }
                        i += 2;
                    }
                    Some(_) => {
                        let ch = text[i..].chars().next().unwrap();
                        s.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            Tok::Str(s)
        } else if c.is_ascii_alphabetic() || c == b'_' || c == b'#' {
            let start = i;
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(text[start..i].to_string())
        } else if c == b'(' {
            i += 1;
            Tok::LParen
        } else if c == b')' {
            i += 1;
            Tok::RParen
        } else if c == b',' {
            i += 1;
            Tok::Comma
        } else if c == b':' {
            i += 1;
            Tok::Colon
        } else if let Some(op) = OPERATORS.iter().find(|op| text[i..].starts_with(**op)) {
            i += op.len();
            Tok::Op(op)
        } else {
            return Err(err(alloc::format!("unexpected character `{}`", c as char)));
        };
        out.push(Spanned { tok, line, column });
    }
    let column = bytes.len() - line_start + 1;
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

fn binary_op(tok: &Tok) -> Option<(Sym, u8)> {
    let sym = match tok {
        Tok::Op("+Int" | "+") => Sym::Add,
        Tok::Op("-Int" | "-") => Sym::Sub,
        Tok::Op("*Int" | "*") => Sym::Mul,
        Tok::Op("==Int" | "==") => Sym::Eq,
        Tok::Op("=/=Int" | "!=") => Sym::Ne,
        Tok::Op("<Int" | "<") => Sym::Lt,
        Tok::Op("<=Int" | "<=") => Sym::Le,
        Tok::Op(">Int" | ">") => Sym::Gt,
        Tok::Op(">=Int" | ">=") => Sym::Ge,
        Tok::Op("&&") => Sym::And,
        Tok::Op("||") => Sym::Or,
        Tok::Ident(s) if s == "andBool" => Sym::And,
        Tok::Ident(s) if s == "orBool" => Sym::Or,
        _ => return None,
    };
    Some((sym, sym.infix_precedence().unwrap()))
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> TermError {
        let s = &self.toks[self.pos];
        TermError::Syntax {
            line: s.line,
            column: s.column,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), TermError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error_here(alloc::format!("expected {what}")))
        }
    }

    fn term(&mut self) -> Result<Term, TermError> {
        let first = self.binary(2)?;
        if *self.peek() != Tok::Op("++") {
            return Ok(first);
        }
        let mut segs = alloc::vec![first];
        while *self.peek() == Tok::Op("++") {
            self.next();
            segs.push(self.binary(2)?);
        }
        Ok(Term::Concat(segs))
    }

    /// Precedence climbing over the binary operators (levels 2..=7).
    fn binary(&mut self, min_prec: u8) -> Result<Term, TermError> {
        let mut lhs = if min_prec <= 4 { self.not()? } else { self.atom()? };
        while let Some((sym, prec)) = binary_op(self.peek()) {
            if prec < min_prec {
                break;
            }
            self.next();
            let rhs = if prec == 5 {
                // comparisons are non-associative
                let rhs = self.binary(6)?;
                if matches!(binary_op(self.peek()), Some((_, 5))) {
                    return Err(self.error_here("comparisons do not chain; add parentheses"));
                }
                rhs
            } else {
                self.binary(prec + 1)?
            };
            lhs = Term::binary(sym, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Term, TermError> {
        match self.peek() {
            Tok::Op("!") => {
                self.next();
                Ok(Term::not(self.not()?))
            }
            Tok::Ident(s) if s == "notBool" => {
                self.next();
                Ok(Term::not(self.not()?))
            }
            _ => self.binary(5),
        }
    }

    fn args(&mut self) -> Result<Vec<Term>, TermError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if *self.peek() == Tok::RParen {
            self.next();
            return Ok(args);
        }
        loop {
            args.push(self.term()?);
            match self.next().tok {
                Tok::Comma => continue,
                Tok::RParen => break,
                _ => {
                    self.pos -= 1;
                    return Err(self.error_here("expected `,` or `)`"));
                }
            }
        }
        Ok(args)
    }

    fn atom(&mut self) -> Result<Term, TermError> {
        let start = self.next();
        match start.tok {
            Tok::Int(v) => Ok(Term::Int(v)),
            Tok::Op("-") => match self.next().tok {
                Tok::Int(v) => Ok(Term::Int(-v)),
                _ => {
                    self.pos -= 1;
                    Err(self.error_here("expected integer after `-`"))
                }
            },
            Tok::Str(s) => Ok(Term::Str(s)),
            Tok::LParen => {
                if *self.peek() == Tok::RParen {
                    self.next();
                    return Ok(Term::Tuple(Vec::new()));
                }
                let first = self.term()?;
                match self.next().tok {
                    Tok::RParen => Ok(first),
                    Tok::Comma => {
                        let mut elems = alloc::vec![first];
                        if *self.peek() == Tok::RParen {
                            self.next();
                            return Ok(Term::Tuple(elems));
                        }
                        loop {
                            elems.push(self.term()?);
                            match self.next().tok {
                                Tok::Comma => continue,
                                Tok::RParen => break,
                                _ => {
                                    self.pos -= 1;
                                    return Err(self.error_here("expected `,` or `)`"));
                                }
                            }
                        }
                        Ok(Term::Tuple(elems))
                    }
                    _ => {
                        self.pos -= 1;
                        Err(self.error_here("expected `,` or `)`"))
                    }
                }
            }
            Tok::Ident(name) => self.identifier(name, start.line, start.column),
            Tok::Eof => Err(TermError::Syntax {
                line: start.line,
                column: start.column,
                message: "unexpected end of input".into(),
            }),
            other => Err(TermError::Syntax {
                line: start.line,
                column: start.column,
                message: alloc::format!("unexpected token {other:?}"),
            }),
        }
    }

    fn identifier(&mut self, name: String, line: usize, column: usize) -> Result<Term, TermError> {
        let called = *self.peek() == Tok::LParen;
        if name == "_" {
            return Ok(Term::wildcard());
        }
        if name == "#buf" {
            let mut args = self.args()?;
            if args.len() != 2 {
                return Err(TermError::ArityMismatch {
                    name,
                    expected: 2,
                    found: args.len(),
                });
            }
            let content = args.pop().unwrap();
            let len = args.pop().unwrap();
            return Ok(Term::Buf(Box::new(len), Box::new(content)));
        }
        if name == "#concat" {
            return Ok(Term::Concat(self.args()?));
        }
        if let Some(sym) = Sym::lookup(&name) {
            if sym.infix_precedence().is_some() || sym == Sym::Not {
                return Err(TermError::Syntax {
                    line,
                    column,
                    message: alloc::format!("`{name}` is an operator"),
                });
            }
            let args = if called { self.args()? } else { Vec::new() };
            return Term::apply(sym, args);
        }
        let first = name.chars().next().unwrap();
        if first.is_ascii_uppercase() && !called {
            let sort = if *self.peek() == Tok::Colon {
                self.next();
                match self.next().tok {
                    Tok::Ident(s) => Sort::from_annotation(&s).ok_or_else(|| TermError::Syntax {
                        line,
                        column,
                        message: alloc::format!("unknown sort `{s}`"),
                    })?,
                    _ => {
                        self.pos -= 1;
                        return Err(self.error_here("expected a sort name"));
                    }
                }
            } else {
                Sort::Any
            };
            return Ok(Term::Var(Var { name, sort }));
        }
        Err(TermError::UnknownSymbol { name, line, column })
    }
}

/// Gives unannotated variables the sort of the position they occupy.
fn infer_sorts(t: Term, expected: Sort) -> Term {
    match t {
        Term::Var(Var { name, sort: Sort::Any }) if name != "_" => Term::Var(Var {
            name,
            sort: expected.var_default(),
        }),
        Term::Apply(sym, args) => Term::Apply(
            sym,
            args.into_iter()
                .enumerate()
                .map(|(i, a)| infer_sorts(a, sym.arg_sort(i)))
                .collect(),
        ),
        Term::Tuple(elems) => Term::Tuple(elems.into_iter().map(|e| infer_sorts(e, Sort::Int)).collect()),
        Term::Concat(segs) => Term::Concat(segs.into_iter().map(|s| infer_sorts(s, Sort::Bytes)).collect()),
        Term::Buf(l, c) => Term::Buf(
            Box::new(infer_sorts(*l, Sort::Int)),
            Box::new(infer_sorts(*c, Sort::Int)),
        ),
        other => other,
    }
}

/// Parses a term whose top-level position has sort `Int`.
pub fn parse_term(text: &str) -> Result<Term, TermError> {
    parse_term_as(text, Sort::Int)
}

/// Parses a term occupying a position of sort `expected`; a bare variable at
/// the top takes that sort.
pub fn parse_term_as(text: &str, expected: Sort) -> Result<Term, TermError> {
    let toks = lex(text)?;
    if toks.len() == 1 {
        return Err(TermError::Syntax {
            line: 1,
            column: 1,
            message: "empty term".into(),
        });
    }
    let mut p = Parser { toks, pos: 0 };
    let t = p.term()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error_here("unexpected trailing input"));
    }
    Ok(infer_sorts(t, expected))
}
