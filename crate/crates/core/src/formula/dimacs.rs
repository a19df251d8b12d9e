//! DIMACS CNF reading and writing.
//!
//! Supported extensions:
//! * `c ind v1 v2 ... 0` comment lines declare the projection scope; all
//!   such lines are unioned. Without them the scope is every variable.
//! * `x l1 l2 ... 0` lines are XOR constraints in the convention of
//!   XOR-aware solvers: the constraint is `l1 ⊕ l2 ⊕ ... = 1`, so negating a
//!   literal flips the right-hand side.
//! * A line consisting of `%` ends the data section (SATLIB files).

use std::fmt::Write as _;

use thiserror::Error;

use super::{Clause, Formula, Literal, ProjectionScope};
use crate::hashing::XorConstraint;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("empty input")]
    Empty,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("literal {literal} out of range (formula has {num_vars} variables)")]
    LiteralOutOfRange { literal: i64, num_vars: u32 },
    #[error("clause not terminated by 0")]
    UnterminatedClause,
    #[error("invalid token `{0}`")]
    InvalidToken(String),
    #[error("XOR constraint in plain CNF input")]
    UnexpectedXor,
}

/// A formula together with the XOR constraints read from `x` lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedDimacs {
    pub formula: Formula,
    pub xors: Vec<XorConstraint>,
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

fn parse_int(tok: &str, line: usize) -> Result<i64, ParseError> {
    tok.parse::<i64>()
        .map_err(|_| err(line, ParseErrorKind::InvalidToken(tok.to_string())))
}

struct Header {
    num_vars: u32,
    num_clauses: usize,
}

fn parse_header(tokens: &[&str], line: usize) -> Result<Header, ParseError> {
    let malformed = |msg: &str| err(line, ParseErrorKind::MalformedHeader(msg.to_string()));
    if tokens.len() != 4 || tokens[0] != "p" || tokens[1] != "cnf" {
        return Err(malformed("expected `p cnf <vars> <clauses>`"));
    }
    let num_vars = tokens[2]
        .parse::<u32>()
        .map_err(|_| malformed("variable count is not a non-negative integer"))?;
    let num_clauses = tokens[3]
        .parse::<usize>()
        .map_err(|_| malformed("clause count is not a non-negative integer"))?;
    Ok(Header {
        num_vars,
        num_clauses,
    })
}

fn check_range(value: i64, num_vars: u32, line: usize) -> Result<Literal, ParseError> {
    match Literal::from_dimacs(value) {
        Some(l) if l.var() <= num_vars => Ok(l),
        _ => Err(err(
            line,
            ParseErrorKind::LiteralOutOfRange {
                literal: value,
                num_vars,
            },
        )),
    }
}

/// Parses DIMACS CNF, accepting `x` lines.
pub fn parse_extended_dimacs(input: &[u8]) -> Result<ExtendedDimacs, ParseError> {
    parse(input, true)
}

/// Parses plain DIMACS CNF; `x` lines are rejected.
pub fn parse_dimacs(input: &[u8]) -> Result<Formula, ParseError> {
    parse(input, false).map(|e| e.formula)
}

fn parse(input: &[u8], allow_xor: bool) -> Result<ExtendedDimacs, ParseError> {
    let text = String::from_utf8_lossy(input);
    let mut header: Option<Header> = None;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut xors: Vec<XorConstraint> = Vec::new();
    let mut pending: Vec<Literal> = Vec::new();
    let mut pending_line = 0;
    // Projection lines may precede the header; range-check them afterwards.
    let mut ind: Vec<(i64, usize)> = Vec::new();
    let mut saw_ind = false;
    let mut saw_content = false;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        saw_content = true;
        if line == "%" {
            break;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if line.starts_with('c') {
            if tokens[0] == "c" && tokens.get(1) == Some(&"ind") {
                saw_ind = true;
                for tok in &tokens[2..] {
                    let v = parse_int(tok, lineno)?;
                    if v == 0 {
                        break;
                    }
                    ind.push((v, lineno));
                }
            }
            continue;
        }
        if tokens[0] == "p" {
            if header.is_some() {
                return Err(err(
                    lineno,
                    ParseErrorKind::MalformedHeader("duplicate header".into()),
                ));
            }
            header = Some(parse_header(&tokens, lineno)?);
            continue;
        }
        let Some(h) = header.as_ref() else {
            return Err(err(
                lineno,
                ParseErrorKind::MalformedHeader("data before `p cnf` header".into()),
            ));
        };
        if let Some(rest) = line.strip_prefix('x') {
            if !allow_xor {
                return Err(err(lineno, ParseErrorKind::UnexpectedXor));
            }
            if !pending.is_empty() {
                return Err(err(pending_line, ParseErrorKind::UnterminatedClause));
            }
            let mut vars = Vec::new();
            let mut rhs = true;
            let mut terminated = false;
            for tok in rest.split_whitespace() {
                let v = parse_int(tok, lineno)?;
                if v == 0 {
                    terminated = true;
                    break;
                }
                let l = check_range(v, h.num_vars, lineno)?;
                if !l.is_positive() {
                    rhs = !rhs;
                }
                vars.push(l.var());
            }
            if !terminated {
                return Err(err(lineno, ParseErrorKind::UnterminatedClause));
            }
            xors.push(XorConstraint::new(vars, rhs));
            continue;
        }
        for tok in &tokens {
            let v = parse_int(tok, lineno)?;
            if v == 0 {
                clauses.push(Clause::new(std::mem::take(&mut pending)));
                continue;
            }
            if pending.is_empty() {
                pending_line = lineno;
            }
            pending.push(check_range(v, h.num_vars, lineno)?);
        }
    }

    if !saw_content {
        return Err(err(0, ParseErrorKind::Empty));
    }
    let Some(h) = header else {
        return Err(err(
            last_line,
            ParseErrorKind::MalformedHeader("missing `p cnf` header".into()),
        ));
    };
    if !pending.is_empty() {
        return Err(err(pending_line, ParseErrorKind::UnterminatedClause));
    }
    if clauses.len() != h.num_clauses {
        log::warn!(
            "header declares {} clauses but {} were read",
            h.num_clauses,
            clauses.len()
        );
    }
    let mut scope_vars = Vec::with_capacity(ind.len());
    for (v, lineno) in ind {
        if v < 0 {
            return Err(err(lineno, ParseErrorKind::InvalidToken(v.to_string())));
        }
        scope_vars.push(check_range(v, h.num_vars, lineno)?.var());
    }

    let mut formula = Formula {
        num_vars: h.num_vars,
        clauses,
        scope: ProjectionScope::full(h.num_vars),
    };
    let dropped = formula.normalize();
    if dropped > 0 {
        log::debug!("dropped {dropped} tautological clauses");
    }
    if saw_ind && !scope_vars.is_empty() {
        formula = formula.with_scope_unchecked(ProjectionScope::from_vars(scope_vars));
    }
    Ok(ExtendedDimacs { formula, xors })
}

/// Writes plain DIMACS, including a `c ind` line for restricted scopes.
pub fn serialize_dimacs(formula: &Formula) -> Vec<u8> {
    serialize_extended_dimacs(formula, &[])
}

/// Writes DIMACS followed by one `x` line per XOR constraint. The header
/// counts CNF clauses only. A right-hand side of 0 is encoded by negating
/// the first literal; an empty constraint with right-hand side 0 is
/// trivially true and omitted.
pub fn serialize_extended_dimacs(formula: &Formula, xors: &[XorConstraint]) -> Vec<u8> {
    let mut out = String::new();
    let _ = writeln!(out, "p cnf {} {}", formula.num_vars, formula.clauses.len());
    if !formula.scope.is_full() {
        out.push_str("c ind");
        for v in formula.scope.variables() {
            let _ = write!(out, " {v}");
        }
        out.push_str(" 0\n");
    }
    for c in &formula.clauses {
        let _ = writeln!(out, "{c}");
    }
    for x in xors {
        debug_assert!(x.variables().iter().all(|&v| v <= formula.num_vars));
        if x.variables().is_empty() {
            if x.rhs() {
                out.push_str("x 0\n");
            }
            continue;
        }
        out.push('x');
        for (i, &v) in x.variables().iter().enumerate() {
            let neg = i == 0 && !x.rhs();
            let _ = write!(out, " {}", if neg { -(v as i64) } else { v as i64 });
        }
        out.push_str(" 0\n");
    }
    out.into_bytes()
}
