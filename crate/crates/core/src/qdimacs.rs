//! QDIMACS reader and writer.

use std::fmt::Write as _;

use thiserror::Error;

use crate::formula::{Block, FormulaError, Lit, Pcnf, Quant, Var};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("missing 'p cnf' preamble")]
    MissingPreamble,
    #[error("malformed preamble: {0}")]
    MalformedPreamble(String),
    #[error("second preamble")]
    DuplicatePreamble,
    #[error("clause or quantifier block before the preamble")]
    BeforePreamble,
    #[error("quantifier block after the first clause")]
    QuantifierAfterClauses,
    #[error("clause not terminated by 0")]
    UnterminatedClause,
    #[error("quantifier block not terminated by 0")]
    UnterminatedBlock,
    #[error("variable {0} outside the declared range")]
    VariableOutOfRange(i64),
    #[error("unexpected token '{0}'")]
    InvalidToken(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Copy, Debug)]
pub struct ParseOptions {
    /// Reject variables above the preamble bound instead of growing it.
    pub strict: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { strict: true }
    }
}

pub fn parse_qdimacs(text: &str) -> Result<Pcnf, ParseError> {
    parse_qdimacs_with(text, ParseOptions::default())
}

enum Pending {
    None,
    Block(Quant, Vec<Var>, usize),
    Clause(Vec<Lit>, usize),
}

pub fn parse_qdimacs_with(text: &str, opts: ParseOptions) -> Result<Pcnf, ParseError> {
    let mut bound: Option<u64> = None;
    let mut blocks: Vec<Block> = Vec::new();
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut pending = Pending::None;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        let err = |kind| ParseError { line, kind };

        if trimmed.starts_with('p') {
            match pending {
                Pending::None => {}
                Pending::Block(..) => return Err(err(ParseErrorKind::UnterminatedBlock)),
                Pending::Clause(..) => return Err(err(ParseErrorKind::UnterminatedClause)),
            }
            if bound.is_some() {
                return Err(err(ParseErrorKind::DuplicatePreamble));
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let numbers = match fields.as_slice() {
                ["p", "cnf", v, c] => v.parse::<u64>().ok().zip(c.parse::<u64>().ok()),
                _ => None,
            };
            match numbers {
                Some((v, _)) => bound = Some(v),
                None => return Err(err(ParseErrorKind::MalformedPreamble(trimmed.to_string()))),
            }
            continue;
        }

        for token in trimmed.split_whitespace() {
            if token == "e" || token == "a" {
                if bound.is_none() {
                    return Err(err(ParseErrorKind::BeforePreamble));
                }
                match pending {
                    Pending::None => {}
                    Pending::Block(..) => return Err(err(ParseErrorKind::UnterminatedBlock)),
                    Pending::Clause(..) => return Err(err(ParseErrorKind::UnterminatedClause)),
                }
                if !clauses.is_empty() {
                    return Err(err(ParseErrorKind::QuantifierAfterClauses));
                }
                let quant = if token == "e" { Quant::Exists } else { Quant::Forall };
                pending = Pending::Block(quant, Vec::new(), line);
                continue;
            }
            let value: i64 = token
                .parse()
                .map_err(|_| err(ParseErrorKind::InvalidToken(token.to_string())))?;
            let Some(max) = bound else {
                return Err(err(ParseErrorKind::BeforePreamble));
            };
            if value != 0 && (value.unsigned_abs() >= (1 << 30) || (opts.strict && value.unsigned_abs() > max)) {
                return Err(err(ParseErrorKind::VariableOutOfRange(value)));
            }
            pending = match pending {
                Pending::Block(quant, mut vars, start) => {
                    if value == 0 {
                        blocks.push(Block::new(quant, vars));
                        Pending::None
                    } else if value < 0 {
                        return Err(err(ParseErrorKind::InvalidToken(token.to_string())));
                    } else {
                        vars.push(Var::new(value as u32));
                        Pending::Block(quant, vars, start)
                    }
                }
                Pending::Clause(mut lits, start) => {
                    if value == 0 {
                        clauses.push(lits);
                        Pending::None
                    } else {
                        lits.push(Lit::from_dimacs(value).expect("nonzero"));
                        Pending::Clause(lits, start)
                    }
                }
                Pending::None => {
                    if value == 0 {
                        clauses.push(Vec::new());
                        Pending::None
                    } else {
                        Pending::Clause(vec![Lit::from_dimacs(value).expect("nonzero")], line)
                    }
                }
            };
        }
    }

    match pending {
        Pending::None => {}
        Pending::Block(_, _, line) => {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::UnterminatedBlock,
            })
        }
        Pending::Clause(_, line) => {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::UnterminatedClause,
            })
        }
    }
    if bound.is_none() {
        return Err(ParseError {
            line: last_line,
            kind: ParseErrorKind::MissingPreamble,
        });
    }
    Pcnf::new(blocks, clauses).map_err(|e| ParseError {
        line: last_line,
        kind: e.into(),
    })
}

/// Canonical QDIMACS: unused variables dropped from the prefix, blocks
/// merged, live clauses in their current order, literals in canonical order.
pub fn write_qdimacs(pcnf: &Pcnf) -> String {
    let canon = pcnf.compacted();
    let mut out = String::new();
    if canon.clauses().is_empty() {
        out.push_str("c empty matrix: formula is satisfiable\n");
    }
    let _ = writeln!(out, "p cnf {} {}", canon.prefix().max_var(), canon.clauses().len());
    for block in canon.prefix().blocks() {
        out.push(block.quant.symbol());
        for v in &block.vars {
            let _ = write!(out, " {v}");
        }
        out.push_str(" 0\n");
    }
    for c in canon.clauses() {
        for l in c.lits() {
            let _ = write!(out, "{l} ");
        }
        out.push_str("0\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::ClauseId;

    fn lit(x: i64) -> Lit {
        Lit::from_dimacs(x).unwrap()
    }

    #[test]
    fn parses_simple_prefix() {
        let f = parse_qdimacs("p cnf 2 1\ne 1 0\na 2 0\n1 2 0\n").unwrap();
        assert_eq!(f.prefix().num_blocks(), 2);
        assert_eq!(f.prefix().quant(Var::new(1)), Some(Quant::Exists));
        assert_eq!(f.prefix().quant(Var::new(2)), Some(Quant::Forall));
        assert_eq!(f.clause(ClauseId(0)).lits(), &[lit(1), lit(2)]);
    }

    #[test]
    fn tautology_dropped_variable_unused() {
        let f = parse_qdimacs("p cnf 1 1\n1 -1 0\n").unwrap();
        assert_eq!(f.num_live(), 0);
        assert_eq!(f.tautologies_dropped(), 1);
        assert_eq!(f.used_prefix().num_blocks(), 0);
    }

    #[test]
    fn free_variable_outermost() {
        let f = parse_qdimacs("p cnf 2 1\na 2 0\n1 2 0\n").unwrap();
        let g = parse_qdimacs("p cnf 2 1\ne 1 0\na 2 0\n1 2 0\n").unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn tokens_may_span_lines() {
        let f = parse_qdimacs("c hi\np cnf 3 2\ne 1\n 2 0 a 3\n0\n1\n-3 0 2 3\n\n0\n").unwrap();
        assert_eq!(f.num_live(), 2);
        assert_eq!(f.prefix().num_blocks(), 2);
    }

    #[test]
    fn error_cases() {
        let kind = |t: &str| parse_qdimacs(t).unwrap_err().kind;
        assert_eq!(kind("1 2 0\n"), ParseErrorKind::BeforePreamble);
        assert_eq!(kind("e 1 0\n"), ParseErrorKind::BeforePreamble);
        assert_eq!(kind(""), ParseErrorKind::MissingPreamble);
        assert!(matches!(kind("p cnf x 1\n"), ParseErrorKind::MalformedPreamble(_)));
        assert!(matches!(kind("p dnf 1 1\n"), ParseErrorKind::MalformedPreamble(_)));
        assert_eq!(kind("p cnf 2 1\n1 2\n"), ParseErrorKind::UnterminatedClause);
        assert_eq!(kind("p cnf 2 1\ne 1 2\n"), ParseErrorKind::UnterminatedBlock);
        assert_eq!(kind("p cnf 2 1\n1 3 0\n"), ParseErrorKind::VariableOutOfRange(3));
        assert_eq!(kind("p cnf 2 1\n1 0\ne 2 0\n"), ParseErrorKind::QuantifierAfterClauses);
        assert_eq!(kind("p cnf 2 1\ne 1 x 0\n"), ParseErrorKind::InvalidToken("x".into()));
        assert_eq!(
            kind("p cnf 2 1\ne 1 0\na 1 0\n"),
            ParseErrorKind::Formula(FormulaError::Rebound(Var::new(1)))
        );
        assert_eq!(kind("p cnf 2 0\np cnf 2 0\n"), ParseErrorKind::DuplicatePreamble);
    }

    #[test]
    fn error_reports_line() {
        let e = parse_qdimacs("p cnf 2 1\nc x\n1 5 0\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(e.to_string(), "line 3: variable 5 outside the declared range");
    }

    #[test]
    fn lax_mode_grows_bound() {
        let f = parse_qdimacs_with("p cnf 1 1\n1 5 0\n", ParseOptions { strict: false }).unwrap();
        assert_eq!(f.prefix().max_var(), 5);
    }

    #[test]
    fn empty_clause_is_kept() {
        let f = parse_qdimacs("p cnf 1 2\ne 1 0\n0\n1 0\n").unwrap();
        assert!(f.has_empty_clause());
        assert_eq!(write_qdimacs(&f), "p cnf 1 2\ne 1 0\n0\n1 0\n");
    }

    #[test]
    fn writer_examples() {
        let f = parse_qdimacs("p cnf 1 1\ne 1 0\n1 0\n").unwrap();
        assert_eq!(write_qdimacs(&f), "p cnf 1 1\ne 1 0\n1 0\n");
        let f = parse_qdimacs("p cnf 1 2\ne 1 0\n1 0\n-1 0\n").unwrap();
        assert_eq!(write_qdimacs(&f), "p cnf 1 2\ne 1 0\n1 0\n-1 0\n");
        let empty = write_qdimacs(&Pcnf::default());
        assert!(empty.starts_with("c "));
        assert!(empty.ends_with("p cnf 0 0\n"));
    }

    #[test]
    fn writer_drops_unused_and_merges() {
        let f = parse_qdimacs("p cnf 4 1\ne 3 0\na 2 0\ne 1 4 0\n-1 3 0\n").unwrap();
        assert_eq!(write_qdimacs(&f), "p cnf 3 1\ne 1 3 0\n-1 3 0\n");
    }
}
