//! Text format for stand-alone soft constraint problems.
//!
//! ```text
//! semiring fuzzy            # fuzzy | fuzzy-exact | boolean | security N
//! domain a b
//! variables x y
//! interest x                # optional; defaults to every variable
//! constraint x y default 0  # default optional; defaults to the semiring's zero
//!   a a -> 0.8
//!   a b -> 0.2
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::scsp::{solution, tuples, Constraint, Scsp, ScspError};
use crate::semiring::{BooleanSemiring, FuzzyF64, FuzzyRational, ParseValue, SecuritySemiring};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenericErrorKind {
    #[error("the first directive must be `semiring`")]
    MissingSemiring,
    #[error("unknown semiring `{0}`")]
    UnknownSemiring(String),
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("`{0}` given twice")]
    Duplicate(&'static str),
    #[error("`{0}` must come before any constraint")]
    TooLate(&'static str),
    #[error("`{0}` is not in the domain")]
    NotInDomain(String),
    #[error("row outside a constraint")]
    StrayRow,
    #[error("expected {0}")]
    Expected(&'static str),
    #[error("{0}")]
    Value(String),
    #[error(transparent)]
    Scsp(#[from] ScspError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct GenericError {
    pub line: usize,
    pub kind: GenericErrorKind,
}

fn at(line: usize) -> impl Fn(GenericErrorKind) -> GenericError {
    move |kind| GenericError { line, kind }
}

/// A solved problem: the solution table rendered densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Solved {
    pub variables: Vec<String>,
    /// One row per tuple over the domain, in declaration order.
    pub rows: Vec<(Vec<String>, String)>,
}

impl Solved {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "solution {}", self.variables.join(" "));
        for (t, v) in &self.rows {
            let _ = writeln!(out, "  {} -> {v}", t.join(" "));
        }
        out
    }
}

/// Parses and solves a problem file.
pub fn solve_text(text: &str) -> Result<Solved, GenericError> {
    let mut lines = significant_lines(text);
    let Some((no, first)) = lines.next() else {
        return Err(at(1)(GenericErrorKind::MissingSemiring));
    };
    let words: Vec<&str> = first.split_whitespace().collect();
    if words[0] != "semiring" {
        return Err(at(no)(GenericErrorKind::MissingSemiring));
    }
    let rest: Vec<(usize, &str)> = lines.collect();
    match words.get(1..) {
        Some(["fuzzy"]) => solve_with(&FuzzyF64::new(), &rest),
        Some(["fuzzy-exact"]) => solve_with(&FuzzyRational::new(), &rest),
        Some(["boolean"]) => solve_with(&BooleanSemiring, &rest),
        Some(["security", n]) => {
            let n: u32 = n
                .parse()
                .map_err(|_| at(no)(GenericErrorKind::Expected("a positive level count")))?;
            let s = SecuritySemiring::new(n).map_err(|e| at(no)(GenericErrorKind::Value(e.to_string())))?;
            solve_with(&s, &rest)
        }
        _ => Err(at(no)(GenericErrorKind::UnknownSemiring(words[1..].join(" ")))),
    }
}

fn significant_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let code = l.split('#').next().unwrap_or("");
        (!code.trim().is_empty()).then_some((i + 1, code))
    })
}

fn solve_with<S: ParseValue>(s: &S, lines: &[(usize, &str)]) -> Result<Solved, GenericError> {
    let mut domain: Option<Vec<String>> = None;
    let mut variables: Option<Vec<String>> = None;
    let mut interest: Option<Vec<String>> = None;
    let mut constraints: Vec<(usize, Constraint<String, S::Value>)> = Vec::new();
    for &(no, line) in lines {
        let err = at(no);
        let indented = line.starts_with(char::is_whitespace);
        let words: Vec<&str> = line.split_whitespace().collect();
        if indented {
            let Some((_, c)) = constraints.last_mut() else {
                return Err(err(GenericErrorKind::StrayRow));
            };
            let arrow = words
                .iter()
                .position(|w| *w == "->")
                .ok_or_else(|| err(GenericErrorKind::Expected("`->`")))?;
            if arrow + 2 != words.len() {
                return Err(err(GenericErrorKind::Expected("exactly one value after `->`")));
            }
            let dom = domain.as_ref().expect("constraints need a domain");
            let tuple: Vec<String> = words[..arrow].iter().map(|w| w.to_string()).collect();
            if let Some(bad) = tuple.iter().find(|d| !dom.contains(d)) {
                return Err(err(GenericErrorKind::NotInDomain(bad.clone())));
            }
            let v = s.parse_value(words[arrow + 1]).map_err(|e| err(GenericErrorKind::Value(e)))?;
            c.set(tuple, v).map_err(|e| err(e.into()))?;
            continue;
        }
        let list = || words[1..].iter().map(|w| w.to_string()).collect::<Vec<_>>();
        let once = |slot: &Option<Vec<String>>, name: &'static str| {
            if slot.is_some() {
                Err(err(GenericErrorKind::Duplicate(name)))
            } else if !constraints.is_empty() {
                Err(err(GenericErrorKind::TooLate(name)))
            } else {
                Ok(())
            }
        };
        match words[0] {
            "domain" => {
                once(&domain, "domain")?;
                domain = Some(list());
            }
            "variables" => {
                once(&variables, "variables")?;
                variables = Some(list());
            }
            "interest" => {
                once(&interest, "interest")?;
                interest = Some(list());
            }
            "constraint" => {
                if domain.is_none() {
                    return Err(err(GenericErrorKind::Expected("`domain` before constraints")));
                }
                let vars = variables
                    .as_ref()
                    .ok_or_else(|| err(GenericErrorKind::Expected("`variables` before constraints")))?;
                let mut con = list();
                let mut default = s.zero();
                if let Some(k) = con.iter().position(|w| w == "default") {
                    if k + 2 != con.len() {
                        return Err(err(GenericErrorKind::Expected("one value after `default`")));
                    }
                    default = s.parse_value(&con[k + 1]).map_err(|e| err(GenericErrorKind::Value(e)))?;
                    con.truncate(k);
                }
                if let Some(v) = con.iter().find(|v| !vars.contains(v)) {
                    return Err(err(ScspError::UnknownVariable(v.clone()).into()));
                }
                let c = Constraint::new(con, default).map_err(|e| err(e.into()))?;
                constraints.push((no, c));
            }
            other => return Err(err(GenericErrorKind::UnknownDirective(other.to_string()))),
        }
    }
    let last = lines.last().map_or(1, |(n, _)| *n);
    let domain = domain.ok_or_else(|| at(last)(GenericErrorKind::Expected("a `domain` line")))?;
    let variables = variables.ok_or_else(|| at(last)(GenericErrorKind::Expected("a `variables` line")))?;
    let interest = interest.unwrap_or_else(|| variables.clone());
    let mut p = Scsp::new(variables, interest).map_err(|e| at(1)(e.into()))?;
    for (no, c) in constraints {
        p.add(c).map_err(|e| at(no)(e.into()))?;
    }
    let sol = solution(s, &domain, &p).map_err(|e| at(last)(e.into()))?;
    let rows = tuples(&domain, sol.con().len())
        .map(|t| {
            let v = s.format_value(sol.get(&t));
            (t, v)
        })
        .collect();
    Ok(Solved {
        variables: sol.con().to_vec(),
        rows,
    })
}
