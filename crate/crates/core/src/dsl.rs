//! Line-oriented scenario files.
//!
//! ```text
//! levels 8
//! profile hybrid
//! principal A agent a
//! atom nonce n_a
//! atom key Ka owners A
//! atom key Kb inverse Kb_inv owners B
//! assume * a public
//! assume A Ka private
//! phase policy
//! invent A n_a
//! send A -> B : {| n_a, a |}Kb
//! phase trace
//! send A -> B intercepted by C : {| n_a, a |}Kb
//! cryptanalyse C n_a from {| n_a, a |}Kb
//! ```

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::entailment::RuleProfile;
use crate::goals::SpeaksAboutConfig;
use crate::lex::{self, Spanned, Tok};
use crate::message::{AtomError, AtomKind, KeyRole, Message, MessageParseError, MessageParser, ParseErrorKind};
use crate::scenario::{Assumption, Event, Phase, Principal, Scenario, ScenarioError};
use crate::semiring::Level;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslErrorKind {
    #[error("unexpected character `{0}`")]
    BadCharacter(char),
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("expected {expected}, found {found}")]
    Expected { expected: String, found: String },
    #[error("{0}")]
    Message(ParseErrorKind),
    #[error("`levels` given twice")]
    DuplicateLevels,
    #[error("missing `levels` directive")]
    MissingLevels,
    #[error("`levels` must be a positive integer, not `{0}`")]
    BadLevels(String),
    #[error("`{0}` given twice")]
    DuplicateDirective(&'static str),
    #[error("{0}")]
    BadProfile(String),
    #[error("undeclared principal `{0}`")]
    UndeclaredPrincipal(String),
    #[error("unknown atom kind `{0}` (expected agent, nonce, timestamp or key)")]
    UnknownAtomKind(String),
    #[error("{0}")]
    Atom(#[from] AtomError),
    #[error("`{0}` is not a level")]
    BadLevel(String),
    #[error("declarations must come before the first phase")]
    LateDeclaration,
    #[error("event outside a phase")]
    EventOutsidePhase,
    #[error("`phase {0}` appears out of order")]
    PhaseOrder(String),
    #[error("{0}")]
    Invalid(ScenarioError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {kind}")]
pub struct DslError {
    pub line: usize,
    pub col: usize,
    pub kind: DslErrorKind,
}

struct Line<'a> {
    no: usize,
    toks: &'a [Spanned],
    pos: usize,
    end_col: usize,
}

impl<'a> Line<'a> {
    fn err(&self, kind: DslErrorKind) -> DslError {
        DslError {
            line: self.no,
            col: self.col(),
            kind,
        }
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn found(&self) -> String {
        self.toks
            .get(self.pos)
            .map_or_else(|| "end of line".to_string(), |t| t.tok.to_string())
    }

    fn expected(&self, what: &str) -> DslError {
        self.err(DslErrorKind::Expected {
            expected: what.to_string(),
            found: self.found(),
        })
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek_ident(&self) -> Option<&'a str> {
        match self.toks.get(self.pos).map(|t| &t.tok) {
            Some(Tok::Ident(s)) => Some(s),
            _ => None,
        }
    }

    fn ident(&mut self, what: &str) -> Result<&'a str, DslError> {
        let s = self.peek_ident().ok_or_else(|| self.expected(what))?;
        self.pos += 1;
        Ok(s)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), DslError> {
        if self.peek_ident() == Some(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.expected(&format!("`{kw}`")))
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_ident() == Some(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn punct(&mut self, tok: Tok) -> Result<(), DslError> {
        if self.toks.get(self.pos).map(|t| &t.tok) == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.expected(&tok.to_string()))
        }
    }

    fn end(&self) -> Result<(), DslError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.expected("end of line"))
        }
    }

    fn message(&mut self, s: &Scenario) -> Result<Message, DslError> {
        let rest = &self.toks[self.pos..];
        let mut p = MessageParser::new(rest, self.end_col, &s.atoms);
        let m = p.message().map_err(|e: MessageParseError| DslError {
            line: self.no,
            col: e.col,
            kind: DslErrorKind::Message(e.kind),
        })?;
        self.pos += p.position();
        Ok(m)
    }
}

struct Parser {
    scenario: Scenario,
    levels_seen: bool,
    profile_seen: bool,
    speaks_seen: bool,
    phase: Option<Phase>,
    assumption_lines: Vec<usize>,
    policy_lines: Vec<usize>,
    trace_lines: Vec<usize>,
}

impl Parser {
    fn principal(&self, line: &mut Line) -> Result<String, DslError> {
        let col = line.col();
        let name = line.ident("a principal")?;
        if !self.scenario.has_principal(name) {
            return Err(DslError {
                line: line.no,
                col,
                kind: DslErrorKind::UndeclaredPrincipal(name.to_string()),
            });
        }
        Ok(name.to_string())
    }

    fn owners(&self, line: &mut Line) -> Result<Vec<String>, DslError> {
        let mut out = Vec::new();
        if line.eat_keyword("owners") {
            out.push(self.principal(line)?);
            while !line.at_end() {
                out.push(self.principal(line)?);
            }
        }
        Ok(out)
    }

    fn declaration_allowed(&self, line: &Line) -> Result<(), DslError> {
        if self.phase.is_some() {
            Err(DslError {
                line: line.no,
                col: 1,
                kind: DslErrorKind::LateDeclaration,
            })
        } else {
            Ok(())
        }
    }

    fn level_token(&self, line: &mut Line) -> Result<Level, DslError> {
        let col = line.col();
        let tok = line.ident("a level")?;
        Level::parse(tok, self.scenario.levels).map_err(|_| DslError {
            line: line.no,
            col,
            kind: DslErrorKind::BadLevel(tok.to_string()),
        })
    }

    fn directive(&mut self, line: &mut Line) -> Result<(), DslError> {
        let head_col = line.col();
        let head = line.ident("a directive")?;
        let atom_err = |line: &Line, col: usize, e: AtomError| DslError {
            line: line.no,
            col,
            kind: DslErrorKind::Atom(e),
        };
        match head {
            "levels" => {
                if self.levels_seen {
                    return Err(DslError {
                        line: line.no,
                        col: head_col,
                        kind: DslErrorKind::DuplicateLevels,
                    });
                }
                self.declaration_allowed(line)?;
                let col = line.col();
                let text = match line.toks.get(line.pos).map(|t| &t.tok) {
                    Some(Tok::Number(t)) => t.clone(),
                    Some(Tok::Ident(t)) => t.clone(),
                    _ => return Err(line.expected("a number")),
                };
                line.pos += 1;
                let n: u32 = text.parse().ok().filter(|&n| n > 0).ok_or(DslError {
                    line: line.no,
                    col,
                    kind: DslErrorKind::BadLevels(text.clone()),
                })?;
                if !self.scenario.assumptions.is_empty() {
                    // Levels fix the carrier for every later level token.
                    return Err(DslError {
                        line: line.no,
                        col: head_col,
                        kind: DslErrorKind::Expected {
                            expected: "`levels` before any assumption".into(),
                            found: "`levels`".into(),
                        },
                    });
                }
                self.scenario.levels = n;
                self.levels_seen = true;
            }
            "profile" => {
                if self.profile_seen {
                    return Err(line.err(DslErrorKind::DuplicateDirective("profile")));
                }
                let col = line.col();
                let name = line.ident("a rule profile")?;
                let mut name = name.to_string();
                while line.toks.get(line.pos).map(|t| &t.tok) == Some(&Tok::Dash) {
                    line.pos += 1;
                    name.push('-');
                    name.push_str(line.ident("a rule profile")?);
                }
                self.scenario.profile = name.parse::<RuleProfile>().map_err(|e| DslError {
                    line: line.no,
                    col,
                    kind: DslErrorKind::BadProfile(e),
                })?;
                self.profile_seen = true;
            }
            "speaksabout" => {
                if self.speaks_seen {
                    return Err(line.err(DslErrorKind::DuplicateDirective("speaksabout")));
                }
                let mut cfg = SpeaksAboutConfig {
                    names: false,
                    keys: false,
                };
                while !line.at_end() {
                    match line.ident("`names` or `keys`")? {
                        "names" => cfg.names = true,
                        "keys" => cfg.keys = true,
                        _ => {
                            line.pos -= 1;
                            return Err(line.expected("`names` or `keys`"));
                        }
                    }
                }
                if !cfg.is_valid() {
                    return Err(line.expected("`names` or `keys`"));
                }
                self.scenario.speaks_about = cfg;
                self.speaks_seen = true;
            }
            "principal" => {
                self.declaration_allowed(line)?;
                let col = line.col();
                let name = line.ident("a principal name")?.to_string();
                if self.scenario.has_principal(&name) {
                    return Err(DslError {
                        line: line.no,
                        col,
                        kind: DslErrorKind::Invalid(ScenarioError::DuplicatePrincipal(name)),
                    });
                }
                let mut agent = None;
                if line.eat_keyword("agent") {
                    let col = line.col();
                    let a = line.ident("an agent atom")?.to_string();
                    self.scenario
                        .atoms
                        .declare_simple(&a, AtomKind::Agent { principal: Some(name.clone()) })
                        .map_err(|e| atom_err(line, col, e))?;
                    agent = Some(a);
                }
                self.scenario.principals.push(Principal { name, agent });
            }
            "atom" => {
                self.declaration_allowed(line)?;
                let col = line.col();
                let kind = line.ident("an atom kind")?;
                match kind {
                    "agent" | "nonce" | "timestamp" => {
                        if line.at_end() {
                            return Err(line.expected("an atom name"));
                        }
                        while !line.at_end() {
                            let col = line.col();
                            let name = line.ident("an atom name")?;
                            let k = match kind {
                                "agent" => AtomKind::Agent { principal: None },
                                "nonce" => AtomKind::Nonce,
                                _ => AtomKind::Timestamp,
                            };
                            self.scenario
                                .atoms
                                .declare_simple(name, k)
                                .map_err(|e| atom_err(line, col, e))?;
                        }
                    }
                    "key" => {
                        let col = line.col();
                        let name = line.ident("a key name")?.to_string();
                        let inverse = if line.eat_keyword("inverse") {
                            Some(line.ident("the inverse key name")?.to_string())
                        } else {
                            line.eat_keyword("symmetric");
                            None
                        };
                        let owners = self.owners(line)?;
                        match inverse {
                            None => self.scenario.atoms.declare_symmetric_key(&name, owners),
                            Some(inv) => self.scenario.atoms.declare_key_pair(&name, &inv, owners),
                        }
                        .map_err(|e| atom_err(line, col, e))?;
                    }
                    other => {
                        return Err(DslError {
                            line: line.no,
                            col,
                            kind: DslErrorKind::UnknownAtomKind(other.to_string()),
                        })
                    }
                }
            }
            "assume" => {
                self.declaration_allowed(line)?;
                let who = if line.toks.get(line.pos).map(|t| &t.tok) == Some(&Tok::Star) {
                    line.pos += 1;
                    None
                } else {
                    Some(self.principal(line)?)
                };
                let mut messages = vec![line.message(&self.scenario)?];
                while line.pos + 1 < line.toks.len() {
                    messages.push(line.message(&self.scenario)?);
                }
                let level = self.level_token(line)?;
                for message in messages {
                    self.assumption_lines.push(line.no);
                    self.scenario.assumptions.push(Assumption {
                        who: who.clone(),
                        message,
                        level,
                    });
                }
            }
            "phase" => {
                let col = line.col();
                let which = line.ident("`policy` or `trace`")?;
                let next = match (which, self.phase) {
                    ("policy", None) => Phase::Policy,
                    ("trace", None | Some(Phase::Policy)) => Phase::Trace,
                    _ => {
                        return Err(DslError {
                            line: line.no,
                            col,
                            kind: DslErrorKind::PhaseOrder(which.to_string()),
                        })
                    }
                };
                if next == Phase::Trace {
                    self.scenario.trace = Some(Vec::new());
                }
                self.phase = Some(next);
            }
            "invent" | "send" | "cryptanalyse" => {
                let Some(phase) = self.phase else {
                    return Err(DslError {
                        line: line.no,
                        col: head_col,
                        kind: DslErrorKind::EventOutsidePhase,
                    });
                };
                let ev = self.event(head, line)?;
                match phase {
                    Phase::Policy => {
                        self.scenario.policy.push(ev);
                        self.policy_lines.push(line.no);
                    }
                    Phase::Trace => {
                        self.scenario.trace.get_or_insert_with(Vec::new).push(ev);
                        self.trace_lines.push(line.no);
                    }
                }
            }
            other => {
                return Err(DslError {
                    line: line.no,
                    col: head_col,
                    kind: DslErrorKind::UnknownDirective(other.to_string()),
                })
            }
        }
        line.end()
    }

    fn event(&mut self, head: &str, line: &mut Line) -> Result<Event, DslError> {
        match head {
            "invent" => {
                let principal = self.principal(line)?;
                let col = line.col();
                let atom = line.ident("an atom")?.to_string();
                if self.scenario.atoms.get(&atom).is_none() {
                    return Err(DslError {
                        line: line.no,
                        col,
                        kind: DslErrorKind::Message(ParseErrorKind::UnknownIdentifier(atom)),
                    });
                }
                let owners = self.owners(line)?;
                if !owners.is_empty() {
                    self.scenario
                        .atoms
                        .add_owners(&atom, owners.iter().cloned())
                        .map_err(|e| DslError {
                            line: line.no,
                            col,
                            kind: DslErrorKind::Atom(e),
                        })?;
                }
                Ok(Event::Invent {
                    principal,
                    atom,
                    owners,
                })
            }
            "send" => {
                let from = self.principal(line)?;
                line.punct(Tok::Arrow)?;
                let to = self.principal(line)?;
                let interceptor = if line.eat_keyword("intercepted") {
                    line.keyword("by")?;
                    Some(self.principal(line)?)
                } else {
                    None
                };
                line.punct(Tok::Colon)?;
                let message = line.message(&self.scenario)?;
                Ok(Event::Send {
                    from,
                    to,
                    message,
                    interceptor,
                })
            }
            _ => {
                let principal = self.principal(line)?;
                let learned = line.message(&self.scenario)?;
                line.keyword("from")?;
                let source = line.message(&self.scenario)?;
                Ok(Event::Cryptanalyse {
                    principal,
                    learned,
                    source,
                })
            }
        }
    }

    fn line_of(&self, err: &ScenarioError) -> usize {
        match err {
            ScenarioError::Event { phase, index, .. } => {
                let lines = match phase {
                    Phase::Policy => &self.policy_lines,
                    Phase::Trace => &self.trace_lines,
                };
                lines.get(*index).copied().unwrap_or(0)
            }
            ScenarioError::DuplicateAssumption { message, .. } => self
                .scenario
                .assumptions
                .iter()
                .zip(&self.assumption_lines)
                .filter(|(a, _)| a.message.to_string() == *message)
                .map(|(_, l)| *l)
                .nth(1)
                .unwrap_or(0),
            ScenarioError::TradedAssumption(level) => self
                .scenario
                .assumptions
                .iter()
                .zip(&self.assumption_lines)
                .find(|(a, _)| a.level == *level)
                .map_or(0, |(_, l)| *l),
            _ => 0,
        }
    }
}

/// Parses and validates a scenario file. `name` labels the universe.
pub fn parse_scenario(text: &str, name: &str) -> Result<Scenario, DslError> {
    let mut p = Parser {
        scenario: Scenario::new(name),
        levels_seen: false,
        profile_seen: false,
        speaks_seen: false,
        phase: None,
        assumption_lines: Vec::new(),
        policy_lines: Vec::new(),
        trace_lines: Vec::new(),
    };
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        last_line = i + 1;
        let toks = lex::tokenize(raw).map_err(|e| DslError {
            line: i + 1,
            col: e.col,
            kind: DslErrorKind::BadCharacter(e.found),
        })?;
        if toks.is_empty() {
            continue;
        }
        let mut line = Line {
            no: i + 1,
            toks: &toks,
            pos: 0,
            end_col: raw.chars().count() + 1,
        };
        p.directive(&mut line)?;
    }
    if !p.levels_seen {
        return Err(DslError {
            line: last_line.max(1),
            col: 1,
            kind: DslErrorKind::MissingLevels,
        });
    }
    if let Err(e) = p.scenario.validate() {
        return Err(DslError {
            line: p.line_of(&e),
            col: 1,
            kind: DslErrorKind::Invalid(e),
        });
    }
    Ok(p.scenario)
}

/// Renders a scenario in the file syntax; parsing the result gives back an
/// equal scenario.
pub fn print_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = write_scenario(&mut out, s);
    out
}

fn write_scenario(out: &mut String, s: &Scenario) -> fmt::Result {
    writeln!(out, "levels {}", s.levels)?;
    writeln!(out, "profile {}", s.profile)?;
    let sa = s.speaks_about;
    if sa != SpeaksAboutConfig::default() {
        let mut rules = Vec::new();
        if sa.names {
            rules.push("names");
        }
        if sa.keys {
            rules.push("keys");
        }
        writeln!(out, "speaksabout {}", rules.join(" "))?;
    }
    // Principals interleave with atoms so that both keep their order.
    let mut next_principal = 0;
    let flush = |out: &mut String, upto: usize, next: &mut usize| -> fmt::Result {
        while *next < upto {
            let p = &s.principals[*next];
            match &p.agent {
                Some(a) => writeln!(out, "principal {} agent {a}", p.name)?,
                None => writeln!(out, "principal {}", p.name)?,
            }
            *next += 1;
        }
        Ok(())
    };
    for atom in s.atoms.iter() {
        let owner_of = match &atom.kind {
            AtomKind::Agent { principal: Some(p) } => s.principals.iter().position(|q| &q.name == p),
            _ => None,
        };
        if let Some(j) = owner_of {
            flush(out, j + 1, &mut next_principal)?;
            continue;
        }
        match &atom.kind {
            AtomKind::Key(info) => {
                let owners = if info.owners.is_empty() {
                    String::new()
                } else {
                    let v: Vec<&str> = info.owners.iter().map(String::as_str).collect();
                    format!(" owners {}", v.join(" "))
                };
                match (info.role, &info.inverse) {
                    (KeyRole::Symmetric, _) => writeln!(out, "atom key {}{owners}", atom.name)?,
                    (KeyRole::Public, Some(inv)) => writeln!(out, "atom key {} inverse {inv}{owners}", atom.name)?,
                    // Private halves come with their public partner.
                    _ => {}
                }
            }
            kind => writeln!(out, "atom {} {}", kind.keyword(), atom.name)?,
        }
    }
    flush(out, s.principals.len(), &mut next_principal)?;
    for a in &s.assumptions {
        let who = a.who.as_deref().unwrap_or("*");
        writeln!(out, "assume {who} {} {}", a.message, a.level)?;
    }
    writeln!(out, "phase policy")?;
    for ev in &s.policy {
        write_event(out, ev)?;
    }
    if let Some(trace) = &s.trace {
        writeln!(out, "phase trace")?;
        for ev in trace {
            write_event(out, ev)?;
        }
    }
    Ok(())
}

fn write_event(out: &mut String, ev: &Event) -> fmt::Result {
    match ev {
        Event::Invent {
            principal,
            atom,
            owners,
        } => {
            write!(out, "invent {principal} {atom}")?;
            if !owners.is_empty() {
                write!(out, " owners {}", owners.join(" "))?;
            }
            writeln!(out)
        }
        Event::Send {
            from,
            to,
            message,
            interceptor: None,
        } => writeln!(out, "send {from} -> {to} : {message}"),
        Event::Send {
            from,
            to,
            message,
            interceptor: Some(c),
        } => writeln!(out, "send {from} -> {to} intercepted by {c} : {message}"),
        Event::Cryptanalyse {
            principal,
            learned,
            source,
        } => writeln!(out, "cryptanalyse {principal} {learned} from {source}"),
    }
}
