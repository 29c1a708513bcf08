//! Symbolic protocol messages: atoms, concatenation and encryption, the atom
//! table with key metadata, and the bounded message universe.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::lex::{self, Spanned, Tok};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KeyRole {
    Symmetric,
    /// Encryption half of an asymmetric pair.
    Public,
    /// Decryption (or signing) half of an asymmetric pair.
    Private,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyInfo {
    pub role: KeyRole,
    /// The other half of an asymmetric pair; `None` for symmetric keys.
    pub inverse: Option<String>,
    pub owners: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomKind {
    /// A principal's name. `principal` links it back to the variable.
    Agent { principal: Option<String> },
    Nonce,
    Timestamp,
    Key(KeyInfo),
}

impl AtomKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            AtomKind::Agent { .. } => "agent",
            AtomKind::Nonce => "nonce",
            AtomKind::Timestamp => "timestamp",
            AtomKind::Key(_) => "key",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub name: String,
    pub kind: AtomKind,
}

impl Atom {
    pub fn key_info(&self) -> Option<&KeyInfo> {
        match &self.kind {
            AtomKind::Key(info) => Some(info),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AtomError {
    #[error("atom `{0}` is declared twice")]
    Duplicate(String),
    #[error("`{0}` is not a valid identifier")]
    BadName(String),
    #[error("key `{0}` cannot be its own asymmetric inverse")]
    SelfInverse(String),
    #[error("`{0}` is not a declared key")]
    NotAKey(String),
}

/// Declared atoms in declaration order. Names are unique.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AtomTable {
    atoms: Vec<Atom>,
    by_name: HashMap<String, usize>,
}

impl AtomTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, atom: Atom) -> Result<(), AtomError> {
        if !lex::is_ident(&atom.name) {
            return Err(AtomError::BadName(atom.name));
        }
        if self.by_name.contains_key(&atom.name) {
            return Err(AtomError::Duplicate(atom.name));
        }
        self.by_name.insert(atom.name.clone(), self.atoms.len());
        self.atoms.push(atom);
        Ok(())
    }

    pub fn declare_simple(&mut self, name: &str, kind: AtomKind) -> Result<(), AtomError> {
        self.declare(Atom {
            name: name.to_string(),
            kind,
        })
    }

    pub fn declare_symmetric_key<I, S>(&mut self, name: &str, owners: I) -> Result<(), AtomError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.declare_simple(
            name,
            AtomKind::Key(KeyInfo {
                role: KeyRole::Symmetric,
                inverse: None,
                owners: owners.into_iter().map(Into::into).collect(),
            }),
        )
    }

    /// Declares both halves of an asymmetric pair; `public` encrypts.
    pub fn declare_key_pair<I, S>(
        &mut self,
        public: &str,
        private: &str,
        owners: I,
    ) -> Result<(), AtomError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if public == private {
            return Err(AtomError::SelfInverse(public.to_string()));
        }
        if self.by_name.contains_key(private) {
            return Err(AtomError::Duplicate(private.to_string()));
        }
        let owners: BTreeSet<String> = owners.into_iter().map(Into::into).collect();
        let half = |role, inverse: &str| {
            AtomKind::Key(KeyInfo {
                role,
                inverse: Some(inverse.to_string()),
                owners: owners.clone(),
            })
        };
        self.declare_simple(public, half(KeyRole::Public, private))?;
        self.declare_simple(private, half(KeyRole::Private, public))
    }

    /// Adds owners to an already declared key.
    pub fn add_owners<I, S>(&mut self, key: &str, owners: I) -> Result<(), AtomError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let idx = *self
            .by_name
            .get(key)
            .ok_or_else(|| AtomError::NotAKey(key.to_string()))?;
        match &mut self.atoms[idx].kind {
            AtomKind::Key(info) => {
                info.owners.extend(owners.into_iter().map(Into::into));
                Ok(())
            }
            _ => Err(AtomError::NotAKey(key.to_string())),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Atom> {
        self.by_name.get(name).map(|&i| &self.atoms[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn agent_of(&self, principal: &str) -> Option<&Atom> {
        self.atoms.iter().find(|a| {
            matches!(&a.kind, AtomKind::Agent { principal: Some(p) } if p == principal)
        })
    }

    pub fn key_info(&self, name: &str) -> Option<&KeyInfo> {
        self.get(name).and_then(Atom::key_info)
    }
}

/// A symbolic message term. Concatenations are right-nested, so structural
/// equality is equality of the canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Message {
    Empty,
    Atomic(String),
    Concat(Box<Message>, Box<Message>),
    Encrypt { body: Box<Message>, key: Box<Message> },
}

impl Message {
    pub fn atom(name: &str) -> Message {
        Message::Atomic(name.to_string())
    }

    pub fn pair(left: Message, right: Message) -> Message {
        Message::Concat(Box::new(left), Box::new(right))
    }

    /// `<m1, <m2, .. mn>>`. Panics on an empty list.
    pub fn tuple(parts: Vec<Message>) -> Message {
        let mut iter = parts.into_iter().rev();
        let last = iter.next().expect("tuple of at least one message");
        iter.fold(last, |acc, m| Message::pair(m, acc))
    }

    pub fn encrypt(body: Message, key: Message) -> Message {
        Message::Encrypt {
            body: Box::new(body),
            key: Box::new(key),
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Message::Atomic(name) => Some(name),
            _ => None,
        }
    }

    /// Immediate subterms (components, or body and key).
    pub fn children(&self) -> Vec<&Message> {
        match self {
            Message::Empty | Message::Atomic(_) => Vec::new(),
            Message::Concat(l, r) => vec![l, r],
            Message::Encrypt { body, key } => vec![body, key],
        }
    }

    /// All subterms including `self`, children before parents.
    pub fn subterms(&self) -> Vec<&Message> {
        let mut out = Vec::new();
        fn walk<'a>(m: &'a Message, out: &mut Vec<&'a Message>) {
            for c in m.children() {
                walk(c, out);
            }
            out.push(m);
        }
        walk(self, &mut out);
        out
    }

    pub fn contains(&self, other: &Message) -> bool {
        self == other || self.children().iter().any(|c| c.contains(other))
    }

    pub fn atoms(&self) -> BTreeSet<&str> {
        self.subterms().into_iter().filter_map(Message::as_atom).collect()
    }

    /// Renders in the checker's functional style:
    /// `enk(k(a),pair(n_a,n_b))`.
    pub fn functional(&self, atoms: &AtomTable) -> String {
        match self {
            Message::Empty => "nil".to_string(),
            Message::Atomic(name) => functional_atom(name, atoms),
            Message::Concat(l, r) => format!("pair({},{})", l.functional(atoms), r.functional(atoms)),
            Message::Encrypt { body, key } => {
                format!("enk({},{})", key.functional(atoms), body.functional(atoms))
            }
        }
    }

    fn fmt_list(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Message::Concat(l, r) => {
                write!(f, "{l}, ")?;
                r.fmt_list(f)
            }
            m => write!(f, "{m}"),
        }
    }
}

fn functional_atom(name: &str, atoms: &AtomTable) -> String {
    let Some(info) = atoms.key_info(name) else {
        return name.to_string();
    };
    let single_agent = || {
        let mut owners = info.owners.iter();
        match (owners.next(), owners.next()) {
            (Some(p), None) => atoms.agent_of(p).map(|a| a.name.clone()),
            _ => None,
        }
    };
    match (info.role, single_agent()) {
        (KeyRole::Public, Some(agent)) => format!("k({agent})"),
        (KeyRole::Private, Some(agent)) => format!("inv(k({agent}))"),
        _ => name.to_string(),
    }
}

impl fmt::Display for Message {
    /// Canonical scenario-grammar form; reparses to the same term.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Message::Empty => f.write_str("<>"),
            Message::Atomic(name) => f.write_str(name),
            Message::Concat(..) => {
                f.write_str("(")?;
                self.fmt_list(f)?;
                f.write_str(")")
            }
            Message::Encrypt { body, key } => {
                f.write_str("{| ")?;
                body.fmt_list(f)?;
                write!(f, " |}}{key}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MessageError {
    #[error("`{0}` is not a key")]
    NotAKey(String),
    #[error("key `{0}` names an undeclared inverse")]
    MissingInverse(String),
}

/// The decryption key for ciphertexts made with `key`.
pub fn inverse(key: &Message, atoms: &AtomTable) -> Result<Message, MessageError> {
    let name = key
        .as_atom()
        .ok_or_else(|| MessageError::NotAKey(key.to_string()))?;
    let info = atoms
        .key_info(name)
        .ok_or_else(|| MessageError::NotAKey(name.to_string()))?;
    match &info.inverse {
        None => Ok(key.clone()),
        Some(inv) if atoms.get(inv).is_some() => Ok(Message::atom(inv)),
        Some(_) => Err(MessageError::MissingInverse(name.to_string())),
    }
}

/// Head/tail decompositions of a concatenation; empty for anything else.
pub fn split_pairs(m: &Message) -> Vec<(&Message, &Message)> {
    match m {
        Message::Concat(l, r) => vec![(l.as_ref(), r.as_ref())],
        _ => Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("unbalanced `{0}`")]
    Unbalanced(&'static str),
    #[error("encryption under `{0}`, which is not a key")]
    NonKeyEncryption(String),
    #[error("a concatenation needs at least two components")]
    SingletonTuple,
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: &'static str, found: String },
    #[error("unexpected character `{0}`")]
    BadCharacter(char),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {col}: {kind}")]
pub struct MessageParseError {
    pub col: usize,
    pub kind: ParseErrorKind,
}

pub(crate) struct MessageParser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    end_col: usize,
    atoms: &'a AtomTable,
}

impl<'a> MessageParser<'a> {
    pub(crate) fn new(toks: &'a [Spanned], end_col: usize, atoms: &'a AtomTable) -> Self {
        MessageParser {
            toks,
            pos: 0,
            end_col,
            atoms,
        }
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }

    fn peek(&self) -> Option<&'a Spanned> {
        self.toks.get(self.pos)
    }

    fn col(&self) -> usize {
        self.peek().map_or(self.end_col, |t| t.col)
    }

    fn err(&self, kind: ParseErrorKind) -> MessageParseError {
        MessageParseError {
            col: self.col(),
            kind,
        }
    }

    fn found(&self) -> String {
        self.peek()
            .map_or_else(|| "end of input".to_string(), |t| t.tok.to_string())
    }

    fn ident(&mut self) -> Result<(String, usize), MessageParseError> {
        match self.peek() {
            Some(Spanned {
                tok: Tok::Ident(name),
                col,
            }) => {
                self.pos += 1;
                Ok((name.clone(), *col))
            }
            _ => Err(self.err(ParseErrorKind::Unexpected {
                expected: "an identifier",
                found: self.found(),
            })),
        }
    }

    fn known_atom(&self, name: String, col: usize) -> Result<Message, MessageParseError> {
        if self.atoms.get(&name).is_none() {
            return Err(MessageParseError {
                col,
                kind: ParseErrorKind::UnknownIdentifier(name),
            });
        }
        Ok(Message::Atomic(name))
    }

    /// Comma-separated messages up to (and consuming) `close`.
    fn list(&mut self, close: Tok, open: &'static str, open_col: usize) -> Result<Vec<Message>, MessageParseError> {
        let mut items = vec![self.message()?];
        loop {
            match self.peek().map(|t| &t.tok) {
                Some(Tok::Comma) => {
                    self.pos += 1;
                    items.push(self.message()?);
                }
                Some(t) if *t == close => {
                    self.pos += 1;
                    return Ok(items);
                }
                None | Some(Tok::RParen) | Some(Tok::EncClose) => {
                    return Err(MessageParseError {
                        col: open_col,
                        kind: ParseErrorKind::Unbalanced(open),
                    })
                }
                Some(_) => {
                    return Err(self.err(ParseErrorKind::Unexpected {
                        expected: "`,` or a closing delimiter",
                        found: self.found(),
                    }))
                }
            }
        }
    }

    pub(crate) fn message(&mut self) -> Result<Message, MessageParseError> {
        let Some(t) = self.peek() else {
            return Err(self.err(ParseErrorKind::Unexpected {
                expected: "a message",
                found: self.found(),
            }));
        };
        let col = t.col;
        match &t.tok {
            Tok::Ident(_) => {
                let (name, col) = self.ident()?;
                self.known_atom(name, col)
            }
            Tok::LParen => {
                self.pos += 1;
                let items = self.list(Tok::RParen, "(", col)?;
                if items.len() < 2 {
                    return Err(MessageParseError {
                        col,
                        kind: ParseErrorKind::SingletonTuple,
                    });
                }
                Ok(Message::tuple(items))
            }
            Tok::EncOpen => {
                self.pos += 1;
                let items = self.list(Tok::EncClose, "{|", col)?;
                let (key, key_col) = self.ident()?;
                let key_msg = self.known_atom(key.clone(), key_col)?;
                if self.atoms.key_info(&key).is_none() {
                    return Err(MessageParseError {
                        col: key_col,
                        kind: ParseErrorKind::NonKeyEncryption(key),
                    });
                }
                Ok(Message::encrypt(Message::tuple(items), key_msg))
            }
            Tok::RParen => Err(self.err(ParseErrorKind::Unbalanced(")"))),
            Tok::EncClose => Err(self.err(ParseErrorKind::Unbalanced("|}"))),
            _ => Err(self.err(ParseErrorKind::Unexpected {
                expected: "a message",
                found: self.found(),
            })),
        }
    }
}

/// Parses one message in the scenario grammar.
pub fn parse_message(text: &str, atoms: &AtomTable) -> Result<Message, MessageParseError> {
    let toks = lex::tokenize(text).map_err(|e| MessageParseError {
        col: e.col,
        kind: ParseErrorKind::BadCharacter(e.found),
    })?;
    let end_col = text.chars().count() + 1;
    let mut p = MessageParser::new(&toks, end_col, atoms);
    let m = p.message()?;
    if let Some(extra) = toks.get(p.position()) {
        let kind = match extra.tok {
            Tok::RParen => ParseErrorKind::Unbalanced(")"),
            Tok::EncClose => ParseErrorKind::Unbalanced("|}"),
            _ => ParseErrorKind::Unexpected {
                expected: "end of message",
                found: extra.tok.to_string(),
            },
        };
        return Err(MessageParseError { col: extra.col, kind });
    }
    Ok(m)
}

/// Index of a term inside a [`MessageUniverse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub usize);

/// Precomputed structure of a universe term, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Empty,
    Atom,
    Concat { left: TermId, right: TermId },
    Encrypt {
        body: TermId,
        key: TermId,
        /// Decryption key, when the key is a declared key atom.
        inverse: Option<TermId>,
        role: Option<KeyRole>,
    },
}

/// The bounded, subterm-closed message domain of one scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageUniverse {
    provenance: String,
    terms: Vec<Message>,
    shapes: Vec<Shape>,
    index: HashMap<Message, TermId>,
}

impl MessageUniverse {
    /// Subterm closure of `{<>}`, every declared atom, every inverse key and
    /// every subterm of `messages`. Order: `<>`, atoms in declaration order,
    /// then compound terms in first-occurrence order, children first.
    pub fn build<'m, I>(provenance: &str, atoms: &AtomTable, messages: I) -> Self
    where
        I: IntoIterator<Item = &'m Message>,
    {
        let mut u = MessageUniverse {
            provenance: provenance.to_string(),
            terms: Vec::new(),
            shapes: Vec::new(),
            index: HashMap::new(),
        };
        u.insert(&Message::Empty, atoms);
        for atom in atoms.iter() {
            u.insert(&Message::atom(&atom.name), atoms);
        }
        for m in messages {
            u.insert(m, atoms);
        }
        u
    }

    fn insert(&mut self, m: &Message, atoms: &AtomTable) -> TermId {
        if let Some(&id) = self.index.get(m) {
            return id;
        }
        let shape = match m {
            Message::Empty => Shape::Empty,
            Message::Atomic(_) => Shape::Atom,
            Message::Concat(l, r) => {
                let left = self.insert(l, atoms);
                let right = self.insert(r, atoms);
                Shape::Concat { left, right }
            }
            Message::Encrypt { body, key } => {
                let body_id = self.insert(body, atoms);
                let key_id = self.insert(key, atoms);
                let inverse = inverse(key, atoms).ok().map(|inv| self.insert(&inv, atoms));
                let role = key
                    .as_atom()
                    .and_then(|k| atoms.key_info(k))
                    .map(|info| info.role);
                Shape::Encrypt {
                    body: body_id,
                    key: key_id,
                    inverse,
                    role,
                }
            }
        };
        let id = TermId(self.terms.len());
        self.terms.push(m.clone());
        self.shapes.push(shape);
        self.index.insert(m.clone(), id);
        id
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, m: &Message) -> Option<TermId> {
        self.index.get(m).copied()
    }

    pub fn term(&self, id: TermId) -> &Message {
        &self.terms[id.0]
    }

    pub fn shape(&self, id: TermId) -> Shape {
        self.shapes[id.0]
    }

    pub fn empty(&self) -> TermId {
        TermId(0)
    }

    pub fn contains(&self, m: &Message) -> bool {
        self.index.contains_key(m)
    }

    pub fn ids(&self) -> impl Iterator<Item = TermId> {
        (0..self.terms.len()).map(TermId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, &Message)> {
        self.terms.iter().enumerate().map(|(i, m)| (TermId(i), m))
    }

    /// True when every compound term's components are members too.
    pub fn is_subterm_closed(&self) -> bool {
        self.terms
            .iter()
            .all(|m| m.children().into_iter().all(|c| self.contains(c)))
    }
}
