//! Tokenizer shared by the message grammar and the scenario files.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    EncOpen,
    EncClose,
    LParen,
    RParen,
    Comma,
    Arrow,
    Colon,
    Star,
    Dash,
    Number(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::EncOpen => f.write_str("`{|`"),
            Tok::EncClose => f.write_str("`|}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Dash => f.write_str("`-`"),
            Tok::Number(s) => write!(f, "`{s}`"),
        }
    }
}

/// A token and its 1-based column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct LexError {
    pub col: usize,
    pub found: char,
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '+' | '\'')
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(is_ident_start) && chars.all(is_ident_char)
}

/// Splits one line into tokens. A `#` starts a comment.
pub(crate) fn tokenize(line: &str) -> Result<Vec<Spanned>, LexError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let next = chars.get(i + 1).copied();
        let (tok, width) = match c {
            '#' => break,
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '{' if next == Some('|') => (Tok::EncOpen, 2),
            '|' if next == Some('}') => (Tok::EncClose, 2),
            '-' if next == Some('>') => (Tok::Arrow, 2),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            ',' => (Tok::Comma, 1),
            ':' => (Tok::Colon, 1),
            '*' => (Tok::Star, 1),
            '-' => (Tok::Dash, 1),
            c if c.is_ascii_digit() => {
                let mut end = i + 1;
                while end < chars.len() && (chars[end].is_ascii_digit() || chars[end] == '.') {
                    end += 1;
                }
                (Tok::Number(chars[i..end].iter().collect()), end - i)
            }
            c if is_ident_start(c) => {
                let start = i;
                let mut end = i + 1;
                while end < chars.len() && is_ident_char(chars[end]) {
                    end += 1;
                }
                let word: String = chars[start..end].iter().collect();
                (Tok::Ident(word), end - start)
            }
            found => return Err(LexError { col, found }),
        };
        out.push(Spanned { tok, col });
        i += width;
    }
    Ok(out)
}
