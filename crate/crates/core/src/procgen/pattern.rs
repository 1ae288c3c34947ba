//! Asset-pattern expressions.
//!
//! ```text
//! expr := term+
//! term := atom ('*' | '+' | '?')?
//! atom := SET | '(' expr ('|' expr)* ')'
//! SET  := 'A'..'Z' | '<' name '>'
//! ```
//!
//! A parenthesized group with a single branch is plain grouping.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ProcgenError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetPattern {
    Set(String),
    Star(Box<AssetPattern>),
    Plus(Box<AssetPattern>),
    Optional(Box<AssetPattern>),
    Alternation(Vec<AssetPattern>),
    Concatenation(Vec<AssetPattern>),
}

impl AssetPattern {
    pub fn set(name: &str) -> Self {
        AssetPattern::Set(name.to_string())
    }

    /// Every set name referenced by the pattern.
    pub fn set_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_sets(&mut out);
        out
    }

    fn collect_sets(&self, out: &mut BTreeSet<String>) {
        match self {
            AssetPattern::Set(n) => {
                out.insert(n.clone());
            }
            AssetPattern::Star(p) | AssetPattern::Plus(p) | AssetPattern::Optional(p) => {
                p.collect_sets(out)
            }
            AssetPattern::Alternation(ps) | AssetPattern::Concatenation(ps) => {
                ps.iter().for_each(|p| p.collect_sets(out))
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            AssetPattern::Set(_) => 1,
            AssetPattern::Star(p) | AssetPattern::Plus(p) | AssetPattern::Optional(p) => {
                1 + p.depth()
            }
            AssetPattern::Alternation(ps) | AssetPattern::Concatenation(ps) => {
                1 + ps.iter().map(|p| p.depth()).max().unwrap_or(0)
            }
        }
    }
}

impl fmt::Display for AssetPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(p: &AssetPattern, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match p {
                AssetPattern::Set(_) | AssetPattern::Alternation(_) => write!(f, "{p}"),
                _ => write!(f, "({p})"),
            }
        }
        match self {
            AssetPattern::Set(n) if n.len() == 1 && n.chars().all(|c| c.is_ascii_uppercase()) => {
                f.write_str(n)
            }
            AssetPattern::Set(n) => write!(f, "<{n}>"),
            AssetPattern::Star(p) => {
                wrap(p, f)?;
                f.write_str("*")
            }
            AssetPattern::Plus(p) => {
                wrap(p, f)?;
                f.write_str("+")
            }
            AssetPattern::Optional(p) => {
                wrap(p, f)?;
                f.write_str("?")
            }
            AssetPattern::Alternation(ps) => {
                f.write_str("(")?;
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
            AssetPattern::Concatenation(ps) => {
                for p in ps {
                    match p {
                        AssetPattern::Concatenation(_) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, offset: usize, message: impl Into<String>) -> ProcgenError {
        ProcgenError::Parse {
            offset,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<AssetPattern, ProcgenError> {
        let mut terms = Vec::new();
        loop {
            match self.peek() {
                None | Some(b'|') | Some(b')') => break,
                _ => terms.push(self.term()?),
            }
        }
        match terms.len() {
            0 => Err(self.err(self.pos, "expected a set name or '('")),
            1 => Ok(terms.pop().expect("one term")),
            _ => Ok(AssetPattern::Concatenation(terms)),
        }
    }

    fn term(&mut self) -> Result<AssetPattern, ProcgenError> {
        let atom = self.atom()?;
        Ok(match self.peek() {
            Some(b'*') => {
                self.pos += 1;
                AssetPattern::Star(Box::new(atom))
            }
            Some(b'+') => {
                self.pos += 1;
                AssetPattern::Plus(Box::new(atom))
            }
            Some(b'?') => {
                self.pos += 1;
                AssetPattern::Optional(Box::new(atom))
            }
            _ => atom,
        })
    }

    fn atom(&mut self) -> Result<AssetPattern, ProcgenError> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_uppercase() => {
                self.pos += 1;
                Ok(AssetPattern::Set((c as char).to_string()))
            }
            Some(b'<') => {
                let open = self.pos;
                let rest = &self.src[open + 1..];
                let Some(len) = rest.iter().position(|&b| b == b'>') else {
                    return Err(self.err(open, "unterminated set name"));
                };
                let name = std::str::from_utf8(&rest[..len])
                    .map_err(|_| self.err(open, "set name is not UTF-8"))?;
                if name.is_empty()
                    || !name
                        .chars()
                        .all(|c| c.is_alphanumeric() || c == '_' || c == '-')
                {
                    return Err(self.err(open, format!("invalid set name `{name}`")));
                }
                self.pos = open + len + 2;
                Ok(AssetPattern::Set(name.to_string()))
            }
            Some(b'(') => {
                let open = self.pos;
                self.pos += 1;
                if self.peek().is_none() {
                    return Err(self.err(open, "unbalanced '('"));
                }
                let mut branches = vec![self.expr()?];
                loop {
                    match self.peek() {
                        Some(b'|') => {
                            self.pos += 1;
                            branches.push(self.expr()?);
                        }
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        None => return Err(self.err(open, "unbalanced '('")),
                        Some(c) => {
                            return Err(self.err(self.pos, format!("unexpected '{}'", c as char)))
                        }
                    }
                }
                Ok(if branches.len() == 1 {
                    branches.pop().expect("one branch")
                } else {
                    AssetPattern::Alternation(branches)
                })
            }
            Some(c) => Err(self.err(self.pos, format!("unexpected '{}'", c as char))),
            None => Err(self.err(start, "unexpected end of pattern")),
        }
    }
}

pub fn parse_pattern(text: &str) -> Result<AssetPattern, ProcgenError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    if p.peek().is_none() {
        return Err(ProcgenError::Parse {
            offset: 0,
            message: "empty pattern".into(),
        });
    }
    let expr = p.expr()?;
    match p.peek() {
        None => Ok(expr),
        Some(b')') => Err(p.err(p.pos, "unbalanced ')'")),
        Some(c) => Err(p.err(p.pos, format!("unexpected '{}'", c as char))),
    }
}
