//! Recursive-descent parser for the text form of co-safe formulas.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! until   := or ('U' until)?
//! or      := and ('|' and)*
//! and     := unary ('&' unary)*
//! unary   := '!' ident | 'X' unary | 'F' unary | primary
//! primary := 'true' | 'false' | ident | '(' until ')'
//! ```
//!
//! Negation applies to atoms only.

use super::formula::{is_token, Formula, Observation, KEYWORDS};
use super::ScltlError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    pos: usize,
}

fn lex(input: &str) -> Result<Vec<Spanned>, ScltlError> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '!' => Some(Tok::Not),
            '&' => Some(Tok::And),
            '|' => Some(Tok::Or),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, pos: i });
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Spanned {
                tok: Tok::Ident(input[start..i].to_string()),
                pos: start,
            });
            continue;
        }
        return Err(ScltlError::Parse {
            message: format!("unexpected character '{c}'"),
            position: i,
        });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    idx: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|s| &s.tok)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.idx).map_or(self.end, |s| s.pos)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ScltlError> {
        Err(ScltlError::Parse {
            message: message.into(),
            position: self.pos(),
        })
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn until(&mut self) -> Result<Formula, ScltlError> {
        let lhs = self.or()?;
        if self.is_keyword("U") {
            self.idx += 1;
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ScltlError> {
        let mut items = vec![self.and()?];
        while self.peek() == Some(&Tok::Or) {
            self.idx += 1;
            items.push(self.and()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Formula::or(items)
        })
    }

    fn and(&mut self) -> Result<Formula, ScltlError> {
        let mut items = vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.idx += 1;
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Formula::and(items)
        })
    }

    fn unary(&mut self) -> Result<Formula, ScltlError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.idx += 1;
                match self.peek() {
                    Some(Tok::Ident(name)) if is_token(name) => {
                        let o = Observation::new(name)?;
                        self.idx += 1;
                        Ok(Formula::not_atom(o))
                    }
                    _ => self.err("negation is only allowed directly on an atom"),
                }
            }
            Some(Tok::Ident(s)) if s == "X" => {
                self.idx += 1;
                Ok(Formula::next(self.unary()?))
            }
            Some(Tok::Ident(s)) if s == "F" => {
                self.idx += 1;
                Ok(Formula::eventually(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ScltlError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.idx += 1;
                let f = self.until()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected ')'");
                }
                self.idx += 1;
                Ok(f)
            }
            Some(Tok::Ident(s)) if s == "true" => {
                self.idx += 1;
                Ok(Formula::True)
            }
            Some(Tok::Ident(s)) if s == "false" => {
                self.idx += 1;
                Ok(Formula::False)
            }
            Some(Tok::Ident(s)) if KEYWORDS.contains(&s.as_str()) => {
                self.err(format!("unexpected keyword '{s}'"))
            }
            Some(Tok::Ident(s)) => {
                self.idx += 1;
                Ok(Formula::atom(Observation::new(&s)?))
            }
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parse a formula from text.
pub fn parse(input: &str) -> Result<Formula, ScltlError> {
    let toks = lex(input)?;
    let mut p = Parser {
        toks,
        idx: 0,
        end: input.len(),
    };
    let f = p.until()?;
    if p.idx != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}
