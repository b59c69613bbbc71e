//! Model formula parser.
//!
//! ```text
//! formula := term ('+' term)*
//! term    := ident ('(' args ')')?
//! args    := arg (',' arg)*
//! arg     := number | ident | quoted | ident '=' (ident | number)
//! ```
//!
//! Geometrically weighted terms accept a trailing `fixed = TRUE`, the only
//! supported mode.

use std::fmt;

use thiserror::Error;

use crate::terms::{ModelSpec, ModelTerm};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("formula error at column {}: {message}", .position + 1)]
pub struct FormulaError {
    /// Byte offset into the formula text.
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Number(f64, String),
    Quoted(String),
    Plus,
    LParen,
    RParen,
    Comma,
    Equals,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::Number(_, s) => write!(f, "`{s}`"),
            Token::Quoted(s) => write!(f, "\"{s}\""),
            Token::Plus => f.write_str("`+`"),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
            Token::Comma => f.write_str("`,`"),
            Token::Equals => f.write_str("`=`"),
        }
    }
}

fn err<T>(position: usize, message: impl Into<String>) -> Result<T, FormulaError> {
    Err(FormulaError {
        position,
        message: message.into(),
    })
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, FormulaError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos];
        let start = pos;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                pos += 1;
                continue;
            }
            b'+' => out.push((start, Token::Plus)),
            b'(' => out.push((start, Token::LParen)),
            b')' => out.push((start, Token::RParen)),
            b',' => out.push((start, Token::Comma)),
            b'=' => out.push((start, Token::Equals)),
            b'\'' | b'"' => {
                let end =
                    text[pos + 1..]
                        .find(c as char)
                        .map(|k| pos + 1 + k)
                        .ok_or(FormulaError {
                            position: start,
                            message: "unterminated quoted name".into(),
                        })?;
                out.push((start, Token::Quoted(text[pos + 1..end].to_string())));
                pos = end + 1;
                continue;
            }
            c if c.is_ascii_digit() || c == b'.' || c == b'-' => {
                pos += 1;
                while pos < bytes.len()
                    && (bytes[pos].is_ascii_alphanumeric()
                        || bytes[pos] == b'.'
                        || ((bytes[pos] == b'-' || bytes[pos] == b'+')
                            && matches!(bytes[pos - 1], b'e' | b'E')))
                {
                    pos += 1;
                }
                let literal = &text[start..pos];
                let value: f64 = literal
                    .parse()
                    .or_else(|_| err(start, format!("malformed number `{literal}`")))?;
                out.push((start, Token::Number(value, literal.to_string())));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                pos += 1;
                while pos < bytes.len()
                    && (bytes[pos].is_ascii_alphanumeric()
                        || bytes[pos] == b'_'
                        || bytes[pos] == b'.')
                {
                    pos += 1;
                }
                out.push((start, Token::Ident(text[start..pos].to_string())));
                continue;
            }
            _ => {
                let ch = text[pos..].chars().next().unwrap_or('?');
                return err(start, format!("unexpected character `{ch}`"));
            }
        }
        pos += 1;
    }
    Ok(out)
}

#[derive(Debug)]
enum Arg {
    Positional(usize, Token),
    Named(usize, String, Token),
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    cursor: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.tokens.get(self.cursor).map_or(self.end, |(p, _)| *p)
    }

    fn next(&mut self) -> Option<(usize, Token)> {
        let tok = self.tokens.get(self.cursor).cloned();
        self.cursor += 1;
        tok
    }

    fn expect(&mut self, want: Token) -> Result<(), FormulaError> {
        let pos = self.position();
        match self.next() {
            Some((_, t)) if t == want => Ok(()),
            Some((_, t)) => err(pos, format!("expected {want}, found {t}")),
            None => err(pos, format!("expected {want}, found end of formula")),
        }
    }

    fn formula(&mut self) -> Result<Vec<(usize, ModelTerm)>, FormulaError> {
        if self.tokens.is_empty() {
            return err(0, "empty formula");
        }
        let mut terms = vec![self.term()?];
        while self.peek().is_some() {
            self.expect(Token::Plus)?;
            terms.push(self.term()?);
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<(usize, ModelTerm), FormulaError> {
        let pos = self.position();
        let name = match self.next() {
            Some((_, Token::Ident(name))) => name,
            Some((_, t)) => return err(pos, format!("expected a term name, found {t}")),
            None => return err(pos, "expected a term name, found end of formula"),
        };
        let args = if self.peek() == Some(&Token::LParen) {
            self.next();
            self.args()?
        } else {
            Vec::new()
        };
        Ok((pos, build_term(pos, &name, args)?))
    }

    fn args(&mut self) -> Result<Vec<Arg>, FormulaError> {
        let mut args = Vec::new();
        if self.peek() == Some(&Token::RParen) {
            self.next();
            return Ok(args);
        }
        loop {
            let pos = self.position();
            let first = self
                .next()
                .ok_or(FormulaError {
                    position: pos,
                    message: "unclosed argument list".into(),
                })?
                .1;
            if self.peek() == Some(&Token::Equals) {
                let Token::Ident(key) = first else {
                    return err(pos, format!("expected an argument name, found {first}"));
                };
                self.next();
                let vpos = self.position();
                let value = match self.next() {
                    Some((_, t @ (Token::Ident(_) | Token::Number(..) | Token::Quoted(_)))) => t,
                    Some((_, t)) => return err(vpos, format!("expected a value, found {t}")),
                    None => return err(vpos, "expected a value, found end of formula"),
                };
                args.push(Arg::Named(pos, key, value));
            } else {
                match first {
                    Token::Ident(_) | Token::Number(..) | Token::Quoted(_) => {
                        args.push(Arg::Positional(pos, first))
                    }
                    t => return err(pos, format!("expected an argument, found {t}")),
                }
            }
            let pos = self.position();
            match self.next() {
                Some((_, Token::Comma)) => continue,
                Some((_, Token::RParen)) => return Ok(args),
                Some((_, t)) => return err(pos, format!("expected `,` or `)`, found {t}")),
                None => return err(pos, "unclosed argument list"),
            }
        }
    }
}

fn build_term(pos: usize, name: &str, args: Vec<Arg>) -> Result<ModelTerm, FormulaError> {
    let mut positional = Vec::new();
    for arg in args {
        match arg {
            Arg::Positional(p, t) => positional.push((p, t)),
            Arg::Named(p, key, value) if key == "fixed" && matches!(name, "gwdegree" | "gwesp") => {
                match value {
                    Token::Ident(v) if v == "TRUE" || v == "T" || v == "true" => {}
                    _ => {
                        return err(
                            p,
                            "only `fixed = TRUE` is supported; decays are not estimated",
                        )
                    }
                }
            }
            Arg::Named(p, key, _) => {
                return err(p, format!("unknown argument `{key}` for `{name}`"))
            }
        }
    }
    let arity = |want: usize| -> Result<(), FormulaError> {
        if positional.len() != want {
            return err(
                pos,
                format!(
                    "`{name}` takes {want} argument(s), got {}",
                    positional.len()
                ),
            );
        }
        Ok(())
    };
    let number = |k: usize| -> Result<f64, FormulaError> {
        match &positional[k] {
            (_, Token::Number(v, _)) => Ok(*v),
            (p, t) => err(*p, format!("expected a number, found {t}")),
        }
    };
    let term = match name {
        "edges" => {
            arity(0)?;
            ModelTerm::Edges
        }
        "triangle" | "triangles" => {
            arity(0)?;
            ModelTerm::Triangle
        }
        "nodematch" => {
            arity(1)?;
            match &positional[0] {
                (_, Token::Ident(a) | Token::Quoted(a)) if !a.is_empty() => {
                    ModelTerm::NodeMatch(a.clone())
                }
                (p, t) => return err(*p, format!("expected an attribute name, found {t}")),
            }
        }
        "gwdegree" | "gwesp" => {
            arity(1)?;
            let decay = number(0)?;
            if !(decay.is_finite() && decay >= 0.0) {
                return err(positional[0].0, "decay must be a nonnegative number");
            }
            if name == "gwdegree" {
                ModelTerm::GwDegree(decay)
            } else {
                ModelTerm::GwEsp(decay)
            }
        }
        "kstar" => {
            arity(1)?;
            let k = number(0)?;
            if k.fract() != 0.0 || k < 2.0 {
                return err(positional[0].0, "kstar needs an integer k >= 2");
            }
            ModelTerm::KStar(k as usize)
        }
        other => return err(pos, format!("unknown term `{other}`")),
    };
    Ok(term)
}

/// Parses `edges + nodematch(Grade) + gwesp(0.2, fixed = TRUE)` style text.
pub fn parse_formula(text: &str) -> Result<ModelSpec, FormulaError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        cursor: 0,
        end: text.len(),
    };
    let terms = parser.formula()?;
    for (k, (pos, t)) in terms.iter().enumerate() {
        if terms[..k].iter().any(|(_, u)| u == t) {
            return err(*pos, format!("duplicate term `{t}`"));
        }
    }
    ModelSpec::new(terms.into_iter().map(|(_, t)| t).collect()).map_err(|e| FormulaError {
        position: 0,
        message: e.to_string(),
    })
}
