//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative, constant exponent
//! primary := number | x<i> | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | log
//! ```

use thiserror::Error;

use super::expr::{Expr, Node};

/// Positions are zero-based byte offsets into the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("variable x{index} at position {pos} exceeds arity {arity}")]
    VariableOutOfRange {
        pos: usize,
        index: usize,
        arity: usize,
    },
    #[error("exponent at position {pos} {message}")]
    BadExponent { pos: usize, message: String },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownIdentifier { pos, .. }
            | ParseError::VariableOutOfRange { pos, .. }
            | ParseError::BadExponent { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn describe(t: &Token) -> String {
    match t {
        Token::Number(v) => format!("number {v}"),
        Token::Ident(s) => format!("`{s}`"),
        Token::Plus => "`+`".into(),
        Token::Minus => "`-`".into(),
        Token::Star => "`*`".into(),
        Token::Slash => "`/`".into(),
        Token::Caret => "`^`".into(),
        Token::LParen => "`(`".into(),
        Token::RParen => "`)`".into(),
        Token::End => "end of input".into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'^' => Token::Caret,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let lit = &text[start..i];
                let value = lit.parse::<f64>().map_err(|_| ParseError::Syntax {
                    pos: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                out.push((start, Token::Number(value)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Token::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    pos: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        i += 1;
        out.push((start, tok));
    }
    out.push((text.len(), Token::End));
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    at: usize,
    arity: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at].1
    }

    fn pos(&self) -> usize {
        self.tokens[self.at].0
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].1.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Token) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::Syntax {
                pos: self.pos(),
                message: format!(
                    "expected {}, found {}",
                    describe(&want),
                    describe(self.peek())
                ),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Token::Plus => {
                    self.bump();
                    lhs = lhs + self.term()?;
                }
                Token::Minus => {
                    self.bump();
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Token::Star => {
                    self.bump();
                    lhs = lhs * self.unary()?;
                }
                Token::Slash => {
                    self.bump();
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Token::Minus {
            self.bump();
            // No negation node: -a is 0 - a.
            return Ok(Expr::constant(0.0) - self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Token::Caret {
            return Ok(base);
        }
        self.bump();
        let pos = self.pos();
        let exponent = self.unary()?;
        let value = exponent
            .constant_value()
            .map_err(|_| ParseError::BadExponent {
                pos,
                message: "must be a constant".into(),
            })?;
        if value < 0.0 {
            return Err(ParseError::BadExponent {
                pos,
                message: format!("{value} is negative"),
            });
        }
        if value.fract() != 0.0 || value > f64::from(u32::MAX) {
            return Err(ParseError::BadExponent {
                pos,
                message: format!("{value} is not an integer"),
            });
        }
        Ok(base.pow(value as u32))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Token::Number(v) => Ok(Expr::constant(v)),
            Token::LParen => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Token::Ident(name) => self.identifier(pos, name),
            other => Err(ParseError::Syntax {
                pos,
                message: format!("expected operand, found {}", describe(&other)),
            }),
        }
    }

    fn identifier(&mut self, pos: usize, name: String) -> Result<Expr, ParseError> {
        let func: Option<fn(Expr) -> Node> = match name.as_str() {
            "sin" => Some(Node::Sin),
            "cos" => Some(Node::Cos),
            "exp" => Some(Node::Exp),
            "log" => Some(Node::Log),
            _ => None,
        };
        if let Some(func) = func {
            self.expect(Token::LParen)?;
            let arg = self.expr()?;
            self.expect(Token::RParen)?;
            return Ok(Expr::new(func(arg)));
        }
        let index = name
            .strip_prefix('x')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|d| d.parse::<usize>().ok());
        match index {
            Some(index) if (1..=self.arity).contains(&index) => Ok(Expr::var(index)),
            Some(index) => Err(ParseError::VariableOutOfRange {
                pos,
                index,
                arity: self.arity,
            }),
            None => Err(ParseError::UnknownIdentifier { pos, name }),
        }
    }
}

/// Parses `text` over variables `x1..x{arity}`.
pub fn parse(text: &str, arity: usize) -> Result<Expr, ParseError> {
    let mut p = Parser {
        tokens: tokenize(text)?,
        at: 0,
        arity,
    };
    let e = p.expr()?;
    if *p.peek() != Token::End {
        return Err(ParseError::Syntax {
            pos: p.pos(),
            message: format!("unexpected {}", describe(p.peek())),
        });
    }
    Ok(e)
}
