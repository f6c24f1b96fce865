use std::fmt;

use thiserror::Error;

use super::{function_by_name, BinOp, Expr, Scope};

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Lexical(char),
    BadNumber(String),
    UnbalancedParens,
    UnexpectedToken(String),
    UnexpectedEnd,
    UnknownFunction(String),
    UnknownIdentifier(String),
    NonConstantExponent,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Lexical(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::BadNumber(s) => write!(f, "malformed number {s:?}"),
            ParseErrorKind::UnbalancedParens => write!(f, "unbalanced parentheses"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected token {t:?}"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input"),
            ParseErrorKind::UnknownFunction(n) => write!(f, "unknown function {n:?}"),
            ParseErrorKind::UnknownIdentifier(n) => write!(f, "unknown identifier {n:?}"),
            ParseErrorKind::NonConstantExponent => write!(f, "exponent must be a constant"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError {
                kind: ParseErrorKind::BadNumber(text.to_string()),
                offset: start,
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if "+-*/^".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else if c == '(' {
            out.push((Tok::LParen, i));
            i += 1;
        } else if c == ')' {
            out.push((Tok::RParen, i));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or(c);
            return Err(ParseError {
                kind: ParseErrorKind::Lexical(ch),
                offset: i,
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    scope: &'a Scope,
    depth: usize,
}

const NEG_BP: u8 = 3;
const POW_BP: u8 = 4;

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn err<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError {
            kind,
            offset: self.offset(),
        })
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op(c)) => *c,
                Some(Tok::RParen) => {
                    if self.depth == 0 {
                        return self.err(ParseErrorKind::UnbalancedParens);
                    }
                    break;
                }
                Some(t) => {
                    let t = format!("{t:?}");
                    return self.err(ParseErrorKind::UnexpectedToken(t));
                }
                None => break,
            };
            if op == '^' {
                if POW_BP < min_bp {
                    break;
                }
                let at = self.offset();
                self.bump();
                // right associative: the exponent may itself contain ^
                let rhs = self.expr(POW_BP)?;
                if !rhs.is_constant() {
                    return Err(ParseError {
                        kind: ParseErrorKind::NonConstantExponent,
                        offset: at + 1,
                    });
                }
                let r = rhs.eval(&[0.0; 4], &[]);
                lhs = Expr::Pow(Box::new(lhs), r);
                continue;
            }
            let bin = match op {
                '+' => BinOp::Add,
                '-' => BinOp::Sub,
                '*' => BinOp::Mul,
                '/' => BinOp::Div,
                _ => unreachable!(),
            };
            let bp = bin.precedence();
            if bp < min_bp {
                break;
            }
            self.bump();
            let rhs = self.expr(bp + 1)?;
            lhs = Expr::bin(bin, lhs, rhs);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let Some((tok, at)) = self.bump() else {
            self.pos -= 1;
            return self.err(ParseErrorKind::UnexpectedEnd);
        };
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('-') => Ok(Expr::Neg(Box::new(self.expr(NEG_BP)?))),
            Tok::Op('+') => self.expr(NEG_BP),
            Tok::LParen => {
                self.depth += 1;
                let inner = self.expr(0)?;
                self.depth -= 1;
                match self.bump() {
                    Some((Tok::RParen, _)) => Ok(inner),
                    _ => Err(ParseError {
                        kind: ParseErrorKind::UnbalancedParens,
                        offset: at,
                    }),
                }
            }
            Tok::Ident(name) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    let Some(f) = function_by_name(&name) else {
                        return Err(ParseError {
                            kind: ParseErrorKind::UnknownFunction(name),
                            offset: at,
                        });
                    };
                    let arg = self.prefix()?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                if let Some(i) = self.scope.coord_index(&name) {
                    Ok(Expr::Var(i))
                } else if let Some(i) = self.scope.param_index(&name) {
                    Ok(Expr::Param(i))
                } else {
                    Err(ParseError {
                        kind: ParseErrorKind::UnknownIdentifier(name),
                        offset: at,
                    })
                }
            }
            Tok::RParen => Err(ParseError {
                kind: ParseErrorKind::UnbalancedParens,
                offset: at,
            }),
            Tok::Op(c) => Err(ParseError {
                kind: ParseErrorKind::UnexpectedToken(c.to_string()),
                offset: at,
            }),
        }
    }
}

/// Parses `src` with identifiers resolved against `scope`.
pub fn parse(src: &str, scope: &Scope) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
        scope,
        depth: 0,
    };
    let e = p.expr(0)?;
    if p.pos < p.toks.len() {
        return p.err(ParseErrorKind::UnbalancedParens);
    }
    Ok(e)
}
