//! Recursive-descent parser for the ASCII expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' INTEGER)?
//! primary := NUMBER | 't' | 'x' INTEGER | FUNC '(' expr ')' | '(' expr ')'
//! ```
//! Literal arithmetic on numbers (`1/2`, `-3`) is folded into constants.

use num_traits::{One, Zero};

use super::{Expr, ParseError, Var};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(Rational),
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

fn describe(token: &Token) -> String {
    match token {
        Token::Number(r) => format!("number `{}`", rational::to_string(r)),
        Token::Ident(s) => format!("identifier `{s}`"),
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

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let token = match c {
            '+' => Token::Plus,
            '-' => Token::Minus,
            '*' => Token::Star,
            '/' => Token::Slash,
            '^' => Token::Caret,
            '(' => Token::LParen,
            ')' => Token::RParen,
            c if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                let literal = &text[start..i];
                let value = rational::parse_decimal(literal).ok_or_else(|| ParseError::Syntax {
                    position: start,
                    message: format!("malformed number `{literal}`"),
                })?;
                tokens.push((Token::Number(value), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push((Token::Ident(text[start..i].to_string()), start));
                continue;
            }
            other => {
                return Err(ParseError::Syntax { position: start, message: format!("unexpected character `{other}`") })
            }
        };
        tokens.push((token, start));
        i += 1;
    }
    tokens.push((Token::End, text.len()));
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    dimension: usize,
}

/// Parses `text` as an expression in `t, x1..x{dimension}`.
pub fn parse_expr(text: &str, dimension: usize) -> Result<Expr, ParseError> {
    let mut parser = Parser { tokens: tokenize(text)?, pos: 0, dimension };
    let expr = parser.expr()?;
    match parser.peek() {
        Token::End => Ok(expr),
        other => Err(parser.syntax(format!("unexpected {}; implicit multiplication is not allowed", describe(other)))),
    }
}

pub(crate) fn negate(e: Expr) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        Expr::Product(mut items) if matches!(items.first(), Some(Expr::Const(_))) && items.len() > 1 => {
            if let Expr::Const(c) = &items[0] {
                items[0] = Expr::Const(-c.clone());
            }
            Expr::Product(items)
        }
        other => Expr::Neg(Box::new(other)),
    }
}

fn divide(numerator: Expr, denominator: Expr) -> Expr {
    match (&numerator, &denominator) {
        (Expr::Const(a), Expr::Const(b)) if !b.is_zero() => Expr::Const(a / b),
        _ => Expr::Quotient(Box::new(numerator), Box::new(denominator)),
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn position(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn advance(&mut self) -> Token {
        let token = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        token
    }

    fn syntax(&self, message: String) -> ParseError {
        ParseError::Syntax { position: self.position(), message }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Token::Plus => {
                    self.advance();
                    terms.push(self.term()?);
                }
                Token::Minus => {
                    self.advance();
                    let rhs = self.term()?;
                    terms.push(negate(rhs));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::Sum(terms) })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.unary()?];
        loop {
            match self.peek() {
                Token::Star => {
                    self.advance();
                    factors.push(self.unary()?);
                }
                Token::Slash => {
                    self.advance();
                    let rhs = self.unary()?;
                    let numerator = collapse_product(std::mem::take(&mut factors));
                    factors.push(divide(numerator, rhs));
                }
                _ => break,
            }
        }
        Ok(collapse_product(factors))
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Token::Minus {
            self.advance();
            let operand = self.unary()?;
            return Ok(match operand {
                Expr::Const(c) => Expr::Const(-c),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Token::Caret {
            return Ok(base);
        }
        self.advance();
        let position = self.position();
        match self.advance() {
            Token::Number(k) if k.is_integer() && k >= Rational::zero() => {
                let exponent = u32::try_from(k.to_integer()).map_err(|_| ParseError::Syntax {
                    position,
                    message: "exponent too large".into(),
                })?;
                Ok(Expr::Pow(Box::new(base), exponent))
            }
            other => Err(ParseError::Syntax {
                position,
                message: format!("expected a non-negative integer exponent, found {}", describe(&other)),
            }),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let position = self.position();
        match self.advance() {
            Token::Number(value) => Ok(Expr::Const(value)),
            Token::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Token::Ident(name) => self.identifier(name, position),
            other => Err(ParseError::Syntax { position, message: format!("unexpected {}", describe(&other)) }),
        }
    }

    fn identifier(&mut self, name: String, position: usize) -> Result<Expr, ParseError> {
        match name.as_str() {
            "t" => return Ok(Expr::Var(Var::T)),
            "sin" | "cos" | "exp" => {
                if *self.peek() != Token::LParen {
                    return Err(self.syntax(format!("expected `(` after `{name}`")));
                }
                self.advance();
                let arg = Box::new(self.expr()?);
                self.expect_rparen()?;
                return Ok(match name.as_str() {
                    "sin" => Expr::Sin(arg),
                    "cos" => Expr::Cos(arg),
                    _ => Expr::Exp(arg),
                });
            }
            _ => {}
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = digits.parse().map_err(|_| ParseError::UnknownIdentifier {
                    position,
                    name: name.clone(),
                })?;
                if index == 0 || index > self.dimension {
                    return Err(ParseError::VariableOutOfRange { position, index, dimension: self.dimension });
                }
                return Ok(Expr::Var(Var::X(index)));
            }
        }
        Err(ParseError::UnknownIdentifier { position, name })
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Token::RParen => {
                self.advance();
                Ok(())
            }
            other => Err(self.syntax(format!("expected `)`, found {}", describe(other)))),
        }
    }
}

fn collapse_product(mut factors: Vec<Expr>) -> Expr {
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else if factors.is_empty() {
        Expr::Const(Rational::one())
    } else {
        Expr::Product(factors)
    }
}
