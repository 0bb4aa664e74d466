//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | base ("^" factor)?
//! base   := number | var | func "(" expr ")" | "(" expr ")"
//! var    := "x" digits | "x_" digits
//! func   := "ln" | "exp" | "sqrt" | "sin" | "cos"
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use super::{Expr, Func, Node};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unknown variable x{index} at position {position} (dimension is {dim})")]
    UnknownVariable { index: usize, dim: usize, position: usize },
    #[error("unknown function '{name}' at position {position}")]
    UnknownFunction { name: String, position: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(BigRational),
    Var(usize),
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

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Lexer<'a> {
    fn syntax(&self, position: usize, expected: &str) -> ParseError {
        ParseError::Syntax { position, expected: expected.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn digits(&mut self) -> &'a [u8] {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn next(&mut self) -> Result<(Token, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Token::End, start));
        };
        let single = match c {
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Star),
            b'/' => Some(Token::Slash),
            b'^' => Some(Token::Caret),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start).map(|n| (Token::Number(n), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            if let Some(rest) = word.strip_prefix('x') {
                let digits = rest.strip_prefix('_').unwrap_or(rest);
                if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                    let index: usize = digits.parse().map_err(|_| ParseError::UnknownVariable {
                        index: usize::MAX,
                        dim: self.dim,
                        position: start,
                    })?;
                    if index == 0 || index > self.dim {
                        return Err(ParseError::UnknownVariable { index, dim: self.dim, position: start });
                    }
                    return Ok((Token::Var(index), start));
                }
            }
            return Ok((Token::Ident(word.to_string()), start));
        }
        Err(self.syntax(start, "number, variable, function, operator or parenthesis"))
    }

    fn number(&mut self, start: usize) -> Result<BigRational, ParseError> {
        let int_part = self.digits();
        let mut mantissa: Vec<u8> = int_part.to_vec();
        let mut frac_len = 0usize;
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            let frac = self.digits();
            frac_len = frac.len();
            mantissa.extend_from_slice(frac);
        }
        if mantissa.is_empty() {
            return Err(self.syntax(start, "digits in numeric literal"));
        }
        let mut exponent: i64 = 0;
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            let mut sign = 1i64;
            match self.src.get(self.pos) {
                Some(b'+') => self.pos += 1,
                Some(b'-') => {
                    sign = -1;
                    self.pos += 1
                }
                _ => {}
            }
            let exp_digits = self.digits();
            if exp_digits.is_empty() {
                // "2e" followed by something else is not a valid literal
                self.pos = save;
                return Err(self.syntax(save + 1, "exponent digits"));
            }
            let value: i64 = std::str::from_utf8(exp_digits)
                .unwrap()
                .parse()
                .map_err(|_| self.syntax(save, "exponent within range"))?;
            if value > 4000 {
                return Err(self.syntax(save, "exponent within range"));
            }
            exponent = sign * value;
        }
        let digits = std::str::from_utf8(&mantissa).unwrap();
        let numer: BigInt = digits.parse().unwrap_or_else(|_| BigInt::zero());
        let scale = exponent - frac_len as i64;
        let ten = BigInt::from(10);
        let value = if scale >= 0 {
            BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
        };
        Ok(value)
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: Token,
    current_pos: usize,
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(), ParseError> {
        let (tok, pos) = self.lexer.next()?;
        self.current = tok;
        self.current_pos = pos;
        Ok(())
    }

    fn expected(&self, what: &str) -> ParseError {
        ParseError::Syntax { position: self.current_pos, expected: what.to_string() }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.current {
                Token::Plus => {
                    self.advance()?;
                    terms.push(self.term()?);
                }
                Token::Minus => {
                    self.advance()?;
                    terms.push(-self.term()?);
                }
                _ => break,
            }
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        let mut run: Vec<Expr> = Vec::new();
        loop {
            match self.current {
                Token::Star => {
                    self.advance()?;
                    let rhs = self.factor()?;
                    if run.is_empty() {
                        run.push(acc.clone());
                    }
                    run.push(rhs);
                    acc = Expr::new(Node::Product(run.clone()));
                }
                Token::Slash => {
                    self.advance()?;
                    let rhs = self.factor()?;
                    run.clear();
                    acc = Expr::new(Node::Quotient(acc, rhs));
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.current == Token::Minus {
            self.advance()?;
            return Ok(-self.factor()?);
        }
        let base = self.base()?;
        if self.current == Token::Caret {
            self.advance()?;
            let exponent = self.factor()?;
            return Ok(base.pow(exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match std::mem::replace(&mut self.current, Token::End) {
            Token::Number(n) => {
                self.advance()?;
                Ok(Expr::constant(n))
            }
            Token::Var(i) => {
                self.advance()?;
                Ok(Expr::var(i))
            }
            Token::Ident(name) => {
                let position = self.current_pos;
                let func = Func::from_name(&name)
                    .ok_or(ParseError::UnknownFunction { name, position })?;
                self.advance()?;
                if self.current != Token::LParen {
                    return Err(self.expected("'(' after function name"));
                }
                self.advance()?;
                let arg = self.expr()?;
                if self.current != Token::RParen {
                    return Err(self.expected("')'"));
                }
                self.advance()?;
                Ok(Expr::apply(func, arg))
            }
            Token::LParen => {
                self.advance()?;
                let inner = self.expr()?;
                if self.current != Token::RParen {
                    return Err(self.expected("')'"));
                }
                self.advance()?;
                Ok(inner)
            }
            other => {
                self.current = other;
                Err(self.expected("number, variable, function call or '('"))
            }
        }
    }
}

/// Parse `source` as an expression in variables `x1..x{dim}`.
pub fn parse(source: &str, dim: usize) -> Result<Expr, ParseError> {
    if let Some(position) = source.bytes().position(|b| !b.is_ascii()) {
        return Err(ParseError::Syntax { position, expected: "ASCII input".into() });
    }
    let mut parser = Parser {
        lexer: Lexer { src: source.as_bytes(), pos: 0, dim },
        current: Token::End,
        current_pos: 0,
    };
    parser.advance()?;
    let e = parser.expr()?;
    if parser.current != Token::End {
        return Err(parser.expected("operator or end of input"));
    }
    Ok(e)
}
