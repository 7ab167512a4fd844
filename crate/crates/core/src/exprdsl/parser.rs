//! Recursive descent over
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | variable | func '(' expr ')' | '(' expr ')'
//! ```

use super::lexer::{tokenize, Spanned, Tok};
use super::{BinOp, ErrorKind, Expr, Func, ParseError, Var};

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err(ParseError::at(src, 0, ErrorKind::Empty));
    }
    let mut p = Parser { src, toks, pos: 0 };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        let kind = if t.tok == Tok::RParen {
            ErrorKind::UnbalancedParen
        } else {
            ErrorKind::Unexpected { found: t.tok.describe(), expected: "operator or end of input".into() }
        };
        return Err(ParseError::at(src, t.offset, kind));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().map(|t| &t.tok) == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn end_error(&self, expected: &str) -> ParseError {
        ParseError::at(self.src, self.src.len(), ErrorKind::UnexpectedEnd { expected: expected.into() })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(&Tok::Plus) {
                BinOp::Add
            } else if self.eat(&Tok::Minus) {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(&Tok::Star) {
                BinOp::Mul
            } else if self.eat(&Tok::Slash) {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(&Tok::Caret) {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(t) = self.next() else {
            return Err(self.end_error("number, variable, function or '('"));
        };
        match t.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.close(t.offset)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(var) = Var::from_name(&name) {
                    return Ok(Expr::Var(var));
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ParseError::at(self.src, t.offset, ErrorKind::UnknownIdentifier(name)));
                };
                match self.next() {
                    Some(Spanned { tok: Tok::LParen, offset }) => {
                        if self.peek().map(|s| &s.tok) == Some(&Tok::RParen) {
                            return Err(ParseError::at(self.src, t.offset, ErrorKind::Arity { func: name, got: 0 }));
                        }
                        let arg = self.expr()?;
                        if self.peek().map(|s| &s.tok) == Some(&Tok::Comma) {
                            let mut got = 1;
                            while self.eat(&Tok::Comma) {
                                self.expr()?;
                                got += 1;
                            }
                            return Err(ParseError::at(self.src, t.offset, ErrorKind::Arity { func: name, got }));
                        }
                        self.close(offset)?;
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                    Some(other) => Err(ParseError::at(
                        self.src,
                        other.offset,
                        ErrorKind::Unexpected { found: other.tok.describe(), expected: format!("'(' after {name}") },
                    )),
                    None => Err(self.end_error(&format!("'(' after {name}"))),
                }
            }
            Tok::RParen => Err(ParseError::at(self.src, t.offset, ErrorKind::UnbalancedParen)),
            other => Err(ParseError::at(
                self.src,
                t.offset,
                ErrorKind::Unexpected { found: other.describe(), expected: "number, variable, function or '('".into() },
            )),
        }
    }

    /// Consumes the `)` matching the `(` at `open`.
    fn close(&mut self, open: usize) -> Result<(), ParseError> {
        match self.peek() {
            Some(Spanned { tok: Tok::RParen, .. }) => {
                self.pos += 1;
                Ok(())
            }
            None => Err(ParseError::at(self.src, open, ErrorKind::UnbalancedParen)),
            Some(t) => Err(ParseError::at(
                self.src,
                t.offset,
                ErrorKind::Unexpected { found: t.tok.describe(), expected: "')'".into() },
            )),
        }
    }
}
