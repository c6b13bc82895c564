use super::{BinOp, Expr, Func, ParseError, Var};

const MAX_DEPTH: usize = 200;

/// Parses an expression. Errors carry the byte offset of the offending token.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
        depth: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax(p.pos, "unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn syntax(&self, offset: usize, message: &str) -> ParseError {
        ParseError::Syntax {
            offset,
            message: message.to_string(),
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.syntax(self.pos, "expression nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let e = if self.eat(b'-') {
            Expr::Neg(Box::new(self.unary()?))
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(e)
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let at = self.pos;
        let exponent = self.unary()?;
        if !exponent.is_constant() {
            return Err(self.syntax(at, "exponent must be a constant"));
        }
        let value = exponent
            .eval(0.0, 0.0)
            .map_err(|_| self.syntax(at, "exponent does not evaluate to a finite number"))?;
        Ok(Expr::Pow(Box::new(base), value))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let start = match self.peek() {
            Some(_) => self.pos,
            None => return Err(self.syntax(self.pos, "unexpected end of input")),
        };
        let c = self.src[start];
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            if !self.eat(b')') {
                return Err(self.syntax(self.pos, "expected `)`"));
            }
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < self.src.len()
                && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
            {
                end += 1;
            }
            self.pos = end;
            // identifier bytes are ASCII, so this slice is valid UTF-8
            let name = std::str::from_utf8(&self.src[start..end]).unwrap_or_default();
            return match name {
                "x" => Ok(Expr::Var(Var::X)),
                "y" => Ok(Expr::Var(Var::Y)),
                "pi" => Ok(Expr::Pi),
                _ => match Func::from_name(name) {
                    Some(f) => self.call(f, name, start),
                    None => Err(ParseError::UnknownIdentifier {
                        offset: start,
                        name: name.to_string(),
                    }),
                },
            };
        }
        Err(self.syntax(start, "expected a number, variable, function or `(`"))
    }

    fn call(&mut self, f: Func, name: &str, start: usize) -> Result<Expr, ParseError> {
        if !self.eat(b'(') {
            return Err(self.syntax(self.pos, "expected `(` after function name"));
        }
        if self.eat(b')') {
            return Err(ParseError::Arity {
                offset: start,
                name: name.to_string(),
                got: 0,
            });
        }
        let arg = self.expr()?;
        let mut extra = 0;
        while self.eat(b',') {
            self.expr()?;
            extra += 1;
        }
        if extra > 0 {
            return Err(ParseError::Arity {
                offset: start,
                name: name.to_string(),
                got: 1 + extra,
            });
        }
        if !self.eat(b')') {
            return Err(self.syntax(self.pos, "expected `)`"));
        }
        Ok(Expr::Call(f, Box::new(arg)))
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let s = self.src;
        let mut end = start;
        let digits = |mut i: usize| {
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
            i
        };
        end = digits(end);
        if end < s.len() && s[end] == b'.' {
            end = digits(end + 1);
        }
        if end < s.len() && (s[end] == b'e' || s[end] == b'E') {
            let mut i = end + 1;
            if i < s.len() && (s[i] == b'+' || s[i] == b'-') {
                i += 1;
            }
            let j = digits(i);
            if j == i {
                return Err(self.syntax(end, "malformed exponent in number"));
            }
            end = j;
        }
        let text = std::str::from_utf8(&s[start..end]).unwrap_or_default();
        let value: f64 = text
            .parse()
            .map_err(|_| self.syntax(start, "malformed number"))?;
        if !value.is_finite() {
            return Err(self.syntax(start, "number out of range"));
        }
        self.pos = end;
        Ok(Expr::Num(value))
    }
}
