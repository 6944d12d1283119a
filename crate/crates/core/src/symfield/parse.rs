use super::expr::Expr;
use crate::error::{Error, Result};

/// Parses `text` into an [`Expr`] whose variables index into `coords`.
///
/// Grammar:
///
/// ```text
/// expr   := term (('+' | '-') term)*
/// term   := unary (('*' | '/') unary)*
/// unary  := '-' unary | factor
/// factor := base ('^' integer)?
/// base   := number | symbol | '(' expr ')' | func '(' expr ')'
/// func   := 'sin' | 'cos' | 'exp'
/// ```
///
/// `pi` is accepted as a constant unless it names a coordinate. Exponents are
/// integers, optionally signed or parenthesized. `-x^2` is `-(x^2)`.
pub fn parse(text: &str, coords: &[String]) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        coords,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    coords: &'a [String],
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            column: self.pos + 1,
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

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            // Keep negative literals as constants so printed trees round-trip.
            return Ok(match inner {
                Expr::Const(c) => Expr::Const(-c),
                other => Expr::Neg(Box::new(other)),
            });
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.eat(b'^') {
            let n = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32> {
        if self.eat(b'(') {
            let n = self.exponent()?;
            self.expect(b')')?;
            return Ok(n);
        }
        let negative = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected integer exponent"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        let n: i32 = digits.parse().map_err(|_| Error::Syntax {
            column: start + 1,
            message: "exponent out of range".into(),
        })?;
        Ok(if negative { -n } else { n })
    }

    fn base(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.symbol(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if exp_start == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        text.parse::<f64>().map(Expr::Const).map_err(|_| Error::Syntax {
            column: start + 1,
            message: format!("malformed number `{text}`"),
        })
    }

    fn symbol(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        if let Some(i) = self.coords.iter().position(|c| c == name) {
            return Ok(Expr::Var(i));
        }
        let func: Option<fn(Expr) -> Expr> = match name {
            "sin" => Some(|a| Expr::Sin(Box::new(a))),
            "cos" => Some(|a| Expr::Cos(Box::new(a))),
            "exp" => Some(|a| Expr::Exp(Box::new(a))),
            _ => None,
        };
        if let Some(f) = func {
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(f(arg));
        }
        if name == "pi" {
            return Ok(Expr::Const(std::f64::consts::PI));
        }
        Err(Error::UnknownSymbol(name.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn half_square() {
        let c = names(&["x1", "x2", "t"]);
        let e = parse("x1^2/2", &c).unwrap();
        assert!(matches!(e, Expr::Div(..)));
        assert_eq!(e.eval(&[3.0, 0.0, 0.0]).unwrap(), 4.5);
    }

    #[test]
    fn cosine_at_zero() {
        let e = parse("cos(th)", &names(&["th"])).unwrap();
        assert!(matches!(e, Expr::Cos(_)));
        assert_eq!(e.eval(&[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn heisenberg_coefficient() {
        let e = parse("y/2", &names(&["x", "y", "t"])).unwrap();
        assert_eq!(e.eval(&[0.0, 2.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn precedence() {
        let c = names(&["x"]);
        let e = parse("-x^2 + 2*x - 3/4", &c).unwrap();
        let x = 1.5f64;
        assert_eq!(e.eval(&[x]).unwrap(), -x * x + 2.0 * x - 0.75);
        let e = parse("2^-1 * x^(-2)", &c).unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), 0.125);
        let e = parse("1e-3 * x + 2.5E2", &c).unwrap();
        assert_eq!(e.eval(&[1.0]).unwrap(), 1e-3 + 250.0);
    }

    #[test]
    fn unknown_symbol() {
        let err = parse("x + z", &names(&["x"])).unwrap_err();
        assert_eq!(err, Error::UnknownSymbol("z".into()));
    }

    #[test]
    fn syntax_error_position() {
        let err = parse("x + * 2", &names(&["x"])).unwrap_err();
        assert_eq!(
            err,
            Error::Syntax {
                column: 5,
                message: "unexpected character".into()
            }
        );
        assert!(matches!(parse("sin(x", &names(&["x"])), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x^1.5", &names(&["x"])), Err(Error::Syntax { .. })));
        assert!(matches!(parse("", &names(&["x"])), Err(Error::Syntax { .. })));
    }

    #[test]
    fn display_round_trip() {
        let c = names(&["x", "th"]);
        for src in [
            "-x^2/3 + sin(th)*exp(-x) - 0.1",
            "cos(th)^(-3) - (-2.5)*x",
            "x - -x",
            "pi*x/7",
        ] {
            let e = parse(src, &c).unwrap();
            let printed = e.display(&c).to_string();
            let again = parse(&printed, &c).unwrap();
            assert_eq!(e, again, "{src} -> {printed}");
        }
    }
}
