use std::fmt;

use crate::error::{Error, Result};

/// Symbolic scalar function of the ambient (or parameter) coordinates.
///
/// Variables are positional: `Var(i)` is the `i`-th coordinate of the point
/// the expression is evaluated at. Nodes are built through the smart
/// constructors below, which fold constants and drop neutral elements, so a
/// tree produced by [`Expr::diff`] stays small enough to bracket repeatedly.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Default for Expr {
    fn default() -> Self {
        Expr::Const(0.0)
    }
}

impl Expr {
    pub fn zero() -> Self {
        Expr::Const(0.0)
    }

    pub fn one() -> Self {
        Expr::Const(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Expr::Const(c)
    }

    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (_, Some(y)) if y == 0.0 => a,
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::zero(),
            _ if a.is_one() => b,
            _ if b.is_one() => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
            (Some(x), _) if x == 0.0 => Expr::zero(),
            _ if b.is_one() => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, n: i32) -> Expr {
        match (a.as_const(), n) {
            (_, 0) => Expr::one(),
            (_, 1) => a,
            (Some(x), _) if x != 0.0 || n > 0 => Expr::Const(x.powi(n)),
            _ => Expr::Pow(Box::new(a), n),
        }
    }

    pub fn sin(a: Expr) -> Expr {
        match a.as_const() {
            Some(x) => Expr::Const(x.sin()),
            None => Expr::Sin(Box::new(a)),
        }
    }

    pub fn cos(a: Expr) -> Expr {
        match a.as_const() {
            Some(x) => Expr::Const(x.cos()),
            None => Expr::Cos(Box::new(a)),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        match a.as_const() {
            Some(x) => Expr::Const(x.exp()),
            None => Expr::Exp(Box::new(a)),
        }
    }

    /// Evaluates at `point`; `Var(i)` reads `point[i]`.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *point.get(*i).ok_or(Error::DimensionMismatch {
                expected: i + 1,
                found: point.len(),
            })?,
            Expr::Neg(a) => -a.eval(point)?,
            Expr::Add(a, b) => a.eval(point)? + b.eval(point)?,
            Expr::Sub(a, b) => a.eval(point)? - b.eval(point)?,
            Expr::Mul(a, b) => a.eval(point)? * b.eval(point)?,
            Expr::Div(a, b) => {
                let den = b.eval(point)?;
                if den == 0.0 {
                    return Err(Error::DivisionByZero);
                }
                a.eval(point)? / den
            }
            Expr::Pow(a, n) => {
                let base = a.eval(point)?;
                if base == 0.0 && *n < 0 {
                    return Err(Error::DivisionByZero);
                }
                base.powi(*n)
            }
            Expr::Sin(a) => a.eval(point)?.sin(),
            Expr::Cos(a) => a.eval(point)?.cos(),
            Expr::Exp(a) => a.eval(point)?.exp(),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Exact partial derivative with respect to coordinate `var`.
    pub fn diff(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(i) => {
                if *i == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Neg(a) => Expr::neg(a.diff(var)),
            Expr::Add(a, b) => Expr::add(a.diff(var), b.diff(var)),
            Expr::Sub(a, b) => Expr::sub(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff(var), (**b).clone()),
                Expr::mul((**a).clone(), b.diff(var)),
            ),
            Expr::Div(a, b) => {
                // (a'b - ab') / b^2
                let num = Expr::sub(
                    Expr::mul(a.diff(var), (**b).clone()),
                    Expr::mul((**a).clone(), b.diff(var)),
                );
                if num.is_zero() {
                    return Expr::zero();
                }
                Expr::div(num, Expr::pow((**b).clone(), 2))
            }
            Expr::Pow(a, n) => {
                let da = a.diff(var);
                if da.is_zero() {
                    return Expr::zero();
                }
                Expr::mul(
                    Expr::mul(Expr::Const(*n as f64), Expr::pow((**a).clone(), n - 1)),
                    da,
                )
            }
            Expr::Sin(a) => Expr::mul(Expr::cos((**a).clone()), a.diff(var)),
            Expr::Cos(a) => Expr::neg(Expr::mul(Expr::sin((**a).clone()), a.diff(var))),
            Expr::Exp(a) => Expr::mul(Expr::exp((**a).clone()), a.diff(var)),
        }
    }

    /// Replaces every `Var(i)` by `values[i]`, re-simplifying on the way up.
    pub fn substitute(&self, values: &[Expr]) -> Result<Expr> {
        Ok(match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => values
                .get(*i)
                .cloned()
                .ok_or(Error::DimensionMismatch {
                    expected: i + 1,
                    found: values.len(),
                })?,
            Expr::Neg(a) => Expr::neg(a.substitute(values)?),
            Expr::Add(a, b) => Expr::add(a.substitute(values)?, b.substitute(values)?),
            Expr::Sub(a, b) => Expr::sub(a.substitute(values)?, b.substitute(values)?),
            Expr::Mul(a, b) => Expr::mul(a.substitute(values)?, b.substitute(values)?),
            Expr::Div(a, b) => Expr::div(a.substitute(values)?, b.substitute(values)?),
            Expr::Pow(a, n) => Expr::pow(a.substitute(values)?, *n),
            Expr::Sin(a) => Expr::sin(a.substitute(values)?),
            Expr::Cos(a) => Expr::cos(a.substitute(values)?),
            Expr::Exp(a) => Expr::exp(a.substitute(values)?),
        })
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => {
                a.max_var()
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => {
                1 + a.node_count()
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }

    /// Printable form using `names` for the variables. The output re-parses
    /// to the same tree.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self.expr, self.names, f)
    }
}

fn write_expr(e: &Expr, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let sub = |e: &Expr, f: &mut fmt::Formatter<'_>| write_expr(e, names, f);
    match e {
        Expr::Const(c) => {
            if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                write!(f, "(-{:?})", -c)
            } else {
                write!(f, "{c:?}")
            }
        }
        Expr::Var(i) => match names.get(*i) {
            Some(name) => write!(f, "{name}"),
            None => write!(f, "_{i}"),
        },
        Expr::Neg(a) => {
            write!(f, "(-")?;
            sub(a, f)?;
            write!(f, ")")
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            let op = match e {
                Expr::Add(..) => "+",
                Expr::Sub(..) => "-",
                Expr::Mul(..) => "*",
                _ => "/",
            };
            write!(f, "(")?;
            sub(a, f)?;
            write!(f, " {op} ")?;
            sub(b, f)?;
            write!(f, ")")
        }
        Expr::Pow(a, n) => {
            write!(f, "(")?;
            sub(a, f)?;
            if *n < 0 {
                write!(f, ")^(-{})", -(*n as i64))
            } else {
                write!(f, ")^{n}")
            }
        }
        Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => {
            let name = match e {
                Expr::Sin(_) => "sin",
                Expr::Cos(_) => "cos",
                _ => "exp",
            };
            write!(f, "{name}(")?;
            sub(a, f)?;
            write!(f, ")")
        }
    }
}
