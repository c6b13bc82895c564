//! A small arithmetic expression language over the two coordinates `x` and `y`.
//!
//! Expressions define coefficients, manufactured solutions and boundary data.
//! They can be evaluated pointwise and differentiated symbolically, which is
//! how forcing terms `f = -div(k grad p)` are derived without hand algebra.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          exponent must be constant
//! atom   := number | 'x' | 'y' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp | log | sqrt | abs
//! ```

mod diff;
mod parser;

use std::fmt;

use thiserror::Error;

pub use parser::parse;

/// Coordinate variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

/// Expression tree. Immutable once built, so it can be shared across threads.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Power with a constant exponent.
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("function `{name}` at byte {offset} takes exactly one argument, got {got}")]
    Arity {
        offset: usize,
        name: String,
        got: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at ({x}, {y})")]
    DivisionByZero { x: f64, y: f64 },
    #[error("{func} outside its domain at ({x}, {y}): argument {arg}")]
    Domain {
        func: &'static str,
        arg: f64,
        x: f64,
        y: f64,
    },
    #[error("non-integer power of non-positive base {base} at ({x}, {y})")]
    Power { base: f64, x: f64, y: f64 },
    #[error("non-finite result at ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DiffError {
    #[error("abs() is not differentiable")]
    Abs,
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    /// Evaluates at `(x, y)`. Any non-finite intermediate value is an error.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        let finite = |v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(EvalError::NonFinite { x, y })
            }
        };
        match self {
            Expr::Num(v) => finite(*v),
            Expr::Pi => Ok(std::f64::consts::PI),
            Expr::Var(Var::X) => finite(x),
            Expr::Var(Var::Y) => finite(y),
            Expr::Neg(a) => Ok(-a.eval(x, y)?),
            Expr::Binary(op, a, b) => {
                let a = a.eval(x, y)?;
                let b = b.eval(x, y)?;
                let r = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero { x, y });
                        }
                        a / b
                    }
                };
                finite(r)
            }
            Expr::Pow(base, e) => {
                let b = base.eval(x, y)?;
                let r = if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
                    if b == 0.0 && *e < 0.0 {
                        return Err(EvalError::DivisionByZero { x, y });
                    }
                    b.powi(*e as i32)
                } else {
                    if b <= 0.0 {
                        return Err(EvalError::Power { base: b, x, y });
                    }
                    b.powf(*e)
                };
                finite(r)
            }
            Expr::Call(f, a) => {
                let arg = a.eval(x, y)?;
                let domain = |func| EvalError::Domain { func, arg, x, y };
                let r = match f {
                    Func::Sin => arg.sin(),
                    Func::Cos => arg.cos(),
                    Func::Exp => arg.exp(),
                    Func::Log => {
                        if arg <= 0.0 {
                            return Err(domain("log"));
                        }
                        arg.ln()
                    }
                    Func::Sqrt => {
                        if arg < 0.0 {
                            return Err(domain("sqrt"));
                        }
                        arg.sqrt()
                    }
                    Func::Abs => arg.abs(),
                };
                finite(r)
            }
        }
    }

    pub fn eval_at(&self, p: [f64; 2]) -> Result<f64, EvalError> {
        self.eval(p[0], p[1])
    }

    /// Exact partial derivative. The result is not simplified.
    pub fn differentiate(&self, var: Var) -> Result<Expr, DiffError> {
        diff::derivative(self, var)
    }

    /// Gradient `(d/dx, d/dy)`.
    pub fn gradient(&self) -> Result<[Expr; 2], DiffError> {
        Ok([self.differentiate(Var::X)?, self.differentiate(Var::Y)?])
    }

    /// True when the tree contains no variable.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => true,
            Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// Fully parenthesized output; `parse(&e.to_string())` rebuilds an equivalent tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    write!(f, "(-{:?})", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Pi => f.write_str("pi"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::Y) => f.write_str("y"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                };
                write!(f, "({a}{sym}{b})")
            }
            Expr::Pow(a, e) => {
                if *e < 0.0 {
                    write!(f, "({a}^(-{:?}))", -e)
                } else {
                    write!(f, "({a}^{e:?})")
                }
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
