use super::{BinOp, DiffError, Expr, Func, Var};

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

fn num(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        _ => None,
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    bin(BinOp::Mul, a, b)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(bx(a)),
    }
}

fn pow(a: Expr, n: f64) -> Expr {
    if n == 1.0 {
        a
    } else {
        Expr::Pow(bx(a), n)
    }
}

// Folds numeric operands and the identities with 0 and 1 so derivative
// trees stay small.
fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    match (op, num(&a), num(&b)) {
        (BinOp::Add, Some(x), Some(y)) => Expr::Num(x + y),
        (BinOp::Sub, Some(x), Some(y)) => Expr::Num(x - y),
        (BinOp::Mul, Some(x), Some(y)) => Expr::Num(x * y),
        (BinOp::Add, Some(z), _) if z == 0.0 => b,
        (BinOp::Add | BinOp::Sub, _, Some(z)) if z == 0.0 => a,
        (BinOp::Sub, Some(z), _) if z == 0.0 => neg(b),
        (BinOp::Mul, Some(z), _) | (BinOp::Mul, _, Some(z)) if z == 0.0 => Expr::Num(0.0),
        (BinOp::Div, Some(z), _) if z == 0.0 => Expr::Num(0.0),
        (BinOp::Mul, Some(o), _) if o == 1.0 => b,
        (BinOp::Mul | BinOp::Div, _, Some(o)) if o == 1.0 => a,
        _ => Expr::Binary(op, bx(a), bx(b)),
    }
}

pub(super) fn derivative(e: &Expr, var: Var) -> Result<Expr, DiffError> {
    Ok(match e {
        Expr::Num(_) | Expr::Pi => Expr::Num(0.0),
        Expr::Var(v) => Expr::Num(if *v == var { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(derivative(a, var)?),
        Expr::Binary(op, a, b) => {
            let da = derivative(a, var)?;
            let db = derivative(b, var)?;
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                BinOp::Add | BinOp::Sub => bin(*op, da, db),
                BinOp::Mul => bin(BinOp::Add, mul(da, b), mul(a, db)),
                // (a'b - ab') / b^2
                BinOp::Div => bin(
                    BinOp::Div,
                    bin(BinOp::Sub, mul(da, b.clone()), mul(a, db)),
                    pow(b, 2.0),
                ),
            }
        }
        Expr::Pow(a, n) => {
            let da = derivative(a, var)?;
            if *n == 1.0 {
                return Ok(da);
            }
            mul(mul(Expr::Num(*n), pow((**a).clone(), n - 1.0)), da)
        }
        Expr::Call(f, a) => {
            let da = derivative(a, var)?;
            let arg = (**a).clone();
            let outer = match f {
                Func::Sin => Expr::Call(Func::Cos, bx(arg)),
                Func::Cos => neg(Expr::Call(Func::Sin, bx(arg))),
                Func::Exp => Expr::Call(Func::Exp, bx(arg)),
                Func::Log => bin(BinOp::Div, Expr::Num(1.0), arg),
                Func::Sqrt => bin(
                    BinOp::Div,
                    Expr::Num(1.0),
                    mul(Expr::Num(2.0), Expr::Call(Func::Sqrt, bx(arg))),
                ),
                Func::Abs => return Err(DiffError::Abs),
            };
            mul(outer, da)
        }
    })
}
