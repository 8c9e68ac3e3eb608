use super::ast::{add, call, div, mul, neg, num, pow, sub, Expr, Func};

/// Exact partial derivative with respect to the zero-based variable `var`.
///
/// Parameters and literals differentiate to zero. The result is constant
/// folded but otherwise unsimplified.
pub fn diff(e: &Expr, var: usize) -> Expr {
    match e {
        Expr::Num(_) | Expr::Param(_) => num(0.0),
        Expr::Var(i) => num(if *i == var { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(diff(a, var)),
        Expr::Add(a, b) => add(diff(a, var), diff(b, var)),
        Expr::Sub(a, b) => sub(diff(a, var), diff(b, var)),
        Expr::Mul(a, b) => add(mul(diff(a, var), (**b).clone()), mul((**a).clone(), diff(b, var))),
        Expr::Div(a, b) => {
            let da = diff(a, var);
            let db = diff(b, var);
            // (a'b - ab') / b^2
            div(sub(mul(da, (**b).clone()), mul((**a).clone(), db)), pow((**b).clone(), num(2.0)))
        }
        Expr::Pow(a, b) => {
            let da = diff(a, var);
            if !b.depends_on(var) {
                // k u^(k-1) u'
                let k = (**b).clone();
                let km1 = sub(k.clone(), num(1.0));
                mul(mul(k, pow((**a).clone(), km1)), da)
            } else {
                // u^v (v' ln u + v u'/u)
                let db = diff(b, var);
                let inner = add(mul(db, call(Func::Log, (**a).clone())), div(mul((**b).clone(), da), (**a).clone()));
                mul(e.clone(), inner)
            }
        }
        Expr::Call(f, a) => {
            let da = diff(a, var);
            if matches!(da, Expr::Num(v) if v == 0.0) {
                return num(0.0);
            }
            let u = (**a).clone();
            let outer = match f {
                Func::Sin => call(Func::Cos, u),
                Func::Cos => neg(call(Func::Sin, u)),
                Func::Tan => add(num(1.0), pow(call(Func::Tan, u), num(2.0))),
                Func::Exp => call(Func::Exp, u),
                Func::Log => div(num(1.0), u),
                Func::Sqrt => div(num(1.0), mul(num(2.0), call(Func::Sqrt, u))),
                Func::Sinh => call(Func::Cosh, u),
                Func::Cosh => call(Func::Sinh, u),
            };
            mul(outer, da)
        }
    }
}
