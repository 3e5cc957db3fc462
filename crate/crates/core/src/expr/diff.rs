use std::collections::HashMap;
use std::ops::Neg;

use super::{Expr, Func, Node};

impl Expr {
    /// Exact partial derivative with respect to the variable `v`.
    ///
    /// The result is canonical but not expanded.
    pub fn differentiate(&self, v: &str) -> Expr {
        let mut memo = HashMap::new();
        diff_rec(&self.simplify(), v, &mut memo)
    }
}

fn diff_rec(e: &Expr, v: &str, memo: &mut HashMap<Expr, Expr>) -> Expr {
    if !e.contains_var(v) {
        return Expr::zero();
    }
    if let Some(d) = memo.get(e) {
        return d.clone();
    }
    let d = match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Var(_) => Expr::one(),
        Node::Add(ts) => Expr::add(ts.iter().map(|t| diff_rec(t, v, memo)).collect()),
        Node::Mul(fs) => {
            let mut terms = Vec::new();
            for (i, f) in fs.iter().enumerate() {
                let df = diff_rec(f, v, memo);
                if df.is_zero() {
                    continue;
                }
                let mut prod: Vec<Expr> = fs.clone();
                prod[i] = df;
                terms.push(Expr::mul(prod));
            }
            Expr::add(terms)
        }
        Node::Pow(b, k) => {
            let db = diff_rec(b, v, memo);
            Expr::mul(vec![Expr::int(*k), Expr::pow(b.clone(), k - 1), db])
        }
        Node::Func(f, u) => {
            let du = diff_rec(u, v, memo);
            let outer = match f {
                Func::Sin => u.cos(),
                Func::Cos => u.sin().neg(),
                Func::Tan => Expr::one() + Expr::pow(Expr::func(Func::Tan, u.clone()), 2),
                Func::Exp => e.clone(),
                Func::Ln => u.recip(),
                Func::Sqrt => Expr::mul(vec![Expr::num(super::Number::ratio(1, 2)), Expr::pow(e.clone(), -1)]),
            };
            outer * du
        }
        Node::Neg(_) | Node::Sub(..) | Node::Div(..) => diff_rec(&e.simplify(), v, memo),
    };
    memo.insert(e.clone(), d.clone());
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, SymbolTable};

    fn table() -> SymbolTable {
        SymbolTable::with_vars(["x", "x1", "x3", "phi"]).unwrap()
    }

    #[test]
    fn product_rule_with_constant_factor() {
        let t = table();
        let e = parse_expression("x1 * sin(x3)", &t).unwrap();
        assert_eq!(e.differentiate("x1"), parse_expression("sin(x3)", &t).unwrap());
    }

    #[test]
    fn cosine_derivative() {
        let t = table();
        let e = parse_expression("cos(phi)", &t).unwrap();
        assert_eq!(e.differentiate("phi"), parse_expression("-sin(phi)", &t).unwrap());
    }

    #[test]
    fn cube_at_two_matches_finite_difference() {
        let t = table();
        let e = parse_expression("x^3", &t).unwrap();
        let d = e.differentiate("x");
        let at = |expr: &Expr, xv: f64| expr.eval(&t, &[xv, 0.0, 0.0, 0.0]).unwrap();
        let exact = at(&d, 2.0);
        assert_eq!(exact, 12.0);
        let h = 1e-5;
        let fd = (at(&e, 2.0 + h) - at(&e, 2.0 - h)) / (2.0 * h);
        assert!((fd - exact).abs() <= 1e-6 * exact.abs());
    }

    #[test]
    fn independent_variable_gives_zero() {
        let t = table();
        let e = parse_expression("x1^2 + sin(x3)", &t).unwrap();
        assert!(e.differentiate("phi").is_zero());
    }
}
