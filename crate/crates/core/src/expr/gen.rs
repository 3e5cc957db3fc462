//! Random expression generator for self-checks.
//!
//! Trees are built from raw nodes so that they exercise the simplifier.
//! Denominators and function arguments are shaped to stay defined on the
//! whole real line (`1 + a^2`, `exp(sin a)` and so on).

use rand::Rng;

use super::{Expr, Func, Node, Number};

pub fn random_expr(rng: &mut impl Rng, vars: &[&str], depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return leaf(rng, vars);
    }
    let sub = |rng: &mut _| random_expr(rng, vars, depth - 1);
    match rng.random_range(0..11) {
        0 => Expr::raw(Node::Add(vec![sub(rng), sub(rng)])),
        1 => Expr::raw(Node::Sub(sub(rng), sub(rng))),
        2 | 3 => Expr::raw(Node::Mul(vec![sub(rng), sub(rng)])),
        4 => Expr::raw(Node::Neg(sub(rng))),
        5 => Expr::raw(Node::Pow(sub(rng), rng.random_range(0..=3))),
        6 => {
            let d = sub(rng);
            Expr::raw(Node::Div(sub(rng), one_plus_square(d)))
        }
        7 => Expr::raw(Node::Func(if rng.random_bool(0.5) { Func::Sin } else { Func::Cos }, sub(rng))),
        8 => {
            let inner = Expr::raw(Node::Func(Func::Sin, sub(rng)));
            Expr::raw(Node::Func(Func::Exp, inner))
        }
        9 => {
            let f = if rng.random_bool(0.5) { Func::Ln } else { Func::Sqrt };
            Expr::raw(Node::Func(f, one_plus_square(sub(rng))))
        }
        _ => {
            let half = Expr::raw(Node::Mul(vec![
                Expr::num(Number::ratio(1, 2)),
                Expr::raw(Node::Func(Func::Sin, sub(rng))),
            ]));
            Expr::raw(Node::Func(Func::Tan, half))
        }
    }
}

fn one_plus_square(e: Expr) -> Expr {
    Expr::raw(Node::Add(vec![Expr::one(), Expr::raw(Node::Pow(e, 2))]))
}

fn leaf(rng: &mut impl Rng, vars: &[&str]) -> Expr {
    match rng.random_range(0..5) {
        0 => Expr::int(rng.random_range(-3..=3)),
        1 => Expr::num(Number::ratio(rng.random_range(-5..=5), rng.random_range(1..=4))),
        _ => Expr::var(vars[rng.random_range(0..vars.len())]),
    }
}
