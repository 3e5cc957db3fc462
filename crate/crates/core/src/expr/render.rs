use std::fmt::{self, Write};
use std::ops::Neg;

use super::{Expr, Node, Number};

/// Renders in the grammar accepted by the parser, so that parsing the text
/// of a canonical expression reproduces it.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(self, &mut s);
        f.write_str(&s)
    }
}

/// Split a term into its sign and magnitude so sums can print `a - b`.
fn negative_part(e: &Expr) -> Option<Expr> {
    match e.node() {
        Node::Num(n) if n.is_negative() => Some(Expr::num(n.neg())),
        Node::Mul(fs) => {
            let c = fs[0].as_number()?;
            if !c.is_negative() {
                return None;
            }
            let mut rest = fs.clone();
            if c.neg().is_one() {
                rest.remove(0);
            } else {
                rest[0] = Expr::num(c.neg());
            }
            Some(if rest.len() == 1 {
                rest.pop().unwrap()
            } else {
                Expr::raw(Node::Mul(rest))
            })
        }
        Node::Neg(a) => Some(a.clone()),
        _ => None,
    }
}

fn write_num(n: Number, out: &mut String) {
    let _ = write!(out, "{n}");
}

fn write_expr(e: &Expr, out: &mut String) {
    match e.node() {
        Node::Num(n) => write_num(*n, out),
        Node::Var(name) => out.push_str(name),
        Node::Add(ts) => {
            for (i, t) in ts.iter().enumerate() {
                match (i, negative_part(t)) {
                    (0, _) => write_expr(t, out),
                    (_, Some(m)) => {
                        out.push_str(" - ");
                        write_product_operand(&m, out);
                    }
                    (_, None) => {
                        out.push_str(" + ");
                        write_product_operand(t, out);
                    }
                }
            }
        }
        Node::Sub(a, b) => {
            write_expr(a, out);
            out.push_str(" - ");
            write_wrapped(b, out, |n| matches!(n, Node::Add(_) | Node::Sub(..)));
        }
        Node::Neg(a) => {
            out.push('-');
            write_wrapped(a, out, |n| matches!(n, Node::Add(_) | Node::Sub(..) | Node::Num(_)));
        }
        Node::Mul(fs) => {
            let mut rest = &fs[..];
            if let Some(c) = fs[0].as_number() {
                rest = &fs[1..];
                if c.neg().is_one() {
                    out.push('-');
                } else {
                    write_num(c, out);
                    out.push('*');
                }
            }
            for (i, f) in rest.iter().enumerate() {
                if i > 0 {
                    out.push('*');
                }
                write_wrapped(f, out, |n| {
                    matches!(n, Node::Add(_) | Node::Sub(..) | Node::Neg(_) | Node::Div(..)) || matches!(n, Node::Num(v) if v.is_negative())
                });
            }
        }
        Node::Div(a, b) => {
            write_wrapped(a, out, |n| matches!(n, Node::Add(_) | Node::Sub(..) | Node::Neg(_)));
            out.push('/');
            write_wrapped(b, out, |n| {
                matches!(n, Node::Add(_) | Node::Sub(..) | Node::Neg(_) | Node::Mul(_) | Node::Div(..))
            });
        }
        Node::Pow(b, k) => {
            write_wrapped(b, out, |n| !matches!(n, Node::Var(_) | Node::Func(..)));
            let _ = write!(out, "^{k}");
        }
        Node::Func(func, a) => {
            out.push_str(func.name());
            out.push('(');
            write_expr(a, out);
            out.push(')');
        }
    }
}

/// A term following a binary `+`/`-` must not start with a sign.
fn write_product_operand(e: &Expr, out: &mut String) {
    write_wrapped(e, out, |n| matches!(n, Node::Sub(..) | Node::Neg(_)));
}

fn write_wrapped(e: &Expr, out: &mut String, needs: impl Fn(&Node) -> bool) {
    // rational constants print as `a/b`, which binds like a product
    let frac = matches!(e.node(), Node::Num(Number::Rational(r)) if !r.is_integer());
    if needs(e.node()) || (frac && matches!(e.node(), Node::Num(_)) && needs_frac_parens(&needs)) {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn needs_frac_parens(needs: &impl Fn(&Node) -> bool) -> bool {
    // contexts that parenthesize products also need it for `a/b`
    needs(&Node::Mul(vec![]))
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse_expression, SymbolTable};

    #[test]
    fn renders_signed_terms() {
        let t = SymbolTable::with_vars(["x", "y"]).unwrap();
        let e = parse_expression("x - 2*y - 3", &t).unwrap();
        let s = e.to_string();
        assert_eq!(parse_expression(&s, &t).unwrap(), e);
        assert!(s.contains(" - "));
    }

    #[test]
    fn powers_and_fractions() {
        let t = SymbolTable::with_vars(["x", "y"]).unwrap();
        for src in ["x^-1*y", "(x + y)^2", "1/3*x - 1/2", "-x", "sin(x)^3/(x + 1)", "2.5e0*x"] {
            let e = parse_expression(src, &t).unwrap();
            let back = parse_expression(&e.to_string(), &t).unwrap();
            assert_eq!(back, e, "{src} rendered as {e}");
        }
    }
}
