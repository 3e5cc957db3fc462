use dexflat::expr::{parse_expression, Expr, Func, Node, Number, SymbolTable};
use proptest::prelude::*;

const VARS: [&str; 3] = ["x", "y", "z"];

fn table() -> SymbolTable {
    SymbolTable::with_vars(VARS).unwrap()
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-3i64..=3).prop_map(Expr::int),
        ((-5i64..=5), (1i64..=4)).prop_map(|(n, d)| Expr::num(Number::ratio(n, d))),
        (0usize..3).prop_map(|i| Expr::var(VARS[i])),
    ]
}

fn safe_den(e: Expr) -> Expr {
    Expr::raw(Node::Add(vec![Expr::one(), Expr::raw(Node::Pow(e, 2))]))
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 40, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::raw(Node::Add(vec![a, b]))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::raw(Node::Sub(a, b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::raw(Node::Mul(vec![a, b]))),
            inner.clone().prop_map(|a| Expr::raw(Node::Neg(a))),
            (inner.clone(), 0i64..=3).prop_map(|(a, k)| Expr::raw(Node::Pow(a, k))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::raw(Node::Div(a, safe_den(b)))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::raw(Node::Pow(safe_den(a), -1)) + b),
            inner.clone().prop_map(|a| Expr::raw(Node::Func(Func::Sin, a))),
            inner.clone().prop_map(|a| Expr::raw(Node::Func(Func::Cos, a))),
            inner
                .clone()
                .prop_map(|a| Expr::raw(Node::Func(Func::Exp, Expr::raw(Node::Func(Func::Sin, a))))),
            inner.clone().prop_map(|a| Expr::raw(Node::Func(Func::Ln, safe_den(a)))),
            inner.clone().prop_map(|a| Expr::raw(Node::Func(Func::Sqrt, safe_den(a)))),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, 3)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn derivative_matches_central_difference(e in arb_expr(), p in point(), v in 0usize..3) {
        let t = table();
        let d = e.differentiate(VARS[v]);
        let exact = d.eval(&t, &p).unwrap();
        let h = 1e-5;
        let mut hi = p.clone();
        let mut lo = p.clone();
        hi[v] += h;
        lo[v] -= h;
        let fd = (e.eval(&t, &hi).unwrap() - e.eval(&t, &lo).unwrap()) / (2.0 * h);
        prop_assert!((exact - fd).abs() <= 1e-6 * (1.0 + exact.abs()), "{e}: exact {exact}, fd {fd}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn simplify_is_idempotent(e in arb_expr()) {
        let s = e.simplify();
        prop_assert_eq!(s.simplify(), s.clone());
        // rebuilding a canonical tree from its parts is also a fixed point
        let rebuilt = Expr::raw(s.node().clone()).simplify();
        prop_assert_eq!(rebuilt, s);
    }

    #[test]
    fn simplify_preserves_value(e in arb_expr(), p in point()) {
        let t = table();
        let a = e.eval(&t, &p).unwrap();
        let b = e.simplify().eval(&t, &p).unwrap();
        prop_assert!(close(a, b, 1e-10), "{e}: {a} vs {b}");
    }

    #[test]
    fn expand_preserves_value(e in arb_expr(), p in point()) {
        let t = table();
        let a = e.eval(&t, &p).unwrap();
        let b = e.expand().eval(&t, &p).unwrap();
        prop_assert!(close(a, b, 1e-9), "{e}: {a} vs {b}");
    }

    #[test]
    fn parse_of_render_is_simplified_form(e in arb_expr()) {
        let t = table();
        let text = e.to_string();
        let back = parse_expression(&text, &t).unwrap();
        prop_assert_eq!(back, e.simplify(), "rendered as {}", text);
    }

    #[test]
    fn difference_with_itself_is_literal_zero(e in arb_expr()) {
        prop_assert!(Expr::raw(Node::Sub(e.clone(), e)).simplify().is_zero());
    }
}
