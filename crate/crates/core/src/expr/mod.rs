//! Symbolic expressions over named real variables.
//!
//! Expressions are immutable and reference counted. The constructors
//! [`Expr::add`], [`Expr::mul`], [`Expr::pow`] and [`Expr::func`] always
//! return canonical trees (no `Neg`, `Sub` or `Div` nodes, flattened and
//! sorted sums and products, like terms collected). [`Expr::raw`] builds an
//! arbitrary tree; [`Expr::simplify`] brings it to canonical form.

mod diff;
mod eval;
pub mod gen;
mod number;
mod parse;
mod render;
mod zero;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::hash::{DefaultHasher, Hash, Hasher};
use std::ops::{Add, Mul};
use std::sync::Arc;

pub use eval::{EvalError, SymbolTable, Tape};
pub use number::Number;
pub use parse::parse_expression;
pub use zero::{is_identically_zero, SampleBox, ZeroTestConfig, ZeroTestError, ZeroTester, ZeroVerdict};

use thiserror::Error;

/// Errors raised while building or parsing expressions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("lexical error at position {pos}: {msg}")]
    Lexical { pos: usize, msg: String },
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("function `{func}` takes one argument, got {found}")]
    Arity { func: String, found: usize },
    #[error("symbol `{0}` registered twice")]
    DuplicateSymbol(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Ln, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn apply(self, x: f64) -> Result<f64, EvalError> {
        match self {
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Tan => Ok(x.tan()),
            Func::Exp => Ok(x.exp()),
            Func::Ln if x <= 0.0 => Err(EvalError::LnNonPositive(x)),
            Func::Ln => Ok(x.ln()),
            Func::Sqrt if x < 0.0 => Err(EvalError::SqrtNegative(x)),
            Func::Sqrt => Ok(x.sqrt()),
        }
    }
}

/// One node of an expression tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Num(Number),
    Var(Arc<str>),
    Neg(Expr),
    Add(Vec<Expr>),
    Sub(Expr, Expr),
    Mul(Vec<Expr>),
    Div(Expr, Expr),
    Pow(Expr, i64),
    Func(Func, Expr),
}

impl Node {
    fn rank(&self) -> u8 {
        match self {
            Node::Num(_) => 0,
            Node::Var(_) => 1,
            Node::Func(..) => 2,
            Node::Pow(..) => 3,
            Node::Mul(_) => 4,
            Node::Add(_) => 5,
            Node::Neg(_) => 6,
            Node::Sub(..) => 7,
            Node::Div(..) => 8,
        }
    }

    fn children(&self) -> Vec<&Expr> {
        match self {
            Node::Num(_) | Node::Var(_) => vec![],
            Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => vec![a],
            Node::Sub(a, b) | Node::Div(a, b) => vec![a, b],
            Node::Add(v) | Node::Mul(v) => v.iter().collect(),
        }
    }
}

struct Inner {
    node: Node,
    hash: u64,
    canonical: bool,
    vars: Arc<[Arc<str>]>,
}

#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Expr({self})")
    }
}

fn hash_node(node: &Node) -> u64 {
    let mut h = DefaultHasher::new();
    node.rank().hash(&mut h);
    match node {
        Node::Num(n) => n.hash(&mut h),
        Node::Var(name) => name.hash(&mut h),
        Node::Pow(b, k) => {
            b.0.hash.hash(&mut h);
            k.hash(&mut h);
        }
        Node::Func(f, a) => {
            f.hash(&mut h);
            a.0.hash.hash(&mut h);
        }
        other => {
            for c in other.children() {
                c.0.hash.hash(&mut h);
            }
        }
    }
    h.finish()
}

fn merge_vars(node: &Node) -> Arc<[Arc<str>]> {
    match node {
        Node::Num(_) => Arc::from(Vec::new()),
        Node::Var(name) => Arc::from(vec![name.clone()]),
        other => {
            let children = other.children();
            let mut nonempty = children.iter().filter(|c| !c.0.vars.is_empty());
            let first = match nonempty.next() {
                None => return Arc::from(Vec::new()),
                Some(c) => c,
            };
            if nonempty.next().is_none() {
                return first.0.vars.clone();
            }
            let mut all: Vec<Arc<str>> = children.iter().flat_map(|c| c.0.vars.iter().cloned()).collect();
            all.sort();
            all.dedup();
            Arc::from(all)
        }
    }
}

impl Expr {
    fn make(node: Node, canonical: bool) -> Expr {
        let hash = hash_node(&node);
        let vars = merge_vars(&node);
        Expr(Arc::new(Inner {
            node,
            hash,
            canonical,
            vars,
        }))
    }

    /// Wrap an arbitrary node without any rewriting.
    pub fn raw(node: Node) -> Expr {
        let canonical = matches!(node, Node::Num(_) | Node::Var(_));
        Expr::make(node, canonical)
    }

    pub fn num(n: Number) -> Expr {
        Expr::make(Node::Num(n), true)
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(Number::int(n))
    }

    pub fn float(x: f64) -> Expr {
        Expr::num(Number::float(x))
    }

    pub fn zero() -> Expr {
        Expr::num(Number::ZERO)
    }

    pub fn one() -> Expr {
        Expr::num(Number::ONE)
    }

    pub fn var(name: &str) -> Expr {
        Expr::make(Node::Var(Arc::from(name)), true)
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn is_canonical(&self) -> bool {
        self.0.canonical
    }

    pub fn as_number(&self) -> Option<Number> {
        match self.node() {
            Node::Num(n) => Some(*n),
            _ => None,
        }
    }

    /// Literal zero constant.
    pub fn is_zero(&self) -> bool {
        self.as_number().is_some_and(|n| n.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_number().is_some_and(|n| n.is_one())
    }

    /// Sorted, duplicate-free names of the variables occurring in the tree.
    pub fn free_vars(&self) -> &[Arc<str>] {
        &self.0.vars
    }

    pub fn contains_var(&self, name: &str) -> bool {
        self.0.vars.binary_search_by(|v| (**v).cmp(name)).is_ok()
    }

    /// Number of nodes counted as a tree (shared subtrees counted each time).
    pub fn size(&self) -> usize {
        1 + self.node().children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    // ----- canonical constructors -----

    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut constant = Number::ZERO;
        let mut coll: BTreeMap<Expr, Number> = BTreeMap::new();
        for t in terms {
            let t = t.simplify();
            match t.node() {
                Node::Add(ts) => {
                    for s in ts {
                        absorb_term(s, &mut constant, &mut coll);
                    }
                }
                _ => absorb_term(&t, &mut constant, &mut coll),
            }
        }
        coll.retain(|_, c| !c.is_zero());
        pythagorean_merge(&mut constant, &mut coll);
        let mut out: Vec<Expr> = coll.into_iter().map(|(rest, c)| scaled(c, rest)).collect();
        if !constant.is_zero() {
            out.push(Expr::num(constant));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => {
                out.sort();
                Expr::make(Node::Add(out), true)
            }
        }
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut coeff = Number::ONE;
        let mut powers: BTreeMap<Expr, i64> = BTreeMap::new();
        let mut pending: Vec<Expr> = factors.into_iter().map(|f| f.simplify()).collect();
        while let Some(f) = pending.pop() {
            match f.node() {
                Node::Num(n) => coeff = coeff.mul(*n),
                Node::Mul(fs) => pending.extend(fs.iter().cloned()),
                Node::Pow(b, k) if b.as_number().is_none() => {
                    *powers.entry(b.clone()).or_insert(0) += *k;
                }
                _ => *powers.entry(f.clone()).or_insert(0) += 1,
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        // Re-applying pow may fold numeric bases back into the coefficient.
        let mut out = Vec::new();
        for (base, k) in powers {
            if k == 0 {
                continue;
            }
            let p = Expr::pow(base, k);
            match p.node() {
                Node::Num(n) => coeff = coeff.mul(*n),
                Node::Mul(fs) => {
                    for f in fs {
                        match f.node() {
                            Node::Num(n) => coeff = coeff.mul(*n),
                            _ => out.push(f.clone()),
                        }
                    }
                }
                _ => out.push(p),
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        if out.is_empty() {
            return Expr::num(coeff);
        }
        if out.len() == 1 && coeff.is_one() {
            return out.pop().unwrap();
        }
        out.sort();
        if !coeff.is_one() {
            out.insert(0, Expr::num(coeff));
        }
        Expr::make(Node::Mul(out), true)
    }

    pub fn pow(base: Expr, k: i64) -> Expr {
        let base = base.simplify();
        if k == 0 {
            return Expr::one();
        }
        if k == 1 {
            return base;
        }
        match base.node() {
            Node::Num(n) => match n.powi(k) {
                Some(v) => Expr::num(v),
                None => Expr::make(Node::Pow(base.clone(), k), true),
            },
            Node::Pow(b, j) => match j.checked_mul(k) {
                Some(jk) => Expr::pow(b.clone(), jk),
                None => Expr::make(Node::Pow(base.clone(), k), true),
            },
            Node::Mul(fs) => Expr::mul(fs.iter().map(|f| Expr::pow(f.clone(), k)).collect()),
            _ => Expr::make(Node::Pow(base, k), true),
        }
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        let arg = arg.simplify();
        if let Some(n) = arg.as_number() {
            if let Some(v) = fold_func(f, n) {
                return Expr::num(v);
            }
        }
        match f {
            Func::Sin | Func::Tan if is_negated(&arg) => {
                return Expr::mul(vec![Expr::int(-1), Expr::func(f, arg.neg())]);
            }
            Func::Cos if is_negated(&arg) => return Expr::func(f, arg.neg()),
            Func::Ln => {
                if let Node::Func(Func::Exp, inner) = arg.node() {
                    return inner.clone();
                }
            }
            _ => {}
        }
        Expr::make(Node::Func(f, arg), true)
    }

    pub fn sin(&self) -> Expr {
        Expr::func(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::func(Func::Cos, self.clone())
    }

    pub fn neg(&self) -> Expr {
        Expr::mul(vec![Expr::int(-1), self.clone()])
    }

    pub fn powi(&self, k: i64) -> Expr {
        Expr::pow(self.clone(), k)
    }

    pub fn recip(&self) -> Expr {
        Expr::pow(self.clone(), -1)
    }

    /// Canonical form. Value preserving wherever the input is defined.
    pub fn simplify(&self) -> Expr {
        if self.is_canonical() {
            return self.clone();
        }
        match self.node() {
            Node::Num(_) | Node::Var(_) => self.clone(),
            Node::Neg(a) => a.neg(),
            Node::Add(ts) => Expr::add(ts.clone()),
            Node::Sub(a, b) => Expr::add(vec![a.clone(), b.neg()]),
            Node::Mul(fs) => Expr::mul(fs.clone()),
            Node::Div(a, b) => Expr::mul(vec![a.clone(), Expr::pow(b.clone(), -1)]),
            Node::Pow(b, k) => Expr::pow(b.clone(), *k),
            Node::Func(f, a) => Expr::func(*f, a.clone()),
        }
    }

    /// Fully distribute products over sums and positive integer powers of
    /// sums. Negative powers of sums stay atomic.
    pub fn expand(&self) -> Expr {
        let mut cache = HashMap::new();
        expand_rec(&self.simplify(), &mut cache)
    }

    /// Replace variables by expressions. Names missing from `map` are kept.
    pub fn substitute(&self, map: &HashMap<Arc<str>, Expr>) -> Expr {
        if map.is_empty() || !self.free_vars().iter().any(|v| map.contains_key(v)) {
            return self.clone();
        }
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Var(name) => map.get(name).cloned().unwrap_or_else(|| self.clone()),
            Node::Neg(a) => a.substitute(map).neg(),
            Node::Add(ts) => Expr::add(ts.iter().map(|t| t.substitute(map)).collect()),
            Node::Sub(a, b) => a.substitute(map) - b.substitute(map),
            Node::Mul(fs) => Expr::mul(fs.iter().map(|f| f.substitute(map)).collect()),
            Node::Div(a, b) => a.substitute(map) / b.substitute(map),
            Node::Pow(b, k) => Expr::pow(b.substitute(map), *k),
            Node::Func(f, a) => Expr::func(*f, a.substitute(map)),
        }
    }

    /// Top-level multiplicative factors, with common monomial factors of
    /// a sum pulled out. Numeric coefficients are dropped.
    pub fn factors(&self) -> Vec<Expr> {
        let e = self.simplify();
        let mut out = Vec::new();
        collect_factors(&e, &mut out);
        out
    }
}

fn collect_factors(e: &Expr, out: &mut Vec<Expr>) {
    match e.node() {
        Node::Num(_) => {}
        Node::Mul(fs) => {
            for f in fs {
                collect_factors(f, out);
            }
        }
        Node::Pow(b, k) => {
            let mut inner = Vec::new();
            collect_factors(b, &mut inner);
            out.extend(inner.into_iter().map(|f| Expr::pow(f, *k)));
        }
        Node::Add(ts) => {
            // common (base, min exponent) over all terms
            let monos: Vec<BTreeMap<Expr, i64>> = ts.iter().map(monomial_powers).collect();
            let mut common = monos[0].clone();
            for m in &monos[1..] {
                common.retain(|b, k| match m.get(b) {
                    Some(j) if (*j > 0) == (*k > 0) => {
                        *k = if *k > 0 { (*k).min(*j) } else { (*k).max(*j) };
                        true
                    }
                    _ => false,
                });
            }
            if common.is_empty() {
                out.push(e.clone());
                return;
            }
            let divisor = Expr::mul(common.iter().map(|(b, k)| Expr::pow(b.clone(), -k)).collect());
            let rest = Expr::add(ts.iter().map(|t| t.clone() * divisor.clone()).collect());
            for (b, k) in common {
                collect_factors(&Expr::pow(b, k), out);
            }
            collect_factors(&rest, out);
        }
        _ => out.push(e.clone()),
    }
}

fn monomial_powers(t: &Expr) -> BTreeMap<Expr, i64> {
    let mut m = BTreeMap::new();
    let fs: Vec<Expr> = match t.node() {
        Node::Mul(fs) => fs.clone(),
        _ => vec![t.clone()],
    };
    for f in fs {
        match f.node() {
            Node::Num(_) => {}
            Node::Pow(b, k) => {
                m.insert(b.clone(), *k);
            }
            _ => {
                m.insert(f.clone(), 1);
            }
        }
    }
    m
}

fn fold_func(f: Func, n: Number) -> Option<Number> {
    if n.is_zero() {
        return match f {
            Func::Sin | Func::Tan | Func::Sqrt => Some(Number::ZERO),
            Func::Cos | Func::Exp => Some(Number::ONE),
            Func::Ln => None,
        };
    }
    if f == Func::Ln && n.is_one() {
        return Some(Number::ZERO);
    }
    if f == Func::Sqrt {
        if let Some(r) = n.as_rational() {
            let root = |v: i64| -> Option<i64> {
                if v < 0 {
                    return None;
                }
                let s = (v as f64).sqrt().round() as i64;
                (s.checked_mul(s) == Some(v)).then_some(s)
            };
            if let (Some(a), Some(b)) = (root(*r.numer()), root(*r.denom())) {
                return Some(Number::ratio(a, b));
            }
        }
    }
    // Float arguments fold; exact arguments without an exact image stay
    // symbolic so that rational arithmetic never degrades to floats.
    match n {
        Number::Float(x) => f.apply(x).ok().filter(|v| v.is_finite()).map(Number::float),
        Number::Rational(_) => None,
    }
}

fn is_negated(e: &Expr) -> bool {
    match e.node() {
        Node::Num(n) => n.is_negative(),
        Node::Mul(fs) => fs[0].as_number().is_some_and(|n| n.is_negative()),
        _ => false,
    }
}

fn split_coeff(t: &Expr) -> (Number, Expr) {
    if let Node::Mul(fs) = t.node() {
        if let Some(c) = fs[0].as_number() {
            let rest = if fs.len() == 2 {
                fs[1].clone()
            } else {
                Expr::make(Node::Mul(fs[1..].to_vec()), true)
            };
            return (c, rest);
        }
    }
    (Number::ONE, t.clone())
}

/// Sums absorb scalar multiples of sums term by term, so `c*(a + b)`
/// never survives inside a sum.
fn absorb_term(t: &Expr, constant: &mut Number, coll: &mut BTreeMap<Expr, Number>) {
    absorb_scaled(Number::ONE, t, constant, coll);
}

fn absorb_scaled(scale: Number, t: &Expr, constant: &mut Number, coll: &mut BTreeMap<Expr, Number>) {
    if let Some(n) = t.as_number() {
        *constant = constant.add(scale.mul(n));
        return;
    }
    let (c, rest) = split_coeff(t);
    if let Node::Add(ts) = rest.node() {
        for s in ts {
            absorb_scaled(scale.mul(c), s, constant, coll);
        }
        return;
    }
    let slot = coll.entry(rest).or_insert(Number::ZERO);
    *slot = slot.add(scale.mul(c));
}

fn scaled(c: Number, rest: Expr) -> Expr {
    if c.is_one() {
        return rest;
    }
    let mut fs = vec![Expr::num(c)];
    match rest.node() {
        Node::Mul(inner) => fs.extend(inner.iter().cloned()),
        _ => fs.push(rest),
    }
    Expr::make(Node::Mul(fs), true)
}

/// Rewrite pairs `a*S^2*X + b*C^2*X` (S = sin u, C = cos u) as
/// `b*X + (a-b)*S^2*X`, repeatedly, so that sin^2 + cos^2 collapses.
fn pythagorean_merge(constant: &mut Number, coll: &mut BTreeMap<Expr, Number>) {
    for _ in 0..64 {
        let mut hit = None;
        'search: for rest in coll.keys() {
            for (base, k) in monomial_powers(rest) {
                let Node::Func(Func::Cos, u) = base.node() else { continue };
                if k < 2 {
                    continue;
                }
                let others: Vec<Expr> = monomial_factor_list(rest)
                    .into_iter()
                    .filter(|f| *f != base && !matches!(f.node(), Node::Pow(b, _) if *b == base))
                    .collect();
                let mut x = others.clone();
                if k > 2 {
                    x.push(Expr::pow(base.clone(), k - 2));
                }
                let x = Expr::mul(x);
                let partner = Expr::mul(vec![x.clone(), Expr::pow(u.sin(), 2)]);
                let (pc, prest) = split_coeff(&partner);
                if coll.contains_key(&prest) {
                    hit = Some((rest.clone(), x, prest, pc));
                    break 'search;
                }
            }
        }
        let Some((cos_term, x, sin_rest, sin_scale)) = hit else { return };
        let b = coll.remove(&cos_term).unwrap();
        let a = coll[&sin_rest].mul(sin_scale.powi(-1).unwrap_or(Number::ONE));
        // a*S^2*X + b*C^2*X = b*X + (a-b)*S^2*X
        let slot = coll.get_mut(&sin_rest).unwrap();
        *slot = a.add(-b).mul(sin_scale);
        absorb_term(&Expr::mul(vec![Expr::num(b), x]), constant, coll);
        coll.retain(|_, c| !c.is_zero());
    }
}

fn monomial_factor_list(t: &Expr) -> Vec<Expr> {
    match t.node() {
        Node::Mul(fs) => fs.iter().filter(|f| f.as_number().is_none()).cloned().collect(),
        _ => vec![t.clone()],
    }
}

fn expand_rec(e: &Expr, cache: &mut HashMap<Expr, Expr>) -> Expr {
    if let Some(r) = cache.get(e) {
        return r.clone();
    }
    let r = match e.node() {
        Node::Num(_) | Node::Var(_) => e.clone(),
        Node::Add(ts) => Expr::add(ts.iter().map(|t| expand_rec(t, cache)).collect()),
        Node::Mul(fs) => {
            let parts: Vec<Expr> = fs.iter().map(|f| expand_rec(f, cache)).collect();
            distribute(parts)
        }
        Node::Pow(b, k) => {
            let b = expand_rec(b, cache);
            if *k > 1 && *k <= 8 && matches!(b.node(), Node::Add(_)) {
                distribute(vec![b; *k as usize])
            } else {
                Expr::pow(b, *k)
            }
        }
        Node::Func(f, a) => Expr::func(*f, expand_rec(a, cache)),
        _ => expand_rec(&e.simplify(), cache),
    };
    cache.insert(e.clone(), r.clone());
    r
}

fn distribute(parts: Vec<Expr>) -> Expr {
    let mut acc: Vec<Expr> = vec![Expr::one()];
    for p in parts {
        let terms: Vec<Expr> = match p.node() {
            Node::Add(ts) => ts.clone(),
            _ => vec![p.clone()],
        };
        let mut next = Vec::with_capacity(acc.len() * terms.len());
        for a in &acc {
            for t in &terms {
                next.push(Expr::mul(vec![a.clone(), t.clone()]));
            }
        }
        acc = next;
    }
    Expr::add(acc)
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.node == other.0.node)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        let (a, b) = (self.node(), other.node());
        a.rank()
            .cmp(&b.rank())
            .then_with(|| match (a, b) {
                (Node::Num(x), Node::Num(y)) => x.cmp(y),
                (Node::Var(x), Node::Var(y)) => x.cmp(y),
                (Node::Func(f, x), Node::Func(g, y)) => f.cmp(g).then_with(|| x.cmp(y)),
                (Node::Pow(x, i), Node::Pow(y, j)) => x.cmp(y).then_with(|| i.cmp(j)),
                (Node::Mul(x), Node::Mul(y)) | (Node::Add(x), Node::Add(y)) => x.cmp(y),
                (Node::Neg(x), Node::Neg(y)) => x.cmp(y),
                (Node::Sub(x1, x2), Node::Sub(y1, y2)) | (Node::Div(x1, x2), Node::Div(y1, y2)) => x1.cmp(y1).then_with(|| x2.cmp(y2)),
                _ => Ordering::Equal,
            })
            // equal structure but different hash cannot happen; fall back on hash
            .then_with(|| self.0.hash.cmp(&other.0.hash))
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl std::ops::$tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add(vec![a, b]));
binop!(Sub, sub, |a, b| Expr::add(vec![a, b.neg()]));
binop!(Mul, mul, |a, b| Expr::mul(vec![a, b]));
binop!(Div, div, |a, b| Expr::mul(vec![a, Expr::pow(b, -1)]));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var("x")
    }
    fn y() -> Expr {
        Expr::var("y")
    }

    #[test]
    fn zero_times_plus_one_times() {
        let e = Expr::raw(Node::Add(vec![
            Expr::raw(Node::Mul(vec![Expr::zero(), x()])),
            Expr::raw(Node::Mul(vec![Expr::one(), y()])),
        ]));
        assert_eq!(e.simplify(), y());
    }

    #[test]
    fn difference_of_equal_sums_is_literal_zero() {
        let s = Expr::raw(Node::Add(vec![x(), y()]));
        let e = Expr::raw(Node::Sub(s.clone(), s));
        assert!(e.simplify().is_zero());
    }

    #[test]
    fn like_terms_and_powers_collect() {
        let e = &(&x() * &y()) + &(&y() * &x());
        assert_eq!(e, Expr::int(2) * x() * y());
        assert_eq!(x() * x() / x(), x());
        assert_eq!(Expr::pow(x() * y(), 2), Expr::pow(x(), 2) * Expr::pow(y(), 2));
    }

    #[test]
    fn pythagorean_pairs_collapse() {
        let q = Expr::var("q");
        let e = Expr::pow(q.sin(), 2) + Expr::pow(q.cos(), 2);
        assert!(e.is_one());
        let a = Expr::var("a");
        let e = &a * &Expr::pow(q.sin(), 2) + &a * &Expr::pow(q.cos(), 2) - a.clone();
        assert!(e.is_zero());
        let e = Expr::int(3) * Expr::pow(q.cos(), 2) + Expr::pow(q.sin(), 2);
        assert_eq!(e, Expr::int(3) - Expr::int(2) * Expr::pow(q.sin(), 2));
    }

    #[test]
    fn scaled_sums_distribute_inside_sums_only() {
        let s = x() + y();
        let scaled = Expr::int(2) * s.clone();
        assert!(matches!(scaled.node(), Node::Mul(_)));
        assert_eq!(scaled + Expr::one(), Expr::int(2) * x() + Expr::int(2) * y() + Expr::one());
        assert!((s.neg() + s).is_zero());
    }

    #[test]
    fn expand_distributes() {
        let e = Expr::pow(x() + y(), 2).expand();
        let want = Expr::pow(x(), 2) + Expr::int(2) * x() * y() + Expr::pow(y(), 2);
        assert_eq!(e, want);
    }

    #[test]
    fn odd_functions_pull_out_sign() {
        assert_eq!(Expr::func(Func::Sin, x().neg()), x().sin().neg());
        assert_eq!(Expr::func(Func::Cos, x().neg()), x().cos());
    }

    #[test]
    fn factors_pull_common_monomials() {
        let f = Expr::var("f");
        let phi = Expr::var("phi");
        let e = &f * &(&f * &phi.cos() + Expr::var("g") * phi.sin());
        let fs = e.expand().factors();
        assert!(fs.contains(&f));
        assert_eq!(fs.len(), 2);
    }

    #[test]
    fn free_vars_sorted() {
        let e = Expr::var("b") * Expr::var("a").sin() + Expr::var("b");
        let names: Vec<&str> = e.free_vars().iter().map(|s| &**s).collect();
        assert_eq!(names, vec!["a", "b"]);
        assert!(e.contains_var("a"));
        assert!(!e.contains_var("c"));
    }
}
