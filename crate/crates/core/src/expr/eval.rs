use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use super::{Expr, ExprError, Func, Node, Number};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of non-positive value {0}")]
    LnNonPositive(f64),
    #[error("square root of negative value {0}")]
    SqrtNegative(f64),
    #[error("non-finite intermediate value")]
    NonFinite,
}

/// Ordered variable names plus bound parameters.
///
/// Variables get consecutive slots; evaluation points are slices indexed by
/// slot. Parameters are constants and never occupy a slot.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    names: Vec<Arc<str>>,
    index: HashMap<Arc<str>, usize>,
    params: Vec<(Arc<str>, Number)>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vars<I, S>(names: I) -> Result<Self, ExprError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut t = Self::new();
        for n in names {
            t.add_var(n.as_ref())?;
        }
        Ok(t)
    }

    fn taken(&self, name: &str) -> bool {
        self.index.contains_key(name) || self.params.iter().any(|(p, _)| &**p == name)
    }

    pub fn add_var(&mut self, name: &str) -> Result<usize, ExprError> {
        if self.taken(name) {
            return Err(ExprError::DuplicateSymbol(name.to_string()));
        }
        let name: Arc<str> = Arc::from(name);
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        Ok(self.names.len() - 1)
    }

    pub fn add_param(&mut self, name: &str, value: Number) -> Result<(), ExprError> {
        if self.taken(name) {
            return Err(ExprError::DuplicateSymbol(name.to_string()));
        }
        self.params.push((Arc::from(name), value));
        Ok(())
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn param(&self, name: &str) -> Option<Number> {
        self.params.iter().find(|(p, _)| &**p == name).map(|(_, v)| *v)
    }

    pub fn params(&self) -> &[(Arc<str>, Number)] {
        &self.params
    }

    pub fn names(&self) -> &[Arc<str>] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.taken(name)
    }
}

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Var(usize),
    Add(usize, usize),
    Mul(usize, usize),
    Neg(usize),
    Sub(usize, usize),
    Div(usize, usize),
    Pow(usize, i64),
    Func(Func, usize),
}

/// Straight-line program evaluating several expressions at once.
///
/// Structurally equal subexpressions are computed once.
#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    args: Vec<usize>,
    outputs: Vec<usize>,
    dim: usize,
}

struct Compiler<'a> {
    table: &'a SymbolTable,
    ops: Vec<Op>,
    args: Vec<usize>,
    seen: HashMap<Expr, usize>,
}

impl Compiler<'_> {
    fn push(&mut self, op: Op) -> usize {
        self.ops.push(op);
        self.ops.len() - 1
    }

    fn list(&mut self, items: &[Expr]) -> Result<(usize, usize), ExprError> {
        let regs = items.iter().map(|c| self.emit(c)).collect::<Result<Vec<_>, _>>()?;
        let start = self.args.len();
        self.args.extend(regs);
        Ok((start, items.len()))
    }

    fn emit(&mut self, e: &Expr) -> Result<usize, ExprError> {
        if let Some(&r) = self.seen.get(e) {
            return Ok(r);
        }
        let op = match e.node() {
            Node::Num(n) => Op::Const(n.to_f64()),
            Node::Var(name) => match self.table.slot(name) {
                Some(s) => Op::Var(s),
                None => match self.table.param(name) {
                    Some(v) => Op::Const(v.to_f64()),
                    None => return Err(ExprError::UnknownSymbol(name.to_string())),
                },
            },
            Node::Add(ts) => {
                let (s, n) = self.list(ts)?;
                Op::Add(s, n)
            }
            Node::Mul(fs) => {
                let (s, n) = self.list(fs)?;
                Op::Mul(s, n)
            }
            Node::Neg(a) => Op::Neg(self.emit(a)?),
            Node::Sub(a, b) => Op::Sub(self.emit(a)?, self.emit(b)?),
            Node::Div(a, b) => Op::Div(self.emit(a)?, self.emit(b)?),
            Node::Pow(b, k) => Op::Pow(self.emit(b)?, *k),
            Node::Func(f, a) => Op::Func(*f, self.emit(a)?),
        };
        let r = self.push(op);
        self.seen.insert(e.clone(), r);
        Ok(r)
    }
}

fn powi(x: f64, k: i64) -> Result<f64, EvalError> {
    if x == 0.0 && k < 0 {
        return Err(EvalError::DivisionByZero);
    }
    Ok(if let Ok(k32) = i32::try_from(k) {
        x.powi(k32)
    } else {
        x.powf(k as f64)
    })
}

impl Tape {
    pub fn compile(exprs: &[Expr], table: &SymbolTable) -> Result<Tape, ExprError> {
        let mut c = Compiler {
            table,
            ops: Vec::new(),
            args: Vec::new(),
            seen: HashMap::new(),
        };
        let outputs = exprs.iter().map(|e| c.emit(e)).collect::<Result<Vec<_>, _>>()?;
        Ok(Tape {
            ops: c.ops,
            args: c.args,
            outputs,
            dim: table.len(),
        })
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn n_ops(&self) -> usize {
        self.ops.len()
    }

    /// Evaluate all outputs at `point` (indexed by symbol slot).
    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut regs = Vec::with_capacity(self.ops.len());
        let mut out = vec![0.0; self.outputs.len()];
        self.eval_into(point, &mut regs, &mut out)?;
        Ok(out)
    }

    /// Allocation-free variant reusing `regs` between calls.
    pub fn eval_into(&self, point: &[f64], regs: &mut Vec<f64>, out: &mut [f64]) -> Result<(), EvalError> {
        debug_assert!(point.len() >= self.dim);
        regs.clear();
        for op in &self.ops {
            let v = match *op {
                Op::Const(c) => c,
                Op::Var(s) => point[s],
                Op::Add(s, n) => self.args[s..s + n].iter().map(|&r| regs[r]).sum(),
                Op::Mul(s, n) => self.args[s..s + n].iter().map(|&r| regs[r]).product(),
                Op::Neg(a) => -regs[a],
                Op::Sub(a, b) => regs[a] - regs[b],
                Op::Div(a, b) => {
                    if regs[b] == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    regs[a] / regs[b]
                }
                Op::Pow(a, k) => powi(regs[a], k)?,
                Op::Func(f, a) => f.apply(regs[a])?,
            };
            if !v.is_finite() {
                return Err(EvalError::NonFinite);
            }
            regs.push(v);
        }
        for (o, &r) in out.iter_mut().zip(&self.outputs) {
            *o = regs[r];
        }
        Ok(())
    }

    /// Evaluate values together with a rounding-error scale per output.
    ///
    /// The scale bounds how large the value could look purely from
    /// floating-point cancellation; zero tests compare against it.
    pub fn eval_with_magnitude(&self, point: &[f64]) -> Result<Vec<(f64, f64)>, EvalError> {
        let mut val: Vec<f64> = Vec::with_capacity(self.ops.len());
        let mut mag: Vec<f64> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let (v, m) = match *op {
                Op::Const(c) => (c, c.abs()),
                Op::Var(s) => (point[s], point[s].abs()),
                Op::Add(s, n) => {
                    let rs = &self.args[s..s + n];
                    (rs.iter().map(|&r| val[r]).sum(), rs.iter().map(|&r| mag[r]).sum())
                }
                Op::Mul(s, n) => {
                    let rs = &self.args[s..s + n];
                    (rs.iter().map(|&r| val[r]).product(), rs.iter().map(|&r| mag[r]).product())
                }
                Op::Neg(a) => (-val[a], mag[a]),
                Op::Sub(a, b) => (val[a] - val[b], mag[a] + mag[b]),
                Op::Div(a, b) => {
                    if val[b] == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    let q = val[a] / val[b];
                    (q, mag[a] / val[b].abs() + q.abs() * mag[b] / val[b].abs())
                }
                Op::Pow(a, k) => {
                    let v = powi(val[a], k)?;
                    let m = if k > 0 {
                        powi(mag[a], k)?
                    } else {
                        v.abs() * (1.0 + (k.unsigned_abs() as f64) * mag[a] / val[a].abs())
                    };
                    (v, m)
                }
                Op::Func(f, a) => {
                    let (x, mx) = (val[a], mag[a]);
                    let v = f.apply(x)?;
                    let slope = match f {
                        Func::Sin => x.cos().abs(),
                        Func::Cos => x.sin().abs(),
                        Func::Tan => 1.0 + v * v,
                        Func::Exp => v,
                        Func::Ln => 1.0 / x,
                        Func::Sqrt => 0.5 / v.max(f64::MIN_POSITIVE),
                    };
                    (v, v.abs() + slope * mx)
                }
            };
            if !v.is_finite() {
                return Err(EvalError::NonFinite);
            }
            val.push(v);
            mag.push(if m.is_finite() { m } else { f64::MAX });
        }
        Ok(self.outputs.iter().map(|&r| (val[r], mag[r])).collect())
    }
}

impl Expr {
    /// One-shot evaluation; compile a [`Tape`] for repeated use.
    pub fn eval(&self, table: &SymbolTable, point: &[f64]) -> Result<f64, EvalError> {
        let tape = Tape::compile(std::slice::from_ref(self), table).map_err(|e| match e {
            ExprError::UnknownSymbol(s) => EvalError::UnknownSymbol(s),
            other => EvalError::UnknownSymbol(other.to_string()),
        })?;
        Ok(tape.eval(point)?[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    #[test]
    fn shared_subexpressions_compile_once() {
        let t = SymbolTable::with_vars(["x", "y"]).unwrap();
        let e = parse_expression("sin(x*y)^2 + sin(x*y)", &t).unwrap();
        let tape = Tape::compile(std::slice::from_ref(&e), &t).unwrap();
        // x, y, x*y, sin, pow, constant-free add
        assert_eq!(tape.n_ops(), 6);
        let v = tape.eval(&[0.5, 2.0]).unwrap()[0];
        let s = 1.0f64.sin();
        assert!((v - (s * s + s)).abs() < 1e-15);
    }

    #[test]
    fn explicit_domain_errors() {
        let t = SymbolTable::with_vars(["x"]).unwrap();
        let at = |s: &str, x: f64| parse_expression(s, &t).unwrap().eval(&t, &[x]);
        assert_eq!(at("1/x", 0.0), Err(EvalError::DivisionByZero));
        assert_eq!(at("ln(x)", -1.0), Err(EvalError::LnNonPositive(-1.0)));
        assert_eq!(at("sqrt(x)", -4.0), Err(EvalError::SqrtNegative(-4.0)));
        assert_eq!(at("sqrt(x)", 4.0), Ok(2.0));
    }

    #[test]
    fn parameters_evaluate_as_constants() {
        let mut t = SymbolTable::with_vars(["x"]).unwrap();
        t.add_param("m", Number::int(2)).unwrap();
        let e = Expr::var("x") * Expr::var("m");
        assert_eq!(e.eval(&t, &[3.0]), Ok(6.0));
        assert!(t.add_var("m").is_err());
    }
}
