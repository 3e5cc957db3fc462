//! Output derivatives with symbolic input jets.
//!
//! Differentiating an output of the base system along
//! `f + Σ g_j u_j` while treating `u_j, u̇_j, ..` as coordinates gives, for
//! every input, the first derivative order `c_ij` at which it acts on the
//! channel and the coefficient `a_ij` it enters with. On a prolongation
//! with `l_j` integrators the input `v_j` then first shows up at order
//! `c_ij + l_j`, so one table answers the relative-degree question for
//! every pattern at once. Removing inputs commutes with differentiation,
//! so reduced systems reuse the same derivatives with their jets set to
//! zero.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::expr::{Expr, SampleBox, SymbolTable, Tape, ZeroTester};
use crate::system::{stack_name, IndexSet, OutputMap, SystemDefinition};

use super::{LieContext, LinearizationError, Tolerances};

/// Derivative tower of an output with the input jets kept symbolic.
#[derive(Debug)]
pub struct JetExpansion {
    sys: SystemDefinition,
    output: OutputMap,
    jet_order: usize,
    table: SymbolTable,
    bbox: SampleBox,
    lie: LieContext,
    field: Vec<Expr>,
    tester: ZeroTester,
    derivs: Vec<Mutex<Vec<Expr>>>,
}

/// First-appearance orders and coefficients for one removed set.
#[derive(Clone, Debug)]
pub struct AppearanceTable {
    pub removed: IndexSet,
    /// `c[i][j]`: first order at which input `j` acts on channel `i`.
    pub c: Vec<Vec<Option<usize>>>,
    /// Coefficient of `u_j` in `y_i^(c_ij)`; zero when `c` is `None`.
    pub a: Vec<Vec<Expr>>,
    /// Channels where some structurally reachable input never appeared
    /// before the order cap.
    pub capped: Vec<bool>,
    tape: Option<Arc<Tape>>,
}

impl JetExpansion {
    /// `jet_order` bounds the derivative order that can be requested.
    pub fn new(sys: &SystemDefinition, output: &OutputMap, jet_order: usize, tol: &Tolerances) -> Result<Self, LinearizationError> {
        let mut table = sys.table();
        let mut names = sys.states.clone();
        let (mut lo, mut hi): (Vec<f64>, Vec<f64>) = sys.state_box.iter().copied().unzip();
        for (j, u) in sys.inputs.iter().enumerate() {
            let (blo, bhi) = sys.input_box[j];
            let half = 0.5 * (bhi - blo);
            for q in 0..=jet_order {
                let name = stack_name(u, q);
                table.add_var(&name)?;
                names.push(name);
                if q == 0 {
                    lo.push(blo);
                    hi.push(bhi);
                } else {
                    lo.push(-half);
                    hi.push(half);
                }
            }
        }
        let mut field = sys.f.clone();
        for (j, u) in sys.inputs.iter().enumerate() {
            let uj = Expr::var(&stack_name(u, 0));
            for (fk, gk) in field.iter_mut().zip(&sys.g[j]) {
                if !gk.is_zero() {
                    *fk = &*fk + &(gk * &uj);
                }
            }
        }
        for u in &sys.inputs {
            for q in 0..=jet_order {
                field.push(if q < jet_order {
                    Expr::var(&stack_name(u, q + 1))
                } else {
                    Expr::zero()
                });
            }
        }
        let bbox = SampleBox::new(lo, hi);
        let tester = ZeroTester::new(table.clone(), bbox.clone(), tol.zero);
        Ok(JetExpansion {
            sys: sys.clone(),
            output: output.clone(),
            jet_order,
            lie: LieContext::new(&names),
            table,
            bbox,
            field,
            tester,
            derivs: output.channels.iter().map(|c| Mutex::new(vec![c.h.simplify()])).collect(),
        })
    }

    pub fn system(&self) -> &SystemDefinition {
        &self.sys
    }

    pub fn output(&self) -> &OutputMap {
        &self.output
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn bbox(&self) -> &SampleBox {
        &self.bbox
    }

    pub fn jet_order(&self) -> usize {
        self.jet_order
    }

    /// `y_i^(k)` of the full system.
    pub fn derivative(&self, i: usize, k: usize) -> Expr {
        assert!(k <= self.jet_order, "derivative order {k} beyond the jet order");
        let mut d = self.derivs[i].lock().unwrap();
        while d.len() <= k {
            let next = self.lie.lie(d.last().unwrap(), &self.field);
            d.push(next);
        }
        d[k].clone()
    }

    fn zero_map(&self, removed: &IndexSet) -> HashMap<Arc<str>, Expr> {
        let mut map = HashMap::new();
        for j in removed.iter() {
            for q in 0..=self.jet_order {
                map.insert(Arc::from(stack_name(&self.sys.inputs[j], q).as_str()), Expr::zero());
            }
        }
        map
    }

    /// Inputs outside `removed` whose columns touch a state reachable from
    /// channel `i` through the dynamics.
    fn reachable_inputs(&self, i: usize, removed: &IndexSet) -> Vec<usize> {
        let sys = &self.sys;
        let index: HashMap<&str, usize> = sys.states.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
        let kept: Vec<usize> = removed.complement(sys.p()).iter().collect();
        let mut seen = HashSet::new();
        let mut stack: Vec<usize> = self.output.channels[i]
            .h
            .free_vars()
            .iter()
            .filter_map(|v| index.get(&**v).copied())
            .collect();
        while let Some(k) = stack.pop() {
            if !seen.insert(k) {
                continue;
            }
            let deps = std::iter::once(&sys.f[k]).chain(kept.iter().map(|&j| &sys.g[j][k]));
            for e in deps {
                for v in e.free_vars() {
                    if let Some(&s) = index.get(&**v) {
                        stack.push(s);
                    }
                }
            }
        }
        kept.into_iter().filter(|&j| seen.iter().any(|&k| !sys.g[j][k].is_zero())).collect()
    }

    /// First-appearance table of the system with the inputs in `removed`
    /// switched off, searching derivative orders up to `max_order`.
    pub fn appearance(&self, removed: &IndexSet, max_order: usize) -> Result<AppearanceTable, LinearizationError> {
        let max_order = max_order.min(self.jet_order);
        let p = self.sys.p();
        let zero = self.zero_map(removed);
        let rows: Vec<(Vec<Option<usize>>, Vec<Expr>, bool)> = (0..self.output.len())
            .into_par_iter()
            .map(|i| -> Result<_, LinearizationError> {
                let mut c = vec![None; p];
                let mut a = vec![Expr::zero(); p];
                let mut open = self.reachable_inputs(i, removed);
                let mut k = 1;
                while !open.is_empty() && k <= max_order {
                    let e = self.derivative(i, k).substitute(&zero);
                    let coeffs: Vec<Expr> = open.iter().map(|&j| e.differentiate(&stack_name(&self.sys.inputs[j], 0))).collect();
                    let verdicts = self.tester.test_many(&coeffs)?;
                    let mut still = Vec::new();
                    for ((j, coeff), v) in open.iter().zip(coeffs).zip(verdicts) {
                        if v.is_zero() {
                            still.push(*j);
                        } else {
                            c[*j] = Some(k);
                            a[*j] = coeff;
                        }
                    }
                    open = still;
                    k += 1;
                }
                Ok((c, a, !open.is_empty()))
            })
            .collect::<Result<_, _>>()?;
        let mut t = AppearanceTable {
            removed: removed.clone(),
            c: Vec::new(),
            a: Vec::new(),
            capped: Vec::new(),
            tape: None,
        };
        for (c, a, capped) in rows {
            t.c.push(c);
            t.a.push(a);
            t.capped.push(capped);
        }
        let exprs: Vec<Expr> = t.a.iter().flatten().cloned().collect();
        t.tape = Some(Arc::new(Tape::compile(&exprs, &self.table)?));
        Ok(t)
    }

    /// Screening points in jet coordinates: the embedded operating point
    /// first, then `n` random points. Jets of the inputs in `zero` are set
    /// to zero.
    pub fn sample_points(&self, n: usize, seed: u64, zero: &IndexSet) -> Vec<Vec<f64>> {
        let sys = &self.sys;
        let mut op = sys.operating_point.clone();
        for j in 0..sys.p() {
            op.push(sys.input_point[j]);
            op.extend(std::iter::repeat_n(0.0, self.jet_order));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = vec![op];
        pts.extend((0..n).map(|_| self.bbox.random_point(&mut rng)));
        let stride = self.jet_order + 1;
        for pt in &mut pts {
            for j in zero.iter() {
                let off = sys.n() + j * stride;
                pt[off..off + stride].iter_mut().for_each(|v| *v = 0.0);
            }
        }
        pts
    }
}

impl AppearanceTable {
    pub fn n_channels(&self) -> usize {
        self.c.len()
    }

    /// Relative degree of channel `i` on a prolongation, over the inputs in
    /// `kept`, with the inputs attaining it.
    pub fn degree(&self, i: usize, pattern: &[usize], kept: &[usize]) -> Option<(usize, Vec<usize>)> {
        let orders: Vec<(usize, usize)> = kept.iter().filter_map(|&j| self.c[i][j].map(|c| (j, c + pattern[j]))).collect();
        let r = orders.iter().map(|o| o.1).min()?;
        Some((r, orders.iter().filter(|o| o.1 == r).map(|o| o.0).collect()))
    }

    /// Coefficient values `a_ij` at a point, row-major; `None` where the
    /// coefficients cannot be evaluated.
    pub fn coefficients_at(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.tape.as_ref()?.eval(x).ok()
    }

    pub fn n_inputs(&self) -> usize {
        self.c.first().map(Vec::len).unwrap_or(0)
    }
}
