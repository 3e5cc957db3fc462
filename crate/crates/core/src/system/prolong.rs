use crate::expr::{Expr, SampleBox, SymbolTable};

use super::{Channel, IndexSet, OutputMap, ProlongationPattern, Provenance, SystemDefinition, SystemError};

/// Name of the stack coordinate holding the `k`-th derivative of `input`.
pub fn stack_name(input: &str, k: usize) -> String {
    format!("{input}_d{k}")
}

/// Name of the virtual input driving a chain of `l` integrators.
pub fn virtual_name(input: &str, l: usize) -> String {
    if l == 0 {
        input.to_string()
    } else {
        stack_name(input, l)
    }
}

/// `Σ_Ā^(ℓ)`: the reduced system with each surviving input behind a chain
/// of integrators.
///
/// State order is `x`, then for each surviving input in index order its
/// stack `u_i, u̇_i, .., u_i^(l_i - 1)`.
#[derive(Clone, Debug)]
pub struct ProlongedSystem {
    base: SystemDefinition,
    pattern: ProlongationPattern,
    removed: IndexSet,
    kept: Vec<usize>,
    state_names: Vec<String>,
    table: SymbolTable,
    drift: Vec<Expr>,
    cols: Vec<Vec<Expr>>,
    virtual_inputs: Vec<String>,
    stacks: Vec<Option<(usize, usize)>>,
    point: Vec<f64>,
    bbox: SampleBox,
}

impl ProlongedSystem {
    pub fn new(sys: &SystemDefinition, pattern: &ProlongationPattern, removed: &IndexSet) -> Result<Self, SystemError> {
        let (n, p) = (sys.n(), sys.p());
        if pattern.len() != p {
            return Err(SystemError::SizeMismatch {
                expected: p,
                got: pattern.len(),
            });
        }
        if let Some(bad) = removed.iter().find(|&i| i >= p) {
            return Err(SystemError::IndexOutOfRange { index: bad + 1, len: p });
        }
        if removed.len() == p {
            return Err(SystemError::RemovesAllInputs);
        }
        if let Some(i) = removed.iter().find(|&i| pattern.get(i) > 0) {
            return Err(SystemError::PatternViolation {
                input: i + 1,
                order: pattern.get(i),
            });
        }
        let kept: Vec<usize> = removed.complement(p).iter().collect();
        let mut state_names = sys.states.clone();
        let mut table = sys.table();
        let mut point = sys.operating_point.clone();
        let (mut lo, mut hi): (Vec<f64>, Vec<f64>) = sys.state_box.iter().copied().unzip();
        let mut stacks = vec![None; p];
        let mut drift = sys.f.clone();
        for &i in &kept {
            let l = pattern.get(i);
            if l == 0 {
                continue;
            }
            let offset = state_names.len();
            stacks[i] = Some((offset, l));
            let (blo, bhi) = sys.input_box[i];
            let half = 0.5 * (bhi - blo);
            for k in 0..l {
                let name = stack_name(&sys.inputs[i], k);
                table.add_var(&name)?;
                state_names.push(name);
                if k == 0 {
                    point.push(sys.input_point[i]);
                    lo.push(blo);
                    hi.push(bhi);
                } else {
                    point.push(0.0);
                    lo.push(-half);
                    hi.push(half);
                }
            }
            let u = Expr::var(&stack_name(&sys.inputs[i], 0));
            for (d, gk) in drift.iter_mut().zip(&sys.g[i]) {
                *d = &*d + &(gk * &u);
            }
        }
        // chain dynamics: d/dt u_dk = u_d(k+1), top of chain driven by v
        for &i in &kept {
            if let Some((_, l)) = stacks[i] {
                for k in 0..l {
                    drift.push(if k + 1 < l {
                        Expr::var(&stack_name(&sys.inputs[i], k + 1))
                    } else {
                        Expr::zero()
                    });
                }
            }
        }
        let dim = state_names.len();
        let mut cols = Vec::with_capacity(kept.len());
        let mut virtual_inputs = Vec::with_capacity(kept.len());
        for &i in &kept {
            let mut col = vec![Expr::zero(); dim];
            match stacks[i] {
                None => col[..n].clone_from_slice(&sys.g[i]),
                Some((off, l)) => col[off + l - 1] = Expr::one(),
            }
            cols.push(col);
            virtual_inputs.push(virtual_name(&sys.inputs[i], pattern.get(i)));
        }
        Ok(ProlongedSystem {
            base: sys.clone(),
            pattern: pattern.clone(),
            removed: removed.clone(),
            kept,
            state_names,
            table,
            drift,
            cols,
            virtual_inputs,
            stacks,
            point,
            bbox: SampleBox::new(lo, hi),
        })
    }

    /// The unprolonged system itself (`ℓ = 0`, nothing removed).
    pub fn plain(sys: &SystemDefinition) -> Result<Self, SystemError> {
        Self::new(sys, &ProlongationPattern::zeros(sys.p()), &IndexSet::empty())
    }

    pub fn base(&self) -> &SystemDefinition {
        &self.base
    }

    pub fn pattern(&self) -> &ProlongationPattern {
        &self.pattern
    }

    pub fn removed(&self) -> &IndexSet {
        &self.removed
    }

    /// Base-system indices of the surviving inputs, in order.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    /// State dimension `n_ℓ`.
    pub fn n(&self) -> usize {
        self.state_names.len()
    }

    /// Number of virtual inputs.
    pub fn m(&self) -> usize {
        self.kept.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn virtual_inputs(&self) -> &[String] {
        &self.virtual_inputs
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn drift(&self) -> &[Expr] {
        &self.drift
    }

    /// Input columns, one per virtual input.
    pub fn cols(&self) -> &[Vec<Expr>] {
        &self.cols
    }

    /// Natural embedding of the base operating point.
    pub fn operating_point(&self) -> &[f64] {
        &self.point
    }

    pub fn bbox(&self) -> &SampleBox {
        &self.bbox
    }

    /// `(offset, length)` of the stack of base input `i`, if prolonged.
    pub fn stack(&self, i: usize) -> Option<(usize, usize)> {
        self.stacks.get(i).copied().flatten()
    }

    /// Position of base input `i` among the virtual inputs.
    pub fn virtual_index(&self, i: usize) -> Option<usize> {
        self.kept.iter().position(|&k| k == i)
    }

    /// Output channel `u_i` (derivative order zero) for base input `i`.
    pub fn input_channel(&self, i: usize) -> Result<Channel, SystemError> {
        let name = &self.base.inputs[i];
        if self.stack(i).is_none() {
            return Err(SystemError::UnprolongedInputChannel(name.clone()));
        }
        Ok(Channel {
            name: name.clone(),
            h: Expr::var(&stack_name(name, 0)),
            tag: Provenance::Input(i),
        })
    }

    /// `(y_Ō, u_A)`: the output without the entries in `drop`, followed by
    /// the input channels in `inputs`.
    pub fn augmented_output(&self, y: &OutputMap, drop: &IndexSet, inputs: &IndexSet) -> Result<OutputMap, SystemError> {
        let mut out = y.without(drop)?;
        for i in inputs.iter() {
            out.channels.push(self.input_channel(i)?);
        }
        Ok(out)
    }

    /// Copy of `base` with every stack coordinate of the inputs in `a` set
    /// to zero.
    pub fn zero_surface_point(&self, a: &IndexSet, base: &[f64]) -> Vec<f64> {
        let mut p = base.to_vec();
        for i in a.iter() {
            if let Some((off, l)) = self.stack(i) {
                p[off..off + l].iter_mut().for_each(|v| *v = 0.0);
            }
        }
        p
    }

    /// Physical input values of the base system at state `x` under virtual
    /// input `v`. Removed inputs read as zero.
    pub fn physical_inputs(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        (0..self.base.p())
            .map(|i| match (self.stack(i), self.virtual_index(i)) {
                (Some((off, _)), _) => x[off],
                (None, Some(j)) => v[j],
                (None, None) => 0.0,
            })
            .collect()
    }
}

impl SystemDefinition {
    /// `Σ_Ā^(ℓ)`; see [`ProlongedSystem`].
    pub fn prolong(&self, pattern: &ProlongationPattern, removed: &IndexSet) -> Result<ProlongedSystem, SystemError> {
        ProlongedSystem::new(self, pattern, removed)
    }
}
