use crate::expr::{Expr, Number, SymbolTable};

use super::{slice, IndexSet, SystemError};

/// Where an output channel comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Entry `j` (zero-based) of the original output.
    Output(usize),
    /// Input `j` (zero-based of the base system) at derivative order zero.
    Input(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub name: String,
    pub h: Expr,
    pub tag: Provenance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputMap {
    pub name: String,
    pub channels: Vec<Channel>,
}

impl OutputMap {
    pub fn new(name: &str, channels: Vec<(String, Expr)>) -> Self {
        OutputMap {
            name: name.to_string(),
            channels: channels
                .into_iter()
                .enumerate()
                .map(|(j, (name, h))| Channel {
                    name,
                    h,
                    tag: Provenance::Output(j),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn exprs(&self) -> Vec<Expr> {
        self.channels.iter().map(|c| c.h.clone()).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.channels.iter().map(|c| c.name.clone()).collect()
    }

    /// Channels indexed by `keep`, provenance tags preserved.
    pub fn select(&self, keep: &IndexSet) -> Result<OutputMap, SystemError> {
        Ok(OutputMap {
            name: self.name.clone(),
            channels: slice(&self.channels, keep)?,
        })
    }

    /// Output with the channels in `drop` removed (`y_Ō` for `drop = O`).
    pub fn without(&self, drop: &IndexSet) -> Result<OutputMap, SystemError> {
        self.select(&drop.complement(self.len()))
    }
}

/// An input-affine system `ẋ = f(x) + Σ g_i(x) u_i` with its operating
/// region.
///
/// Parameters are substituted into the expressions when the system is
/// parsed; they are kept here only to reproduce the source file.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemDefinition {
    pub name: String,
    pub params: Vec<(String, Number)>,
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub f: Vec<Expr>,
    /// One column per input, each of length `n`.
    pub g: Vec<Vec<Expr>>,
    pub operating_point: Vec<f64>,
    pub state_box: Vec<(f64, f64)>,
    /// Nominal input values, used for the stack coordinates of prolonged
    /// systems.
    pub input_point: Vec<f64>,
    pub input_box: Vec<(f64, f64)>,
    pub outputs: Vec<OutputMap>,
}

impl SystemDefinition {
    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn p(&self) -> usize {
        self.inputs.len()
    }

    /// Symbol table of the state variables (parameters included).
    pub fn table(&self) -> SymbolTable {
        let mut t = SymbolTable::new();
        for (name, v) in &self.params {
            // duplicates were rejected at construction time
            let _ = t.add_param(name, *v);
        }
        for s in &self.states {
            let _ = t.add_var(s);
        }
        t
    }

    pub fn output(&self, name: &str) -> Option<&OutputMap> {
        self.outputs.iter().find(|o| o.name == name)
    }

    pub fn default_output(&self) -> Option<&OutputMap> {
        self.outputs.first()
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|u| u == name)
    }

    /// Check the dimension and symbol invariants.
    pub fn validate(&self) -> Result<(), SystemError> {
        let (n, p) = (self.n(), self.p());
        let dim = |what: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(SystemError::Dimension(format!("{what} has {got} entries, expected {want}")))
            }
        };
        dim("f", self.f.len(), n)?;
        dim("input column list", self.g.len(), p)?;
        for (i, col) in self.g.iter().enumerate() {
            dim(&format!("column g {}", self.inputs[i]), col.len(), n)?;
        }
        dim("operating point", self.operating_point.len(), n)?;
        dim("state box", self.state_box.len(), n)?;
        dim("input point", self.input_point.len(), p)?;
        dim("input box", self.input_box.len(), p)?;
        let mut names: Vec<&String> = self.states.iter().chain(&self.inputs).collect();
        names.extend(self.params.iter().map(|(k, _)| k));
        let before = names.len();
        names.sort();
        names.dedup();
        if names.len() != before {
            return Err(SystemError::Dimension("state, input and parameter names must be unique".into()));
        }
        for ((x, (lo, hi)), s) in self.operating_point.iter().zip(&self.state_box).zip(&self.states) {
            if !(lo <= x && x <= hi) {
                return Err(SystemError::Dimension(format!("box for {s} does not contain the operating point")));
            }
        }
        let exprs = self.f.iter().chain(self.g.iter().flatten());
        for e in exprs.chain(self.outputs.iter().flat_map(|o| o.channels.iter().map(|c| &c.h))) {
            for v in e.free_vars() {
                if !self.states.iter().any(|s| **s == **v) {
                    return Err(SystemError::Expr(crate::expr::ExprError::UnknownSymbol(v.to_string())));
                }
            }
        }
        Ok(())
    }

    /// The reduced system keeping only the inputs outside `removed`.
    pub fn remove_inputs(&self, removed: &IndexSet) -> Result<SystemDefinition, SystemError> {
        if removed.iter().any(|i| i >= self.p()) {
            return Err(SystemError::IndexOutOfRange {
                index: removed.iter().max().unwrap() + 1,
                len: self.p(),
            });
        }
        if removed.len() == self.p() {
            return Err(SystemError::RemovesAllInputs);
        }
        let keep = removed.complement(self.p());
        Ok(SystemDefinition {
            inputs: slice(&self.inputs, &keep)?,
            g: slice(&self.g, &keep)?,
            input_point: slice(&self.input_point, &keep)?,
            input_box: slice(&self.input_box, &keep)?,
            ..self.clone()
        })
    }
}
