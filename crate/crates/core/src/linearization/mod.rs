//! Relative degrees, decoupling matrices and validity sampling.
//!
//! The direct route works on a [`ProlongedSystem`]: it differentiates each
//! output channel along the drift until some input column acts on it. The
//! result is a [`RelativeDegreeProfile`], whose flatness verdict is backed by
//! a [`ValiditySample`] of the decoupling matrix.

mod jets;
mod validity;

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{EvalError, Expr, ExprError, SampleBox, SymbolTable, Tape, ZeroTestConfig, ZeroTestError, ZeroTester};
use crate::system::{Channel, OutputMap, ProlongedSystem, SystemError};

pub use jets::{AppearanceTable, JetExpansion};
pub use validity::{compatible, normalized_det, sample_validity, symbolic_determinant, Compatibility, ValiditySample};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearizationError {
    #[error("output has {channels} channels but the system has {inputs} inputs")]
    NonSquare { channels: usize, inputs: usize },
    #[error("decoupling matrix is singular at the evaluation point (normalized det {det:e})")]
    Singular { det: f64 },
    #[error("relative degree of channel `{0}` is undefined")]
    Undefined(String),
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Numerical knobs shared by every flatness test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub zero: ZeroTestConfig,
    /// Threshold on the row-normalized determinant.
    pub tol_rank: f64,
    /// Low-discrepancy points drawn for validity sampling, besides `x°`.
    pub validity_samples: usize,
    pub validity_seed: u64,
    /// Relative-degree search stops at `n_ℓ + cap_extra`.
    pub cap_extra: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero: ZeroTestConfig::default(),
            tol_rank: 1e-8,
            validity_samples: 256,
            validity_seed: 0x7a11d,
            cap_extra: 2,
        }
    }
}

impl Tolerances {
    pub fn with_seed(seed: u64) -> Self {
        let mut t = Tolerances::default();
        t.zero.seed = seed;
        t.validity_seed = seed.wrapping_add(0x7a11d);
        t
    }
}

/// Differentiation along a vector field over named coordinates.
#[derive(Clone, Debug)]
pub struct LieContext {
    index: HashMap<Arc<str>, usize>,
    expand: bool,
}

impl LieContext {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Self {
        LieContext {
            index: names.iter().enumerate().map(|(i, n)| (Arc::from(n.as_ref()), i)).collect(),
            expand: true,
        }
    }

    /// Keep results in canonical form without distributing products.
    pub fn without_expansion(mut self) -> Self {
        self.expand = false;
        self
    }

    pub fn lie(&self, h: &Expr, field: &[Expr]) -> Expr {
        let mut terms = Vec::new();
        for v in h.free_vars() {
            if let Some(&k) = self.index.get(v) {
                if !field[k].is_zero() {
                    terms.push(h.differentiate(v) * field[k].clone());
                }
            }
        }
        let s = Expr::add(terms);
        if self.expand {
            s.expand()
        } else {
            s
        }
    }

    /// `L_g h` for an input column; unit columns reduce to one partial.
    pub fn lie_col(&self, h: &Expr, col: &[Expr]) -> Expr {
        self.lie(h, col)
    }
}

/// `L_field h = Σ_k ∂h/∂x_k · field_k`, expanded.
pub fn lie_derivative<S: AsRef<str>>(h: &Expr, field: &[Expr], names: &[S]) -> Expr {
    LieContext::new(names).lie(h, field)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FlatFailure {
    /// No input reached the channel within the derivative cap.
    RelativeDegreeUndefined { channel: String },
    /// The relative degrees do not add up to the state dimension.
    DegreeSumMismatch { sum: usize, n: usize },
    /// Degrees add up but the decoupling matrix vanished on every sample.
    SingularDecoupling,
}

impl std::fmt::Display for FlatFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FlatFailure::RelativeDegreeUndefined { channel } => write!(f, "relative degree of {channel} undefined"),
            FlatFailure::DegreeSumMismatch { sum, n } => write!(f, "degree sum {sum} != n = {n}"),
            FlatFailure::SingularDecoupling => write!(f, "decoupling matrix singular on every sample"),
        }
    }
}

/// Vector relative degree of an output on a prolonged system, with the
/// decoupling matrix `A`, drift vector `b` and output jets.
#[derive(Debug)]
pub struct RelativeDegreeProfile {
    pub channels: Vec<Channel>,
    /// `None` when the search hit the cap.
    pub r: Vec<Option<usize>>,
    /// Rows `L_{g_j} L_f^{r_i-1} h_i`; zero rows for undefined channels.
    pub a_sym: Vec<Vec<Expr>>,
    /// `L_f^{r_i} h_i`.
    pub b_sym: Vec<Expr>,
    /// `h_i, L_f h_i, .., L_f^{r_i-1} h_i`.
    pub jets: Vec<Vec<Expr>>,
    pub n_state: usize,
    pub n_inputs: usize,
    pub flat: bool,
    pub failure: Option<FlatFailure>,
    /// Row-normalized `|det A|` at the operating point, when evaluable.
    pub det_at_op: Option<f64>,
    pub validity: Option<ValiditySample>,
    table: SymbolTable,
    bbox: SampleBox,
    op: Vec<f64>,
    tol_rank: f64,
    tape: OnceLock<Result<Tape, ExprError>>,
}

impl Clone for RelativeDegreeProfile {
    fn clone(&self) -> Self {
        RelativeDegreeProfile {
            channels: self.channels.clone(),
            r: self.r.clone(),
            a_sym: self.a_sym.clone(),
            b_sym: self.b_sym.clone(),
            jets: self.jets.clone(),
            n_state: self.n_state,
            n_inputs: self.n_inputs,
            flat: self.flat,
            failure: self.failure.clone(),
            det_at_op: self.det_at_op,
            validity: self.validity.clone(),
            table: self.table.clone(),
            bbox: self.bbox.clone(),
            op: self.op.clone(),
            tol_rank: self.tol_rank,
            tape: OnceLock::new(),
        }
    }
}

/// Numbers obtained by evaluating a profile at one state.
#[derive(Clone, Debug)]
pub struct ProfileValues {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Output jets `y_i^(k)`, `k < r_i`.
    pub jets: Vec<Vec<f64>>,
}

impl RelativeDegreeProfile {
    pub fn degree_sum(&self) -> usize {
        self.r.iter().map(|r| r.unwrap_or(0)).sum()
    }

    pub fn degrees_defined(&self) -> bool {
        self.r.iter().all(Option::is_some)
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn bbox(&self) -> &SampleBox {
        &self.bbox
    }

    pub fn operating_point(&self) -> &[f64] {
        &self.op
    }

    pub fn tol_rank(&self) -> f64 {
        self.tol_rank
    }

    fn tape(&self) -> Result<&Tape, LinearizationError> {
        let res = self.tape.get_or_init(|| {
            let mut exprs: Vec<Expr> = self.a_sym.iter().flatten().cloned().collect();
            exprs.extend(self.b_sym.iter().cloned());
            exprs.extend(self.jets.iter().flatten().cloned());
            Tape::compile(&exprs, &self.table)
        });
        res.as_ref().map_err(|e| e.clone().into())
    }

    /// Evaluate `A`, `b` and the output jets at a state.
    pub fn values(&self, x: &[f64]) -> Result<ProfileValues, LinearizationError> {
        let out = self.tape()?.eval(x)?;
        let (p, m) = (self.channels.len(), self.n_inputs);
        let a = DMatrix::from_row_slice(p, m, &out[..p * m]);
        let b = DVector::from_column_slice(&out[p * m..p * m + p]);
        let mut off = p * m + p;
        let jets = self
            .jets
            .iter()
            .map(|j| {
                let v = out[off..off + j.len()].to_vec();
                off += j.len();
                v
            })
            .collect();
        Ok(ProfileValues { a, b, jets })
    }

    /// Row-normalized determinant (Gram volume for wide matrices) at `x`.
    pub fn det_at(&self, x: &[f64]) -> Result<f64, LinearizationError> {
        Ok(normalized_det(&self.values(x)?.a))
    }

    /// True when the decoupling matrix is numerically nonsingular at `x`.
    pub fn accepts(&self, x: &[f64]) -> bool {
        self.det_at(x).map(|d| d > self.tol_rank).unwrap_or(false)
    }

    pub fn report(&self) -> ProfileReport {
        ProfileReport {
            channels: self.channels.iter().map(|c| c.name.clone()).collect(),
            r: self.r.clone(),
            n_state: self.n_state,
            degree_sum: self.degree_sum(),
            det_at_op: self.det_at_op,
            flat: self.flat,
            failure: self.failure.clone(),
            exclusion_factors: self.validity.as_ref().map(|v| v.factors.clone()).unwrap_or_default(),
            accepted_samples: self.validity.as_ref().map(|v| v.accepted.len()).unwrap_or(0),
            total_samples: self.validity.as_ref().map(|v| v.accepted.len() + v.rejected.len()).unwrap_or(0),
            tol_rank: self.tol_rank,
        }
    }
}

/// Serializable summary of a profile.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileReport {
    pub channels: Vec<String>,
    pub r: Vec<Option<usize>>,
    pub n_state: usize,
    pub degree_sum: usize,
    pub det_at_op: Option<f64>,
    pub flat: bool,
    pub failure: Option<FlatFailure>,
    pub exclusion_factors: Vec<String>,
    pub accepted_samples: usize,
    pub total_samples: usize,
    pub tol_rank: f64,
}

/// Variables reachable from `start` through the drift, and whether any
/// input column touches them.
fn reaches_input(psys: &ProlongedSystem, start: &Expr) -> bool {
    let names = psys.state_names();
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut seen: HashSet<usize> = HashSet::new();
    let mut stack: Vec<usize> = start.free_vars().iter().filter_map(|v| index.get(&**v).copied()).collect();
    while let Some(k) = stack.pop() {
        if !seen.insert(k) {
            continue;
        }
        if psys.cols().iter().any(|c| !c[k].is_zero()) {
            return true;
        }
        for v in psys.drift()[k].free_vars() {
            if let Some(&j) = index.get(&**v) {
                if !seen.contains(&j) {
                    stack.push(j);
                }
            }
        }
    }
    false
}

struct ChannelResult {
    r: Option<usize>,
    row: Vec<Expr>,
    b: Expr,
    jets: Vec<Expr>,
}

fn channel_degree(
    psys: &ProlongedSystem,
    lie: &LieContext,
    tester: &ZeroTester,
    h: &Expr,
    cap: usize,
) -> Result<ChannelResult, LinearizationError> {
    let m = psys.m();
    let undefined = |jets| ChannelResult {
        r: None,
        row: vec![Expr::zero(); m],
        b: Expr::zero(),
        jets,
    };
    if !reaches_input(psys, h) {
        return Ok(undefined(vec![h.clone()]));
    }
    let mut phi = h.simplify();
    let mut jets = Vec::new();
    for k in 0..cap {
        jets.push(phi.clone());
        let row: Vec<Expr> = psys.cols().iter().map(|c| lie.lie_col(&phi, c)).collect();
        let verdicts = tester.test_many(&row)?;
        if verdicts.iter().any(|v| !v.is_zero()) {
            let row = row
                .into_iter()
                .zip(&verdicts)
                .map(|(e, v)| if v.is_zero() { Expr::zero() } else { e })
                .collect();
            return Ok(ChannelResult {
                r: Some(k + 1),
                row,
                b: lie.lie(&phi, psys.drift()),
                jets,
            });
        }
        phi = lie.lie(&phi, psys.drift());
        if phi.is_zero() {
            break;
        }
    }
    Ok(undefined(jets))
}

/// Vector relative degree, decoupling matrix and flatness verdict of `h` on
/// `psys`.
///
/// Outputs with fewer channels than inputs are accepted; the rank test
/// then uses the Gram volume of the rows.
pub fn relative_degree_profile(
    psys: &ProlongedSystem,
    h: &OutputMap,
    tol: &Tolerances,
) -> Result<RelativeDegreeProfile, LinearizationError> {
    let (p, m) = (h.len(), psys.m());
    if p > m || p == 0 {
        return Err(LinearizationError::NonSquare { channels: p, inputs: m });
    }
    let lie = LieContext::new(psys.state_names());
    let tester = ZeroTester::new(psys.table().clone(), psys.bbox().clone(), tol.zero);
    let cap = psys.n() + tol.cap_extra.max(1);
    let results: Vec<ChannelResult> = h
        .channels
        .par_iter()
        .map(|c| channel_degree(psys, &lie, &tester, &c.h, cap))
        .collect::<Result<_, _>>()?;

    let mut profile = RelativeDegreeProfile {
        channels: h.channels.clone(),
        r: results.iter().map(|c| c.r).collect(),
        a_sym: results.iter().map(|c| c.row.clone()).collect(),
        b_sym: results.iter().map(|c| c.b.clone()).collect(),
        jets: results.into_iter().map(|c| c.jets).collect(),
        n_state: psys.n(),
        n_inputs: m,
        flat: false,
        failure: None,
        det_at_op: None,
        validity: None,
        table: psys.table().clone(),
        bbox: psys.bbox().clone(),
        op: psys.operating_point().to_vec(),
        tol_rank: tol.tol_rank,
        tape: OnceLock::new(),
    };
    if let Some(i) = profile.r.iter().position(Option::is_none) {
        profile.failure = Some(FlatFailure::RelativeDegreeUndefined {
            channel: profile.channels[i].name.clone(),
        });
        return Ok(profile);
    }
    profile.det_at_op = profile.det_at(psys.operating_point()).ok();
    let sum = profile.degree_sum();
    if sum != psys.n() {
        profile.failure = Some(FlatFailure::DegreeSumMismatch { sum, n: psys.n() });
        return Ok(profile);
    }
    let sample = sample_validity(psys, &profile, psys.bbox(), tol.validity_samples, tol.validity_seed)?;
    profile.flat = !sample.accepted.is_empty();
    if !profile.flat {
        profile.failure = Some(FlatFailure::SingularDecoupling);
    }
    profile.validity = Some(sample);
    Ok(profile)
}

/// Numeric `A(x)` and `b(x)`; fails where `A` is singular.
pub fn feedback_terms(profile: &RelativeDegreeProfile, point: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>), LinearizationError> {
    let v = profile.values(point)?;
    let det = normalized_det(&v.a);
    if det <= profile.tol_rank {
        return Err(LinearizationError::Singular { det });
    }
    Ok((v.a, v.b))
}

#[cfg(test)]
mod tests;
