//! Switching feedback-linearizing controller on a prolonged system.
//!
//! The controller stacks the `p` output rows `y^(r) = b + A v` on top of
//! the `p` input rows `u^(l) = v` and, for the active vertex `(A, O)`,
//! solves only the rows of the kept outputs and the selected input
//! channels. Every vertex shares the same prolonged state, so switching
//! only changes which rows are enforced; no state is reset.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::linearization::{normalized_det, LinearizationError, RelativeDegreeProfile};
use crate::system::{IndexSet, ProlongedSystem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("polynomial with coefficients {0:?} is not Hurwitz")]
    NotHurwitz(Vec<f64>),
    #[error("expected {expected} poles for a chain of order {expected}, got {got}")]
    PoleCount { expected: usize, got: usize },
    #[error("pole {0} is not in the open left half plane")]
    UnstablePole(f64),
    #[error("gain set does not match the system: {0}")]
    GainShape(String),
    #[error("reference has {got} channels, output has {expected}")]
    ReferenceShape { expected: usize, got: usize },
    #[error("selection for vertex {vertex} is singular (normalized det {det:e})")]
    ValidityExit { vertex: String, det: f64 },
    #[error("trajectory crossed the singular set of vertex {0}")]
    CrossedSingularity(String),
    #[error("vertex {0} selects input {1}, which has no integrators")]
    UnprolongedInput(String, usize),
    #[error(transparent)]
    Linearization(#[from] LinearizationError),
}

/// Routh-Hurwitz test for `λ^m + c[m-1] λ^(m-1) + .. + c[0]`.
pub fn is_hurwitz(c: &[f64]) -> bool {
    let m = c.len();
    if c.iter().any(|v| !v.is_finite()) {
        return false;
    }
    // Coefficients from the leading term down.
    let a: Vec<f64> = std::iter::once(1.0).chain(c.iter().rev().copied()).collect();
    let width = m / 2 + 1;
    let at = |k: usize| a.get(k).copied().unwrap_or(0.0);
    let mut prev: Vec<f64> = (0..width).map(|k| at(2 * k)).collect();
    let mut cur: Vec<f64> = (0..width).map(|k| at(2 * k + 1)).collect();
    for _ in 0..m {
        if !(cur[0] > 0.0) {
            return false;
        }
        let next = (0..width)
            .map(|k| {
                let p1 = prev.get(k + 1).copied().unwrap_or(0.0);
                let c1 = cur.get(k + 1).copied().unwrap_or(0.0);
                (cur[0] * p1 - prev[0] * c1) / cur[0]
            })
            .collect();
        prev = std::mem::replace(&mut cur, next);
    }
    true
}

/// `c[0..m]` with `∏(λ - pole) = λ^m + c[m-1] λ^(m-1) + .. + c[0]`.
pub fn poly_from_poles(poles: &[f64]) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    for &s in poles {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= s * c;
        }
        coeffs = next;
    }
    coeffs.pop();
    coeffs
}

/// Checked gain list for one chain.
pub fn chain_gains(coeffs: Vec<f64>) -> Result<Vec<f64>, ControlError> {
    if is_hurwitz(&coeffs) {
        Ok(coeffs)
    } else {
        Err(ControlError::NotHurwitz(coeffs))
    }
}

/// Gains from real poles.
pub fn gains_from_poles(order: usize, poles: &[f64]) -> Result<Vec<f64>, ControlError> {
    if poles.len() != order {
        return Err(ControlError::PoleCount {
            expected: order,
            got: poles.len(),
        });
    }
    if let Some(&s) = poles.iter().find(|&&s| !(s < 0.0)) {
        return Err(ControlError::UnstablePole(s));
    }
    chain_gains(poly_from_poles(poles))
}

pub const DEFAULT_OUTPUT_POLE: f64 = -2.0;
pub const DEFAULT_INPUT_POLE: f64 = -10.0;

/// Error-feedback gains, lowest derivative first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GainSet {
    /// One list per output channel, of length `r_i`.
    pub ky: Vec<Vec<f64>>,
    /// One list per input, of length `l_i` (empty when `l_i = 0`).
    pub ku: Vec<Vec<f64>>,
}

impl GainSet {
    pub fn new(ky: Vec<Vec<f64>>, ku: Vec<Vec<f64>>) -> Result<Self, ControlError> {
        for k in ky.iter().chain(&ku) {
            if !is_hurwitz(k) {
                return Err(ControlError::NotHurwitz(k.clone()));
            }
        }
        Ok(GainSet { ky, ku })
    }

    /// Repeated poles: `y_pole` on every output chain, `u_pole` on every
    /// input filter.
    pub fn from_orders(y_orders: &[usize], u_orders: &[usize], y_pole: f64, u_pole: f64) -> Result<Self, ControlError> {
        let ky = y_orders
            .iter()
            .map(|&r| gains_from_poles(r, &vec![y_pole; r]))
            .collect::<Result<_, _>>()?;
        let ku = u_orders
            .iter()
            .map(|&l| gains_from_poles(l, &vec![u_pole; l]))
            .collect::<Result<_, _>>()?;
        GainSet::new(ky, ku)
    }

    /// Gains with the default poles for a profile on a prolonged system.
    pub fn defaults(profile: &RelativeDegreeProfile, psys: &ProlongedSystem) -> Result<Self, ControlError> {
        let r: Vec<usize> = profile.r.iter().map(|r| r.unwrap_or(0)).collect();
        let l: Vec<usize> = psys.kept().iter().map(|&i| psys.pattern().get(i)).collect();
        GainSet::from_orders(&r, &l, DEFAULT_OUTPUT_POLE, DEFAULT_INPUT_POLE)
    }

    fn check(&self, r: &[usize], l: &[usize]) -> Result<(), ControlError> {
        let ok = self.ky.len() == r.len()
            && self.ku.len() == l.len()
            && self.ky.iter().zip(r).all(|(k, &r)| k.len() == r)
            && self.ku.iter().zip(l).all(|(k, &l)| k.len() == l);
        if ok {
            Ok(())
        } else {
            Err(ControlError::GainShape(format!("orders y {r:?}, u {l:?}")))
        }
    }
}

/// Smooth scalar reference with exact derivatives.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    Constant {
        value: f64,
    },
    /// `Σ c_k t^k`.
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `offset + amplitude sin(ω t + phase)`.
    Sinusoid {
        offset: f64,
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
}

impl Generator {
    /// Value and derivatives `0..=order` at `t`.
    pub fn jet(&self, t: f64, order: usize) -> Vec<f64> {
        match self {
            Generator::Constant { value } => {
                let mut j = vec![0.0; order + 1];
                j[0] = *value;
                j
            }
            Generator::Polynomial { coeffs } => {
                let mut c = coeffs.clone();
                (0..=order)
                    .map(|_| {
                        let v = c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck);
                        c = c.iter().enumerate().skip(1).map(|(k, &ck)| k as f64 * ck).collect();
                        v
                    })
                    .collect()
            }
            Generator::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => (0..=order)
                .map(|k| {
                    let arg = omega * t + phase + k as f64 * std::f64::consts::FRAC_PI_2;
                    let v = amplitude * omega.powi(k as i32) * arg.sin();
                    if k == 0 {
                        v + offset
                    } else {
                        v
                    }
                })
                .collect(),
        }
    }
}

/// Per-channel reference generators.
pub type ReferenceSignal = Vec<Generator>;

/// Active vertex and the rows of the stacked system it enforces.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionState {
    pub vertex: usize,
    pub label: String,
    pub a: IndexSet,
    pub o: IndexSet,
    /// Indices into the `2p` stacked rows: output rows first, then input rows.
    pub rows: Vec<usize>,
    /// Derivative order of each selected row.
    pub orders: Vec<usize>,
}

impl SelectionState {
    pub fn new(vertex: usize, label: &str, a: &IndexSet, o: &IndexSet, r: &[usize], l: &[usize]) -> Result<Self, ControlError> {
        let q = r.len();
        let mut rows: Vec<usize> = o.complement(q).iter().collect();
        for i in a.iter() {
            if l[i] == 0 {
                return Err(ControlError::UnprolongedInput(label.to_string(), i + 1));
            }
            rows.push(q + i);
        }
        let orders = rows.iter().map(|&k| if k < q { r[k] } else { l[k - q] }).collect();
        Ok(SelectionState {
            vertex,
            label: label.to_string(),
            a: a.clone(),
            o: o.clone(),
            rows,
            orders,
        })
    }

    /// Output channels enforced by this selection.
    pub fn kept_outputs(&self, q: usize) -> Vec<usize> {
        self.rows.iter().copied().filter(|&k| k < q).collect()
    }
}

/// Stacked terms at one state: `q = (b; 0)`, `D = (A; I)` and `w`.
#[derive(Clone, Debug)]
pub struct ControlFrame {
    pub q: DVector<f64>,
    pub d: DMatrix<f64>,
    pub w: DVector<f64>,
    /// `y_i^(k)` for `k < r_i`.
    pub y_jets: Vec<Vec<f64>>,
    /// Reference jets `y_i^d` up to order `r_i`.
    pub ref_jets: Vec<Vec<f64>>,
}

/// One feedback law on `Σ^(ℓ)` serving every vertex of a graph.
#[derive(Clone, Debug)]
pub struct SwitchingController {
    pub psys: ProlongedSystem,
    pub profile: RelativeDegreeProfile,
    pub gains: GainSet,
    pub reference: ReferenceSignal,
    r: Vec<usize>,
    l: Vec<usize>,
}

impl SwitchingController {
    /// `profile` must be the profile of the original output on `psys`.
    pub fn new(
        psys: ProlongedSystem,
        profile: RelativeDegreeProfile,
        gains: GainSet,
        reference: ReferenceSignal,
    ) -> Result<Self, ControlError> {
        let r: Vec<usize> = profile.r.iter().map(|r| r.unwrap_or(0)).collect();
        let l: Vec<usize> = psys.kept().iter().map(|&i| psys.pattern().get(i)).collect();
        if reference.len() != r.len() {
            return Err(ControlError::ReferenceShape {
                expected: r.len(),
                got: reference.len(),
            });
        }
        gains.check(&r, &l)?;
        Ok(SwitchingController {
            psys,
            profile,
            gains,
            reference,
            r,
            l,
        })
    }

    pub fn output_orders(&self) -> &[usize] {
        &self.r
    }

    /// Integrator counts of the virtual inputs, in kept order.
    pub fn input_orders(&self) -> &[usize] {
        &self.l
    }

    pub fn selection(&self, vertex: usize, label: &str, a: &IndexSet, o: &IndexSet) -> Result<SelectionState, ControlError> {
        let a_virtual = IndexSet::new(
            a.iter()
                .map(|i| self.psys.virtual_index(i).expect("removed input selected"))
                .collect(),
            self.l.len(),
        )
        .map_err(|e| ControlError::GainShape(e.to_string()))?;
        SelectionState::new(vertex, label, &a_virtual, o, &self.r, &self.l)
    }

    /// Stack coordinates `u_i, .., u_i^(l_i-1)` of virtual input `j`.
    fn stack_values<'a>(&self, x: &'a [f64], j: usize) -> &'a [f64] {
        let base = self.psys.kept()[j];
        match self.psys.stack(base) {
            Some((off, len)) => &x[off..off + len],
            None => &[],
        }
    }

    pub fn frame(&self, x: &[f64], t: f64) -> Result<ControlFrame, ControlError> {
        let vals = self.profile.values(x)?;
        let (q, m) = (self.r.len(), self.l.len());
        let rows = q + m;
        let mut qv = DVector::zeros(rows);
        let mut d = DMatrix::zeros(rows, m);
        let mut w = DVector::zeros(rows);
        let mut ref_jets = Vec::with_capacity(q);
        for i in 0..q {
            qv[i] = vals.b[i];
            for j in 0..m {
                d[(i, j)] = vals.a[(i, j)];
            }
            let r = self.r[i];
            let yd = self.reference[i].jet(t, r);
            let mut wi = yd[r];
            for ((k, d), y) in self.gains.ky[i].iter().zip(&yd).zip(&vals.jets[i]) {
                wi += k * (d - y);
            }
            w[i] = wi;
            ref_jets.push(yd);
        }
        for j in 0..m {
            d[(q + j, j)] = 1.0;
            // Removed inputs are driven to zero: u^d ≡ 0.
            let stack = self.stack_values(x, j);
            w[q + j] = -self.gains.ku[j].iter().zip(stack).map(|(k, u)| k * u).sum::<f64>();
        }
        Ok(ControlFrame {
            q: qv,
            d,
            w,
            y_jets: vals.jets,
            ref_jets,
        })
    }

    /// `Γ D` for the active selection.
    pub fn selected_matrix(&self, frame: &ControlFrame, sel: &SelectionState) -> DMatrix<f64> {
        let mut gd = DMatrix::zeros(sel.rows.len(), self.l.len());
        for (k, &row) in sel.rows.iter().enumerate() {
            gd.set_row(k, &frame.d.row(row));
        }
        gd
    }

    /// `v = (Γ D)^-1 Γ (w - q)` for the active selection.
    pub fn control(&self, frame: &ControlFrame, sel: &SelectionState) -> Result<DVector<f64>, ControlError> {
        let gd = self.selected_matrix(frame, sel);
        let rhs = DVector::from_iterator(sel.rows.len(), sel.rows.iter().map(|&row| frame.w[row] - frame.q[row]));
        let det = normalized_det(&gd);
        if !(det > self.profile.tol_rank()) {
            return Err(ControlError::ValidityExit {
                vertex: sel.label.clone(),
                det,
            });
        }
        gd.lu().solve(&rhs).ok_or(ControlError::ValidityExit {
            vertex: sel.label.clone(),
            det,
        })
    }

    /// Tracking errors `y_i^(k) - y_i^d(k)` for `k < r_i`.
    pub fn error_jets(&self, frame: &ControlFrame) -> Vec<Vec<f64>> {
        frame
            .y_jets
            .iter()
            .zip(&frame.ref_jets)
            .map(|(y, yd)| y.iter().zip(yd).map(|(a, b)| a - b).collect())
            .collect()
    }
}

/// Why a requested switch was refused.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum SwitchRejection {
    NotAnEdge {
        from: String,
        to: String,
    },
    OutsideComponent {
        to: String,
    },
    Dwell {
        elapsed: f64,
        dwell: f64,
    },
    /// Target decoupling matrix is singular at the state reached.
    Singular {
        to: String,
        det: f64,
    },
}

/// Switching supervisor: enforces graph edges and the dwell time.
#[derive(Clone, Debug)]
pub struct Supervisor {
    pub dwell: f64,
    pub last_switch: Option<f64>,
    /// Allowed transitions as unordered vertex pairs.
    pub edges: BTreeMap<(usize, usize), ()>,
    pub component: Vec<usize>,
}

impl Supervisor {
    pub fn new(dwell: f64, edges: impl IntoIterator<Item = (usize, usize)>, component: Vec<usize>) -> Self {
        Supervisor {
            dwell,
            last_switch: None,
            edges: edges.into_iter().map(|(a, b)| ((a.min(b), a.max(b)), ())).collect(),
            component,
        }
    }

    /// Accepts or rejects `current -> target` at time `t`. A switch to the
    /// current vertex is a no-op and always accepted.
    pub fn request(&mut self, current: &SelectionState, target: &SelectionState, t: f64) -> Result<bool, SwitchRejection> {
        if current.vertex == target.vertex {
            return Ok(false);
        }
        if !self.component.contains(&target.vertex) {
            return Err(SwitchRejection::OutsideComponent { to: target.label.clone() });
        }
        let key = (current.vertex.min(target.vertex), current.vertex.max(target.vertex));
        if !self.edges.contains_key(&key) {
            return Err(SwitchRejection::NotAnEdge {
                from: current.label.clone(),
                to: target.label.clone(),
            });
        }
        if let Some(last) = self.last_switch {
            if t - last < self.dwell - 1e-12 {
                return Err(SwitchRejection::Dwell {
                    elapsed: t - last,
                    dwell: self.dwell,
                });
            }
        }
        self.last_switch = Some(t);
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::Builtin;
    use crate::linearization::{relative_degree_profile, Tolerances};
    use approx::assert_relative_eq;

    #[test]
    fn hurwitz_examples() {
        assert!(is_hurwitz(&[1.0, 2.0]));
        assert!(is_hurwitz(&[16.0, 32.0, 24.0, 8.0]));
        assert!(!is_hurwitz(&[1.0, -1.0]));
        assert!(!is_hurwitz(&[1.0, 0.0]));
        // λ³ + λ² + λ + 2 has a right-half-plane pair.
        assert!(!is_hurwitz(&[2.0, 1.0, 1.0]));
        assert!(is_hurwitz(&[0.5, 1.0, 1.0]));
    }

    #[test]
    fn gains_from_repeated_poles() {
        assert_eq!(gains_from_poles(1, &[-3.0]).unwrap(), vec![3.0]);
        assert_eq!(gains_from_poles(2, &[-1.0, -1.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(gains_from_poles(4, &[-2.0; 4]).unwrap(), vec![16.0, 32.0, 24.0, 8.0]);
        assert!(gains_from_poles(2, &[-1.0, 0.5]).is_err());
        assert!(GainSet::new(vec![vec![1.0, -2.0]], vec![]).is_err());
    }

    #[test]
    fn generator_jets() {
        let p = Generator::Polynomial {
            coeffs: vec![1.0, 0.5, 0.0, 2.0],
        };
        assert_eq!(p.jet(2.0, 4), vec![1.0 + 1.0 + 16.0, 0.5 + 24.0, 24.0, 12.0, 0.0]);
        let s = Generator::Sinusoid {
            offset: 1.0,
            amplitude: 2.0,
            omega: 3.0,
            phase: 0.0,
        };
        let j = s.jet(0.4, 2);
        assert_relative_eq!(j[0], 1.0 + 2.0 * (1.2f64).sin());
        assert_relative_eq!(j[1], 6.0 * (1.2f64).cos(), epsilon = 1e-12);
        assert_relative_eq!(j[2], -18.0 * (1.2f64).sin(), epsilon = 1e-12);
    }

    fn unified() -> SwitchingController {
        let sys = Builtin::MotivatingSquare.system();
        let ps = sys.prolong(&"0,1,0".parse().unwrap(), &IndexSet::empty()).unwrap();
        let prof = relative_degree_profile(&ps, sys.default_output().unwrap(), &Tolerances::default()).unwrap();
        let gains = GainSet::defaults(&prof, &ps).unwrap();
        let refs = vec![Generator::Constant { value: 0.0 }; 3];
        SwitchingController::new(ps, prof, gains, refs).unwrap()
    }

    #[test]
    fn zero_error_gives_zero_w_and_full_selection_inverts_a() {
        let c = unified();
        let x = vec![0.0; 5];
        let f = c.frame(&x, 0.0).unwrap();
        assert!(f.w.iter().all(|&v| v == 0.0));
        let full = c.selection(0, "full", &IndexSet::empty(), &IndexSet::empty()).unwrap();
        let v = c.control(&f, &full).unwrap();
        assert!(v.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn deactivation_row_drives_the_stack_to_zero() {
        let c = unified();
        let a = IndexSet::from_one_based(&[2], 3).unwrap();
        let o = IndexSet::from_one_based(&[3], 3).unwrap();
        let sel = c.selection(1, "u2", &a, &o).unwrap();
        assert_eq!(sel.rows, vec![0, 1, 4]);
        assert_eq!(sel.orders, vec![2, 2, 1]);
        // state order: x1..x4, u2_d0
        let x = vec![0.0, 0.0, 0.0, 0.0, 0.7];
        let f = c.frame(&x, 0.0).unwrap();
        let v = c.control(&f, &sel).unwrap();
        // v2 = -k u2 with the default input pole
        assert_relative_eq!(v[1], -10.0 * 0.7, epsilon = 1e-12);
    }

    #[test]
    fn supervisor_rejects_non_edges_and_dwell() {
        let c = unified();
        let s0 = c.selection(0, "a", &IndexSet::empty(), &IndexSet::empty()).unwrap();
        let mut s1 = s0.clone();
        s1.vertex = 1;
        s1.label = "b".into();
        let mut s2 = s0.clone();
        s2.vertex = 2;
        s2.label = "c".into();
        let mut sup = Supervisor::new(1.0, [(0, 1)], vec![0, 1]);
        assert_eq!(sup.request(&s0, &s0, 0.0), Ok(false));
        assert!(matches!(sup.request(&s0, &s2, 0.0), Err(SwitchRejection::OutsideComponent { .. })));
        assert_eq!(sup.request(&s0, &s1, 0.5), Ok(true));
        assert!(matches!(sup.request(&s1, &s0, 1.0), Err(SwitchRejection::Dwell { .. })));
        assert_eq!(sup.request(&s1, &s0, 1.5), Ok(true));
    }
}
