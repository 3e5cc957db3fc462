use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::expr::{Expr, SampleBox};
use crate::sampling::halton_points;
use crate::system::ProlongedSystem;

use super::{LinearizationError, RelativeDegreeProfile};

/// Points of the sampling box where the decoupling matrix is nonsingular.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValiditySample {
    pub accepted: Vec<Vec<f64>>,
    /// Rejected points with the reason.
    pub rejected: Vec<(Vec<f64>, String)>,
    /// Syntactic factors of `det A` that depend on the state.
    pub factors: Vec<String>,
    pub operating_point_accepted: bool,
}

impl ValiditySample {
    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }
}

/// Entries below this fraction of the largest entry count as rounding noise.
const NOISE_FLOOR: f64 = 1e-12;

/// Rank certificate that does not depend on the units of rows or columns.
///
/// The matrix is equilibrated (alternating row and column max-norm scaling),
/// rows are then normalized, and `|det|` is returned. A wide matrix uses the
/// Gram volume `sqrt(det(M Mᵀ))` instead. Entries that are negligible
/// against the largest one are cleared first so that rescaling cannot lift
/// rounding noise to unit size.
pub fn normalized_det(a: &DMatrix<f64>) -> f64 {
    let mut m = a.clone();
    let big = m.amax();
    if big == 0.0 || !big.is_finite() || m.iter().any(|v| !v.is_finite()) {
        return 0.0;
    }
    m.apply(|v| {
        if v.abs() <= NOISE_FLOOR * big {
            *v = 0.0
        }
    });
    let square = m.nrows() == m.ncols();
    for _ in 0..12 {
        for mut row in m.row_iter_mut() {
            let s = row.amax();
            if s == 0.0 {
                return 0.0;
            }
            row /= s.sqrt();
        }
        for mut col in m.column_iter_mut() {
            let s = col.amax();
            if s == 0.0 {
                if square {
                    return 0.0;
                }
                continue;
            }
            col /= s.sqrt();
        }
    }
    for mut row in m.row_iter_mut() {
        let norm = row.norm();
        row /= norm;
    }
    if square {
        m.determinant().abs()
    } else {
        (&m * m.transpose()).determinant().abs().sqrt()
    }
}

/// Determinant by cofactor expansion, memoized on the set of used columns.
pub fn symbolic_determinant(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    assert!(m.iter().all(|r| r.len() == n), "symbolic determinant needs a square matrix");
    assert!(n < 64);
    fn rec(m: &[Vec<Expr>], row: usize, used: u64, memo: &mut HashMap<u64, Expr>) -> Expr {
        let n = m.len();
        if row == n {
            return Expr::one();
        }
        if let Some(e) = memo.get(&used) {
            return e.clone();
        }
        let mut terms = Vec::new();
        let mut position = 0;
        for j in 0..n {
            if used & (1 << j) != 0 {
                continue;
            }
            let a = &m[row][j];
            if !a.is_zero() {
                let minor = rec(m, row + 1, used | (1 << j), memo);
                if !minor.is_zero() {
                    let t = a.clone() * minor;
                    terms.push(if position % 2 == 0 { t } else { -t });
                }
            }
            position += 1;
        }
        let e = Expr::add(terms);
        memo.insert(used, e.clone());
        e
    }
    rec(m, 0, 0, &mut HashMap::new())
}

/// Points used for validity sampling: `x°` first, then `n` low-discrepancy
/// points (pseudo-random beyond the Halton dimension limit).
pub(crate) fn validity_points(op: &[f64], bbox: &SampleBox, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut pts = vec![op.to_vec()];
    if bbox.dim() <= 40 {
        pts.extend(halton_points(bbox, n, seed));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        pts.extend((0..n).map(|_| bbox.random_point(&mut rng)));
    }
    pts
}

fn exclusion_factors(profile: &RelativeDegreeProfile) -> Vec<String> {
    if profile.a_sym.len() != profile.n_inputs {
        return Vec::new();
    }
    let det = symbolic_determinant(&profile.a_sym);
    let det = if det.size() < 4000 { det.expand() } else { det };
    let mut seen = Vec::new();
    for f in det.factors() {
        if f.free_vars().is_empty() {
            continue;
        }
        let s = f.to_string();
        if !seen.contains(&s) {
            seen.push(s);
        }
    }
    seen
}

/// Evaluate the decoupling matrix at `x°` and `n_samples` points of `bbox`.
pub fn sample_validity(
    psys: &ProlongedSystem,
    profile: &RelativeDegreeProfile,
    bbox: &SampleBox,
    n_samples: usize,
    seed: u64,
) -> Result<ValiditySample, LinearizationError> {
    let points = validity_points(psys.operating_point(), bbox, n_samples, seed);
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    let mut op_ok = false;
    for (k, x) in points.into_iter().enumerate() {
        match profile.det_at(&x) {
            Ok(d) if d > profile.tol_rank() => {
                if k == 0 {
                    op_ok = true;
                }
                accepted.push(x);
            }
            Ok(d) => rejected.push((x, format!("singular (normalized det {d:.3e})"))),
            Err(e) => rejected.push((x, format!("evaluation failed: {e}"))),
        }
    }
    Ok(ValiditySample {
        accepted,
        rejected,
        factors: exclusion_factors(profile),
        operating_point_accepted: op_ok,
    })
}

/// Outcome of a compatibility test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Compatibility {
    pub compatible: bool,
    /// Point accepted by both profiles, together with its probe
    /// neighbourhood.
    pub witness: Option<Vec<f64>>,
}

const PROBES: usize = 6;

fn probe_ok(a: &RelativeDegreeProfile, b: &RelativeDegreeProfile, x: &[f64], rng: &mut ChaCha8Rng) -> bool {
    if !(a.accepts(x) && b.accepts(x)) {
        return false;
    }
    let bbox = a.bbox();
    (0..PROBES).all(|_| {
        let y: Vec<f64> = x
            .iter()
            .zip(bbox.lo.iter().zip(&bbox.hi))
            .map(|(xi, (l, h))| xi + 1e-3 * (h - l).max(1e-6) * rng.random_range(-1.0..1.0))
            .collect();
        a.accepts(&y) && b.accepts(&y)
    })
}

/// Two outputs on the same prolonged system are compatible when some
/// sampled point is accepted by both, together with a small random
/// neighbourhood of it.
pub fn compatible(a: &RelativeDegreeProfile, b: &RelativeDegreeProfile) -> Compatibility {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0);
    let empty = Vec::new();
    let sa = a.validity.as_ref().map(|v| &v.accepted).unwrap_or(&empty);
    let sb = b.validity.as_ref().map(|v| &v.accepted).unwrap_or(&empty);
    for x in sa.iter().chain(sb.iter()) {
        if probe_ok(a, b, x, &mut rng) {
            return Compatibility {
                compatible: true,
                witness: Some(x.clone()),
            };
        }
    }
    Compatibility {
        compatible: false,
        witness: None,
    }
}
