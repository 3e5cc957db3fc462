//! Cheap numeric pre-filter for (pattern, output subset) candidates.
//!
//! Relative degrees on any prolongation follow from the first-appearance
//! table, and the decoupling matrix entries are the tabulated coefficients.
//! A candidate passes when the degree sum is right and the determinant is
//! nonzero at one of a handful of points. Rejections are exact (up to the
//! zero test); acceptances are re-checked on the prolonged system.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::linearization::{normalized_det, AppearanceTable, JetExpansion};
use crate::system::IndexSet;

pub(crate) struct Screen {
    table: Arc<AppearanceTable>,
    coeffs: Vec<Vec<f64>>,
    p: usize,
}

/// One candidate decoupling structure.
pub(crate) struct Candidate<'a> {
    pub pattern: &'a [usize],
    /// Inputs acting on the prolonged system.
    pub cols: &'a [usize],
    /// Output channels kept.
    pub rows: &'a [usize],
    /// Base inputs appended as output channels.
    pub aug: &'a [usize],
    /// Required degree sum.
    pub target: usize,
}

impl Screen {
    pub fn new(jx: &JetExpansion, table: Arc<AppearanceTable>, zero: &IndexSet, n_points: usize, seed: u64) -> Self {
        let coeffs = jx
            .sample_points(n_points, seed, zero)
            .iter()
            .filter_map(|x| table.coefficients_at(x))
            .filter(|c| c.iter().all(|v| v.is_finite()))
            .collect();
        Screen {
            p: table.n_inputs(),
            table,
            coeffs,
        }
    }

    /// Degrees and minimizing inputs of the kept rows, or `None` when some
    /// row never sees an input.
    fn degrees(&self, c: &Candidate<'_>) -> Option<Vec<(usize, Vec<usize>)>> {
        c.rows.iter().map(|&i| self.table.degree(i, c.pattern, c.cols)).collect()
    }

    pub fn passes(&self, c: &Candidate<'_>, tol_rank: f64) -> bool {
        let Some(deg) = self.degrees(c) else {
            return false;
        };
        let sum: usize = deg.iter().map(|d| d.0).sum::<usize>() + c.aug.iter().map(|&j| c.pattern[j]).sum::<usize>();
        if sum != c.target {
            return false;
        }
        let (nr, nc) = (c.rows.len() + c.aug.len(), c.cols.len());
        if nr > nc {
            return false;
        }
        let col_of = |j: usize| c.cols.iter().position(|&k| k == j);
        self.coeffs.iter().any(|vals| {
            let mut m = DMatrix::<f64>::zeros(nr, nc);
            for (r, (&i, (_, mins))) in c.rows.iter().zip(&deg).enumerate() {
                for &j in mins {
                    if let Some(k) = col_of(j) {
                        m[(r, k)] = vals[i * self.p + j];
                    }
                }
            }
            for (r, &j) in c.aug.iter().enumerate() {
                match col_of(j) {
                    Some(k) => m[(c.rows.len() + r, k)] = 1.0,
                    None => return false,
                }
            }
            normalized_det(&m) > tol_rank
        })
    }
}
