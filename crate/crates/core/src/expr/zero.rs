//! Probabilistic identically-zero testing.
//!
//! An expression that is not literally `0` after simplification is evaluated
//! at random points of a box. It is declared zero when every sample is below
//! `tol` relative to the rounding scale of the evaluation. Samples where the
//! expression is undefined are redrawn a bounded number of times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{EvalError, Expr, ExprError, SymbolTable, Tape};

/// Sample values with the magnitude scale each was computed at.
type ValuesWithMagnitude = Vec<(f64, f64)>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroTestConfig {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub max_retries: usize,
}

impl Default for ZeroTestConfig {
    fn default() -> Self {
        ZeroTestConfig {
            samples: 64,
            tol: 1e-9,
            seed: 0x5eed,
            max_retries: 32,
        }
    }
}

/// Axis-aligned box, one interval per symbol-table slot.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SampleBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box bounds differ in length");
        SampleBox { lo, hi }
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Self {
        SampleBox::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| l <= x && x <= h)
    }

    /// Map a point of the unit cube into the box.
    pub fn scale(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(u, (l, h))| l + u * (h - l))
            .collect()
    }

    pub fn random_point(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| if h > l { rng.random_range(*l..*h) } else { *l })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ZeroVerdict {
    /// `structural` is true when simplification alone produced `0`.
    Zero {
        trials: usize,
        structural: bool,
    },
    NonZero {
        witness: Vec<f64>,
        value: f64,
    },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroVerdict::Zero { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZeroTestError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("no evaluable sample after {retries} retries (last error: {last})")]
    RetriesExhausted { retries: usize, last: EvalError },
}

/// Reusable tester holding a fixed batch of sample points.
#[derive(Clone, Debug)]
pub struct ZeroTester {
    table: SymbolTable,
    bbox: SampleBox,
    cfg: ZeroTestConfig,
    points: Vec<Vec<f64>>,
}

impl ZeroTester {
    pub fn new(table: SymbolTable, bbox: SampleBox, cfg: ZeroTestConfig) -> Self {
        assert_eq!(table.len(), bbox.dim(), "sampling box does not match the symbol table");
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let points = (0..cfg.samples).map(|_| bbox.random_point(&mut rng)).collect();
        ZeroTester { table, bbox, cfg, points }
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn bbox(&self) -> &SampleBox {
        &self.bbox
    }

    pub fn config(&self) -> &ZeroTestConfig {
        &self.cfg
    }

    pub fn test(&self, e: &Expr) -> Result<ZeroVerdict, ZeroTestError> {
        Ok(self.test_many(std::slice::from_ref(e))?.pop().unwrap())
    }

    pub fn is_zero(&self, e: &Expr) -> Result<bool, ZeroTestError> {
        Ok(self.test(e)?.is_zero())
    }

    /// Test several expressions against the same sample points.
    pub fn test_many(&self, exprs: &[Expr]) -> Result<Vec<ZeroVerdict>, ZeroTestError> {
        let mut verdicts: Vec<Option<ZeroVerdict>> = exprs
            .iter()
            .map(|e| {
                e.simplify().is_zero().then_some(ZeroVerdict::Zero {
                    trials: 0,
                    structural: true,
                })
            })
            .collect();
        let live: Vec<usize> = (0..exprs.len()).filter(|&i| verdicts[i].is_none()).collect();
        if live.is_empty() {
            return Ok(verdicts.into_iter().map(Option::unwrap).collect());
        }
        let tape = Tape::compile(&live.iter().map(|&i| exprs[i].clone()).collect::<Vec<_>>(), &self.table)?;
        let mut open: Vec<bool> = vec![true; live.len()];
        for (k, p0) in self.points.iter().enumerate() {
            let (point, results) = self.eval_with_retry(&tape, p0, k)?;
            for (j, &(v, m)) in results.iter().enumerate() {
                if open[j] && v.abs() > self.cfg.tol * m.max(1.0) {
                    open[j] = false;
                    verdicts[live[j]] = Some(ZeroVerdict::NonZero {
                        witness: point.clone(),
                        value: v,
                    });
                }
            }
            if open.iter().all(|o| !o) {
                break;
            }
        }
        for (j, o) in open.iter().enumerate() {
            if *o {
                verdicts[live[j]] = Some(ZeroVerdict::Zero {
                    trials: self.points.len(),
                    structural: false,
                });
            }
        }
        Ok(verdicts.into_iter().map(Option::unwrap).collect())
    }

    fn eval_with_retry(&self, tape: &Tape, p0: &[f64], k: usize) -> Result<(Vec<f64>, ValuesWithMagnitude), ZeroTestError> {
        match tape.eval_with_magnitude(p0) {
            Ok(v) => return Ok((p0.to_vec(), v)),
            Err(e) if self.cfg.max_retries == 0 => return Err(ZeroTestError::RetriesExhausted { retries: 0, last: e }),
            Err(_) => {}
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k as u64 + 1)));
        let mut last = EvalError::NonFinite;
        for _ in 0..self.cfg.max_retries {
            let p = self.bbox.random_point(&mut rng);
            match tape.eval_with_magnitude(&p) {
                Ok(v) => return Ok((p, v)),
                Err(e) => last = e,
            }
        }
        Err(ZeroTestError::RetriesExhausted {
            retries: self.cfg.max_retries,
            last,
        })
    }
}

/// One-shot test; see [`ZeroTester`] for repeated use.
pub fn is_identically_zero(
    e: &Expr,
    table: &SymbolTable,
    bbox: &SampleBox,
    trials: usize,
    seed: u64,
) -> Result<ZeroVerdict, ZeroTestError> {
    let cfg = ZeroTestConfig {
        samples: trials,
        seed,
        ..ZeroTestConfig::default()
    };
    ZeroTester::new(table.clone(), bbox.clone(), cfg).test(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    #[test]
    fn trig_identity_is_zero() {
        let t = SymbolTable::with_vars(["q"]).unwrap();
        let e = parse_expression("sin(q)^2 + cos(q)^2 - 1", &t).unwrap();
        let v = is_identically_zero(&e, &t, &SampleBox::uniform(1, -1.0, 1.0), 64, 1).unwrap();
        assert!(v.is_zero());
        // a variant the canonicalizer does not fold, caught by sampling
        let e = parse_expression("sin(2*q) - 2*sin(q)*cos(q)", &t).unwrap();
        let v = is_identically_zero(&e, &t, &SampleBox::uniform(1, -1.0, 1.0), 64, 1).unwrap();
        assert_eq!(
            v,
            ZeroVerdict::Zero {
                trials: 64,
                structural: false
            }
        );
    }

    #[test]
    fn product_is_nonzero_with_witness() {
        let t = SymbolTable::with_vars(["x1", "x2"]).unwrap();
        let e = parse_expression("x1*x2", &t).unwrap();
        let v = is_identically_zero(&e, &t, &SampleBox::uniform(2, -1.0, 1.0), 64, 7).unwrap();
        match v {
            ZeroVerdict::NonZero { witness, value } => {
                let again = e.eval(&t, &witness).unwrap();
                assert_eq!(again, value);
                assert!(again.abs() > 1e-9);
            }
            other => panic!("expected nonzero, got {other:?}"),
        }
    }

    #[test]
    fn singular_samples_are_redrawn() {
        let t = SymbolTable::with_vars(["x"]).unwrap();
        // undefined on half the box
        let e = parse_expression("sqrt(x) - sqrt(x)", &t).unwrap();
        assert!(e.is_zero());
        let e = parse_expression("ln(x)*0 + sqrt(x)*x - x*sqrt(x)", &t).unwrap();
        let tester = ZeroTester::new(t.clone(), SampleBox::uniform(1, -1.0, 1.0), ZeroTestConfig::default());
        assert!(tester.is_zero(&e).unwrap());
        let never = parse_expression("sqrt(x - 5)", &t).unwrap();
        assert!(matches!(tester.test(&never), Err(ZeroTestError::RetriesExhausted { .. })));
    }
}
