//! Input-affine systems, index-set slicing, input removal and prolongation.

mod dsl;
mod model;
mod prolong;

use std::fmt;

use thiserror::Error;

use crate::expr::ExprError;

pub use dsl::{parse_system, render_system};
pub use model::{Channel, OutputMap, Provenance, SystemDefinition};
pub use prolong::{stack_name, virtual_name, ProlongedSystem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("cannot remove every input")]
    RemovesAllInputs,
    #[error("prolongation pattern gives {order} integrators to removed input {input}")]
    PatternViolation { input: usize, order: usize },
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("input `{0}` has no integrator chain and cannot be an output channel")]
    UnprolongedInputChannel(String),
    #[error("line {line}: {msg}")]
    Dsl { line: usize, msg: String },
    #[error("line {line}: {source}")]
    DslExpr { line: usize, source: ExprError },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Sorted, duplicate-free subset of `{0, .., p-1}`.
///
/// Stored zero-based; displayed one-based as `{1,3}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet(Vec::new())
    }

    pub fn new(mut items: Vec<usize>, p: usize) -> Result<Self, SystemError> {
        items.sort_unstable();
        items.dedup();
        if let Some(&bad) = items.iter().find(|&&i| i >= p) {
            return Err(SystemError::IndexOutOfRange { index: bad + 1, len: p });
        }
        Ok(IndexSet(items))
    }

    /// Build from one-based indices as written in reports.
    pub fn from_one_based(items: &[usize], p: usize) -> Result<Self, SystemError> {
        if let Some(&bad) = items.iter().find(|&&i| i == 0 || i > p) {
            return Err(SystemError::IndexOutOfRange { index: bad, len: p });
        }
        IndexSet::new(items.iter().map(|i| i - 1).collect(), p)
    }

    pub fn full(p: usize) -> Self {
        IndexSet((0..p).collect())
    }

    pub fn complement(&self, p: usize) -> Self {
        IndexSet((0..p).filter(|i| !self.contains(*i)).collect())
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    /// All subsets of `{0..p-1}` with size in `1..=max_card`, ordered by
    /// cardinality and then lexicographically.
    pub fn enumerate(p: usize, max_card: usize) -> Vec<IndexSet> {
        let mut out = Vec::new();
        for k in 1..=max_card.min(p) {
            combinations(p, k, &mut |c| out.push(IndexSet(c.to_vec())));
        }
        out
    }

    /// Subsets of exactly `k` elements in lexicographic order.
    pub fn combinations_of(p: usize, k: usize) -> Vec<IndexSet> {
        let mut out = Vec::new();
        combinations(p, k, &mut |c| out.push(IndexSet(c.to_vec())));
        out
    }
}

fn combinations(p: usize, k: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, p: usize, k: usize, cur: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            visit(cur);
            return;
        }
        for i in start..p {
            if p - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, p, k, cur, visit);
            cur.pop();
        }
    }
    rec(0, p, k, &mut Vec::with_capacity(k), visit);
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Order-preserving extraction of the entries of `q` indexed by `s`.
pub fn slice<T: Clone>(q: &[T], s: &IndexSet) -> Result<Vec<T>, SystemError> {
    s.iter()
        .map(|i| {
            q.get(i).cloned().ok_or(SystemError::IndexOutOfRange {
                index: i + 1,
                len: q.len(),
            })
        })
        .collect()
}

/// Inverse of slicing: entries of `on_s` go to the positions in `s`, entries
/// of `off_s` fill the complement, both in order.
pub fn merge<T: Clone>(s: &IndexSet, on_s: &[T], off_s: &[T]) -> Result<Vec<T>, SystemError> {
    let p = on_s.len() + off_s.len();
    if s.len() != on_s.len() || s.iter().any(|i| i >= p) {
        return Err(SystemError::SizeMismatch {
            expected: s.len(),
            got: on_s.len(),
        });
    }
    let (mut a, mut b) = (on_s.iter(), off_s.iter());
    Ok((0..p)
        .map(|i| if s.contains(i) { a.next() } else { b.next() }.unwrap().clone())
        .collect())
}

/// Integrator counts per input, `ℓ = (l_1, .., l_p)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProlongationPattern(pub Vec<usize>);

impl ProlongationPattern {
    pub fn zeros(p: usize) -> Self {
        ProlongationPattern(vec![0; p])
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.0[i]
    }

    /// True when `l_i = 0` for every `i` in `removed`.
    pub fn respects(&self, removed: &IndexSet) -> bool {
        removed.iter().all(|i| self.0[i] == 0)
    }

    /// Patterns with entries in `0..=l_max` that vanish on `fixed_zero` and
    /// are at least `lower` entrywise, ordered by total then
    /// lexicographically.
    pub fn enumerate(p: usize, l_max: usize, fixed_zero: &IndexSet, lower: &[usize]) -> Vec<ProlongationPattern> {
        let mut all = Vec::new();
        let mut cur = vec![0usize; p];
        fn rec(i: usize, cur: &mut Vec<usize>, l_max: usize, z: &IndexSet, lower: &[usize], out: &mut Vec<Vec<usize>>) {
            if i == cur.len() {
                out.push(cur.clone());
                return;
            }
            let lo = lower.get(i).copied().unwrap_or(0);
            let hi = if z.contains(i) { 0 } else { l_max };
            for v in lo..=hi {
                cur[i] = v;
                rec(i + 1, cur, l_max, z, lower, out);
            }
            cur[i] = 0;
        }
        rec(0, &mut cur, l_max, fixed_zero, lower, &mut all);
        all.sort_by(|a, b| a.iter().sum::<usize>().cmp(&b.iter().sum::<usize>()).then_with(|| a.cmp(b)));
        all.into_iter().map(ProlongationPattern).collect()
    }
}

impl fmt::Display for ProlongationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl std::str::FromStr for ProlongationPattern {
    type Err = SystemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim().trim_start_matches(['(', '{', '[']).trim_end_matches([')', '}', ']']);
        trimmed
            .split(',')
            .map(|t| {
                t.trim().parse::<usize>().map_err(|_| SystemError::Dsl {
                    line: 0,
                    msg: format!("bad prolongation entry `{t}`"),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(ProlongationPattern)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_examples() {
        let q = ["a", "b", "c"];
        let s = IndexSet::from_one_based(&[1, 3], 3).unwrap();
        assert_eq!(slice(&q, &s).unwrap(), vec!["a", "c"]);
        assert!(slice(&q, &IndexSet::empty()).unwrap().is_empty());
        let removed = IndexSet::from_one_based(&[2], 3).unwrap();
        assert_eq!(slice(&["u1", "u2", "u3"], &removed.complement(3)).unwrap(), vec!["u1", "u3"]);
        assert!(slice(&q, &IndexSet(vec![5])).is_err());
    }

    #[test]
    fn merge_example() {
        let s = IndexSet::from_one_based(&[2], 3).unwrap();
        assert_eq!(merge(&s, &["beta"], &["alpha", "gamma"]).unwrap(), vec!["alpha", "beta", "gamma"]);
        assert!(merge(&s, &["x", "y"], &["z"]).is_err());
    }

    #[test]
    fn merge_builds_a_pattern_from_both_parts() {
        // reduced part on the kept inputs, chain lengths on the removed ones
        let a = IndexSet::from_one_based(&[1, 2], 3).unwrap();
        let l = merge(&a, &[2, 2], &[0]).unwrap();
        assert_eq!(l, vec![2, 2, 0]);
    }

    #[test]
    fn enumeration_orders() {
        let subsets: Vec<String> = IndexSet::enumerate(3, 2).iter().map(|s| s.to_string()).collect();
        assert_eq!(subsets, ["{1}", "{2}", "{3}", "{1,2}", "{1,3}", "{2,3}"]);
        let pats = ProlongationPattern::enumerate(2, 1, &IndexSet::empty(), &[]);
        let txt: Vec<String> = pats.iter().map(|p| p.to_string()).collect();
        assert_eq!(txt, ["(0,0)", "(0,1)", "(1,0)", "(1,1)"]);
        let z = IndexSet::from_one_based(&[1], 2).unwrap();
        assert_eq!(ProlongationPattern::enumerate(2, 2, &z, &[]).len(), 3);
    }

    #[test]
    fn pattern_parses() {
        let p: ProlongationPattern = "2,2,2,0,0,0".parse().unwrap();
        assert_eq!(p.total(), 6);
        assert_eq!("(0,1,0)".parse::<ProlongationPattern>().unwrap().to_string(), "(0,1,0)");
    }
}
