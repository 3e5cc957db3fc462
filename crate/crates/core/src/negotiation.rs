//! Flat outputs sharing one prolongation and the compatibility graph
//! between them.
//!
//! A vertex `(A, O)` stands for the output `(y_Ō, u_A)` on `Σ^(ℓ)`. Two
//! vertices are joined when their validity regions overlap (checked on
//! shared samples, see [`compatible`]). Switching between adjacent vertices
//! is what the controller supports without transients, so the interesting
//! part of the graph is the component of the full task `(∅, ∅)`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::classification::{ClassificationConfig, ClassificationError, Classifier};
use crate::linearization::{compatible, relative_degree_profile, LinearizationError, RelativeDegreeProfile};
use crate::system::{IndexSet, OutputMap, ProlongationPattern, ProlongedSystem, SystemDefinition, SystemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NegotiationError {
    #[error("output is not flat for the prolongation {pattern}: {reason}")]
    NotInLEmpty { pattern: ProlongationPattern, reason: String },
    #[error("pattern {pattern} has {got} entries, the system has {p} inputs")]
    PatternLength {
        pattern: ProlongationPattern,
        got: usize,
        p: usize,
    },
    #[error(transparent)]
    Classification(#[from] ClassificationError),
    #[error(transparent)]
    Linearization(#[from] LinearizationError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// A flat output on the common prolongation.
#[derive(Clone, Debug)]
pub struct MeldVertex {
    pub a: IndexSet,
    pub o: IndexSet,
    pub output: OutputMap,
    pub profile: RelativeDegreeProfile,
    /// Display label, e.g. `DF#2`; defaults to the pair itself.
    pub label: String,
}

impl MeldVertex {
    pub fn is_full_task(&self) -> bool {
        self.a.is_empty()
    }

    pub fn pair_string(&self) -> String {
        format!("A={} O={}", self.a, self.o)
    }
}

/// Known labels for `(A, O)` pairs, used when rendering.
pub type LabelTable = Vec<(IndexSet, IndexSet, String)>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub witness: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct NegotiabilityGraph {
    pub pattern: ProlongationPattern,
    pub psys: ProlongedSystem,
    pub vertices: Vec<MeldVertex>,
    pub edges: Vec<Edge>,
    /// Vertices reachable from the full task, sorted.
    pub starred: Vec<usize>,
}

/// Bounds for the family enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct FamilyConfig {
    pub classification: ClassificationConfig,
}

/// All `(A, O)` with `(y_Ō, u_A)` flat for `Σ^(ℓ)`, with `(∅, ∅)` first.
///
/// Only inputs with at least one integrator can be output channels, so `A`
/// ranges over subsets of the prolonged inputs, up to the configured
/// cardinality.
pub fn build_realizable_family(
    sys: &SystemDefinition,
    y: &OutputMap,
    pattern: &ProlongationPattern,
    cfg: &FamilyConfig,
    labels: &LabelTable,
) -> Result<(ProlongedSystem, Vec<MeldVertex>), NegotiationError> {
    let p = sys.p();
    if pattern.len() != p {
        return Err(NegotiationError::PatternLength {
            pattern: pattern.clone(),
            got: pattern.len(),
            p,
        });
    }
    let tol = cfg.classification.tol;
    let psys = sys.prolong(pattern, &IndexSet::empty())?;
    let full = relative_degree_profile(&psys, y, &tol)?;
    if !full.flat {
        return Err(NegotiationError::NotInLEmpty {
            pattern: pattern.clone(),
            reason: full.failure.map(|f| f.to_string()).unwrap_or_default(),
        });
    }
    let prolonged: Vec<usize> = (0..p).filter(|&i| pattern.0[i] > 0).collect();
    let a_max = cfg.classification.a_max_for(p).min(prolonged.len()).min(y.len());
    let mut cands = Vec::new();
    for k in 1..=a_max {
        for sub in IndexSet::combinations_of(prolonged.len(), k) {
            let a = IndexSet::new(sub.iter().map(|s| prolonged[s]).collect(), p)?;
            for o in IndexSet::combinations_of(y.len(), k) {
                cands.push((a.clone(), o));
            }
        }
    }
    let classifier = Classifier::new(sys, y, &cfg.classification)?;
    let screened = classifier.augmented_screens(pattern, &cands);
    let passing: Vec<&(IndexSet, IndexSet)> = cands.iter().zip(screened).filter(|(_, ok)| *ok).map(|(c, _)| c).collect();
    let found: Vec<Option<MeldVertex>> = passing
        .par_iter()
        .map(|(a, o)| -> Result<_, NegotiationError> {
            let out = psys.augmented_output(y, o, a)?;
            let prof = relative_degree_profile(&psys, &out, &tol)?;
            Ok(prof.flat.then(|| vertex(a.clone(), o.clone(), out, prof, labels)))
        })
        .collect::<Result<_, _>>()?;
    let mut vertices = vec![vertex(IndexSet::empty(), IndexSet::empty(), y.clone(), full, labels)];
    vertices.extend(found.into_iter().flatten());
    Ok((psys, vertices))
}

fn vertex(a: IndexSet, o: IndexSet, output: OutputMap, profile: RelativeDegreeProfile, labels: &LabelTable) -> MeldVertex {
    let label = labels
        .iter()
        .find(|(la, lo, _)| *la == a && *lo == o)
        .map(|l| l.2.clone())
        .unwrap_or_else(|| if a.is_empty() { "full".to_string() } else { format!("A={a} O={o}") });
    MeldVertex {
        a,
        o,
        output,
        profile,
        label,
    }
}

/// Joins compatible vertices and marks the component of the full task.
pub fn build_graph(pattern: &ProlongationPattern, psys: ProlongedSystem, vertices: Vec<MeldVertex>) -> NegotiabilityGraph {
    let n = vertices.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let edges: Vec<Edge> = pairs
        .par_iter()
        .filter_map(|&(i, j)| {
            let c = compatible(&vertices[i].profile, &vertices[j].profile);
            c.witness.map(|w| Edge { a: i, b: j, witness: w })
        })
        .collect();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    if let Some(root) = vertices.iter().position(MeldVertex::is_full_task) {
        seen[root] = true;
        queue.push_back(root);
    }
    while let Some(v) = queue.pop_front() {
        for e in &edges {
            let w = if e.a == v {
                e.b
            } else if e.b == v {
                e.a
            } else {
                continue;
            };
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    NegotiabilityGraph {
        pattern: pattern.clone(),
        psys,
        vertices,
        edges,
        starred: (0..n).filter(|&i| seen[i]).collect(),
    }
}

impl NegotiabilityGraph {
    pub fn find(&self, label: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.label == label)
    }

    pub fn find_pair(&self, a: &IndexSet, o: &IndexSet) -> Option<usize> {
        self.vertices.iter().position(|v| &v.a == a && &v.o == o)
    }

    pub fn edge(&self, i: usize, j: usize) -> Option<&Edge> {
        let (a, b) = (i.min(j), i.max(j));
        self.edges.iter().find(|e| e.a == a && e.b == b)
    }

    pub fn is_starred(&self, i: usize) -> bool {
        self.starred.binary_search(&i).is_ok()
    }

    pub fn neighbours(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|e| {
                if e.a == i {
                    Some(e.b)
                } else if e.b == i {
                    Some(e.a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Plain-text listing of vertices and adjacency.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "prolongation {} ({} vertices, {} edges, {} in the full-task component)",
            self.pattern,
            self.vertices.len(),
            self.edges.len(),
            self.starred.len()
        );
        for (i, v) in self.vertices.iter().enumerate() {
            let star = if self.is_starred(i) { "*" } else { " " };
            let names = v.output.names().join(", ");
            let excl = v.profile.validity.as_ref().map(|s| s.factors.join(" * ")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{star} [{i:>2}] {:<8} {:<18} ({names})  det factors: {}",
                v.label,
                v.pair_string(),
                if excl.is_empty() { "-" } else { &excl }
            );
            let nb: Vec<String> = self.neighbours(i).iter().map(|&j| self.vertices[j].label.clone()).collect();
            let _ = writeln!(s, "       adjacent: {}", nb.join(", "));
        }
        s
    }
}

/// Graphviz rendering; vertices of the full-task component are filled.
pub fn export_dot(g: &NegotiabilityGraph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "graph negotiability {{");
    let _ = writeln!(s, "  label=\"prolongation {}\";", g.pattern);
    let _ = writeln!(s, "  node [shape=box, fontname=\"Helvetica\"];");
    for (i, v) in g.vertices.iter().enumerate() {
        let names = v.output.names().join(", ");
        let style = if g.is_starred(i) {
            ", style=filled, fillcolor=\"#ffe9a8\""
        } else {
            ""
        };
        let _ = writeln!(s, "  v{i} [label=\"{}\\n{}\\n({names})\"{style}];", v.label, v.pair_string());
    }
    for e in &g.edges {
        let _ = writeln!(s, "  v{} -- v{};", e.a, e.b);
    }
    s.push_str("}\n");
    s
}

/// Convenience wrapper: family plus graph.
pub fn negotiability_graph(
    sys: &SystemDefinition,
    y: &OutputMap,
    pattern: &ProlongationPattern,
    cfg: &FamilyConfig,
    labels: &LabelTable,
) -> Result<NegotiabilityGraph, NegotiationError> {
    let (psys, vertices) = build_realizable_family(sys, y, pattern, cfg, labels)?;
    Ok(build_graph(pattern, psys, vertices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::Builtin;

    fn graph(b: Builtin, ell: &str) -> Result<NegotiabilityGraph, NegotiationError> {
        let sys = b.system();
        let y = sys.default_output().unwrap().clone();
        negotiability_graph(&sys, &y, &ell.parse().unwrap(), &FamilyConfig::default(), &Vec::new())
    }

    #[test]
    fn motivating_graph_has_two_vertices_and_one_edge() {
        let g = graph(Builtin::MotivatingSquare, "0,1,0").unwrap();
        assert_eq!(g.vertices.len(), 2);
        assert_eq!(g.vertices[1].a, IndexSet::from_one_based(&[2], 3).unwrap());
        assert_eq!(g.vertices[1].o, IndexSet::from_one_based(&[3], 3).unwrap());
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.starred, vec![0, 1]);
        let dot = export_dot(&g);
        assert!(dot.contains("v0 -- v1"));
    }

    #[test]
    fn degree_four_chain_is_not_a_common_prolongation() {
        match graph(Builtin::MotivatingSquare, "2,2,0") {
            Err(NegotiationError::NotInLEmpty { reason, .. }) => assert!(reason.contains("7")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn edges_carry_witnesses_accepted_by_both_ends() {
        let g = graph(Builtin::Mecanum, "1,0,1").unwrap();
        for e in &g.edges {
            assert!(e.a < e.b);
            assert!(g.vertices[e.a].profile.accepts(&e.witness));
            assert!(g.vertices[e.b].profile.accepts(&e.witness));
        }
        assert!(g.starred.contains(&0));
    }
}
