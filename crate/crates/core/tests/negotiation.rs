use std::collections::BTreeSet;

use dexflat::builtins::{Builtin, RIGID_BODY_MELDS};
use dexflat::negotiation::{export_dot, negotiability_graph, FamilyConfig, NegotiabilityGraph, NegotiationError};
use dexflat::system::IndexSet;

fn graph(b: Builtin, ell: &str) -> Result<NegotiabilityGraph, NegotiationError> {
    let sys = b.system();
    let y = sys.default_output().unwrap().clone();
    negotiability_graph(&sys, &y, &ell.parse().unwrap(), &FamilyConfig::default(), &b.labels())
}

#[test]
fn rigid_body_graph_matches_the_meld_table() {
    let g = graph(Builtin::RigidBody, "2,2,2,0,0,0").unwrap();
    let expected: BTreeSet<String> = RIGID_BODY_MELDS.iter().map(|r| r.label()).collect();
    let got: BTreeSet<String> = g.vertices.iter().map(|v| v.label.clone()).collect();
    assert_eq!(got, expected);
    assert_eq!(g.vertices[0].label, "FM");
    assert!(g.vertices[0].is_full_task());
    for r in RIGID_BODY_MELDS.iter() {
        let a = IndexSet::from_one_based(r.a, 6).unwrap();
        let o = IndexSet::from_one_based(r.o, 6).unwrap();
        let i = g.find_pair(&a, &o).unwrap_or_else(|| panic!("missing {}", r.label()));
        assert_eq!(g.find(&r.label()), Some(i));
    }
    // Validity regions are open dense sets here, so every vertex is reachable.
    assert_eq!(g.starred.len(), g.vertices.len());
    for e in &g.edges {
        assert!(g.vertices[e.a].profile.accepts(&e.witness));
        assert!(g.vertices[e.b].profile.accepts(&e.witness));
    }

    let dot = export_dot(&g);
    assert!(dot.starts_with("graph"));
    for v in &g.vertices {
        assert!(dot.contains(&v.label), "{} missing from DOT", v.label);
    }
    assert_eq!(dot.matches(" -- ").count(), g.edges.len());
}

#[test]
fn neighbours_are_symmetric() {
    let g = graph(Builtin::Mecanum, "1,0,1").unwrap();
    for i in 0..g.vertices.len() {
        for j in g.neighbours(i) {
            assert!(g.neighbours(j).contains(&i));
            assert!(g.edge(i, j).is_some() && g.edge(j, i).is_some());
        }
    }
}

#[test]
fn unprolonged_inputs_never_become_output_channels() {
    let g = graph(Builtin::MotivatingSquare, "0,1,0").unwrap();
    for v in &g.vertices {
        assert!(v.a.iter().all(|i| i == 1), "{}", v.pair_string());
    }
}

#[test]
fn invalid_patterns_are_reported() {
    assert!(matches!(
        graph(Builtin::MotivatingSquare, "2,2,0"),
        Err(NegotiationError::NotInLEmpty { .. })
    ));
    assert!(matches!(
        graph(Builtin::MotivatingSquare, "1,1"),
        Err(NegotiationError::PatternLength { got: 2, p: 3, .. })
    ));
}
