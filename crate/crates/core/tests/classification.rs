use dexflat::builtins::Builtin;
use dexflat::classification::{classify, is_redundant, ClassificationConfig, InputLabel};
use dexflat::linearization::Tolerances;
use dexflat::system::IndexSet;

fn set(items: &[usize], p: usize) -> IndexSet {
    IndexSet::from_one_based(items, p).unwrap()
}

#[test]
fn example1_singletons_are_dexterity_but_their_union_is_not() {
    let sys = Builtin::Example1.system();
    let rep = classify(&sys, sys.default_output().unwrap(), &ClassificationConfig::default()).unwrap();
    let d = rep.d_family();
    assert!(d.contains(&set(&[1], 3)));
    assert!(d.contains(&set(&[2], 3)));
    assert!(!d.contains(&set(&[1, 2], 3)));
    assert_eq!(rep.delta(0), Some(1));
    assert!(rep.disagreements().is_empty());
}

#[test]
fn duplicated_actuators_are_redundant() {
    let sys = Builtin::MotivatingRect.system();
    let y = sys.default_output().unwrap();
    let tol = Tolerances::default();
    let red: Vec<bool> = (0..sys.p()).map(|i| is_redundant(&sys, y, i, &tol).unwrap()).collect();
    assert_eq!(red, vec![false, false, true, true]);
}

#[test]
fn rigid_body_loses_single_forces_and_pairs() {
    let sys = Builtin::RigidBody.system();
    let cfg = ClassificationConfig {
        a_max: Some(2),
        ..Default::default()
    };
    let rep = classify(&sys, sys.default_output().unwrap(), &cfg).unwrap();
    assert_eq!(rep.subsets.len(), 6 + 15);
    for f in 1..=3 {
        assert!(rep.verdict(&set(&[f], 6)).unwrap().in_d(), "force {f}");
    }
    for pair in [[1, 2], [1, 3], [2, 3]] {
        assert!(rep.verdict(&set(&pair, 6)).unwrap().in_d(), "forces {pair:?}");
    }
    // Torques enter the attitude channels directly and cannot be shed.
    for tq in 4..=6 {
        assert!(!rep.verdict(&set(&[tq], 6)).unwrap().in_d(), "torque {tq}");
    }
    assert!(rep.disagreements().is_empty());
    for i in 0..3 {
        assert_eq!(rep.labels[i], InputLabel::Dexterity);
    }
}

#[test]
fn mecanum_loses_three_wheels_at_once() {
    let sys = Builtin::Mecanum.system();
    let rep = classify(&sys, sys.default_output().unwrap(), &ClassificationConfig::default()).unwrap();
    assert_eq!(rep.delta(2), Some(1));
    assert!(rep.d_family().iter().all(|a| a.len() <= 3));
}

#[test]
fn tight_budget_is_reported_as_a_warning() {
    let sys = Builtin::Example1.system();
    let cfg = ClassificationConfig {
        l_max: 0,
        ..Default::default()
    };
    let rep = classify(&sys, sys.default_output().unwrap(), &cfg).unwrap();
    assert!(rep.has_budget_warnings(), "{:?}", rep.warnings);
}

#[test]
fn json_report_lists_every_subset() {
    let sys = Builtin::MotivatingSquare.system();
    let rep = classify(&sys, sys.default_output().unwrap(), &ClassificationConfig::default()).unwrap();
    let js = rep.to_json();
    assert_eq!(js["subsets"].as_array().map(Vec::len), Some(rep.subsets.len()), "{js}");
}
