use super::*;
use crate::builtins::Builtin;

fn set(items: &[usize], p: usize) -> IndexSet {
    IndexSet::from_one_based(items, p).unwrap()
}

fn classifier(b: Builtin) -> Classifier {
    let sys = b.system();
    let y = sys.default_output().unwrap().clone();
    Classifier::new(&sys, &y, &ClassificationConfig::default()).unwrap()
}

#[test]
fn square_system_first_pairs() {
    let c = classifier(Builtin::MotivatingSquare);
    let d2 = c.check_dexterity(&set(&[2], 3)).unwrap().unwrap();
    assert_eq!(d2.pattern.0, vec![0, 0, 0]);
    assert_eq!(d2.o, set(&[3], 3));
    assert_eq!(d2.r, vec![2, 2]);
    assert!(c.check_dexterity(&set(&[3], 3)).unwrap().is_none());
    let d12 = c.check_dexterity(&set(&[1, 2], 3)).unwrap().unwrap();
    assert_eq!(d12.r, vec![4]);

    let f2 = c.check_flat_input_complement(&set(&[2], 3)).unwrap().unwrap();
    assert_eq!(f2.pattern.0, vec![0, 1, 0]);
    assert_eq!(f2.o, set(&[3], 3));
    assert_eq!(f2.kind, PairKind::AugmentedZeroCompatible);
}

#[test]
fn constructive_pattern_recovers_single_integrator() {
    let c = classifier(Builtin::MotivatingSquare);
    let a = set(&[2], 3);
    let d2 = c.check_dexterity(&a).unwrap().unwrap();
    let chk = c.constructive_check(&a, &d2).unwrap();
    assert_eq!(chk.pattern.0, vec![0, 1, 0]);
    assert!(chk.flat && chk.zero_compatible && chk.within_budget);
    assert!(chk.restriction_gap.unwrap() < 1e-12);
}

#[test]
fn example1_union_is_not_dexterity() {
    let c = classifier(Builtin::Example1);
    let rep = c.classify().unwrap();
    assert_eq!(rep.d_family(), vec![set(&[1], 3), set(&[2], 3)]);
    assert_eq!(rep.labels[2], InputLabel::Essential);
    assert!(rep.disagreements().is_empty());
}

#[test]
fn rectangular_redundancy() {
    let sys = Builtin::MotivatingRect.system();
    let y = sys.default_output().unwrap();
    let tol = Tolerances::default();
    let red: Vec<bool> = (0..4).map(|i| is_redundant(&sys, y, i, &tol).unwrap()).collect();
    assert_eq!(red, vec![false, false, true, true]);
    let sq = Builtin::MotivatingSquare.system();
    let y = sq.default_output().unwrap();
    assert!((0..3).all(|i| !is_redundant(&sq, y, i, &tol).unwrap()));
}

#[test]
fn duplicated_column_is_redundant() {
    let mut sys = Builtin::MotivatingSquare.system();
    sys.inputs.push("u4".into());
    sys.g.push(sys.g[2].clone());
    sys.input_point.push(0.0);
    sys.input_box.push((-1.0, 1.0));
    let y = sys.default_output().unwrap().clone();
    assert!(is_redundant(&sys, &y, 3, &Tolerances::default()).unwrap());
}

#[test]
fn bad_subsets_are_rejected() {
    let c = classifier(Builtin::MotivatingSquare);
    assert!(c.check_dexterity(&IndexSet::full(3)).is_err());
    assert!(c.check_dexterity(&IndexSet::empty()).is_err());
}
