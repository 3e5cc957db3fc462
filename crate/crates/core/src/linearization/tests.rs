use super::*;
use crate::builtins::Builtin;
use crate::system::{IndexSet, ProlongationPattern};

fn sq() -> crate::system::SystemDefinition {
    Builtin::MotivatingSquare.system()
}

#[test]
fn lie_derivatives_of_the_square_system() {
    let sys = sq();
    let x1 = Expr::var("x1");
    let l1 = lie_derivative(&x1, &sys.f, &sys.states);
    assert_eq!(l1, Expr::var("x2"));
    let l2 = lie_derivative(&l1, &sys.f, &sys.states);
    assert_eq!(l2, Expr::var("x3"));
    assert!(lie_derivative(&Expr::int(3), &sys.f, &sys.states).is_zero());
}

#[test]
fn square_system_profile() {
    let sys = sq();
    let ps = ProlongedSystem::plain(&sys).unwrap();
    let prof = relative_degree_profile(&ps, sys.default_output().unwrap(), &Tolerances::default()).unwrap();
    assert_eq!(prof.r, vec![Some(2), Some(1), Some(1)]);
    assert!(prof.flat);
    let (a, b) = feedback_terms(&prof, &[0.3, -0.2, 0.5, 0.7]).unwrap();
    assert_eq!(a, DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]));
    assert_eq!(b.as_slice(), &[0.5, 0.7, 0.0]);
    let v = prof.validity.as_ref().unwrap();
    assert_eq!(v.accepted.len(), 257);
}

#[test]
fn rectangular_full_state_output_is_singular() {
    let sys = Builtin::MotivatingRect.system();
    let ps = ProlongedSystem::plain(&sys).unwrap();
    let full = OutputMap::new("x", sys.states.iter().map(|s| (s.clone(), Expr::var(s))).collect());
    let prof = relative_degree_profile(&ps, &full, &Tolerances::default()).unwrap();
    assert!(!prof.flat);
    assert_eq!(prof.failure, Some(FlatFailure::DegreeSumMismatch { sum: 5, n: 4 }));
    let y = relative_degree_profile(&ps, sys.default_output().unwrap(), &Tolerances::default()).unwrap();
    assert!(y.flat, "{:?}", y.failure);
}

#[test]
fn prolonged_square_system() {
    let sys = sq();
    let ps = sys
        .prolong(&"0,1,0".parse::<ProlongationPattern>().unwrap(), &IndexSet::empty())
        .unwrap();
    let y = sys.default_output().unwrap();
    let prof = relative_degree_profile(&ps, y, &Tolerances::default()).unwrap();
    assert_eq!(prof.r, vec![Some(2), Some(2), Some(1)]);
    assert!(prof.flat);
    let aug = ps
        .augmented_output(
            y,
            &IndexSet::from_one_based(&[3], 3).unwrap(),
            &IndexSet::from_one_based(&[2], 3).unwrap(),
        )
        .unwrap();
    let prof = relative_degree_profile(&ps, &aug, &Tolerances::default()).unwrap();
    assert_eq!(prof.r, vec![Some(2), Some(2), Some(1)]);
    assert!(prof.flat);
    // the input channel row is a unit row
    let row: Vec<bool> = prof.a_sym[2].iter().map(|e| e.is_one()).collect();
    assert_eq!(row, vec![false, true, false]);

    let ps = sys
        .prolong(&"2,2,0".parse::<ProlongationPattern>().unwrap(), &IndexSet::empty())
        .unwrap();
    let prof = relative_degree_profile(&ps, y, &Tolerances::default()).unwrap();
    assert_eq!(prof.r, vec![Some(4), Some(2), Some(1)]);
    assert_eq!(prof.failure, Some(FlatFailure::DegreeSumMismatch { sum: 7, n: 8 }));
}

#[test]
fn rigid_body_pose_is_flat() {
    let sys = Builtin::RigidBody.system();
    let ps = ProlongedSystem::plain(&sys).unwrap();
    let prof = relative_degree_profile(&ps, sys.default_output().unwrap(), &Tolerances::default()).unwrap();
    assert_eq!(prof.r, vec![Some(2); 6]);
    assert!(prof.flat);
    assert!(prof.validity.as_ref().unwrap().operating_point_accepted);
}

#[test]
fn mecanum_exclusion_factor() {
    let sys = Builtin::Mecanum.system();
    let ps = sys
        .prolong(&"1,0,1".parse::<ProlongationPattern>().unwrap(), &IndexSet::empty())
        .unwrap();
    let y = sys.default_output().unwrap();
    let aug = ps
        .augmented_output(
            y,
            &IndexSet::from_one_based(&[3], 3).unwrap(),
            &IndexSet::from_one_based(&[3], 3).unwrap(),
        )
        .unwrap();
    let prof = relative_degree_profile(&ps, &aug, &Tolerances::default()).unwrap();
    assert!(prof.flat);
    assert_eq!(prof.validity.as_ref().unwrap().factors, vec!["v1_d0".to_string()]);
    let det = symbolic_determinant(&prof.a_sym).expand();
    assert_eq!(det, Expr::var("v1_d0"));
}

#[test]
fn jet_table_matches_direct_degrees() {
    let sys = sq();
    let y = sys.default_output().unwrap();
    let jx = JetExpansion::new(&sys, y, 8, &Tolerances::default()).unwrap();
    let t = jx.appearance(&IndexSet::empty(), 8).unwrap();
    assert_eq!(t.c[0], vec![Some(2), Some(2), Some(4)]);
    assert_eq!(t.c[1], vec![None, Some(1), Some(2)]);
    assert_eq!(t.c[2], vec![None, None, Some(1)]);
    let t2 = jx.appearance(&IndexSet::from_one_based(&[2], 3).unwrap(), 8).unwrap();
    assert_eq!(t2.c[1], vec![None, None, Some(2)]);
    assert_eq!(t.degree(0, &[0, 1, 0], &[0, 1, 2]), Some((2, vec![0])));
}

#[test]
fn compatibility_with_itself() {
    let sys = sq();
    let ps = ProlongedSystem::plain(&sys).unwrap();
    let prof = relative_degree_profile(&ps, sys.default_output().unwrap(), &Tolerances::default()).unwrap();
    let c = compatible(&prof, &prof);
    assert!(c.compatible);
}
