use dexflat::builtins::Builtin;
use dexflat::system::{merge, parse_system, render_system, slice, IndexSet, ProlongationPattern};
use proptest::prelude::*;

fn subset(p: usize) -> impl Strategy<Value = IndexSet> {
    proptest::collection::vec(any::<bool>(), p).prop_map(move |mask| IndexSet::new((0..p).filter(|&i| mask[i]).collect(), p).unwrap())
}

proptest! {
    #[test]
    fn merge_inverts_slice((p, s) in (1usize..8).prop_flat_map(|p| (Just(p), subset(p)))) {
        let q: Vec<usize> = (100..100 + p).collect();
        let on = slice(&q, &s).unwrap();
        let off = slice(&q, &s.complement(p)).unwrap();
        prop_assert_eq!(merge(&s, &on, &off).unwrap(), q);
    }

    #[test]
    fn complement_is_an_involution((p, s) in (1usize..8).prop_flat_map(|p| (Just(p), subset(p)))) {
        let c = s.complement(p);
        prop_assert_eq!(c.len() + s.len(), p);
        prop_assert!(c.iter().all(|i| !s.contains(i)));
        prop_assert_eq!(c.complement(p), s);
    }

    #[test]
    fn one_based_round_trip((p, s) in (1usize..8).prop_flat_map(|p| (Just(p), subset(p)))) {
        prop_assert_eq!(IndexSet::from_one_based(&s.one_based(), p).unwrap(), s);
    }

    #[test]
    fn pattern_text_round_trip(l in proptest::collection::vec(0usize..5, 1..7)) {
        let pat = ProlongationPattern(l);
        prop_assert_eq!(pat.to_string().parse::<ProlongationPattern>().unwrap(), pat);
    }

    #[test]
    fn prolongation_adds_one_state_per_integrator(l in proptest::collection::vec(0usize..4, 6)) {
        let sys = Builtin::RigidBody.system();
        let pat = ProlongationPattern(l);
        let ps = sys.prolong(&pat, &IndexSet::empty()).unwrap();
        prop_assert_eq!(ps.n(), sys.n() + pat.total());
        prop_assert_eq!(ps.m(), sys.p());
    }

    #[test]
    fn removed_inputs_read_zero((s, v) in (subset(3), proptest::collection::vec(-5.0f64..5.0, 3))) {
        prop_assume!(s.len() < 3);
        let sys = Builtin::MotivatingSquare.system();
        let ps = sys.prolong(&ProlongationPattern::zeros(3), &s).unwrap();
        let x = vec![0.0; ps.n()];
        let u = ps.physical_inputs(&x, &v[..ps.m()]);
        for i in s.iter() {
            prop_assert_eq!(u[i], 0.0);
        }
    }
}

#[test]
fn pattern_enumeration_is_ordered_and_respects_zeros() {
    let z = IndexSet::from_one_based(&[2], 3).unwrap();
    let pats = ProlongationPattern::enumerate(3, 2, &z, &[]);
    assert_eq!(pats.len(), 9);
    assert!(pats.iter().all(|p| p.respects(&z)));
    assert!(pats.windows(2).all(|w| (w[0].total(), &w[0]) < (w[1].total(), &w[1])));
}

#[test]
fn builtins_round_trip_through_the_file_format() {
    for b in Builtin::ALL {
        let sys = b.system();
        let again = parse_system(&render_system(&sys)).unwrap();
        assert_eq!(render_system(&again), render_system(&sys), "{b}");
        assert_eq!(again.n(), sys.n());
        assert_eq!(again.p(), sys.p());
    }
}

#[test]
fn parse_errors_report_lines() {
    let text = "system s\nstates: x\ninputs: u\nf:\n  x +\ng u:\n  1\n";
    let e = parse_system(text).unwrap_err().to_string();
    assert!(e.contains('5'), "{e}");
}

#[test]
fn removing_every_input_is_refused() {
    let sys = Builtin::Example1.system();
    assert!(sys.prolong(&ProlongationPattern::zeros(3), &IndexSet::full(3)).is_err());
    assert!(sys
        .prolong(&ProlongationPattern(vec![1, 0, 0]), &IndexSet::from_one_based(&[1], 3).unwrap())
        .is_err());
}
