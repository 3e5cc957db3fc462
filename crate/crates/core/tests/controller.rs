use approx::assert_relative_eq;
use dexflat::builtins::Builtin;
use dexflat::controller::{
    gains_from_poles, is_hurwitz, poly_from_poles, GainSet, Generator, Supervisor, SwitchRejection, SwitchingController,
};
use dexflat::linearization::{relative_degree_profile, Tolerances};
use dexflat::system::IndexSet;
use proptest::prelude::*;

proptest! {
    #[test]
    fn negative_real_poles_give_hurwitz_gains(poles in proptest::collection::vec(-20.0f64..-0.1, 1..6)) {
        let c = poly_from_poles(&poles);
        prop_assert_eq!(c.len(), poles.len());
        prop_assert!(is_hurwitz(&c));
    }

    #[test]
    fn a_positive_pole_breaks_hurwitz(
        poles in proptest::collection::vec(-20.0f64..-0.1, 0..5),
        bad in 0.1f64..10.0,
    ) {
        let mut all = poles;
        all.push(bad);
        prop_assert!(!is_hurwitz(&poly_from_poles(&all)));
    }

    #[test]
    fn generator_jets_match_finite_differences(
        t in -3.0f64..3.0,
        c in proptest::collection::vec(-2.0f64..2.0, 1..5),
        amp in -2.0f64..2.0,
        omega in 0.1f64..3.0,
        phase in -3.0f64..3.0,
    ) {
        let h = 1e-5;
        for g in [
            Generator::Polynomial { coeffs: c.clone() },
            Generator::Sinusoid { offset: 0.3, amplitude: amp, omega, phase },
        ] {
            let j = g.jet(t, 3);
            for k in 0..3 {
                let fd = (g.jet(t + h, k)[k] - g.jet(t - h, k)[k]) / (2.0 * h);
                prop_assert!((fd - j[k + 1]).abs() < 1e-5 * (1.0 + j[k + 1].abs()), "order {} of {:?}", k + 1, g);
            }
        }
    }
}

#[test]
fn repeated_pole_gains() {
    assert_eq!(gains_from_poles(2, &[-2.0, -2.0]).unwrap(), vec![4.0, 4.0]);
    assert!(gains_from_poles(2, &[1.0, -1.0]).is_err() && gains_from_poles(2, &[-1.0]).is_err());
}

fn motivating() -> SwitchingController {
    let sys = Builtin::MotivatingSquare.system();
    let ps = sys.prolong(&"0,1,0".parse().unwrap(), &IndexSet::empty()).unwrap();
    let prof = relative_degree_profile(&ps, sys.default_output().unwrap(), &Tolerances::default()).unwrap();
    let gains = GainSet::defaults(&prof, &ps).unwrap();
    let refs = vec![
        Generator::Constant { value: 1.0 },
        Generator::Constant { value: -1.0 },
        Generator::Constant { value: 0.5 },
    ];
    SwitchingController::new(ps, prof, gains, refs).unwrap()
}

#[test]
fn full_selection_assigns_the_error_dynamics() {
    let c = motivating();
    let x = [0.2, -0.1, 0.3, 0.05, 0.4];
    let f = c.frame(&x, 0.0).unwrap();
    let sel = c.selection(0, "FM", &IndexSet::empty(), &IndexSet::empty()).unwrap();
    let v = c.control(&f, &sel).unwrap();
    // Each kept output row satisfies y^(r) = w after applying v.
    let gd = c.selected_matrix(&f, &sel);
    let achieved = &gd * &v;
    for (k, &row) in sel.rows.iter().enumerate() {
        assert_relative_eq!(achieved[k] + f.q[row], f.w[row], epsilon = 1e-10);
    }
}

#[test]
fn reference_with_wrong_width_is_refused() {
    let sys = Builtin::MotivatingSquare.system();
    let ps = sys.prolong(&"0,1,0".parse().unwrap(), &IndexSet::empty()).unwrap();
    let prof = relative_degree_profile(&ps, sys.default_output().unwrap(), &Tolerances::default()).unwrap();
    let gains = GainSet::defaults(&prof, &ps).unwrap();
    assert!(SwitchingController::new(ps, prof, gains, vec![Generator::Constant { value: 0.0 }]).is_err());
}

#[test]
fn selecting_an_unprolonged_input_is_an_error() {
    let c = motivating();
    let a = IndexSet::from_one_based(&[1], 3).unwrap();
    let o = IndexSet::from_one_based(&[3], 3).unwrap();
    assert!(c.selection(1, "bad", &a, &o).is_err());
}

#[test]
fn supervisor_refuses_non_edges() {
    let c = motivating();
    let s0 = c.selection(0, "FM", &IndexSet::empty(), &IndexSet::empty()).unwrap();
    let a = IndexSet::from_one_based(&[2], 3).unwrap();
    let o = IndexSet::from_one_based(&[3], 3).unwrap();
    let s1 = c.selection(1, "U2", &a, &o).unwrap();
    let mut sup = Supervisor::new(0.0, [], vec![0, 1]);
    assert!(matches!(sup.request(&s0, &s1, 1.0), Err(SwitchRejection::NotAnEdge { .. })));
    let mut sup = Supervisor::new(0.0, [(1, 0)], vec![0, 1]);
    assert_eq!(sup.request(&s0, &s1, 1.0), Ok(true));
}
