use super::*;
use approx::assert_relative_eq;

fn decay(_: f64, x: &[f64]) -> Result<Vec<f64>, SimError> {
    Ok(vec![-x[0]])
}

#[test]
fn rk4_matches_exponential_decay() {
    let (t, x) = integrate(decay, &[1.0], 1.0, 0.01).unwrap();
    assert_eq!(t.len(), 101);
    assert_relative_eq!(x[100][0], (-1.0f64).exp(), epsilon = 1e-10);
}

#[test]
fn rk4_is_fourth_order() {
    let err = |h: f64| (integrate(decay, &[1.0], 2.0, h).unwrap().1.last().unwrap()[0] - (-2.0f64).exp()).abs();
    let order = (err(0.1) / err(0.05)).log2();
    assert!((3.7..=4.3).contains(&order), "observed order {order}");
}

#[test]
fn lti_response_of_first_and_second_order() {
    assert_relative_eq!(lti_response(&[3.0], &[2.0], 0.5), 2.0 * (-1.5f64).exp(), epsilon = 1e-12);
    // (λ+1)², e(0)=1, ė(0)=0: e = (1+t) e^{-t}.
    assert_relative_eq!(lti_response(&[1.0, 2.0], &[1.0, 0.0], 2.0), 3.0 * (-2.0f64).exp(), epsilon = 1e-12);
}

#[test]
fn fitted_time_constant() {
    let t: Vec<f64> = (0..1000).map(|k| k as f64 * 1e-3).collect();
    let s: Vec<f64> = t.iter().map(|t| 5.0 * (-t / 0.1).exp()).collect();
    assert_relative_eq!(fit_time_constant(&t, &s, 0.0, 0.5, 1e-9).unwrap(), 0.1, epsilon = 1e-9);
}

#[test]
fn builtin_scenarios_round_trip() {
    for (id, _) in BUILTIN_SCENARIOS {
        let s = builtin_scenario(id).unwrap();
        assert_eq!(parse_scenario(&render_scenario(&s)).unwrap(), s, "{id}");
    }
}

#[test]
fn scenario_errors_carry_line_numbers() {
    let e = parse_scenario("scenario x\nsystem builtin:example1\nbogus 1\n").unwrap_err();
    assert!(matches!(e, SimError::Scenario { line: 3, .. }), "{e}");
    let e = parse_scenario("system builtin:example1\nh 1/0.0x\nduration 1\n").unwrap_err();
    assert!(matches!(e, SimError::Scenario { line: 2, .. }), "{e}");
}

#[test]
fn direct_shutdown_disturbs_the_kept_channel() {
    let tr = run_scenario(&builtin_scenario("motivating_direct").unwrap()).unwrap();
    assert!(tr.aborted.is_none(), "{:?}", tr.aborted);
    let m = transient_metric(&tr, "x3", 8.0, TRANSIENT_WINDOW).unwrap();
    assert!(m.value > 0.01, "metric {}", m.value);
    let u2 = tr.input_series("u2").unwrap();
    assert_eq!(*u2.last().unwrap(), 0.0);
}

#[test]
fn unified_switch_keeps_the_kept_channel_smooth() {
    let tr = run_scenario(&builtin_scenario("motivating_unified").unwrap()).unwrap();
    assert!(tr.aborted.is_none(), "{:?}", tr.aborted);
    assert_eq!(tr.switch_times(), vec![8.0]);
    let m = transient_metric(&tr, "x3", 8.0, TRANSIENT_WINDOW).unwrap();
    assert!(m.is_transient_free(EPS_NO_TRANSIENT), "metric {}", m.value);
    let m1 = transient_metric(&tr, "x1", 8.0, TRANSIENT_WINDOW).unwrap();
    assert!(m1.is_transient_free(EPS_NO_TRANSIENT), "metric {}", m1.value);
    let u2 = tr.input_series("u2").unwrap();
    let tau = fit_time_constant(&tr.t, &u2, 8.0, 8.5, 1e-9).unwrap();
    assert!((tau - 0.1).abs() < 0.02, "time constant {tau}");
    assert!(u2.last().unwrap().abs() < 1e-6);
}

#[test]
fn example4_leaves_x1_on_the_last_input() {
    let tr = run_scenario(&builtin_scenario("example4").unwrap()).unwrap();
    assert!(tr.aborted.is_none(), "{:?}", tr.aborted);
    let e1 = tr.error_series("x1").unwrap();
    assert!(e1.last().unwrap().abs() < 1e-2, "final error {}", e1.last().unwrap());
    let m = transient_metric(&tr, "x1", 8.0, TRANSIENT_WINDOW).unwrap();
    assert!(m.value > 0.01);
}

#[test]
fn csv_and_gnuplot_shapes() {
    let tr = run_scenario(&builtin_scenario("motivating_direct").unwrap()).unwrap();
    let csv = tr.to_csv();
    let header = csv.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 1 + 4 + 3 + 3 + 1 + 3 * 3);
    assert_eq!(csv.lines().count(), tr.len() + 1);
    let gp = tr.gnuplot_script("run.csv", "run.png");
    assert!(gp.contains("set arrow from 8"));
}

#[test]
fn schedule_without_a_start_entry_begins_on_the_full_task() {
    let mut s = builtin_scenario("motivating_unified").unwrap();
    if let ScenarioMode::Unified { schedule, .. } = &mut s.mode {
        schedule.retain(|(t, _)| *t > 0.0);
    }
    let tr = run_scenario(&s).unwrap();
    assert_eq!(tr.vertex[0], "FM");
    assert_eq!(tr.switch_times(), vec![8.0]);
}
