use dexflat::simulator::*;

const SINGULAR_CROSSING: &str = "\
scenario crossing
system inline
system crossing
states: x1 x2
inputs: u1 u2
operating_point: 0 0
f:
  0
  0
g u1:
  1
  1
g u2:
  1
  x1
output y:
  x1
  x2
end
mode unified
vertex FM A={} O={}
switch 0 FM
reference x1 const 2
reference x2 const 0
x0 0 0
h 0.001
duration 5
";

#[test]
fn crossing_the_singular_set_aborts() {
    let tr = run_scenario(&parse_scenario(SINGULAR_CROSSING).unwrap()).unwrap();
    let reason = tr.aborted.as_deref().expect("run should abort");
    assert!(reason.contains("singular"), "{reason}");
    // det = x1 - 1 vanishes where x1 = 1.
    let x1 = tr.x.last().unwrap()[0];
    assert!(x1 < 1.0 && x1 > 0.9, "last recorded x1 = {x1}");
    assert!(matches!(tr.events.last().unwrap().kind, EventKind::Abort { .. }));
}

#[test]
fn rigid_body_switches_keep_shared_channels() {
    let sc = builtin_scenario("rigidbody_fm_df_qm").unwrap();
    let tr = run_scenario(&sc).unwrap();
    assert!(tr.aborted.is_none(), "{:?}", tr.aborted);
    assert_eq!(tr.switch_times(), vec![16.0, 32.0]);
    // FM -> DF#2 releases theta; DF#2 -> QM#13 releases phi.
    for (t, released) in [(16.0, "theta"), (32.0, "phi")] {
        for ch in ["p1", "p2", "p3", "psi"] {
            let m = transient_metric(&tr, ch, t, TRANSIENT_WINDOW).unwrap();
            assert!(m.value < 1e-6, "{ch} at {t}: {}", m.value);
        }
        let m = transient_metric(&tr, released, t, TRANSIENT_WINDOW).unwrap();
        assert!(m.value > 1e-2, "{released} should leave its reference");
    }
    // After the last switch the removed forces settle at zero.
    let f1 = tr.input_series("f1").unwrap();
    let f2 = tr.input_series("f2").unwrap();
    assert!(f1.last().unwrap().abs() < 1e-3 && f2.last().unwrap().abs() < 1e-3);
    // Position keeps tracking the ramp.
    let e = tr.error_series("p1").unwrap();
    assert!(e.last().unwrap().abs() < 1e-6);
}

#[test]
fn dwell_rejects_early_switch() {
    let text = builtin_scenario("motivating_unified").map(|s| render_scenario(&s)).unwrap();
    let text = text
        .replace("switch 8 U2OFF", "switch 0.5 U2OFF\nswitch 1 FM")
        .replace("dwell 1", "dwell 2");
    let tr = run_scenario(&parse_scenario(&text).unwrap()).unwrap();
    assert_eq!(tr.switch_times(), vec![0.5]);
    let rejected = tr
        .events
        .iter()
        .find(|e| matches!(e.kind, EventKind::Rejected { .. }))
        .expect("rejection event");
    assert_eq!(rejected.t, 1.0);
}

#[test]
fn unknown_vertex_in_schedule_is_reported() {
    let text = render_scenario(&builtin_scenario("motivating_unified").unwrap()).replace("switch 8 U2OFF", "switch 8 NOPE");
    let e = run_scenario(&parse_scenario(&text).unwrap()).unwrap_err();
    assert!(matches!(e, SimError::UnknownVertex(ref v) if v == "NOPE"), "{e}");
}

#[test]
fn non_hurwitz_gains_are_refused() {
    let text = render_scenario(&builtin_scenario("motivating_direct").unwrap()) + "gains x3 1 -1\n";
    let e = run_scenario(&parse_scenario(&text).unwrap()).unwrap_err();
    assert!(e.to_string().contains("Hurwitz"), "{e}");
}

#[test]
fn traces_are_deterministic() {
    let sc = builtin_scenario("example4").unwrap();
    assert_eq!(run_scenario(&sc).unwrap(), run_scenario(&sc).unwrap());
}
