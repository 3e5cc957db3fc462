//! Closed-loop runs: one switching law over a negotiation graph, or a
//! hand-over between two separately designed controllers.

use crate::controller::{ControlError, GainSet, ReferenceSignal, SelectionState, Supervisor, SwitchRejection, SwitchingController};
use crate::expr::Tape;
use crate::linearization::{relative_degree_profile, Tolerances};
use crate::negotiation::NegotiabilityGraph;
use crate::system::{IndexSet, OutputMap, ProlongationPattern, ProlongedSystem, SystemDefinition};

use super::{rk4_step, ChannelSnapshot, Event, EventKind, SimError, SimulationTrace};

/// Controller plus compiled plant for one prolonged system.
struct Phase {
    ctrl: SwitchingController,
    /// Drift, then the input columns, flattened.
    plant: Tape,
    /// Every channel of the original output, evaluated on this state space.
    y_tape: Tape,
    /// Channel index in the original output of each controlled channel.
    channel_map: Vec<usize>,
}

impl Phase {
    fn new(ctrl: SwitchingController, y_all: &OutputMap, channel_map: Vec<usize>) -> Result<Self, SimError> {
        let ps = &ctrl.psys;
        let mut exprs = ps.drift().to_vec();
        for col in ps.cols() {
            exprs.extend(col.iter().cloned());
        }
        let plant = Tape::compile(&exprs, ps.table())?;
        let y_tape = Tape::compile(&y_all.exprs(), ps.table())?;
        Ok(Phase {
            ctrl,
            plant,
            y_tape,
            channel_map,
        })
    }

    fn rhs(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>, SimError> {
        let n = x.len();
        let out = self.plant.eval(x)?;
        let mut dx = out[..n].to_vec();
        for (j, vj) in v.iter().enumerate() {
            let col = &out[n * (1 + j)..n * (2 + j)];
            for (d, c) in dx.iter_mut().zip(col) {
                *d += c * vj;
            }
        }
        Ok(dx)
    }

    fn input(&self, sel: &SelectionState, x: &[f64], t: f64) -> Result<Vec<f64>, SimError> {
        let frame = self.ctrl.frame(x, t)?;
        Ok(self.ctrl.control(&frame, sel)?.as_slice().to_vec())
    }

    /// Sign of `det(Γ D)`. A flip between grid points means the trajectory
    /// crossed the singular set, which a threshold on the determinant alone
    /// would step over.
    fn det_sign(&self, sel: &SelectionState, x: &[f64], t: f64) -> Result<f64, SimError> {
        let frame = self.ctrl.frame(x, t)?;
        Ok(self.ctrl.selected_matrix(&frame, sel).determinant().signum())
    }

    /// One RK4 step with the feedback re-evaluated at every stage.
    fn step(&self, sel: &SelectionState, x: &[f64], t: f64, h: f64) -> Result<Vec<f64>, SimError> {
        let mut f = |t: f64, x: &[f64]| -> Result<Vec<f64>, SimError> {
            let v = self.input(sel, x, t)?;
            self.rhs(x, &v)
        };
        let next = rk4_step(&mut f, t, x, h)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFinite(t + h));
        }
        Ok(next)
    }

    fn record(&self, trace: &mut SimulationTrace, sel: &SelectionState, x: &[f64], t: f64, refs: &ReferenceSignal) -> Result<(), SimError> {
        let ps = &self.ctrl.psys;
        let v = self.input(sel, x, t)?;
        let base_p = ps.base().p();
        let base_n = ps.base().n();
        let v_base = (0..base_p).map(|i| ps.virtual_index(i).map_or(0.0, |j| v[j])).collect();
        let y = self.y_tape.eval(x)?;
        let y_ref: Vec<f64> = refs.iter().map(|g| g.jet(t, 0)[0]).collect();
        trace.t.push(t);
        trace.x.push(x[..base_n].to_vec());
        trace.u.push(ps.physical_inputs(x, &v));
        trace.v.push(v_base);
        trace.vertex.push(sel.label.clone());
        trace.e.push(y.iter().zip(&y_ref).map(|(a, b)| a - b).collect());
        trace.y.push(y);
        trace.y_ref.push(y_ref);
        Ok(())
    }

    /// Error jets and gains of the channels `sel` enforces.
    fn snapshots(&self, sel: &SelectionState, x: &[f64], t: f64, names: &[String]) -> Result<Vec<ChannelSnapshot>, SimError> {
        let frame = self.ctrl.frame(x, t)?;
        let jets = self.ctrl.error_jets(&frame);
        let q = self.ctrl.output_orders().len();
        Ok(sel
            .kept_outputs(q)
            .into_iter()
            .map(|i| ChannelSnapshot {
                channel: names[self.channel_map[i]].clone(),
                gains: self.ctrl.gains.ky[i].clone(),
                error_jets: jets[i].clone(),
            })
            .collect())
    }
}

/// Prolonged initial state: base state, then each stack with its value at
/// `u0` and zero derivatives.
fn initial_state(ps: &ProlongedSystem, x0: &[f64], u0: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; ps.n()];
    x[..x0.len()].copy_from_slice(x0);
    for (i, &u) in u0.iter().enumerate().take(ps.base().p()) {
        if let Some((off, _)) = ps.stack(i) {
            x[off] = u;
        }
    }
    x
}

fn empty_trace(name: &str, sys: &SystemDefinition, y: &OutputMap, h: f64) -> SimulationTrace {
    SimulationTrace {
        name: name.to_string(),
        h,
        state_names: sys.states.clone(),
        input_names: sys.inputs.clone(),
        channel_names: y.names(),
        ..Default::default()
    }
}

fn abort(trace: &mut SimulationTrace, t: f64, e: &SimError) {
    let reason = e.to_string();
    trace.events.push(Event {
        t,
        kind: EventKind::Abort { reason: reason.clone() },
        snapshots: Vec::new(),
    });
    trace.aborted = Some(reason);
}

fn steps(duration: f64, h: f64) -> Result<usize, SimError> {
    if !(h > 0.0) {
        return Err(SimError::StepSize(h));
    }
    Ok((duration / h).round() as usize)
}

/// Gains replacing the defaults for named output channels and inputs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GainOverrides {
    pub outputs: Vec<(String, Vec<f64>)>,
    pub inputs: Vec<(String, Vec<f64>)>,
}

impl GainOverrides {
    /// Overrides naming channels or inputs absent from `y` or `psys` are
    /// skipped; lengths and stability are checked.
    pub fn apply(&self, mut gains: GainSet, y: &OutputMap, psys: &ProlongedSystem) -> Result<GainSet, SimError> {
        let names = y.names();
        for (ch, k) in &self.outputs {
            if let Some(i) = names.iter().position(|n| n == ch) {
                gains.ky[i] = k.clone();
            }
        }
        for (input, k) in &self.inputs {
            if let Some(j) = psys.base().input_index(input).and_then(|i| psys.virtual_index(i)) {
                gains.ku[j] = k.clone();
            }
        }
        Ok(GainSet::new(gains.ky, gains.ku)?)
    }
}

/// A single switching law on `graph.psys` driven by a vertex schedule.
#[derive(Clone, Debug)]
pub struct UnifiedSetup {
    pub name: String,
    pub y: OutputMap,
    pub graph: NegotiabilityGraph,
    pub gains: GainOverrides,
    pub reference: ReferenceSignal,
    /// `(time, vertex index)`; the first entry is the initial vertex and
    /// times are snapped to the step grid.
    pub schedule: Vec<(f64, usize)>,
    pub dwell: f64,
    /// Base-system initial state.
    pub x0: Vec<f64>,
    /// Initial physical inputs, used for the stacks.
    pub u0: Vec<f64>,
    pub h: f64,
    pub duration: f64,
}

pub fn run_unified(s: &UnifiedSetup) -> Result<SimulationTrace, SimError> {
    let g = &s.graph;
    let profile = g.vertices[0].profile.clone();
    let gains = s.gains.apply(GainSet::defaults(&profile, &g.psys)?, &s.y, &g.psys)?;
    let ctrl = SwitchingController::new(g.psys.clone(), profile, gains, s.reference.clone())?;
    let q = s.y.len();
    let phase = Phase::new(ctrl, &s.y, (0..q).collect())?;
    let names = s.y.names();
    let sel_of = |v: usize| -> Result<SelectionState, ControlError> {
        let mv = &g.vertices[v];
        phase.ctrl.selection(v, &mv.label, &mv.a, &mv.o)
    };
    let selections: Vec<SelectionState> = (0..g.vertices.len()).map(sel_of).collect::<Result<_, _>>()?;

    let mut trace = empty_trace(&s.name, g.psys.base(), &s.y, s.h);
    let n_steps = steps(s.duration, s.h)?;
    let mut schedule: Vec<(usize, usize)> = s.schedule.iter().map(|&(t, v)| ((t / s.h).round() as usize, v)).collect();
    schedule.sort_by_key(|e| e.0);
    // An entry at t = 0 picks the starting vertex; otherwise the run starts
    // on the full task.
    let start = match schedule.first() {
        Some(&(0, v)) => {
            schedule.remove(0);
            v
        }
        _ => 0,
    };
    let mut sel = selections[start].clone();
    let mut sup = Supervisor::new(s.dwell, g.edges.iter().map(|e| (e.a, e.b)), g.starred.clone());
    let mut x = initial_state(&g.psys, &s.x0, &s.u0);
    let mut sign = phase.det_sign(&sel, &x, 0.0)?;

    for k in 0..=n_steps {
        let t = k as f64 * s.h;
        for &(_, v) in schedule.iter().filter(|e| e.0 == k) {
            let target = &selections[v];
            if target.vertex == sel.vertex {
                continue;
            }
            // The edge witness is some point; the switch happens here.
            let singular = phase.input(target, &x, t).err();
            let verdict = match singular {
                Some(SimError::Control(ControlError::ValidityExit { det, .. })) => Err(SwitchRejection::Singular {
                    to: target.label.clone(),
                    det,
                }),
                Some(e) => {
                    abort(&mut trace, t, &e);
                    return Ok(trace);
                }
                None => sup.request(&sel, target, t),
            };
            match verdict {
                Ok(true) => {
                    let snapshots = phase.snapshots(&sel, &x, t, &names)?;
                    trace.events.push(Event {
                        t,
                        kind: EventKind::Switch {
                            from: sel.label.clone(),
                            to: target.label.clone(),
                        },
                        snapshots,
                    });
                    sel = target.clone();
                    sign = phase.det_sign(&sel, &x, t)?;
                }
                Ok(false) => {}
                Err(rejection) => trace.events.push(Event {
                    t,
                    kind: EventKind::Rejected {
                        to: target.label.clone(),
                        rejection,
                    },
                    snapshots: Vec::new(),
                }),
            }
        }
        if let Err(e) = phase.record(&mut trace, &sel, &x, t, &s.reference) {
            abort(&mut trace, t, &e);
            break;
        }
        if k == n_steps {
            break;
        }
        match phase
            .step(&sel, &x, t, s.h)
            .and_then(|next| leave_check(&phase, &sel, next, t + s.h, sign))
        {
            Ok(next) => x = next,
            Err(e) => {
                abort(&mut trace, t + s.h, &e);
                break;
            }
        }
    }
    Ok(trace)
}

/// Passes `next` through unless `det(Γ D)` changed sign on the step.
fn leave_check(phase: &Phase, sel: &SelectionState, next: Vec<f64>, t: f64, sign: f64) -> Result<Vec<f64>, SimError> {
    let now = phase.det_sign(sel, &next, t)?;
    if now != sign {
        return Err(ControlError::CrossedSingularity(sel.label.clone()).into());
    }
    Ok(next)
}

/// Full-task controller until `t_switch`, then a controller designed on the
/// system with `removed` switched off and the channels in `drop` released.
#[derive(Clone, Debug)]
pub struct DirectSetup {
    pub name: String,
    pub sys: SystemDefinition,
    pub y: OutputMap,
    pub pattern: ProlongationPattern,
    pub removed: IndexSet,
    pub reduced_pattern: ProlongationPattern,
    pub drop: IndexSet,
    pub t_switch: f64,
    /// Applied to both controllers wherever the named channel exists.
    pub gains: GainOverrides,
    pub reference: ReferenceSignal,
    pub x0: Vec<f64>,
    pub u0: Vec<f64>,
    pub h: f64,
    pub duration: f64,
    pub tol: Tolerances,
}

fn flat_controller(
    psys: ProlongedSystem,
    y: &OutputMap,
    overrides: &GainOverrides,
    reference: ReferenceSignal,
    tol: &Tolerances,
) -> Result<SwitchingController, SimError> {
    let profile = relative_degree_profile(&psys, y, tol)?;
    if let Some(f) = &profile.failure {
        return Err(SimError::NotFlat(f.to_string()));
    }
    let gains = overrides.apply(GainSet::defaults(&profile, &psys)?, y, &psys)?;
    Ok(SwitchingController::new(psys, profile, gains, reference)?)
}

pub fn run_direct_shutdown(s: &DirectSetup) -> Result<SimulationTrace, SimError> {
    let q = s.y.len();
    let names = s.y.names();
    let ps1 = s.sys.prolong(&s.pattern, &IndexSet::empty())?;
    let ctrl1 = flat_controller(ps1.clone(), &s.y, &s.gains, s.reference.clone(), &s.tol)?;
    let phase1 = Phase::new(ctrl1, &s.y, (0..q).collect())?;
    let sel1 = phase1.ctrl.selection(0, "full", &IndexSet::empty(), &IndexSet::empty())?;

    let kept: Vec<usize> = s.drop.complement(q).iter().collect();
    let y2 = s.y.without(&s.drop)?;
    let ref2: ReferenceSignal = kept.iter().map(|&i| s.reference[i].clone()).collect();
    let ps2 = s.sys.prolong(&s.reduced_pattern, &s.removed)?;
    let ctrl2 = flat_controller(ps2.clone(), &y2, &s.gains, ref2, &s.tol)?;
    let label2 = format!("A={} O={}", s.removed, s.drop);
    let phase2 = Phase::new(ctrl2, &s.y, kept)?;
    let sel2 = phase2.ctrl.selection(1, &label2, &IndexSet::empty(), &IndexSet::empty())?;

    let mut trace = empty_trace(&s.name, &s.sys, &s.y, s.h);
    let n_steps = steps(s.duration, s.h)?;
    let k_switch = (s.t_switch / s.h).round() as usize;
    let mut x = initial_state(&ps1, &s.x0, &s.u0);
    let mut second = false;
    let mut sign = phase1.det_sign(&sel1, &x, 0.0)?;

    for k in 0..=n_steps {
        let t = k as f64 * s.h;
        if k == k_switch && !second {
            let handover = phase1.input(&sel1, &x, t).and_then(|v| {
                let u = ps1.physical_inputs(&x, &v);
                let snapshots = phase1.snapshots(&sel1, &x, t, &names)?;
                Ok((initial_state(&ps2, &x[..s.sys.n()], &u), snapshots))
            });
            match handover {
                Ok((x2, snapshots)) => {
                    trace.events.push(Event {
                        t,
                        kind: EventKind::Handover {
                            from: sel1.label.clone(),
                            to: label2.clone(),
                        },
                        snapshots,
                    });
                    x = x2;
                    second = true;
                    sign = match phase2.det_sign(&sel2, &x, t) {
                        Ok(s) => s,
                        Err(e) => {
                            abort(&mut trace, t, &e);
                            break;
                        }
                    };
                }
                Err(e) => {
                    abort(&mut trace, t, &e);
                    break;
                }
            }
        }
        let (phase, sel) = if second { (&phase2, &sel2) } else { (&phase1, &sel1) };
        if let Err(e) = phase.record(&mut trace, sel, &x, t, &s.reference) {
            abort(&mut trace, t, &e);
            break;
        }
        if k == n_steps {
            break;
        }
        match phase
            .step(sel, &x, t, s.h)
            .and_then(|next| leave_check(phase, sel, next, t + s.h, sign))
        {
            Ok(next) => x = next,
            Err(e) => {
                abort(&mut trace, t + s.h, &e);
                break;
            }
        }
    }
    Ok(trace)
}
