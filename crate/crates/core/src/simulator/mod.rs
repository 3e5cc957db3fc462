//! Fixed-step closed-loop simulation, traces and transient metrics.

mod run;
mod scenario;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::classification::ClassificationError;
use crate::controller::{ControlError, SwitchRejection};
use crate::expr::{EvalError, ExprError};
use crate::linearization::LinearizationError;
use crate::negotiation::NegotiationError;
use crate::system::SystemError;

pub use run::{run_direct_shutdown, run_unified, DirectSetup, GainOverrides, UnifiedSetup};
pub use scenario::{
    builtin_scenario, parse_scenario, render_scenario, run_scenario, Scenario, ScenarioMode, SystemSource, BUILTIN_SCENARIOS,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("controller output is not flat: {0}")]
    NotFlat(String),
    #[error("step size must be positive, got {0}")]
    StepSize(f64),
    #[error("state became non-finite at t = {0}")]
    NonFinite(f64),
    #[error("scenario line {line}: {msg}")]
    Scenario { line: usize, msg: String },
    #[error("channel `{0}` is not active before the switch at the requested time")]
    ChannelInactive(String),
    #[error("no switch recorded at t = {0}")]
    NoSwitch(f64),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Negotiation(#[from] NegotiationError),
    #[error(transparent)]
    Classification(#[from] ClassificationError),
    #[error(transparent)]
    Linearization(#[from] LinearizationError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One classical Runge-Kutta step.
pub fn rk4_step<E>(f: &mut impl FnMut(f64, &[f64]) -> Result<Vec<f64>, E>, t: f64, x: &[f64], h: f64) -> Result<Vec<f64>, E> {
    let shift = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let k1 = f(t, x)?;
    let k2 = f(t + 0.5 * h, &shift(x, &k1, 0.5 * h))?;
    let k3 = f(t + 0.5 * h, &shift(x, &k2, 0.5 * h))?;
    let k4 = f(t + h, &shift(x, &k3, h))?;
    Ok(x.iter()
        .enumerate()
        .map(|(i, xi)| xi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrates `ẋ = f(t, x)` on a uniform grid; the last step is shortened
/// to land on `t_end`.
pub fn integrate<E>(
    mut f: impl FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
    x0: &[f64],
    t_end: f64,
    h: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), E>
where
    E: From<SimError>,
{
    if !(h > 0.0) {
        return Err(SimError::StepSize(h).into());
    }
    let steps = (t_end / h).round() as usize;
    let mut ts = vec![0.0];
    let mut xs = vec![x0.to_vec()];
    for k in 0..steps {
        let t = k as f64 * h;
        let hk = if k + 1 == steps { t_end - t } else { h };
        let next = rk4_step(&mut f, t, xs.last().unwrap(), hk)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFinite(t + hk).into());
        }
        ts.push(t + hk);
        xs.push(next);
    }
    Ok((ts, xs))
}

/// Error state of one channel at a switch, with the gains it obeyed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelSnapshot {
    pub channel: String,
    /// `k^0 .. k^(r-1)` of the pre-switch error equation.
    pub gains: Vec<f64>,
    /// `e, ė, .., e^(r-1)` at the switch.
    pub error_jets: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventKind {
    /// Selection change under one feedback law.
    Switch {
        from: String,
        to: String,
    },
    /// Hand-over to a separately designed controller.
    Handover {
        from: String,
        to: String,
    },
    Rejected {
        to: String,
        rejection: SwitchRejection,
    },
    Abort {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
    pub snapshots: Vec<ChannelSnapshot>,
}

/// Uniformly sampled closed-loop run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SimulationTrace {
    pub name: String,
    pub h: f64,
    pub t: Vec<f64>,
    pub state_names: Vec<String>,
    /// Base-system states per row.
    pub x: Vec<Vec<f64>>,
    pub input_names: Vec<String>,
    /// Physical inputs per row; switched-off inputs read zero.
    pub u: Vec<Vec<f64>>,
    /// Virtual inputs per base input; zero for inputs not driven.
    pub v: Vec<Vec<f64>>,
    pub vertex: Vec<String>,
    pub channel_names: Vec<String>,
    /// Output values per row.
    pub y: Vec<Vec<f64>>,
    pub y_ref: Vec<Vec<f64>>,
    /// `y - y^d` per row.
    pub e: Vec<Vec<f64>>,
    pub events: Vec<Event>,
    pub aborted: Option<String>,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn channel(&self, name: &str) -> Option<usize> {
        self.channel_names.iter().position(|c| c == name)
    }

    pub fn input(&self, name: &str) -> Option<usize> {
        self.input_names.iter().position(|c| c == name)
    }

    pub fn error_series(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.channel(name)?;
        Some(self.e.iter().map(|r| r[i]).collect())
    }

    pub fn input_series(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.input(name)?;
        Some(self.u.iter().map(|r| r[i]).collect())
    }

    /// Accepted switches and hand-overs.
    pub fn switch_times(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Switch { .. } | EventKind::Handover { .. }))
            .map(|e| e.t)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for n in &self.state_names {
            let _ = write!(s, ",{n}");
        }
        for n in &self.input_names {
            let _ = write!(s, ",u_{n}");
        }
        for n in &self.input_names {
            let _ = write!(s, ",v_{n}");
        }
        s.push_str(",vertex");
        for n in &self.channel_names {
            let _ = write!(s, ",y_{n},yd_{n},e_{n}");
        }
        s.push('\n');
        for k in 0..self.len() {
            let _ = write!(s, "{}", self.t[k]);
            for v in self.x[k].iter().chain(&self.u[k]).chain(&self.v[k]) {
                let _ = write!(s, ",{v}");
            }
            let _ = write!(s, ",{}", self.vertex[k]);
            for i in 0..self.channel_names.len() {
                let _ = write!(s, ",{},{},{}", self.y[k][i], self.y_ref[k][i], self.e[k][i]);
            }
            s.push('\n');
        }
        s
    }

    /// Gnuplot script for a CSV written to `csv_path`: one panel per output
    /// channel (value and reference) plus one for the physical inputs, with
    /// switch times marked.
    pub fn gnuplot_script(&self, csv_path: &str, png_path: &str) -> String {
        let panels = self.channel_names.len() + 1;
        let mut s = String::new();
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set terminal pngcairo size 900,{} noenhanced", 180 * panels);
        let _ = writeln!(s, "set output '{png_path}'");
        let _ = writeln!(
            s,
            "set multiplot layout {panels},1 title '{} (qualitative reproduction)'",
            self.name
        );
        let _ = writeln!(s, "set key right top");
        for t in self.switch_times() {
            let _ = writeln!(s, "set arrow from {t}, graph 0 to {t}, graph 1 nohead dashtype 2 lc rgb 'gray40'");
        }
        let base = 1 + self.state_names.len() + 2 * self.input_names.len() + 2;
        for (i, n) in self.channel_names.iter().enumerate() {
            let c = base + 3 * i;
            let _ = writeln!(s, "set ylabel '{n}'");
            let _ = writeln!(s, "plot '{csv_path}' every ::1 using 1:{c} with lines title '{n}', '' every ::1 using 1:{} with lines dashtype 3 title '{n} ref'", c + 1);
        }
        let _ = writeln!(s, "set ylabel 'inputs'");
        let u0 = 2 + self.state_names.len();
        let plots: Vec<String> = self
            .input_names
            .iter()
            .enumerate()
            .map(|(j, n)| format!("'{csv_path}' every ::1 using 1:{} with lines title '{n}'", u0 + j))
            .collect();
        let _ = writeln!(s, "plot {}", plots.join(", "));
        let _ = writeln!(s, "unset multiplot");
        s
    }
}

/// Deviation of a channel from the error dynamics it obeyed before a switch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransientMetric {
    pub channel: String,
    pub t_switch: f64,
    pub window: f64,
    /// `sup |e(t) - e_pred(t)|` over `(t_s, t_s + window]`.
    pub value: f64,
}

impl TransientMetric {
    pub fn is_transient_free(&self, eps: f64) -> bool {
        self.value <= eps
    }
}

pub const EPS_NO_TRANSIENT: f64 = 1e-3;
pub const TRANSIENT_WINDOW: f64 = 2.0;

/// Companion matrix of `e^(m) + k^(m-1) e^(m-1) + .. + k^0 e = 0`.
pub fn companion(gains: &[f64]) -> DMatrix<f64> {
    let m = gains.len();
    let mut c = DMatrix::zeros(m, m);
    for i in 0..m.saturating_sub(1) {
        c[(i, i + 1)] = 1.0;
    }
    for (j, k) in gains.iter().enumerate() {
        c[(m - 1, j)] = -k;
    }
    c
}

/// `e(τ)` for the error equation with the given gains and initial jets.
pub fn lti_response(gains: &[f64], jets: &[f64], tau: f64) -> f64 {
    if gains.is_empty() {
        return 0.0;
    }
    let phi = (companion(gains) * tau).exp();
    (0..jets.len()).map(|j| phi[(0, j)] * jets[j]).sum()
}

pub fn transient_metric(trace: &SimulationTrace, channel: &str, t_s: f64, window: f64) -> Result<TransientMetric, SimError> {
    let ci = trace
        .channel(channel)
        .ok_or_else(|| SimError::UnknownChannel(channel.to_string()))?;
    let tol = 0.5 * trace.h.max(1e-12);
    let ev = trace
        .events
        .iter()
        .find(|e| (e.t - t_s).abs() <= tol && matches!(e.kind, EventKind::Switch { .. } | EventKind::Handover { .. }))
        .ok_or(SimError::NoSwitch(t_s))?;
    let snap = ev
        .snapshots
        .iter()
        .find(|s| s.channel == channel)
        .ok_or_else(|| SimError::ChannelInactive(channel.to_string()))?;
    let c = companion(&snap.gains);
    let mut value: f64 = 0.0;
    for (k, &t) in trace.t.iter().enumerate() {
        let tau = t - ev.t;
        if tau <= tol || tau > window + tol {
            continue;
        }
        let phi = (&c * tau).exp();
        let pred: f64 = (0..snap.error_jets.len()).map(|j| phi[(0, j)] * snap.error_jets[j]).sum();
        value = value.max((trace.e[k][ci] - pred).abs());
    }
    Ok(TransientMetric {
        channel: channel.to_string(),
        t_switch: ev.t,
        window,
        value,
    })
}

/// Least-squares time constant of `|series|` on `(t0, t1]`, from a log-linear
/// fit. Points below `floor` are ignored.
pub fn fit_time_constant(t: &[f64], series: &[f64], t0: f64, t1: f64, floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(series)
        .filter(|(&tk, &s)| tk > t0 && tk <= t1 && s.abs() > floor)
        .map(|(&tk, &s)| (tk, s.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (mt, my) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mt) * (p.1 - my), b + (p.0 - mt).powi(2)));
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -1.0 / slope)
}

#[cfg(test)]
mod tests;
