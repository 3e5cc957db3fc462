//! Line-oriented scenario files and the built-in scenarios.
//!
//! ```text
//! scenario motivating_unified
//! system builtin:motivating_square
//! mode unified
//! ell 0 1 0
//! vertex FM A={} O={}
//! vertex U2OFF A={2} O={3}
//! switch 0 FM
//! switch 8 U2OFF
//! reference x1 const 4
//! ```
//!
//! Numbers may be constant expressions and may use `pi`. Index sets are
//! one-based. An inline system is given as `system inline` followed by the
//! system file text and a line `end`.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::builtins::Builtin;
use crate::controller::{Generator, ReferenceSignal};
use crate::expr::{parse_expression, Number, SymbolTable};
use crate::linearization::Tolerances;
use crate::negotiation::{negotiability_graph, FamilyConfig, LabelTable};
use crate::system::{parse_system, IndexSet, OutputMap, ProlongationPattern, SystemDefinition};

use super::run::{run_direct_shutdown, run_unified, DirectSetup, GainOverrides, UnifiedSetup};
use super::{SimError, SimulationTrace};

#[derive(Clone, Debug, PartialEq)]
pub enum SystemSource {
    Builtin(Builtin),
    Inline(String),
}

impl SystemSource {
    pub fn system(&self) -> Result<SystemDefinition, SimError> {
        match self {
            SystemSource::Builtin(b) => Ok(b.system()),
            SystemSource::Inline(text) => Ok(parse_system(text)?),
        }
    }

    fn labels(&self) -> LabelTable {
        match self {
            SystemSource::Builtin(b) => b.labels(),
            SystemSource::Inline(_) => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioMode {
    /// One law on `Σ^(ℓ)` switching between graph vertices on a schedule.
    Unified {
        vertices: Vec<(String, IndexSet, IndexSet)>,
        schedule: Vec<(f64, String)>,
        dwell: f64,
    },
    /// Full-task controller, then a reduced one with inputs switched off.
    Direct {
        removed: IndexSet,
        reduced_pattern: ProlongationPattern,
        drop: IndexSet,
        t_switch: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub system: SystemSource,
    /// Output map name; the first one when `None`.
    pub output: Option<String>,
    pub pattern: Option<ProlongationPattern>,
    pub mode: ScenarioMode,
    pub references: Vec<(String, Generator)>,
    pub gains: GainOverrides,
    pub x0: Option<Vec<f64>>,
    pub u0: Option<Vec<f64>>,
    pub h: f64,
    pub duration: f64,
}

struct Line<'a> {
    no: usize,
    key: &'a str,
    args: Vec<&'a str>,
}

impl Line<'_> {
    fn err(&self, msg: impl Into<String>) -> SimError {
        SimError::Scenario {
            line: self.no,
            msg: msg.into(),
        }
    }

    fn arg(&self, i: usize) -> Result<&str, SimError> {
        self.args
            .get(i)
            .copied()
            .ok_or_else(|| self.err(format!("`{}` needs more arguments", self.key)))
    }

    fn numbers(&self, from: usize) -> Result<Vec<f64>, SimError> {
        self.args[from.min(self.args.len())..]
            .iter()
            .map(|t| number(t).map_err(|m| self.err(m)))
            .collect()
    }

    fn number(&self, i: usize) -> Result<f64, SimError> {
        number(self.arg(i)?).map_err(|m| self.err(m))
    }

    fn indices(&self, from: usize) -> Result<Vec<usize>, SimError> {
        self.args[from.min(self.args.len())..]
            .iter()
            .flat_map(|t| t.split(','))
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|_| self.err(format!("bad index `{t}`"))))
            .collect()
    }
}

fn number(tok: &str) -> Result<f64, String> {
    let mut table = SymbolTable::new();
    table
        .add_param("pi", Number::float(std::f64::consts::PI))
        .map_err(|e| e.to_string())?;
    let e = parse_expression(tok, &table).map_err(|e| format!("bad number `{tok}`: {e}"))?;
    e.as_number()
        .map(|n| n.to_f64())
        .ok_or_else(|| format!("`{tok}` is not a constant"))
}

/// `#` opens a comment at the start of a line or after whitespace, so
/// labels such as `DF#2` survive.
fn strip_comment(raw: &str) -> &str {
    let t = raw.trim();
    if t.starts_with('#') {
        return "";
    }
    t.find(" #").or_else(|| t.find("\t#")).map_or(t, |i| t[..i].trim_end())
}

/// `{1,2}` or `1,2` or `{}` after an optional `A=` prefix.
fn index_list(tok: &str) -> Result<Vec<usize>, String> {
    let body = tok.split_once('=').map_or(tok, |(_, b)| b);
    body.trim_matches(|c| c == '{' || c == '}')
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|_| format!("bad index `{t}`")))
        .collect()
}

fn set_text(s: &IndexSet) -> String {
    let items: Vec<String> = s.one_based().iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

/// Index sets are resolved once the system size is known.
struct Pending {
    vertices: Vec<(String, Vec<usize>, Vec<usize>)>,
    removed: Vec<usize>,
    drop: Vec<usize>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, SimError> {
    let mut name = None;
    let mut system = None;
    let mut output = None;
    let mut pattern = None;
    let mut mode = None;
    let mut schedule = Vec::new();
    let mut dwell = 0.0;
    let mut reduced_pattern = None;
    let mut t_switch = None;
    let mut references = Vec::new();
    let mut gains = GainOverrides::default();
    let (mut x0, mut u0) = (None, None);
    let (mut h, mut duration) = (1e-3, None);
    let mut pending = Pending {
        vertices: Vec::new(),
        removed: Vec::new(),
        drop: Vec::new(),
    };

    let mut lines = text.lines().enumerate();
    while let Some((i, raw)) = lines.next() {
        let content = strip_comment(raw);
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let key = parts.next().unwrap_or("");
        let line = Line {
            no: i + 1,
            key,
            args: parts.collect(),
        };
        match key {
            "scenario" => name = Some(line.arg(0)?.to_string()),
            "system" => {
                let src = line.arg(0)?;
                system = Some(if let Some(id) = src.strip_prefix("builtin:") {
                    SystemSource::Builtin(Builtin::from_str(id).map_err(|m| line.err(m))?)
                } else if src == "inline" {
                    let mut body = String::new();
                    let mut closed = false;
                    for (_, l) in lines.by_ref() {
                        if l.trim() == "end" {
                            closed = true;
                            break;
                        }
                        body.push_str(l);
                        body.push('\n');
                    }
                    if !closed {
                        return Err(line.err("inline system is missing `end`"));
                    }
                    SystemSource::Inline(body)
                } else {
                    return Err(line.err(format!("unknown system source `{src}`")));
                });
            }
            "output" => output = Some(line.arg(0)?.to_string()),
            "mode" => {
                mode = Some(match line.arg(0)? {
                    m @ ("unified" | "direct") => m.to_string(),
                    m => return Err(line.err(format!("unknown mode `{m}`"))),
                })
            }
            "ell" => pattern = Some(ProlongationPattern(line.indices(0)?)),
            "reduced_ell" => reduced_pattern = Some(ProlongationPattern(line.indices(0)?)),
            "remove" => pending.removed = line.indices(0)?,
            "drop" => pending.drop = line.indices(0)?,
            "switch_time" => t_switch = Some(line.number(0)?),
            "vertex" => {
                let label = line.arg(0)?.to_string();
                let (mut a, mut o) = (Vec::new(), Vec::new());
                for tok in &line.args[1..] {
                    let list = index_list(tok).map_err(|m| line.err(m))?;
                    match tok.split_once('=').map(|p| p.0) {
                        Some("A") => a = list,
                        Some("O") => o = list,
                        _ => return Err(line.err(format!("expected A=.. or O=.., got `{tok}`"))),
                    }
                }
                pending.vertices.push((label, a, o));
            }
            "switch" => schedule.push((line.number(0)?, line.arg(1)?.to_string())),
            "dwell" => dwell = line.number(0)?,
            "reference" => {
                let ch = line.arg(0)?.to_string();
                let g = match line.arg(1)? {
                    "const" => Generator::Constant { value: line.number(2)? },
                    "poly" => Generator::Polynomial { coeffs: line.numbers(2)? },
                    "sin" => Generator::Sinusoid {
                        offset: line.number(2)?,
                        amplitude: line.number(3)?,
                        omega: line.number(4)?,
                        phase: line.number(5)?,
                    },
                    k => return Err(line.err(format!("unknown reference kind `{k}`"))),
                };
                references.push((ch, g));
            }
            "gains" => gains.outputs.push((line.arg(0)?.to_string(), line.numbers(1)?)),
            "input_gains" => gains.inputs.push((line.arg(0)?.to_string(), line.numbers(1)?)),
            "x0" => x0 = Some(line.numbers(0)?),
            "u0" => u0 = Some(line.numbers(0)?),
            "h" => h = line.number(0)?,
            "duration" => duration = Some(line.number(0)?),
            k => return Err(line.err(format!("unknown key `{k}`"))),
        }
    }

    let missing = |what: &str| SimError::Scenario {
        line: 0,
        msg: format!("missing `{what}`"),
    };
    let system = system.ok_or_else(|| missing("system"))?;
    let p = system.system()?.p();
    let set = |v: &[usize]| IndexSet::from_one_based(v, p).map_err(SimError::from);
    let mode = match mode.as_deref() {
        Some("unified") | None => ScenarioMode::Unified {
            vertices: pending
                .vertices
                .iter()
                .map(|(l, a, o)| Ok((l.clone(), set(a)?, IndexSet::from_one_based(o, usize::MAX)?)))
                .collect::<Result<_, SimError>>()?,
            schedule,
            dwell,
        },
        _ => ScenarioMode::Direct {
            removed: set(&pending.removed)?,
            reduced_pattern: reduced_pattern.unwrap_or_else(|| ProlongationPattern::zeros(p)),
            drop: IndexSet::from_one_based(&pending.drop, usize::MAX)?,
            t_switch: t_switch.ok_or_else(|| missing("switch_time"))?,
        },
    };
    Ok(Scenario {
        name: name.unwrap_or_else(|| "scenario".to_string()),
        system,
        output,
        pattern,
        mode,
        references,
        gains,
        x0,
        u0,
        h,
        duration: duration.ok_or_else(|| missing("duration"))?,
    })
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn render_scenario(s: &Scenario) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "scenario {}", s.name);
    match &s.system {
        SystemSource::Builtin(b) => {
            let _ = writeln!(t, "system builtin:{b}");
        }
        SystemSource::Inline(body) => {
            let _ = write!(t, "system inline\n{}end\n", body);
        }
    }
    if let Some(o) = &s.output {
        let _ = writeln!(t, "output {o}");
    }
    if let Some(p) = &s.pattern {
        let v: Vec<String> = p.0.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(t, "ell {}", v.join(" "));
    }
    match &s.mode {
        ScenarioMode::Unified { vertices, schedule, dwell } => {
            t.push_str("mode unified\n");
            for (l, a, o) in vertices {
                let _ = writeln!(t, "vertex {l} A={} O={}", set_text(a), set_text(o));
            }
            for (time, l) in schedule {
                let _ = writeln!(t, "switch {time} {l}");
            }
            let _ = writeln!(t, "dwell {dwell}");
        }
        ScenarioMode::Direct {
            removed,
            reduced_pattern,
            drop,
            t_switch,
        } => {
            t.push_str("mode direct\n");
            let v: Vec<String> = reduced_pattern.0.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(
                t,
                "remove {}",
                removed.one_based().iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
            );
            let _ = writeln!(t, "reduced_ell {}", v.join(" "));
            let _ = writeln!(
                t,
                "drop {}",
                drop.one_based().iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
            );
            let _ = writeln!(t, "switch_time {t_switch}");
        }
    }
    for (ch, g) in &s.references {
        let _ = match g {
            Generator::Constant { value } => writeln!(t, "reference {ch} const {value}"),
            Generator::Polynomial { coeffs } => writeln!(t, "reference {ch} poly {}", join(coeffs)),
            Generator::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => writeln!(t, "reference {ch} sin {offset} {amplitude} {omega} {phase}"),
        };
    }
    for (ch, k) in &s.gains.outputs {
        let _ = writeln!(t, "gains {ch} {}", join(k));
    }
    for (ch, k) in &s.gains.inputs {
        let _ = writeln!(t, "input_gains {ch} {}", join(k));
    }
    if let Some(x0) = &s.x0 {
        let _ = writeln!(t, "x0 {}", join(x0));
    }
    if let Some(u0) = &s.u0 {
        let _ = writeln!(t, "u0 {}", join(u0));
    }
    let _ = writeln!(t, "h {}", s.h);
    let _ = writeln!(t, "duration {}", s.duration);
    t
}

impl Scenario {
    fn output_map(&self, sys: &SystemDefinition) -> Result<OutputMap, SimError> {
        let y = match &self.output {
            Some(name) => sys.output(name),
            None => sys.default_output(),
        };
        y.cloned()
            .ok_or_else(|| SimError::UnknownChannel(self.output.clone().unwrap_or_else(|| "<default output>".into())))
    }

    /// Reference per output channel; channels without an entry hold zero.
    fn reference(&self, y: &OutputMap) -> Result<ReferenceSignal, SimError> {
        let names = y.names();
        if let Some((ch, _)) = self.references.iter().find(|(ch, _)| !names.contains(ch)) {
            return Err(SimError::UnknownChannel(ch.clone()));
        }
        Ok(names
            .iter()
            .map(|n| {
                self.references
                    .iter()
                    .find(|(ch, _)| ch == n)
                    .map_or(Generator::Constant { value: 0.0 }, |(_, g)| g.clone())
            })
            .collect())
    }
}

pub fn run_scenario(s: &Scenario) -> Result<SimulationTrace, SimError> {
    let sys = s.system.system()?;
    let y = s.output_map(&sys)?;
    let reference = s.reference(&y)?;
    let pattern = s.pattern.clone().unwrap_or_else(|| ProlongationPattern::zeros(sys.p()));
    let x0 = s.x0.clone().unwrap_or_else(|| sys.operating_point.clone());
    let u0 = s.u0.clone().unwrap_or_else(|| sys.input_point.clone());
    match &s.mode {
        ScenarioMode::Unified { vertices, schedule, dwell } => {
            let mut labels: LabelTable = vertices.iter().map(|(l, a, o)| (a.clone(), o.clone(), l.clone())).collect();
            labels.extend(s.system.labels());
            let graph = negotiability_graph(&sys, &y, &pattern, &FamilyConfig::default(), &labels)?;
            let find = |label: &str| -> Result<usize, SimError> {
                let (_, a, o) = vertices
                    .iter()
                    .find(|v| v.0 == label)
                    .ok_or_else(|| SimError::UnknownVertex(label.to_string()))?;
                graph.find_pair(a, o).ok_or_else(|| SimError::UnknownVertex(label.to_string()))
            };
            let schedule = schedule.iter().map(|(t, l)| Ok((*t, find(l)?))).collect::<Result<_, SimError>>()?;
            run_unified(&UnifiedSetup {
                name: s.name.clone(),
                y,
                graph,
                gains: s.gains.clone(),
                reference,
                schedule,
                dwell: *dwell,
                x0,
                u0,
                h: s.h,
                duration: s.duration,
            })
        }
        ScenarioMode::Direct {
            removed,
            reduced_pattern,
            drop,
            t_switch,
        } => run_direct_shutdown(&DirectSetup {
            name: s.name.clone(),
            sys,
            y,
            pattern,
            removed: removed.clone(),
            reduced_pattern: reduced_pattern.clone(),
            drop: drop.clone(),
            t_switch: *t_switch,
            gains: s.gains.clone(),
            reference,
            x0,
            u0,
            h: s.h,
            duration: s.duration,
            tol: Tolerances::default(),
        }),
    }
}

const MOTIVATING_DIRECT: &str = "\
scenario motivating_direct
system builtin:motivating_square
mode direct
ell 0 0 0
remove 2
reduced_ell 0 0 0
drop 3
switch_time 8
reference x1 const 4
reference x3 const 4
reference x4 const -20
x0 0 0 0 0
h 0.001
duration 16
";

const MOTIVATING_UNIFIED: &str = "\
scenario motivating_unified
system builtin:motivating_square
mode unified
ell 0 1 0
vertex FM A={} O={}
vertex U2OFF A={2} O={3}
switch 0 FM
switch 8 U2OFF
dwell 1
reference x1 const 4
reference x3 const 4
reference x4 const -20
x0 0 0 0 0
u0 0 0 0
h 0.001
duration 16
";

const EXAMPLE4: &str = "\
scenario example4
system builtin:motivating_square
mode direct
ell 0 0 0
remove 1 2
reduced_ell 0 0 0
drop 2 3
switch_time 8
reference x1 const 4
reference x3 const 4
reference x4 const -20
x0 0 0 0 0
h 0.001
duration 16
";

const RIGIDBODY_FM_DF_QM: &str = "\
scenario rigidbody_fm_df_qm
system builtin:rigid_body
mode unified
ell 2 2 2 0 0 0
vertex FM A={} O={}
vertex DF#2 A={1} O={5}
vertex QM#13 A={1,2} O={4,5}
switch 0 FM
switch 16 DF#2
switch 32 QM#13
dwell 4
reference p1 poly 0 0.5
reference p2 poly 0 0.25
reference p3 const 0
reference phi const 20*pi/180
reference theta const 10*pi/180
reference psi const 20*pi/180
gains p1 16 32 24 8
gains p2 16 32 24 8
gains p3 16 32 24 8
gains phi 16 8
gains theta 16 8
gains psi 16 8
input_gains f1 10 10
input_gains f2 10 10
input_gains f3 10 10
x0 6 6 1.2 0 0 0 0 0 0 0 0 0
u0 0 0 9.81 0 0 0
h 0.001
duration 48
";

/// `(id, scenario text)` of the shipped scenarios.
pub const BUILTIN_SCENARIOS: [(&str, &str); 4] = [
    ("motivating_direct", MOTIVATING_DIRECT),
    ("motivating_unified", MOTIVATING_UNIFIED),
    ("example4", EXAMPLE4),
    ("rigidbody_fm_df_qm", RIGIDBODY_FM_DF_QM),
];

pub fn builtin_scenario(id: &str) -> Option<Scenario> {
    BUILTIN_SCENARIOS
        .iter()
        .find(|(k, _)| *k == id)
        .map(|(_, text)| parse_scenario(text).expect("built-in scenarios are valid"))
}
