use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dexflat::acceptance::{run_criterion, CRITERIA};
use dexflat::builtins::Builtin;
use dexflat::classification::{classify, ClassificationConfig};
use dexflat::linearization::Tolerances;
use dexflat::negotiation::{export_dot, negotiability_graph, FamilyConfig};
use dexflat::simulator::{builtin_scenario, parse_scenario, run_scenario, EventKind, Scenario, SimulationTrace, BUILTIN_SCENARIOS};
use dexflat::system::{parse_system, render_system, OutputMap, ProlongationPattern, SystemDefinition};

#[derive(Parser)]
#[command(
    name = "dexflat",
    version,
    about = "Input classification, negotiation graphs and switching control for input-affine systems"
)]
struct Cli {
    #[command(flatten)]
    numeric: Numeric,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Numeric {
    /// Seed for the randomized zero test and validity sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Absolute tolerance of the randomized zero test.
    #[arg(long, global = true)]
    tol_zero: Option<f64>,
    /// Threshold on the normalized decoupling determinant.
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Sample count of the randomized zero test.
    #[arg(long, global = true)]
    samples: Option<usize>,
}

impl Numeric {
    fn tolerances(&self) -> Tolerances {
        let mut t = self.seed.map(Tolerances::with_seed).unwrap_or_default();
        if let Some(v) = self.tol_zero {
            t.zero.tol = v;
        }
        if let Some(v) = self.tol_rank {
            t.tol_rank = v;
        }
        if let Some(v) = self.samples {
            t.zero.samples = v;
        }
        t
    }
}

/// A system given either as a built-in id or a system file.
#[derive(Args)]
struct SystemArg {
    /// Built-in system id (see `export-builtin --list`).
    #[arg(long, conflicts_with = "file")]
    builtin: Option<String>,
    /// System description file.
    file: Option<PathBuf>,
    /// Output map name; the first one in the file when omitted.
    #[arg(long)]
    output: Option<String>,
}

impl SystemArg {
    fn load(&self) -> Result<(SystemDefinition, OutputMap)> {
        let sys = match (&self.builtin, &self.file) {
            (Some(id), _) => id.parse::<Builtin>().map_err(|e| anyhow!(e))?.system(),
            (None, Some(path)) => {
                let text = read(path)?;
                parse_system(&text).with_context(|| format!("{}", path.display()))?
            }
            (None, None) => bail!("give a system file or --builtin <id>"),
        };
        let y = match &self.output {
            Some(name) => sys.output(name).ok_or_else(|| anyhow!("system has no output `{name}`"))?,
            None => sys.default_output().ok_or_else(|| anyhow!("system declares no output"))?,
        }
        .clone();
        Ok((sys, y))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Acceptance,
}

#[derive(Subcommand)]
enum Command {
    /// Label every input and list the dexterity family.
    Classify {
        #[command(flatten)]
        system: SystemArg,
        /// Largest removed set considered.
        #[arg(long)]
        a_max: Option<usize>,
        /// Largest integrator count per input.
        #[arg(long, default_value_t = 3)]
        l_max: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Build the negotiability graph for one prolongation.
    Graph {
        #[command(flatten)]
        system: SystemArg,
        /// Integrators per input, e.g. `2,2,2,0,0,0`.
        #[arg(long)]
        ell: ProlongationPattern,
        /// Largest removed set considered.
        #[arg(long)]
        a_max: Option<usize>,
        /// Write Graphviz output to this file.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Run a closed-loop scenario.
    Simulate {
        /// Built-in scenario id.
        #[arg(long, conflicts_with = "file")]
        builtin: Option<String>,
        /// Scenario file.
        file: Option<PathBuf>,
        /// Write the sampled trace as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write a gnuplot script plotting the CSV (requires --csv).
        #[arg(long, requires = "csv")]
        plot: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run a test suite and report one line per criterion.
    Check {
        #[arg(long, value_enum, default_value = "acceptance")]
        suite: Suite,
        /// Run only these criteria, e.g. `--only AC3 --only AC6`.
        #[arg(long)]
        only: Vec<String>,
    },
    /// Print the text of a built-in system or scenario.
    ExportBuiltin {
        id: Option<String>,
        #[arg(long)]
        list: bool,
    },
}

/// Normal completion, with or without warnings.
enum Outcome {
    Clean,
    Warnings,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn config(numeric: &Numeric, a_max: Option<usize>, l_max: usize) -> ClassificationConfig {
    ClassificationConfig {
        a_max,
        l_max,
        tol: numeric.tolerances(),
        ..Default::default()
    }
}

fn cmd_classify(numeric: &Numeric, system: &SystemArg, a_max: Option<usize>, l_max: usize, format: Format) -> Result<Outcome> {
    let (sys, y) = system.load()?;
    let rep = classify(&sys, &y, &config(numeric, a_max, l_max))?;
    match format {
        Format::Text => print!("{rep}"),
        Format::Json => println!("{}", serde_json::to_string_pretty(&rep.to_json())?),
    }
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    let warn = rep.has_budget_warnings() || !rep.disagreements().is_empty();
    Ok(if warn { Outcome::Warnings } else { Outcome::Clean })
}

fn cmd_graph(
    numeric: &Numeric,
    system: &SystemArg,
    ell: &ProlongationPattern,
    a_max: Option<usize>,
    dot: Option<&Path>,
) -> Result<Outcome> {
    let (sys, y) = system.load()?;
    let labels = system
        .builtin
        .as_deref()
        .and_then(|id| id.parse::<Builtin>().ok())
        .map(Builtin::labels)
        .unwrap_or_default();
    let cfg = FamilyConfig {
        classification: config(numeric, a_max, 3),
    };
    let g = negotiability_graph(&sys, &y, ell, &cfg, &labels)?;
    print!("{}", g.summary());
    if let Some(path) = dot {
        write(path, &export_dot(&g))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(if g.starred.len() < g.vertices.len() {
        Outcome::Warnings
    } else {
        Outcome::Clean
    })
}

fn load_scenario(builtin: Option<&str>, file: Option<&Path>) -> Result<Scenario> {
    match (builtin, file) {
        (Some(id), _) => builtin_scenario(id).ok_or_else(|| anyhow!("unknown scenario `{id}`")),
        (None, Some(path)) => {
            let text = read(path)?;
            parse_scenario(&text).with_context(|| format!("{}", path.display()))
        }
        (None, None) => bail!("give a scenario file or --builtin <id>"),
    }
}

fn print_trace(tr: &SimulationTrace) {
    println!("scenario {} ({} samples, h = {})", tr.name, tr.len(), tr.h);
    for ev in &tr.events {
        let what = match &ev.kind {
            EventKind::Switch { from, to } => format!("switch {from} -> {to}"),
            EventKind::Handover { from, to } => format!("handover {from} -> {to}"),
            EventKind::Rejected { to, rejection } => {
                format!("rejected switch to {to}: {}", serde_json::to_string(rejection).unwrap_or_default())
            }
            EventKind::Abort { reason } => format!("abort: {reason}"),
        };
        println!("  t = {:>8.3}  {what}", ev.t);
    }
    for name in &tr.channel_names {
        if let Some(e) = tr.error_series(name) {
            println!("  final error {name}: {:.3e}", e.last().copied().unwrap_or(f64::NAN));
        }
    }
}

fn cmd_simulate(builtin: Option<&str>, file: Option<&Path>, csv: Option<&Path>, plot: Option<&Path>, format: Format) -> Result<Outcome> {
    let sc = load_scenario(builtin, file)?;
    let tr = run_scenario(&sc)?;
    match format {
        Format::Text => print_trace(&tr),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({
                "name": tr.name,
                "samples": tr.len(),
                "events": tr.events,
                "aborted": tr.aborted,
            }))?
        ),
    }
    if let Some(path) = csv {
        write(path, &tr.to_csv())?;
        if let Some(gp) = plot {
            let png = gp.with_extension("png");
            write(gp, &tr.gnuplot_script(&path.display().to_string(), &png.display().to_string()))?;
        }
    }
    let troubled = tr.aborted.is_some() || tr.events.iter().any(|e| matches!(e.kind, EventKind::Rejected { .. }));
    Ok(if troubled { Outcome::Warnings } else { Outcome::Clean })
}

fn cmd_check(only: &[String]) -> Result<Outcome> {
    let ids: Vec<&str> = if only.is_empty() {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        only.iter().map(String::as_str).collect()
    };
    let mut passed = 0;
    for id in &ids {
        let r = run_criterion(id).ok_or_else(|| anyhow!("unknown criterion `{id}`"))?;
        println!("{r}");
        passed += usize::from(r.passed());
    }
    println!("{passed}/{} criteria pass", ids.len());
    if passed < ids.len() {
        bail!("{} criteria failed", ids.len() - passed);
    }
    Ok(Outcome::Clean)
}

fn cmd_export(id: Option<&str>, list: bool) -> Result<Outcome> {
    if list || id.is_none() {
        println!("systems:");
        for b in Builtin::ALL {
            println!("  {b}");
        }
        println!("scenarios:");
        for (s, _) in BUILTIN_SCENARIOS {
            println!("  {s}");
        }
        return Ok(Outcome::Clean);
    }
    let id = id.unwrap_or_default();
    if let Ok(b) = id.parse::<Builtin>() {
        print!("{}", render_system(&b.system()));
    } else if let Some((_, text)) = BUILTIN_SCENARIOS.iter().find(|(s, _)| *s == id) {
        print!("{text}");
    } else {
        bail!("unknown builtin `{id}`");
    }
    Ok(Outcome::Clean)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let n = &cli.numeric;
    match &cli.command {
        Command::Classify {
            system,
            a_max,
            l_max,
            format,
        } => cmd_classify(n, system, *a_max, *l_max, *format),
        Command::Graph { system, ell, a_max, dot } => cmd_graph(n, system, ell, *a_max, dot.as_deref()),
        Command::Simulate {
            builtin,
            file,
            csv,
            plot,
            format,
        } => cmd_simulate(builtin.as_deref(), file.as_deref(), csv.as_deref(), plot.as_deref(), *format),
        Command::Check {
            suite: Suite::Acceptance,
            only,
        } => cmd_check(only),
        Command::ExportBuiltin { id, list } => cmd_export(id.as_deref(), *list),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Warnings) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
