//! Plain-text system definitions.
//!
//! ```text
//! system square
//! params: k=2
//! states: x1 x2
//! inputs: u1
//! operating_point: 0 0
//! box: ±1 ±1            # or lo..hi per entry
//! input_point: 0        # optional, default 0
//! input_box: ±1         # optional, default ±1
//! f:
//!   x2
//!   0
//! g u1:
//!   0
//!   k
//! output y:
//!   x1
//! ```

use std::fmt::Write;

use crate::expr::{parse_expression, Expr, Number, SymbolTable};

use super::{OutputMap, SystemDefinition, SystemError};

fn err(line: usize, msg: impl Into<String>) -> SystemError {
    SystemError::Dsl { line, msg: msg.into() }
}

enum Section {
    None,
    F,
    G(usize),
    Output(usize),
}

fn parse_number(tok: &str, line: usize) -> Result<f64, SystemError> {
    tok.parse::<f64>().map_err(|_| err(line, format!("bad number `{tok}`")))
}

/// `±r`, `+-r` (around the centre) or `lo..hi`.
fn parse_interval(tok: &str, centre: f64, line: usize) -> Result<(f64, f64), SystemError> {
    let r = tok.strip_prefix('±').or_else(|| tok.strip_prefix("+-"));
    if let Some(r) = r {
        let r = parse_number(r, line)?;
        return Ok((centre - r, centre + r));
    }
    if let Some((a, b)) = tok.split_once("..") {
        return Ok((parse_number(a, line)?, parse_number(b, line)?));
    }
    Err(err(line, format!("bad interval `{tok}` (use ±r or lo..hi)")))
}

fn param_value(tok: &str, line: usize) -> Result<Number, SystemError> {
    let empty = SymbolTable::new();
    let e = parse_expression(tok, &empty).map_err(|source| SystemError::DslExpr { line, source })?;
    e.as_number()
        .ok_or_else(|| err(line, format!("parameter value `{tok}` is not a constant")))
}

/// Numbered expression lines of one section.
type Lines = Vec<(usize, String)>;

/// Parse a system file. Line numbers in errors are one-based.
pub fn parse_system(text: &str) -> Result<SystemDefinition, SystemError> {
    let mut name = None;
    let mut params: Vec<(String, Number)> = Vec::new();
    let mut states: Vec<String> = Vec::new();
    let mut inputs: Vec<String> = Vec::new();
    let mut op_tokens: Option<(usize, Vec<String>)> = None;
    let mut box_tokens: Option<(usize, Vec<String>)> = None;
    let mut ip_tokens: Option<(usize, Vec<String>)> = None;
    let mut ib_tokens: Option<(usize, Vec<String>)> = None;
    let mut f_lines: Vec<(usize, String)> = Vec::new();
    let mut g_lines: Vec<(String, usize, Lines)> = Vec::new();
    let mut out_lines: Vec<(String, Lines)> = Vec::new();
    let mut section = Section::None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words = |rest: &str| rest.split_whitespace().map(str::to_string).collect::<Vec<_>>();
        if let Some(rest) = content.strip_prefix("system ") {
            name = Some(rest.trim().to_string());
            section = Section::None;
        } else if let Some(rest) = content.strip_prefix("params:") {
            for tok in rest.split_whitespace() {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| err(line, format!("expected name=value, got `{tok}`")))?;
                params.push((k.to_string(), param_value(v, line)?));
            }
            section = Section::None;
        } else if let Some(rest) = content.strip_prefix("states:") {
            states = words(rest);
            section = Section::None;
        } else if let Some(rest) = content.strip_prefix("inputs:") {
            inputs = words(rest);
            section = Section::None;
        } else if let Some(rest) = content.strip_prefix("operating_point:") {
            op_tokens = Some((line, words(rest)));
            section = Section::None;
        } else if let Some(rest) = content.strip_prefix("input_point:") {
            ip_tokens = Some((line, words(rest)));
            section = Section::None;
        } else if let Some(rest) = content.strip_prefix("input_box:") {
            ib_tokens = Some((line, words(rest)));
            section = Section::None;
        } else if let Some(rest) = content.strip_prefix("box:") {
            box_tokens = Some((line, words(rest)));
            section = Section::None;
        } else if content == "f:" {
            section = Section::F;
        } else if let Some(rest) = content.strip_prefix("g ").and_then(|r| r.strip_suffix(':')) {
            g_lines.push((rest.trim().to_string(), line, Vec::new()));
            section = Section::G(g_lines.len() - 1);
        } else if let Some(rest) = content.strip_prefix("output ").and_then(|r| r.strip_suffix(':')) {
            out_lines.push((rest.trim().to_string(), Vec::new()));
            section = Section::Output(out_lines.len() - 1);
        } else {
            match section {
                Section::F => f_lines.push((line, content.to_string())),
                Section::G(k) => g_lines[k].2.push((line, content.to_string())),
                Section::Output(k) => out_lines[k].1.push((line, content.to_string())),
                Section::None => return Err(err(line, format!("unexpected line `{content}`"))),
            }
        }
    }

    let name = name.ok_or_else(|| err(1, "missing `system <name>` header"))?;
    if states.is_empty() {
        return Err(err(1, "missing `states:`"));
    }
    let (n, p) = (states.len(), inputs.len());
    let mut table = SymbolTable::new();
    for (k, v) in &params {
        table.add_param(k, *v).map_err(|source| SystemError::DslExpr { line: 0, source })?;
    }
    for s in &states {
        table.add_var(s).map_err(|source| SystemError::DslExpr { line: 0, source })?;
    }
    let parse_block = |lines: &[(usize, String)]| -> Result<Vec<Expr>, SystemError> {
        lines
            .iter()
            .map(|(line, txt)| parse_expression(txt, &table).map_err(|source| SystemError::DslExpr { line: *line, source }))
            .collect()
    };

    let f = parse_block(&f_lines)?;
    if f.len() != n {
        return Err(err(
            f_lines.first().map(|l| l.0).unwrap_or(1),
            format!("f has {} rows, expected {n}", f.len()),
        ));
    }
    let mut g = vec![None; p];
    for (input, line, rows) in &g_lines {
        let i = inputs
            .iter()
            .position(|u| u == input)
            .ok_or_else(|| err(*line, format!("unknown input `{input}`")))?;
        let col = parse_block(rows)?;
        if col.len() != n {
            return Err(err(*line, format!("column for {input} has {} rows, expected {n}", col.len())));
        }
        g[i] = Some(col);
    }
    let g: Vec<Vec<Expr>> = g
        .into_iter()
        .enumerate()
        .map(|(i, c)| c.ok_or_else(|| err(1, format!("missing column `g {}:`", inputs[i]))))
        .collect::<Result<_, _>>()?;

    let numbers = |toks: &Option<(usize, Vec<String>)>, len: usize, default: f64| -> Result<Vec<f64>, SystemError> {
        match toks {
            None => Ok(vec![default; len]),
            Some((line, t)) if t.len() == len => t.iter().map(|s| parse_number(s, *line)).collect(),
            Some((line, t)) => Err(err(*line, format!("expected {len} entries, got {}", t.len()))),
        }
    };
    let intervals = |toks: &Option<(usize, Vec<String>)>, centre: &[f64]| -> Result<Vec<(f64, f64)>, SystemError> {
        match toks {
            None => Ok(centre.iter().map(|c| (c - 1.0, c + 1.0)).collect()),
            Some((line, t)) if t.len() == centre.len() => t.iter().zip(centre).map(|(s, c)| parse_interval(s, *c, *line)).collect(),
            Some((line, t)) => Err(err(*line, format!("expected {} entries, got {}", centre.len(), t.len()))),
        }
    };
    let operating_point = numbers(&op_tokens, n, 0.0)?;
    let state_box = intervals(&box_tokens, &operating_point)?;
    let input_point = numbers(&ip_tokens, p, 0.0)?;
    let input_box = intervals(&ib_tokens, &input_point)?;

    let mut outputs = Vec::new();
    for (oname, rows) in &out_lines {
        let exprs = parse_block(rows)?;
        let channels = exprs
            .into_iter()
            .zip(rows)
            .enumerate()
            .map(|(j, (e, (_, txt)))| {
                let label = if states.iter().any(|s| s == txt.trim()) {
                    txt.trim().to_string()
                } else {
                    format!("{oname}{}", j + 1)
                };
                (label, e)
            })
            .collect();
        outputs.push(OutputMap::new(oname, channels));
    }

    let sys = SystemDefinition {
        name,
        params,
        states,
        inputs,
        f,
        g,
        operating_point,
        state_box,
        input_point,
        input_box,
        outputs,
    };
    sys.validate()?;
    Ok(sys)
}

fn fmt_f64(x: f64) -> String {
    // shortest representation that parses back to the same value
    format!("{x:?}")
}

fn fmt_interval(lo: f64, hi: f64, centre: f64) -> String {
    let r = hi - centre;
    if (centre - lo - r).abs() <= 1e-12 * (1.0 + r.abs()) && centre - r == lo && centre + r == hi {
        format!("±{}", fmt_f64(r))
    } else {
        format!("{}..{}", fmt_f64(lo), fmt_f64(hi))
    }
}

/// Render a system in the file format accepted by [`parse_system`].
pub fn render_system(sys: &SystemDefinition) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "system {}", sys.name);
    if !sys.params.is_empty() {
        let ps: Vec<String> = sys.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(s, "params: {}", ps.join(" "));
    }
    let _ = writeln!(s, "states: {}", sys.states.join(" "));
    let _ = writeln!(s, "inputs: {}", sys.inputs.join(" "));
    let join = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ");
    let boxes = |b: &[(f64, f64)], c: &[f64]| {
        b.iter()
            .zip(c)
            .map(|((l, h), c)| fmt_interval(*l, *h, *c))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(s, "operating_point: {}", join(&sys.operating_point));
    let _ = writeln!(s, "box: {}", boxes(&sys.state_box, &sys.operating_point));
    if !sys.inputs.is_empty() {
        let _ = writeln!(s, "input_point: {}", join(&sys.input_point));
        let _ = writeln!(s, "input_box: {}", boxes(&sys.input_box, &sys.input_point));
    }
    let _ = writeln!(s, "f:");
    for e in &sys.f {
        let _ = writeln!(s, "  {e}");
    }
    for (u, col) in sys.inputs.iter().zip(&sys.g) {
        let _ = writeln!(s, "g {u}:");
        for e in col {
            let _ = writeln!(s, "  {e}");
        }
    }
    for o in &sys.outputs {
        let _ = writeln!(s, "output {}:", o.name);
        for c in &o.channels {
            let _ = writeln!(s, "  {}", c.h);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "
system square
states: x1 x2 x3 x4
inputs: u1 u2 u3
operating_point: 0 0 0 0
f:
  x2
  x3
  x4
  0
g u1:
  0
  1
  0
  0
g u2:
  0
  1
  1
  0
g u3:
  0
  0
  0
  1
output y:
  x1
  x3
  x4
";

    #[test]
    fn parses_and_round_trips() {
        let sys = parse_system(SQUARE).unwrap();
        assert_eq!(sys.n(), 4);
        assert_eq!(sys.p(), 3);
        assert_eq!(sys.state_box[0], (-1.0, 1.0));
        let text = render_system(&sys);
        assert_eq!(parse_system(&text).unwrap(), sys);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = SQUARE.replace("  x3\n  x4\n  0\ng u1", "  x3 +\n  x4\n  0\ng u1");
        match parse_system(&bad) {
            Err(SystemError::DslExpr { line, .. }) => assert_eq!(line, 8),
            other => panic!("unexpected {other:?}"),
        }
        let bad = SQUARE.replace("g u3:", "g w:");
        assert!(matches!(parse_system(&bad), Err(SystemError::Dsl { .. })));
    }

    #[test]
    fn parameters_and_boxes() {
        let txt =
            "system p\nparams: m=2 g=9.81\nstates: x\ninputs: u\nbox: -0.5..3\ninput_point: 9.81\ninput_box: ±2\nf:\n  -g\ng u:\n  1/m\n";
        let sys = parse_system(txt).unwrap();
        assert_eq!(sys.state_box[0], (-0.5, 3.0));
        assert_eq!(sys.input_box[0], (7.8100000000000005, 11.81));
        assert_eq!(sys.f[0].as_number(), Some(Number::ratio(-981, 100)));
        assert_eq!(parse_system(&render_system(&sys)).unwrap(), sys);
    }
}
