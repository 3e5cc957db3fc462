//! Input taxonomy relative to a flat output.
//!
//! For every candidate removed set `A` two searches run side by side. The
//! reduced route looks for a prolongation of the surviving inputs under
//! which a subset of the output channels is flat once `A` is switched off.
//! The augmented route keeps every input, prolongs the inputs in `A` and
//! asks for `(y_Ō, u_A)` to be flat with a decoupling matrix that stays
//! nonsingular where the stacks of `A` vanish. The two verdicts are
//! expected to coincide for every `A` within a common search budget.
//!
//! Both searches use a numeric screen built from first-appearance orders
//! (see [`JetExpansion`]) and confirm the first passing candidate with the
//! direct relative-degree computation on the prolonged system.

mod screen;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linearization::{relative_degree_profile, AppearanceTable, JetExpansion, LinearizationError, RelativeDegreeProfile, Tolerances};
use crate::system::{IndexSet, OutputMap, ProlongationPattern, ProlongedSystem, SystemDefinition, SystemError};

use screen::{Candidate, Screen};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassificationError {
    #[error("output `{0}` is not flat for the system: {1}")]
    OutputNotFlat(String, String),
    #[error("invalid search bounds: {0}")]
    Bounds(String),
    #[error(transparent)]
    Linearization(#[from] LinearizationError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Search bounds and tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassificationConfig {
    /// Largest removed set; `None` means `p - 1`.
    pub a_max: Option<usize>,
    /// Largest integrator count per input.
    pub l_max: usize,
    pub tol: Tolerances,
    /// Random points used by the numeric screen, besides `x°`.
    pub screen_points: usize,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        ClassificationConfig {
            a_max: None,
            l_max: 3,
            tol: Tolerances::default(),
            screen_points: 12,
        }
    }
}

impl ClassificationConfig {
    pub fn a_max_for(&self, p: usize) -> usize {
        self.a_max.unwrap_or(p.saturating_sub(1)).min(p.saturating_sub(1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    /// `y_Ō` flat for `Σ_Ā^(ℓ)`.
    Reduced,
    /// `(y_Ō, u_A)` flat for `Σ^(ℓ)`.
    Augmented,
    /// Augmented, and nonsingular somewhere on the zero surface of `A`.
    AugmentedZeroCompatible,
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairKind::Reduced => "reduced",
            PairKind::Augmented => "augmented",
            PairKind::AugmentedZeroCompatible => "augmented, zero-compatible",
        })
    }
}

/// A prolongation and a set of dropped output channels realizing a removed
/// set.
#[derive(Clone, Debug, PartialEq)]
pub struct RealizingPair {
    pub pattern: ProlongationPattern,
    /// Output channels dropped, `|O| = |A|`.
    pub o: IndexSet,
    pub kind: PairKind,
    /// Relative degrees of the confirmed output.
    pub r: Vec<usize>,
    pub exclusion: Vec<String>,
    /// Zero-surface point where the decoupling matrix is nonsingular.
    pub witness: Option<Vec<f64>>,
}

impl fmt::Display for RealizingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l={} O={} [{}]", self.pattern, self.o, self.kind)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputLabel {
    Redundant,
    Essential,
    Dexterity,
}

impl fmt::Display for InputLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputLabel::Redundant => "redundant",
            InputLabel::Essential => "essential (within budget)",
            InputLabel::Dexterity => "dexterity",
        })
    }
}

/// Outcome of building the augmented output from a reduced pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstructiveCheck {
    pub pattern: ProlongationPattern,
    pub within_budget: bool,
    pub flat: bool,
    pub zero_compatible: bool,
    /// Largest entry difference between the restricted augmented decoupling
    /// matrix and the reduced one at matched points; `None` when the
    /// degrees differ or no point was usable.
    pub restriction_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubsetVerdict {
    pub a: IndexSet,
    pub dexterity: Option<RealizingPair>,
    /// Best augmented pair found, zero-compatible if any is.
    pub complement: Option<RealizingPair>,
    pub constructive: Option<ConstructiveCheck>,
    /// Screen hits that the direct computation rejected.
    pub screen_rejections: usize,
}

impl SubsetVerdict {
    pub fn in_d(&self) -> bool {
        self.dexterity.is_some()
    }

    pub fn in_f0(&self) -> bool {
        matches!(&self.complement, Some(p) if p.kind == PairKind::AugmentedZeroCompatible)
    }

    /// A reduced pair exists but its augmented mate needs more integrators
    /// than the budget allows.
    pub fn budget_limited(&self) -> bool {
        self.in_d() && !self.in_f0() && matches!(&self.constructive, Some(c) if !c.within_budget)
    }

    pub fn agrees(&self) -> bool {
        self.in_d() == self.in_f0() || self.budget_limited()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationReport {
    pub system: String,
    pub output: String,
    pub inputs: Vec<String>,
    pub labels: Vec<InputLabel>,
    pub redundant: Vec<bool>,
    pub a_max: usize,
    pub l_max: usize,
    pub subsets: Vec<SubsetVerdict>,
    pub warnings: Vec<String>,
}

/// One row of the machine-readable table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub a: Vec<usize>,
    pub in_d: bool,
    pub in_f0: bool,
    pub agree: bool,
    pub budget_limited: bool,
    pub reduced_pattern: Option<Vec<usize>>,
    pub reduced_o: Option<Vec<usize>>,
    pub augmented_pattern: Option<Vec<usize>>,
    pub augmented_o: Option<Vec<usize>>,
    pub augmented_kind: Option<PairKind>,
    pub exclusion: Vec<String>,
}

impl ClassificationReport {
    /// Dexterity subsets, in enumeration order.
    pub fn d_family(&self) -> Vec<IndexSet> {
        self.subsets.iter().filter(|s| s.in_d()).map(|s| s.a.clone()).collect()
    }

    /// Subsets with a zero-compatible augmented pair.
    pub fn f0_family(&self) -> Vec<IndexSet> {
        self.subsets.iter().filter(|s| s.in_f0()).map(|s| s.a.clone()).collect()
    }

    /// Minimum dexterity loss of input `i`.
    pub fn delta(&self, i: usize) -> Option<usize> {
        self.subsets.iter().filter(|s| s.in_d() && s.a.contains(i)).map(|s| s.a.len()).min()
    }

    pub fn disagreements(&self) -> Vec<&SubsetVerdict> {
        self.subsets.iter().filter(|s| !s.agrees()).collect()
    }

    pub fn has_budget_warnings(&self) -> bool {
        !self.warnings.is_empty()
    }

    pub fn verdict(&self, a: &IndexSet) -> Option<&SubsetVerdict> {
        self.subsets.iter().find(|s| &s.a == a)
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        self.subsets
            .iter()
            .map(|s| {
                let d = s.dexterity.as_ref();
                let c = s.complement.as_ref();
                ReportRow {
                    a: s.a.one_based(),
                    in_d: s.in_d(),
                    in_f0: s.in_f0(),
                    agree: s.agrees(),
                    budget_limited: s.budget_limited(),
                    reduced_pattern: d.map(|p| p.pattern.0.clone()),
                    reduced_o: d.map(|p| p.o.one_based()),
                    augmented_pattern: c.map(|p| p.pattern.0.clone()),
                    augmented_o: c.map(|p| p.o.one_based()),
                    augmented_kind: c.map(|p| p.kind),
                    exclusion: c.or(d).map(|p| p.exclusion.clone()).unwrap_or_default(),
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let delta: Vec<Option<usize>> = (0..self.inputs.len()).map(|i| self.delta(i)).collect();
        serde_json::json!({
            "system": self.system,
            "output": self.output,
            "inputs": self.inputs,
            "labels": self.labels,
            "delta": delta,
            "d_family": self.d_family().iter().map(IndexSet::one_based).collect::<Vec<_>>(),
            "f0_family": self.f0_family().iter().map(IndexSet::one_based).collect::<Vec<_>>(),
            "a_max": self.a_max,
            "l_max": self.l_max,
            "subsets": self.rows(),
            "warnings": self.warnings,
        })
    }
}

fn family(sets: &[IndexSet]) -> String {
    let parts: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

impl fmt::Display for ClassificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "system {} / output {}", self.system, self.output)?;
        writeln!(f, "budget: |A| <= {}, l_i <= {}", self.a_max, self.l_max)?;
        writeln!(f, "D  = {}", family(&self.d_family()))?;
        writeln!(f, "F0 = {}", family(&self.f0_family()))?;
        writeln!(f, "inputs:")?;
        for (i, name) in self.inputs.iter().enumerate() {
            match self.delta(i) {
                Some(d) => writeln!(f, "  {name}: {} (loss {d})", self.labels[i])?,
                None => writeln!(f, "  {name}: {}", self.labels[i])?,
            }
        }
        writeln!(f, "subsets:")?;
        for s in &self.subsets {
            let d = s.dexterity.as_ref().map(|p| p.to_string()).unwrap_or_else(|| "-".into());
            let c = s.complement.as_ref().map(|p| p.to_string()).unwrap_or_else(|| "-".into());
            let tag = if s.budget_limited() {
                "budget-limited"
            } else if s.agrees() {
                "agree"
            } else {
                "DISAGREE"
            };
            writeln!(f, "  A={:<8} D: {d:<28} F: {c:<40} {tag}", s.a.to_string())?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Search state shared by every subset of one (system, output) pair.
pub struct Classifier {
    sys: SystemDefinition,
    y: OutputMap,
    cfg: ClassificationConfig,
    jx: JetExpansion,
    full: Arc<AppearanceTable>,
    max_order: usize,
}

impl Classifier {
    pub fn new(sys: &SystemDefinition, y: &OutputMap, cfg: &ClassificationConfig) -> Result<Self, ClassificationError> {
        if y.is_empty() {
            return Err(ClassificationError::Bounds("empty output".into()));
        }
        let max_order = sys.n() + cfg.l_max + cfg.tol.cap_extra.max(1);
        let jx = JetExpansion::new(sys, y, max_order, &cfg.tol)?;
        let full = Arc::new(jx.appearance(&IndexSet::empty(), max_order)?);
        Ok(Classifier {
            sys: sys.clone(),
            y: y.clone(),
            cfg: *cfg,
            jx,
            full,
            max_order,
        })
    }

    pub fn system(&self) -> &SystemDefinition {
        &self.sys
    }

    pub fn output(&self) -> &OutputMap {
        &self.y
    }

    pub fn config(&self) -> &ClassificationConfig {
        &self.cfg
    }

    /// First-appearance table of the full system.
    pub fn appearance(&self) -> &AppearanceTable {
        &self.full
    }

    fn screen(&self, table: Arc<AppearanceTable>, zero: &IndexSet) -> Screen {
        let seed = self.cfg.tol.zero.seed ^ 0x5c4ee9;
        Screen::new(&self.jx, table, zero, self.cfg.screen_points, seed)
    }

    fn check_subset(&self, a: &IndexSet) -> Result<(), ClassificationError> {
        let p = self.sys.p();
        if a.is_empty() || a.len() >= p || a.iter().any(|i| i >= p) {
            return Err(ClassificationError::Bounds(format!(
                "removed set {a} must be a proper nonempty subset of 1..{p}"
            )));
        }
        if a.len() > self.y.len() {
            return Err(ClassificationError::Bounds(format!("removed set {a} is larger than the output")));
        }
        Ok(())
    }

    /// Reduced-route search: first `(ℓ, O)` with `y_Ō` flat for `Σ_Ā^(ℓ)`.
    pub fn check_dexterity(&self, a: &IndexSet) -> Result<Option<RealizingPair>, ClassificationError> {
        Ok(self.dexterity_search(a)?.0)
    }

    fn dexterity_search(&self, a: &IndexSet) -> Result<(Option<RealizingPair>, usize), ClassificationError> {
        self.check_subset(a)?;
        let (p, q, n) = (self.sys.p(), self.y.len(), self.sys.n());
        let table = Arc::new(self.jx.appearance(a, self.max_order)?);
        let screen = self.screen(table, a);
        let cols: Vec<usize> = a.complement(p).iter().collect();
        let drops = IndexSet::combinations_of(q, a.len());
        let mut rejected = 0;
        for pattern in ProlongationPattern::enumerate(p, self.cfg.l_max, a, &[]) {
            for o in &drops {
                let rows: Vec<usize> = o.complement(q).iter().collect();
                let cand = Candidate {
                    pattern: &pattern.0,
                    cols: &cols,
                    rows: &rows,
                    aug: &[],
                    target: n + pattern.total(),
                };
                if !screen.passes(&cand, self.cfg.tol.tol_rank) {
                    continue;
                }
                let ps = self.sys.prolong(&pattern, a)?;
                let prof = relative_degree_profile(&ps, &self.y.without(o)?, &self.cfg.tol)?;
                if prof.flat {
                    return Ok((Some(pair_from(&pattern, o, PairKind::Reduced, &prof, None)), rejected));
                }
                rejected += 1;
            }
        }
        Ok((None, rejected))
    }

    /// Augmented-route search. Returns the first zero-compatible pair, or
    /// failing that the first augmented pair of any kind.
    pub fn check_flat_input_complement(&self, a: &IndexSet) -> Result<Option<RealizingPair>, ClassificationError> {
        Ok(self.complement_search(a)?.0)
    }

    fn complement_search(&self, a: &IndexSet) -> Result<(Option<RealizingPair>, usize), ClassificationError> {
        self.check_subset(a)?;
        let (p, q, n) = (self.sys.p(), self.y.len(), self.sys.n());
        let lower: Vec<usize> = (0..p).map(|i| usize::from(a.contains(i))).collect();
        let patterns = ProlongationPattern::enumerate(p, self.cfg.l_max, &IndexSet::empty(), &lower);
        let cols: Vec<usize> = (0..p).collect();
        let aug: Vec<usize> = a.iter().collect();
        let drops = IndexSet::combinations_of(q, a.len());
        let mut rejected = 0;
        let mut fallback: Option<RealizingPair> = None;
        let nothing = IndexSet::empty();
        for zero_pass in [true, false] {
            let screen = self.screen(self.full.clone(), if zero_pass { a } else { &nothing });
            for pattern in &patterns {
                for o in &drops {
                    let rows: Vec<usize> = o.complement(q).iter().collect();
                    let cand = Candidate {
                        pattern: &pattern.0,
                        cols: &cols,
                        rows: &rows,
                        aug: &aug,
                        target: n + pattern.total(),
                    };
                    if !screen.passes(&cand, self.cfg.tol.tol_rank) {
                        continue;
                    }
                    let ps = self.sys.prolong(pattern, &IndexSet::empty())?;
                    let out = ps.augmented_output(&self.y, o, a)?;
                    let prof = relative_degree_profile(&ps, &out, &self.cfg.tol)?;
                    if !prof.flat {
                        rejected += 1;
                        continue;
                    }
                    match zero_witness(&ps, &prof, a) {
                        Some(w) => {
                            let pair = pair_from(pattern, o, PairKind::AugmentedZeroCompatible, &prof, Some(w));
                            return Ok((Some(pair), rejected));
                        }
                        None if !zero_pass => {
                            return Ok((Some(pair_from(pattern, o, PairKind::Augmented, &prof, None)), rejected));
                        }
                        None => {
                            if fallback.is_none() {
                                fallback = Some(pair_from(pattern, o, PairKind::Augmented, &prof, None));
                            }
                        }
                    }
                }
            }
            if fallback.is_some() {
                break;
            }
        }
        Ok((fallback, rejected))
    }

    /// Screen verdict for `(y_Ō, u_A)` on `Σ^(ℓ)`: `false` means the output
    /// is certainly not flat.
    pub fn screen_augmented(&self, pattern: &ProlongationPattern, a: &IndexSet, o: &IndexSet) -> bool {
        self.augmented_screens(pattern, &[(a.clone(), o.clone())]).into_iter().all(|b| b)
    }

    /// Screen verdicts for many `(A, O)` candidates on one pattern.
    pub fn augmented_screens(&self, pattern: &ProlongationPattern, cands: &[(IndexSet, IndexSet)]) -> Vec<bool> {
        let (p, q, n) = (self.sys.p(), self.y.len(), self.sys.n());
        let screen = self.screen(self.full.clone(), &IndexSet::empty());
        let cols: Vec<usize> = (0..p).collect();
        cands
            .iter()
            .map(|(a, o)| {
                if a.iter().any(|j| pattern.0[j] == 0) || a.len() != o.len() {
                    return false;
                }
                let rows: Vec<usize> = o.complement(q).iter().collect();
                let aug: Vec<usize> = a.iter().collect();
                screen.passes(
                    &Candidate {
                        pattern: &pattern.0,
                        cols: &cols,
                        rows: &rows,
                        aug: &aug,
                        target: n + pattern.total(),
                    },
                    self.cfg.tol.tol_rank,
                )
            })
            .collect()
    }

    /// Builds the augmented pattern from a reduced pair: the inputs in `A`
    /// get just enough integrators that they reach each kept channel no
    /// earlier than its reduced relative degree.
    pub fn constructive_pattern(&self, a: &IndexSet, reduced: &RealizingPair) -> ProlongationPattern {
        let q = self.y.len();
        let rows: Vec<usize> = reduced.o.complement(q).iter().collect();
        let mut pattern = reduced.pattern.clone();
        for j in a.iter() {
            let need = rows
                .iter()
                .zip(&reduced.r)
                .filter_map(|(&i, &rho)| self.full.c[i][j].map(|c| rho.saturating_sub(c)))
                .max()
                .unwrap_or(0);
            pattern.0[j] = need.max(1);
        }
        pattern
    }

    /// Checks the construction from a reduced pair and compares decoupling
    /// matrices on the zero surface.
    pub fn constructive_check(&self, a: &IndexSet, reduced: &RealizingPair) -> Result<ConstructiveCheck, ClassificationError> {
        let pattern = self.constructive_pattern(a, reduced);
        let within_budget = pattern.0.iter().all(|&l| l <= self.cfg.l_max);
        let mut check = ConstructiveCheck {
            pattern: pattern.clone(),
            within_budget,
            flat: false,
            zero_compatible: false,
            restriction_gap: None,
        };
        let ps = self.sys.prolong(&pattern, &IndexSet::empty())?;
        let prof = relative_degree_profile(&ps, &ps.augmented_output(&self.y, &reduced.o, a)?, &self.cfg.tol)?;
        check.flat = prof.flat;
        if !prof.flat {
            return Ok(check);
        }
        check.zero_compatible = zero_witness(&ps, &prof, a).is_some();
        let red_ps = self.sys.prolong(&reduced.pattern, a)?;
        let red = relative_degree_profile(&red_ps, &self.y.without(&reduced.o)?, &self.cfg.tol)?;
        check.restriction_gap = restriction_gap(&ps, &prof, &red_ps, &red, a);
        Ok(check)
    }

    fn verdict(&self, a: &IndexSet) -> Result<SubsetVerdict, ClassificationError> {
        let (dexterity, r1) = self.dexterity_search(a)?;
        let (complement, r2) = self.complement_search(a)?;
        let constructive = match &dexterity {
            Some(pair) => Some(self.constructive_check(a, pair)?),
            None => None,
        };
        Ok(SubsetVerdict {
            a: a.clone(),
            dexterity,
            complement,
            constructive,
            screen_rejections: r1 + r2,
        })
    }

    pub fn classify(&self) -> Result<ClassificationReport, ClassificationError> {
        let (p, q) = (self.sys.p(), self.y.len());
        let ps = ProlongedSystem::plain(&self.sys)?;
        let base = relative_degree_profile(&ps, &self.y, &self.cfg.tol)?;
        if !base.flat {
            let why = base.failure.map(|f| f.to_string()).unwrap_or_default();
            return Err(ClassificationError::OutputNotFlat(self.y.name.clone(), why));
        }
        let a_max = self.cfg.a_max_for(p).min(q);
        if self.cfg.a_max == Some(0) {
            return Err(ClassificationError::Bounds("a_max must be at least 1".into()));
        }
        let subsets = IndexSet::enumerate(p, a_max);
        let verdicts: Vec<SubsetVerdict> = subsets.par_iter().map(|a| self.verdict(a)).collect::<Result<_, _>>()?;
        let redundant: Vec<bool> = (0..p)
            .into_par_iter()
            .map(|i| is_redundant(&self.sys, &self.y, i, &self.cfg.tol))
            .collect::<Result<_, _>>()?;
        let labels = (0..p)
            .map(|i| {
                if redundant[i] {
                    InputLabel::Redundant
                } else if verdicts.iter().any(|v| v.in_d() && v.a.contains(i)) {
                    InputLabel::Dexterity
                } else {
                    InputLabel::Essential
                }
            })
            .collect();
        let mut warnings = Vec::new();
        for v in &verdicts {
            if v.budget_limited() {
                warnings.push(format!("A={}: augmented pair needs more than {} integrators", v.a, self.cfg.l_max));
            }
        }
        for (i, capped) in self.full.capped.iter().enumerate() {
            if *capped {
                warnings.push(format!(
                    "channel {}: some input did not appear within {} derivatives",
                    self.y.channels[i].name, self.max_order
                ));
            }
        }
        Ok(ClassificationReport {
            system: self.sys.name.clone(),
            output: self.y.name.clone(),
            inputs: self.sys.inputs.clone(),
            labels,
            redundant,
            a_max,
            l_max: self.cfg.l_max,
            subsets: verdicts,
            warnings,
        })
    }
}

fn pair_from(
    pattern: &ProlongationPattern,
    o: &IndexSet,
    kind: PairKind,
    prof: &RelativeDegreeProfile,
    witness: Option<Vec<f64>>,
) -> RealizingPair {
    RealizingPair {
        pattern: pattern.clone(),
        o: o.clone(),
        kind,
        r: prof.r.iter().map(|r| r.unwrap_or(0)).collect(),
        exclusion: prof.validity.as_ref().map(|v| v.factors.clone()).unwrap_or_default(),
        witness,
    }
}

/// A point on the zero surface of `a` where the profile is nonsingular:
/// the projected operating point first, then projected validity samples.
pub fn zero_witness(ps: &ProlongedSystem, prof: &RelativeDegreeProfile, a: &IndexSet) -> Option<Vec<f64>> {
    let op = ps.zero_surface_point(a, ps.operating_point());
    if prof.accepts(&op) {
        return Some(op);
    }
    prof.validity
        .as_ref()?
        .accepted
        .iter()
        .map(|x| ps.zero_surface_point(a, x))
        .find(|x| prof.accepts(x))
}

/// Largest entry gap between the augmented decoupling matrix restricted to
/// the zero surface (rows and columns of `a` deleted) and the reduced one.
fn restriction_gap(
    ps: &ProlongedSystem,
    aug: &RelativeDegreeProfile,
    red_ps: &ProlongedSystem,
    red: &RelativeDegreeProfile,
    a: &IndexSet,
) -> Option<f64> {
    let q = red.channels.len();
    if aug.r[..q] != red.r[..] {
        return None;
    }
    let index: HashMap<&str, usize> = ps.state_names().iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
    let map: Vec<usize> = red_ps
        .state_names()
        .iter()
        .map(|s| index.get(s.as_str()).copied())
        .collect::<Option<_>>()?;
    let kept_cols: Vec<usize> = red_ps.kept().iter().map(|&j| ps.virtual_index(j)).collect::<Option<_>>()?;
    let mut gap: Option<f64> = None;
    for xr in red.validity.as_ref()?.accepted.iter().take(16) {
        let mut x = ps.zero_surface_point(a, ps.operating_point());
        for (k, &m) in map.iter().enumerate() {
            x[m] = xr[k];
        }
        let (Ok(va), Ok(vr)) = (aug.values(&x), red.values(xr)) else {
            continue;
        };
        let mut g: f64 = 0.0;
        for i in 0..q {
            for (c, &k) in kept_cols.iter().enumerate() {
                g = g.max((va.a[(i, k)] - vr.a[(i, c)]).abs());
            }
        }
        gap = Some(gap.map_or(g, |old| old.max(g)));
    }
    gap
}

/// True when `y` stays flat after switching input `i` off.
pub fn is_redundant(sys: &SystemDefinition, y: &OutputMap, i: usize, tol: &Tolerances) -> Result<bool, ClassificationError> {
    let removed = IndexSet::new(vec![i], sys.p())?;
    if y.len() > sys.p() - 1 {
        return Ok(false);
    }
    let ps = sys.prolong(&ProlongationPattern::zeros(sys.p()), &removed)?;
    Ok(relative_degree_profile(&ps, y, tol)?.flat)
}

pub fn check_dexterity(
    sys: &SystemDefinition,
    y: &OutputMap,
    a: &IndexSet,
    cfg: &ClassificationConfig,
) -> Result<Option<RealizingPair>, ClassificationError> {
    Classifier::new(sys, y, cfg)?.check_dexterity(a)
}

pub fn check_flat_input_complement(
    sys: &SystemDefinition,
    y: &OutputMap,
    a: &IndexSet,
    cfg: &ClassificationConfig,
) -> Result<Option<RealizingPair>, ClassificationError> {
    Classifier::new(sys, y, cfg)?.check_flat_input_complement(a)
}

pub fn classify(sys: &SystemDefinition, y: &OutputMap, cfg: &ClassificationConfig) -> Result<ClassificationReport, ClassificationError> {
    Classifier::new(sys, y, cfg)?.classify()
}

#[cfg(test)]
mod tests;
