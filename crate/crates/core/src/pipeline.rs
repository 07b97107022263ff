//! End-to-end runs: derive, solve the similarity problem on a window, and
//! render the spectrum, evolution and equiconvergence tables. Everything is
//! computed in memory; [`Artifacts::write_to`] is the only disk access.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{InitialState, RunConfig};
use crate::error::{Error, Result};
use crate::evolution::{evolution_trace_rows, smooth_state, GroupEvaluator};
use crate::linalg::{self, CVector, C64};
use crate::potential::{derive, Branch, DerivedPotential};
use crate::simop::{self, Problem, SimilarityResult};
use crate::spectrum::{self, SpectralReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// A rectangular table of JSON scalars, rendered as CSV or as a JSON array
/// of row objects.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns).expect("in-memory csv");
                for row in &self.rows {
                    let cells = row.iter().map(|v| match v {
                        Value::String(s) => s.clone(),
                        Value::Null => String::new(),
                        other => other.to_string(),
                    });
                    w.write_record(cells).expect("in-memory csv");
                }
                String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv of utf-8 cells")
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(row.iter().cloned()).collect()))
                    .collect();
                let mut s = serde_json::to_string_pretty(&rows).expect("tables serialize");
                s.push('\n');
                s
            }
        }
    }
}

/// Finite floats as JSON numbers; anything else as null.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Named output files, in name order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Artifacts(pub BTreeMap<String, String>);

impl Artifacts {
    pub fn insert(&mut self, name: impl Into<String>, content: String) {
        self.0.insert(name.into(), content);
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.get(name).map(String::as_str)
    }

    pub fn write_to(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, content) in &self.0 {
            let path = dir.join(name);
            std::fs::write(&path, content)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// A failed invariant check, named after the module that owns it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub module: &'static str,
    pub what: String,
    pub value: f64,
    pub threshold: f64,
}

/// A solved window.
#[derive(Clone, Debug)]
pub struct Solved {
    pub derived: DerivedPotential,
    pub problem: Problem,
    pub result: SimilarityResult,
}

pub fn derive_from(cfg: &RunConfig) -> Result<DerivedPotential> {
    cfg.validate()?;
    derive(&cfg.load_potential()?, &cfg.derive_options())
}

/// Builds and solves the window problem. The coarse cut `m` must leave at
/// least half of the window to the tail.
pub fn solve(derived: &DerivedPotential, window: usize, cfg: &RunConfig) -> Result<Solved> {
    let problem = Problem::new(derived, window)?;
    let result = simop::run(&problem, &cfg.simop_config())?;
    if 2 * result.m > window {
        return Err(Error::ContractViolation {
            module: "cli",
            what: "2 m relative to the window",
            value: (2 * result.m) as f64,
            threshold: window as f64,
        });
    }
    Ok(Solved { derived: derived.clone(), problem, result })
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub potential: String,
    pub bc: String,
    pub branch: Branch,
    pub r: C64,
    pub window: usize,
    pub grid: usize,
    pub k: usize,
    pub m: usize,
    pub delta_p: f64,
    pub q_norm: f64,
    pub gamma_kq_norm: f64,
    pub b_norm: f64,
    pub b_star_norm: f64,
    /// Largest observed ratio of consecutive fixed-point steps.
    pub contraction_ratio: f64,
    /// `4 alpha~_{m+1} ||B||_*`.
    pub contraction_bound: f64,
    pub fixed_point_iterations: usize,
    pub fixed_point_residual: f64,
    pub similarity_residual: f64,
    pub min_singular_i_plus_u: f64,
    /// Norm of the part of `Q` the window cannot see.
    pub truncation_floor: f64,
    pub trivial: bool,
    pub spectrum: Option<SpectrumSummary>,
    pub evolution: Option<EvolutionSummary>,
    pub equiconvergence: Option<EquiSummary>,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSummary {
    pub decomposition_error: f64,
    pub max_trace_defect: f64,
    pub first_order_decay: Option<f64>,
    pub second_order_decay: Option<f64>,
    pub resonant_variant: Option<String>,
    pub ambiguous: Vec<i64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolutionSummary {
    pub t_max: f64,
    pub steps: usize,
    pub cut: usize,
    pub max_truncation_actual: f64,
    pub max_truncation_bound: f64,
    pub pushforward_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquiSummary {
    pub floor: f64,
    /// The `l = m` value, outside the scanned range.
    pub central: f64,
    pub first: f64,
    pub at_half_window: f64,
    /// `d(m + 1) / d(N / 2)`.
    pub decrease: f64,
    pub nonincreasing: bool,
    pub max_cross_product: f64,
    pub sum_defect: f64,
    pub z_condition: f64,
}

/// Which tables a pipeline run renders.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stages {
    pub spectrum: bool,
    pub evolution: bool,
    pub equiconvergence: bool,
    pub matrices: bool,
}

impl Stages {
    pub fn from_config(cfg: &RunConfig) -> Self {
        let o = &cfg.outputs;
        Self { spectrum: o.spectrum, evolution: o.evolution, equiconvergence: o.equiconvergence, matrices: o.matrices }
    }

    pub const NONE: Stages = Stages { spectrum: false, evolution: false, equiconvergence: false, matrices: false };
}

#[derive(Clone, Debug)]
pub struct Report {
    pub summary: Summary,
    pub artifacts: Artifacts,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.summary.violations.is_empty()
    }
}

fn base_summary(cfg: &RunConfig, s: &Solved) -> Summary {
    let d = &s.result.diagnostics;
    Summary {
        potential: cfg.potential_name(),
        bc: s.derived.bc().name().to_string(),
        branch: s.derived.branch,
        r: s.derived.r,
        window: s.problem.window,
        grid: s.derived.grid,
        k: d.k,
        m: d.m,
        delta_p: d.delta_p,
        q_norm: d.q_norm,
        gamma_kq_norm: d.gamma_kq_norm,
        b_norm: d.b_norm,
        b_star_norm: d.b_star_norm,
        contraction_ratio: d.max_step_ratio,
        contraction_bound: d.contraction_bound,
        fixed_point_iterations: d.iterations,
        fixed_point_residual: d.fixed_point_residual,
        similarity_residual: d.similarity_residual,
        min_singular_i_plus_u: d.min_singular_i_plus_u,
        truncation_floor: s.derived.truncation_floor(s.problem.window),
        trivial: d.trivial,
        spectrum: None,
        evolution: None,
        equiconvergence: None,
        violations: Vec::new(),
    }
}

fn c(z: C64) -> [Value; 2] {
    [num(z.re), num(z.im)]
}

fn spectrum_tables(report: &SpectralReport) -> (Table, Table) {
    let mut tail = Table::new(vec![
        "n", "slot", "block_re", "block_im", "first_re", "first_im", "second_re", "second_im", "oracle_re", "oracle_im",
    ]);
    for row in &report.tail {
        for (j, z) in row.block_eigs.iter().enumerate() {
            let mut cells = vec![json!(row.n), json!(j + 1)];
            cells.extend(c(*z));
            cells.extend(row.prediction.first_order.get(j).map_or([Value::Null, Value::Null], |w| c(*w)));
            cells.extend(row.prediction.second_order.get(j).map_or([Value::Null, Value::Null], |w| c(*w)));
            let oracle = row.oracle.as_ref().and_then(|g| nearest(g, *z));
            cells.extend(oracle.map_or([Value::Null, Value::Null], c));
            tail.push(cells);
        }
    }
    let mut central = Table::new(vec!["i", "re", "im"]);
    for (i, z) in report.central.iter().enumerate() {
        let [re, im] = c(*z);
        central.push(vec![json!(i), re, im]);
    }
    (tail, central)
}

fn nearest(group: &[C64], z: C64) -> Option<C64> {
    group.iter().copied().min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm()))
}

/// The configured initial state on the window.
pub fn initial_state(cfg: &RunConfig, eval: &GroupEvaluator) -> Result<CVector> {
    match cfg.evolution.state {
        InitialState::Smooth => Ok(smooth_state(eval.dim(), eval.block)),
        InitialState::Basis { n, slot } => {
            if n.unsigned_abs() as usize > eval.window || slot == 0 || slot > eval.block {
                return Err(Error::Config(format!("basis state ({n}, {slot}) is outside the window")));
            }
            let mut x = CVector::zeros(eval.dim());
            x[(n + eval.window as i64) as usize * eval.block + slot - 1] = linalg::ONE;
            Ok(x)
        }
    }
}

pub fn time_grid(cfg: &RunConfig, omega: f64) -> Vec<f64> {
    let t_max = cfg.evolution.t_max.unwrap_or(omega);
    let steps = cfg.evolution.steps;
    (0..=steps).map(|j| t_max * j as f64 / steps as f64).collect()
}

/// The full pipeline on the configured window.
pub fn run_pipeline(cfg: &RunConfig, stages: Stages, format: Format) -> Result<Report> {
    let derived = derive_from(cfg)?;
    let solved = solve(&derived, cfg.window, cfg)?;
    Ok(report_for(cfg, &solved, stages, format))
}

pub fn report_for(cfg: &RunConfig, s: &Solved, stages: Stages, format: Format) -> Report {
    let ext = format.extension();
    let tol = &cfg.tolerances;
    let mut summary = base_summary(cfg, s);
    let mut artifacts = Artifacts::default();

    if stages.spectrum {
        let report = spectrum::spectral_report(&s.derived, &s.problem, &s.result);
        let max_trace_defect = report.tail.iter().map(|t| t.trace_defect).fold(0.0, f64::max);
        for row in &report.tail {
            let scale = row.block_eigs.iter().map(|z| z.norm()).fold(1.0, f64::max);
            if row.trace_defect > tol.trace * scale {
                summary.violations.push(Violation {
                    module: "spectrum",
                    what: format!("trace identity at n = {}", row.n),
                    value: row.trace_defect,
                    threshold: tol.trace * scale,
                });
            }
        }
        summary.spectrum = Some(SpectrumSummary {
            decomposition_error: report.decomposition_error,
            max_trace_defect,
            first_order_decay: report.first_fit.as_ref().map(|f| f.p),
            second_order_decay: report.second_fit.as_ref().map(|f| f.p),
            resonant_variant: report.resonant_variant.clone(),
            ambiguous: report.ambiguous.clone(),
        });
        let (tail, central) = spectrum_tables(&report);
        artifacts.insert(format!("spectrum.{ext}"), tail.render(format));
        artifacts.insert(format!("central.{ext}"), central.render(format));
    }

    if stages.evolution || stages.equiconvergence {
        match GroupEvaluator::new(&s.derived, &s.problem, &s.result) {
            Ok(eval) => {
                if stages.evolution {
                    evolution_stage(cfg, s, &eval, format, &mut summary, &mut artifacts);
                }
                if stages.equiconvergence {
                    equiconvergence_stage(cfg, &eval, format, &mut summary, &mut artifacts);
                }
            }
            Err(e) => summary.violations.push(Violation {
                module: "evolution",
                what: format!("group evaluator: {e}"),
                value: f64::NAN,
                threshold: f64::NAN,
            }),
        }
    }

    if stages.matrices {
        artifacts.insert("b.csv", s.result.b.to_csv());
        artifacts.insert("x_star.csv", s.result.x_star.to_csv());
        artifacts.insert("u.csv", s.result.u.to_csv());
        artifacts.insert("v.csv", s.result.v.to_csv());
    }

    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    artifacts.insert("summary.json", text);
    Report { summary, artifacts }
}

fn evolution_stage(
    cfg: &RunConfig,
    s: &Solved,
    eval: &GroupEvaluator,
    format: Format,
    summary: &mut Summary,
    artifacts: &mut Artifacts,
) {
    let x = match initial_state(cfg, eval) {
        Ok(x) => x,
        Err(e) => {
            summary.violations.push(Violation { module: "cli", what: e.to_string(), value: f64::NAN, threshold: f64::NAN });
            return;
        }
    };
    let times = time_grid(cfg, s.derived.omega());
    let cut = cfg.evolution.cut.unwrap_or(eval.window / 2).clamp(eval.m + 1, eval.window);
    let mut trace = Table::new(vec!["t", "n", "slot", "re", "im"]);
    for (t, n, slot, z) in evolution_trace_rows(eval, &x, &times) {
        let [re, im] = c(z);
        trace.push(vec![num(t), json!(n), json!(slot), re, im]);
    }
    let mut bounds = Table::new(vec!["t", "cut", "actual", "bound"]);
    let (mut worst_actual, mut worst_bound) = (0.0f64, 0.0f64);
    for &t in &times {
        let (actual, bound) = eval.truncation_bound(&x, t, cut);
        worst_actual = worst_actual.max(actual);
        worst_bound = worst_bound.max(bound);
        if actual > bound + 1e-10 {
            summary.violations.push(Violation {
                module: "evolution",
                what: format!("truncation bound at t = {t}"),
                value: actual,
                threshold: bound + 1e-10,
            });
        }
        bounds.push(vec![num(t), json!(cut), num(actual), num(bound)]);
    }
    let ext = format.extension();
    artifacts.insert(format!("trace.{ext}"), trace.render(format));
    artifacts.insert(format!("truncation.{ext}"), bounds.render(format));
    summary.evolution = Some(EvolutionSummary {
        t_max: *times.last().unwrap(),
        steps: cfg.evolution.steps,
        cut,
        max_truncation_actual: worst_actual,
        max_truncation_bound: worst_bound,
        pushforward_residual: eval.pushforward_residual(),
    });
}

fn equiconvergence_stage(
    cfg: &RunConfig,
    eval: &GroupEvaluator,
    format: Format,
    summary: &mut Summary,
    artifacts: &mut Artifacts,
) {
    let scan = eval.equiconvergence_scan();
    let half = (eval.window / 2).max(eval.m + 1);
    let first = scan.values.first().copied().unwrap_or(0.0);
    let at_half = scan.ells.iter().position(|&l| l == half).map_or(0.0, |i| scan.values[i]);
    let tol = cfg.tolerances.resolution;
    for (what, value) in [("cross products of the projections", scan.max_cross_product), ("sum of the projections", scan.sum_defect)] {
        if value > tol {
            summary.violations.push(Violation { module: "evolution", what: what.into(), value, threshold: tol });
        }
    }
    let nonincreasing = scan.nonincreasing(scan.floor);
    if !nonincreasing {
        summary.violations.push(Violation {
            module: "evolution",
            what: "equiconvergence scan increases above its floor".into(),
            value: scan.values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max),
            threshold: scan.floor,
        });
    }
    let mut table = Table::new(vec!["ell", "hs_norm"]);
    for (l, v) in scan.ells.iter().zip(&scan.values) {
        table.push(vec![json!(l), num(*v)]);
    }
    artifacts.insert(format!("equiconv.{}", format.extension()), table.render(format));
    summary.equiconvergence = Some(EquiSummary {
        floor: scan.floor,
        central: scan.central_value,
        first,
        at_half_window: at_half,
        decrease: if at_half > 0.0 { first / at_half } else { f64::INFINITY },
        nonincreasing,
        max_cross_product: scan.max_cross_product,
        sum_defect: scan.sum_defect,
        z_condition: scan.z_condition,
    });
}

/// Coefficient tables of the derived potential, `|k| <= reach`.
pub fn derived_artifacts(derived: &DerivedPotential, window: usize, format: Format) -> Artifacts {
    let reach = derived.q_index_reach(window).min(derived.grid / 2 - 1) as i64;
    let mut table = Table::new(vec!["k", "q2_re", "q2_im", "q3_re", "q3_im", "w1_re", "w1_im", "w2_re", "w2_im"]);
    for k in -reach..=reach {
        let mut row = vec![json!(k)];
        for g in [&derived.q2, &derived.q3, &derived.w1, &derived.w2] {
            row.extend(c(g.get(k)));
        }
        table.push(row);
    }
    let scalars = json!({
        "bc": derived.bc().name(),
        "omega": derived.omega(),
        "grid": derived.grid,
        "nu": derived.nu,
        "theta": derived.theta,
        "beta": derived.beta,
        "r": derived.r,
        "branch": derived.branch,
        "delta_p": derived.delta_p,
        "truncation_floor": derived.truncation_floor(window),
    });
    let mut artifacts = Artifacts::default();
    let mut text = serde_json::to_string_pretty(&scalars).expect("scalars serialize");
    text.push('\n');
    artifacts.insert("derived.json", text);
    artifacts.insert(format!("coefficients.{}", format.extension()), table.render(format));
    artifacts
}

/// Per-component interior drift between two windows.
#[derive(Clone, Debug, Serialize)]
pub struct Stability {
    pub small: usize,
    pub large: usize,
    /// `(n, drift)` for `|n| <= small / 2`.
    pub rows: Vec<(i64, f64)>,
    pub max_interior_drift: f64,
}

/// The method's eigenvalues (central block and tail blocks) of a solved
/// window, each tagged with the component of its nearest free point.
pub fn tagged_eigenvalues(s: &Solved) -> Vec<(i64, C64)> {
    let mut eigs = spectrum::central_eigenvalues(&s.problem.a0, &s.result);
    eigs.extend(spectrum::tail_eigenvalues(&s.problem.a0, &s.result).into_iter().flat_map(|(_, e, _)| e));
    let ladder = &s.problem.ladder;
    eigs.into_iter()
        .map(|z| {
            let pos = (0..ladder.points.len())
                .min_by(|&a, &b| (ladder.points[a] - z).norm().total_cmp(&(ladder.points[b] - z).norm()))
                .unwrap();
            (ladder.indices[pos / ladder.block], z)
        })
        .collect()
}

/// Matches the interior eigenvalues of the smaller window against all of
/// the larger window's by minimum-cost assignment.
pub fn compare_solved(small: &Solved, large: &Solved) -> Stability {
    let interior = (small.problem.window / 2) as i64;
    let rows_in: Vec<(i64, C64)> = tagged_eigenvalues(small).into_iter().filter(|(n, _)| n.abs() <= interior).collect();
    let cols: Vec<C64> = tagged_eigenvalues(large).into_iter().map(|(_, z)| z).collect();
    let cost: Vec<Vec<f64>> = rows_in.iter().map(|(_, z)| cols.iter().map(|w| (z - w).norm()).collect()).collect();
    let assignment = linalg::min_cost_assignment(&cost);
    let mut per_n: BTreeMap<i64, f64> = BTreeMap::new();
    for (i, &j) in assignment.iter().enumerate() {
        let e = per_n.entry(rows_in[i].0).or_insert(0.0);
        *e = e.max(cost[i][j]);
    }
    let max_interior_drift = per_n.values().copied().fold(0.0, f64::max);
    Stability {
        small: small.problem.window,
        large: large.problem.window,
        rows: per_n.into_iter().collect(),
        max_interior_drift,
    }
}

pub fn compare_windows(cfg: &RunConfig, small: usize, large: usize) -> Result<Stability> {
    assert!(small < large, "compare_windows needs small < large");
    let derived = derive_from(cfg)?;
    let (a, b) = rayon::join(|| solve(&derived, small, cfg), || solve(&derived, large, cfg));
    Ok(compare_solved(&a?, &b?))
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub summaries: Vec<Summary>,
    pub stability: Vec<Stability>,
    pub artifacts: Artifacts,
}

/// Runs every configured window in parallel (results kept in window
/// order) and compares consecutive windows.
pub fn sweep(cfg: &RunConfig, format: Format) -> Result<SweepReport> {
    let derived = derive_from(cfg)?;
    let mut windows = cfg.sweep.windows.clone();
    windows.sort_unstable();
    windows.dedup();
    if windows.is_empty() {
        return Err(Error::Config("sweep.windows is empty".into()));
    }
    let solved: Vec<Solved> = windows.par_iter().map(|&n| solve(&derived, n, cfg)).collect::<Result<_>>()?;
    let stages = Stages { spectrum: true, ..Stages::NONE };
    let summaries: Vec<Summary> =
        solved.par_iter().map(|s| report_for(cfg, s, stages, format).summary).collect();
    let stability: Vec<Stability> = solved.windows(2).map(|w| compare_solved(&w[0], &w[1])).collect();

    let mut runs = Table::new(vec![
        "window", "k", "m", "delta_p", "b_norm", "b_star_norm", "contraction_ratio", "similarity_residual",
        "decomposition_error", "max_drift_from_previous",
    ]);
    for (i, s) in summaries.iter().enumerate() {
        let drift = if i == 0 { Value::Null } else { num(stability[i - 1].max_interior_drift) };
        runs.push(vec![
            json!(s.window),
            json!(s.k),
            json!(s.m),
            num(s.delta_p),
            num(s.b_norm),
            num(s.b_star_norm),
            num(s.contraction_ratio),
            num(s.similarity_residual),
            s.spectrum.as_ref().map_or(Value::Null, |p| num(p.decomposition_error)),
            drift,
        ]);
    }
    let mut drift = Table::new(vec!["small", "large", "n", "drift"]);
    for st in &stability {
        for (n, d) in &st.rows {
            drift.push(vec![json!(st.small), json!(st.large), json!(n), num(*d)]);
        }
    }
    let mut artifacts = Artifacts::default();
    let ext = format.extension();
    artifacts.insert(format!("sweep.{ext}"), runs.render(format));
    artifacts.insert(format!("drift.{ext}"), drift.render(format));
    Ok(SweepReport { summaries, stability, artifacts })
}
