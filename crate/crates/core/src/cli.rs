//! Command implementations behind the `causebound` binary.
//!
//! Exit-code contract: 0 success, 2 parse/usage error, 3 graph/data
//! mismatch, 4 infeasible distribution, 5 solver failure. `decide` encodes
//! its verdict instead: 10 return, 11 observe, 12 collect.

use crate::bounds::{lp_bounds, tian_pearl_bow, BoundsError, Query};
use crate::confset::ConfsetError;
use crate::decompose::{explore, DecomposeError, ExploreConfig, Report, SolverPath};
use crate::dist::{Dataset, DiscreteJoint, DistError};
use crate::graph::Admg;
use crate::harness::{brute_force_bounds, run_experiment, ExperimentSpec, HarnessError};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("graph/data mismatch: {0}")]
    Mismatch(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Mismatch(_) => 3,
            CliError::Infeasible(_) => 4,
            CliError::Solver(_) => 5,
            CliError::Io(_) => 2,
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            BoundsError::Capability(_) => CliError::Parse(e.to_string()),
            BoundsError::Positivity(_) => CliError::Infeasible(e.to_string()),
            BoundsError::Lp(_) | BoundsError::OptimizationFailed { .. } => {
                CliError::Solver(e.to_string())
            }
            BoundsError::Dist(ref d) => dist_to_cli(d, &e),
            BoundsError::Graph(_) => CliError::Mismatch(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

fn dist_to_cli(d: &DistError, outer: &dyn std::fmt::Display) -> CliError {
    match d {
        DistError::UnknownVariable(_)
        | DistError::ShapeMismatch
        | DistError::OrderMismatch
        | DistError::ValueOutOfRange { .. } => CliError::Mismatch(outer.to_string()),
        _ => CliError::Parse(outer.to_string()),
    }
}

impl From<DecomposeError> for CliError {
    fn from(e: DecomposeError) -> Self {
        match e {
            DecomposeError::NoSurvivors => CliError::Infeasible(e.to_string()),
            DecomposeError::Bounds(b) => b.into(),
            DecomposeError::Confset(ConfsetError::VariableMismatch(_)) => {
                CliError::Mismatch(e.to_string())
            }
            DecomposeError::Confset(_) => CliError::Parse(e.to_string()),
            DecomposeError::Dist(ref d) => dist_to_cli(d, &e),
            DecomposeError::Graph(_) => CliError::Mismatch(e.to_string()),
            DecomposeError::Internal(_) => CliError::Solver(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Bounds(b) => b.into(),
            HarnessError::Decompose(d) => d.into(),
            HarnessError::Io(m) => CliError::Io(m),
            HarnessError::BadSpec(m) => CliError::Parse(m),
            HarnessError::Lp(l) => CliError::Solver(l.to_string()),
            other => CliError::Parse(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Text,
    Json,
}

/// File-backed run configuration; command-line flags override every field.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct RunConfig {
    pub alpha: Option<f64>,
    pub eps_s: Option<f64>,
    pub net_samples: Option<usize>,
    pub seed: Option<u64>,
    pub solver: Option<SolverPath>,
    pub treatment: Option<String>,
    pub outcome: Option<String>,
    pub treatment_value: Option<usize>,
    pub outcome_value: Option<usize>,
    /// "single" (default) or "ate".
    pub mode: Option<String>,
    /// Number for a fixed threshold, or the string "empirical".
    pub gamma: Option<GammaValue>,
    pub trainer_step: Option<f64>,
    pub trainer_dual_lr: Option<f64>,
    pub trainer_weight: Option<f64>,
    pub trainer_epochs: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GammaValue {
    Fixed(f64),
    Word(String),
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))?;
        if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))
        } else {
            serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))
        }
    }
}

/// Fully resolved arguments for the bound/decompose/decide commands.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub graph: Admg,
    pub data: Option<Dataset>,
    pub joint: Option<DiscreteJoint>,
    pub query: Query,
    pub config: ExploreConfig,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    /// Reproducibility dump of the surviving candidate net.
    pub dump_net: Option<PathBuf>,
}

pub fn load_graph(path: &Path) -> Result<Admg, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))?;
    Admg::from_json(&text).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn load_dataset(path: &Path, g: &Admg) -> Result<Dataset, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))?;
    let d = Dataset::from_csv(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    // Align inferred cardinalities with the graph's declarations.
    let mut vars = Vec::new();
    for v in d.variables() {
        match g.index_of(&v.name) {
            Ok(i) => {
                if v.cardinality > g.cardinality(i) {
                    return Err(CliError::Mismatch(format!(
                        "column `{}` holds codes beyond cardinality {}",
                        v.name,
                        g.cardinality(i)
                    )));
                }
                vars.push(crate::graph::Node {
                    name: v.name.clone(),
                    cardinality: g.cardinality(i),
                });
            }
            Err(_) => return Err(CliError::Mismatch(format!("column `{}` not in graph", v.name))),
        }
    }
    Dataset::new(vars, d.rows().to_vec()).map_err(|e| CliError::Mismatch(e.to_string()))
}

pub fn load_joint(path: &Path) -> Result<DiscreteJoint, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))?;
    DiscreteJoint::from_json(&text).map_err(|e| CliError::Parse(e.to_string()))
}

// ── bounds ───────────────────────────────────────────────────────────────────

#[derive(Debug, Serialize)]
pub struct BoundsOutput {
    pub query: String,
    pub bounds: Vec<BoundLine>,
}

#[derive(Debug, Serialize)]
pub struct BoundLine {
    pub method: String,
    pub lower: f64,
    pub upper: f64,
}

/// Single-distribution bounds on the empirical joint (no ε-net): the exact
/// LP plus the closed form when the graph is the two-variable bow.
pub fn cmd_bounds(run: &ResolvedRun) -> Result<BoundsOutput, CliError> {
    let joint = resolve_joint(run)?;
    let mut bounds = Vec::new();
    let lp = lp_bounds(&joint, &run.graph, &run.query)?;
    if run.graph.node_count() == 2 {
        if let Query::Do { t_value, y_value, .. } = &run.query {
            let names: Vec<&str> =
                run.graph.nodes().iter().map(|n| n.name.as_str()).collect();
            let two = joint.reorder(&names).map_err(|e| CliError::Mismatch(e.to_string()))?;
            let cf = tian_pearl_bow(&two, *t_value, *y_value)?;
            bounds.push(BoundLine {
                method: "closed_form".into(),
                lower: cf.lower,
                upper: cf.upper,
            });
        }
    }
    bounds.push(BoundLine { method: "lp".into(), lower: lp.lower, upper: lp.upper });
    Ok(BoundsOutput { query: run.query.descriptor(), bounds })
}

fn resolve_joint(run: &ResolvedRun) -> Result<DiscreteJoint, CliError> {
    match (&run.joint, &run.data) {
        (Some(j), _) => Ok(j.clone()),
        (None, Some(d)) => d.empirical_joint().map_err(|e| CliError::Parse(e.to_string())),
        (None, None) => Err(CliError::Parse("need --data or --joint".into())),
    }
}

pub fn render_bounds_text(out: &BoundsOutput) -> String {
    let mut s = format!("{}\n", out.query);
    for b in &out.bounds {
        s.push_str(&format!("  {:<12} [{:.6}, {:.6}]\n", b.method, b.lower, b.upper));
    }
    s
}

// ── decompose / decide ───────────────────────────────────────────────────────

pub fn cmd_decompose(run: &ResolvedRun) -> Result<Report, CliError> {
    let Some(data) = &run.data else {
        return Err(CliError::Parse("decompose needs --data".into()));
    };
    let outcome = explore(data, &run.graph, &run.query, &run.config)?;
    if let Some(plot) = &run.plot {
        let svg = render_svg(&outcome.report);
        std::fs::write(plot, svg).map_err(|e| CliError::Io(e.to_string()))?;
    }
    if let Some(path) = &run.dump_net {
        std::fs::write(path, outcome.net.to_json()).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(outcome.report)
}

pub fn cmd_decide(run: &ResolvedRun) -> Result<Report, CliError> {
    cmd_decompose(run)
}

pub fn render_report_text(report: &Report) -> String {
    let mut s = format!("query: {}\n", report.query);
    s.push_str(&format!(
        "net: {} candidates ({} rejected by compatibility screens)\n",
        report.net_size - report.net_rejected,
        report.net_rejected
    ));
    s.push_str(&format!(
        "{:<22} {:>9} {:>9} {:>9} {:>9}  {:<19} {}\n",
        "action", "L_lo", "L_hi", "U_lo", "U_hi", "inner", "outer"
    ));
    for a in &report.actions {
        let inner = match a.inner {
            Some([lo, hi]) => format!("[{:.4}, {:.4}]", lo, hi),
            None => "(empty)".into(),
        };
        let outer = a
            .outer
            .iter()
            .map(|[lo, hi]| format!("[{:.4}, {:.4}]", lo, hi))
            .collect::<Vec<_>>()
            .join(" U ");
        s.push_str(&format!(
            "{:<22} {:>9.4} {:>9.4} {:>9.4} {:>9.4}  {:<19} {}\n",
            a.name, a.l_lo, a.l_hi, a.u_lo, a.u_hi, inner, outer
        ));
    }
    if let Some(gm) = &report.gamma {
        s.push_str(&format!(
            "gamma: {:.4} in [{:.4}, {:.4}] ({})\n",
            gm.value, gm.lower, gm.upper, gm.source
        ));
    }
    let kind = match &report.decision.kind {
        crate::decompose::MoveKind::Return { conclusion } => format!("return ({})", conclusion),
        crate::decompose::MoveKind::Observe => "observe".into(),
        crate::decompose::MoveKind::Collect => "collect".into(),
    };
    s.push_str(&format!("decision: {} [{}]\n", kind, report.decision.rationale));
    s
}

// ── simulate / oracle ────────────────────────────────────────────────────────

#[derive(Debug, Serialize)]
pub struct SimulateOutput {
    pub runs: usize,
    pub summary_csv: String,
}

pub fn cmd_simulate(spec_path: &Path, base: &Path) -> Result<SimulateOutput, CliError> {
    let spec = ExperimentSpec::from_file(spec_path)?;
    let bundle = run_experiment(&spec, base)?;
    Ok(SimulateOutput { runs: bundle.records.len(), summary_csv: bundle.summary_csv })
}

#[derive(Debug, Serialize)]
pub struct OracleOutput {
    pub query: String,
    pub lp: BoundLine,
    pub oracle: BoundLine,
    pub max_gap: f64,
    pub agree: bool,
}

/// Cross-checks the exact LP against the brute-force oracle on one joint.
pub fn cmd_oracle(
    graph: &Admg,
    joint: &DiscreteJoint,
    query: &Query,
    budget: usize,
    tolerance: f64,
) -> Result<OracleOutput, CliError> {
    let lp = lp_bounds(joint, graph, query)?;
    let oracle = brute_force_bounds(joint, graph, query, budget)?;
    let max_gap = (lp.lower - oracle.lower).abs().max((lp.upper - oracle.upper).abs());
    Ok(OracleOutput {
        query: query.descriptor(),
        lp: BoundLine { method: "lp".into(), lower: lp.lower, upper: lp.upper },
        oracle: BoundLine {
            method: if budget == 0 { "vertex_enumeration".into() } else { "feasible_walk".into() },
            lower: oracle.lower,
            upper: oracle.upper,
        },
        max_gap,
        agree: max_gap <= tolerance,
    })
}

// ── SVG rendering ────────────────────────────────────────────────────────────

/// Hand-emitted interval plot: one group per action on a fixed 800-wide
/// canvas, outer band hatched, inner region solid, threshold as a vertical
/// marker, the four quantities ticked and labelled.
pub fn render_svg(report: &Report) -> String {
    let width = 800.0;
    let row_h = 60.0;
    let margin = 40.0;
    let height = row_h * report.actions.len() as f64 + 2.0 * margin;
    let is_ate = report.query.starts_with("ATE");
    let (lo_lim, hi_lim) = if is_ate { (-1.0, 1.0) } else { (0.0, 1.0) };
    let scale = |v: f64| margin + (v - lo_lim) / (hi_lim - lo_lim) * (width - 2.0 * margin);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        width, height, width, height
    ));
    s.push_str(
        "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" \
         patternTransform=\"rotate(45)\"><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" \
         stroke=\"#7a7a7a\" stroke-width=\"2\"/></pattern></defs>\n",
    );
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"14\" font-family=\"monospace\">{}</text>\n",
        margin,
        margin / 2.0,
        xml_escape(&report.query)
    ));
    for (i, a) in report.actions.iter().enumerate() {
        let y = margin + row_h * i as f64 + row_h / 2.0;
        s.push_str(&format!("<g id=\"action-{}\">\n", i));
        s.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#cccccc\"/>\n",
            scale(lo_lim),
            y,
            scale(hi_lim),
            y
        ));
        for [lo, hi] in &a.outer {
            s.push_str(&format!(
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"14\" fill=\"url(#hatch)\"/>\n",
                scale(*lo),
                y - 7.0,
                (scale(*hi) - scale(*lo)).max(0.5),
            ));
        }
        if let Some([lo, hi]) = a.inner {
            s.push_str(&format!(
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"14\" fill=\"#3b6fb6\"/>\n",
                scale(lo),
                y - 7.0,
                (scale(hi) - scale(lo)).max(0.5),
            ));
        }
        for (label, v) in
            [("L_lo", a.l_lo), ("L_hi", a.l_hi), ("U_lo", a.u_lo), ("U_hi", a.u_hi)]
        {
            s.push_str(&format!(
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#222222\"/>\n",
                y - 10.0,
                y + 10.0,
                x = scale(v),
            ));
            s.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"8\" font-family=\"monospace\" \
                 text-anchor=\"middle\">{}</text>\n",
                scale(v),
                y + 22.0,
                label
            ));
        }
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" font-family=\"monospace\">{}</text>\n",
            margin,
            y - 14.0,
            xml_escape(&a.name)
        ));
        s.push_str("</g>\n");
    }
    let gamma_v = match &report.gamma {
        Some(gm) => Some(gm.value),
        None if is_ate => Some(0.0),
        None => None,
    };
    if let Some(v) = gamma_v {
        s.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#b63b3b\" \
             stroke-dasharray=\"4 3\"/>\n",
            margin,
            height - margin / 2.0,
            x = scale(v),
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
