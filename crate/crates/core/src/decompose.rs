//! Aggregation of per-candidate bounds into the inner region (what no amount
//! of additional data can shrink), the outer band (what more data does
//! shrink), and the Return / Observe / Collect decision.

use crate::bounds::{
    gradient_bounds, lp_bounds, BoundMethod, BoundPair, BoundsError, Query, RelaxedTrainConfig,
    TrainDirection,
};
use crate::confset::{
    build_epsilon_net, confidence_box, hoeffding_halfwidth, reject_incompatible, ConfsetError,
    EpsilonNet,
};
use crate::dist::{Dataset, DistError};
use crate::graph::{Admg, GraphError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("no candidate results to aggregate")]
    EmptyInput,
    #[error("results mix different queries: `{0}` vs `{1}`")]
    MixedQueries(String, String),
    #[error("gamma must lie in [0,1] (got {0})")]
    BadGamma(f64),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("every candidate was rejected or infeasible")]
    NoSurvivors,
    #[error(transparent)]
    Confset(#[from] ConfsetError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// The four aggregate quantities plus the derived regions for one action.
#[derive(Debug, Clone, Serialize)]
pub struct UncertaintyDecomposition {
    pub query: String,
    /// Minimum of candidate lower bounds.
    pub l_lo: f64,
    /// Maximum of candidate lower bounds.
    pub l_hi: f64,
    /// Minimum of candidate upper bounds.
    pub u_lo: f64,
    /// Maximum of candidate upper bounds.
    pub u_hi: f64,
    /// `[l_hi, u_lo]` when nonempty: the region every candidate supports.
    pub inner: Option<(f64, f64)>,
    /// `[l_lo, l_hi]` and `[u_lo, u_hi]`: shrinks as samples accumulate.
    pub outer: Vec<(f64, f64)>,
    pub candidate_count: usize,
}

impl UncertaintyDecomposition {
    pub fn inner_width(&self) -> f64 {
        self.inner.map_or(0.0, |(a, b)| b - a)
    }

    /// Width of the union of candidate intervals.
    pub fn union_width(&self) -> f64 {
        self.u_hi - self.l_lo
    }

    pub fn outer_width(&self) -> f64 {
        self.outer.iter().map(|(a, b)| b - a).sum()
    }
}

/// Aggregates per-candidate bound pairs for a single query.
pub fn four_quantities(
    results: &[(usize, BoundPair)],
) -> Result<UncertaintyDecomposition, DecomposeError> {
    let Some((_, first)) = results.first() else {
        return Err(DecomposeError::EmptyInput);
    };
    for (_, pair) in results {
        if pair.query != first.query {
            return Err(DecomposeError::MixedQueries(first.query.clone(), pair.query.clone()));
        }
    }
    let mut l_lo = f64::INFINITY;
    let mut l_hi = f64::NEG_INFINITY;
    let mut u_lo = f64::INFINITY;
    let mut u_hi = f64::NEG_INFINITY;
    for (_, pair) in results {
        l_lo = l_lo.min(pair.lower);
        l_hi = l_hi.max(pair.lower);
        u_lo = u_lo.min(pair.upper);
        u_hi = u_hi.max(pair.upper);
    }
    let inner = if l_hi <= u_lo { Some((l_hi, u_lo)) } else { None };
    let outer = vec![(l_lo, l_hi), (u_lo, u_hi)];
    let dec = UncertaintyDecomposition {
        query: first.query.clone(),
        l_lo,
        l_hi,
        u_lo,
        u_hi,
        inner,
        outer,
        candidate_count: results.len(),
    };
    verify_identities(&dec, results)?;
    Ok(dec)
}

/// Checks the aggregation against independently recomputed set identities:
/// the inner region is the exact interval intersection of the candidate
/// intervals, and the outer band is their union minus that intersection.
fn verify_identities(
    dec: &UncertaintyDecomposition,
    results: &[(usize, BoundPair)],
) -> Result<(), DecomposeError> {
    let mut isect: Option<(f64, f64)> = None;
    let mut union: Option<(f64, f64)> = None;
    for (_, pair) in results {
        isect = match isect {
            None => Some((pair.lower, pair.upper)),
            Some((a, b)) => {
                let (lo, hi) = (a.max(pair.lower), b.min(pair.upper));
                if lo <= hi {
                    Some((lo, hi))
                } else {
                    // Track the crossing so the emptiness check stays exact.
                    Some((lo, f64::NEG_INFINITY.max(hi)))
                }
            }
        };
        union = match union {
            None => Some((pair.lower, pair.upper)),
            Some((a, b)) => Some((a.min(pair.lower), b.max(pair.upper))),
        };
    }
    let (ilo, ihi) = isect.expect("nonempty results");
    let (ulo, uhi) = union.expect("nonempty results");
    let tol = 1e-12;
    match dec.inner {
        Some((a, b)) => {
            if (a - ilo).abs() > tol || (b - ihi).abs() > tol || ilo > ihi + tol {
                return Err(DecomposeError::Internal(format!(
                    "inner region ({a}, {b}) is not the candidate intersection ({ilo}, {ihi})"
                )));
            }
            // The intersection sits inside every candidate interval.
            for (id, pair) in results {
                if a < pair.lower - tol || b > pair.upper + tol {
                    return Err(DecomposeError::Internal(format!(
                        "inner region escapes candidate {id}"
                    )));
                }
            }
        }
        None => {
            if ilo <= ihi {
                return Err(DecomposeError::Internal(
                    "inner reported empty but the intersection is nonempty".into(),
                ));
            }
        }
    }
    if (dec.l_lo - ulo).abs() > tol || (dec.u_hi - uhi).abs() > tol {
        return Err(DecomposeError::Internal("outer band does not span the union".into()));
    }
    Ok(())
}

/// Terminal recommendation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MoveKind {
    /// Conclusive: the threshold lies outside every compatible effect.
    Return { conclusion: String },
    /// More samples cannot help; new variables might.
    Observe,
    /// More samples can still move the verdict.
    Collect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Move {
    #[serde(flatten)]
    pub kind: MoveKind,
    /// Which inequality fired.
    pub rationale: String,
}

impl Move {
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            MoveKind::Return { .. } => 10,
            MoveKind::Observe => 11,
            MoveKind::Collect => 12,
        }
    }
}

/// Single-action decision against a scalar threshold.
///
/// Return when `gamma < l_lo` or `gamma > u_hi`; Observe when
/// `l_hi < gamma < u_lo` (no amount of data moves the inner region);
/// Collect otherwise.
pub fn decide_single(
    dec: &UncertaintyDecomposition,
    gamma: f64,
) -> Result<Move, DecomposeError> {
    decide_single_interval(dec, gamma, gamma)
}

/// Conservative variant for a threshold known only up to an interval: both
/// endpoints must fire the same inequality.
pub fn decide_single_interval(
    dec: &UncertaintyDecomposition,
    gamma_lo: f64,
    gamma_hi: f64,
) -> Result<Move, DecomposeError> {
    for g in [gamma_lo, gamma_hi] {
        if !(0.0..=1.0).contains(&g) {
            return Err(DecomposeError::BadGamma(g));
        }
    }
    if gamma_hi < dec.l_lo {
        return Ok(Move {
            kind: MoveKind::Return {
                conclusion: "effect exceeds the threshold for every compatible model".into(),
            },
            rationale: "gamma < L_lo".into(),
        });
    }
    if gamma_lo > dec.u_hi {
        return Ok(Move {
            kind: MoveKind::Return {
                conclusion: "effect falls below the threshold for every compatible model".into(),
            },
            rationale: "gamma > U_hi".into(),
        });
    }
    if dec.l_hi < gamma_lo && gamma_hi < dec.u_lo {
        return Ok(Move { kind: MoveKind::Observe, rationale: "L_hi < gamma < U_lo".into() });
    }
    Ok(Move { kind: MoveKind::Collect, rationale: "gamma inside the outer band".into() })
}

/// Multi-action decision on an ATE decomposition (threshold fixed at zero).
pub fn decide_multi(dec: &UncertaintyDecomposition) -> Result<Move, DecomposeError> {
    if dec.l_lo > 0.0 {
        return Ok(Move {
            kind: MoveKind::Return { conclusion: "action is best for every compatible model".into() },
            rationale: "L_lo > 0".into(),
        });
    }
    if dec.u_hi < 0.0 {
        return Ok(Move {
            kind: MoveKind::Return {
                conclusion: "action cannot be best under any compatible model".into(),
            },
            rationale: "U_hi < 0".into(),
        });
    }
    if dec.l_hi < 0.0 && 0.0 < dec.u_lo {
        return Ok(Move { kind: MoveKind::Observe, rationale: "L_hi < 0 < U_lo".into() });
    }
    Ok(Move { kind: MoveKind::Collect, rationale: "zero inside the outer band".into() })
}

// ── Full pipeline ────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    Lp,
    Gradient,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source", content = "value")]
pub enum GammaSpec {
    /// Empirical `P(outcome = y)` widened by its own Hoeffding interval.
    Empirical,
    Fixed(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExploreConfig {
    pub alpha: f64,
    pub eps_s: f64,
    /// Candidate draws from the centroid lattice.
    pub net_samples: usize,
    pub seed: u64,
    pub solver: SolverPath,
    /// Threshold for single-action mode; ignored for ATE queries.
    pub gamma: GammaSpec,
    /// Trainer slack and steps for the gradient path.
    pub trainer_step: f64,
    pub trainer_dual_lr: f64,
    pub trainer_weight: f64,
    pub trainer_epochs: usize,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            alpha: 0.05,
            eps_s: 0.01,
            net_samples: 200,
            seed: 0,
            solver: SolverPath::Lp,
            gamma: GammaSpec::Empirical,
            trainer_step: 0.05,
            trainer_dual_lr: 0.1,
            trainer_weight: 1.0,
            trainer_epochs: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaReport {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub source: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ActionReport {
    pub name: String,
    #[serde(rename = "U_hi")]
    pub u_hi: f64,
    #[serde(rename = "U_lo")]
    pub u_lo: f64,
    #[serde(rename = "L_hi")]
    pub l_hi: f64,
    #[serde(rename = "L_lo")]
    pub l_lo: f64,
    pub inner: Option<[f64; 2]>,
    pub outer: Vec<[f64; 2]>,
    pub method: BoundMethod,
    /// Candidates that produced a bound.
    pub candidates: usize,
    /// Candidates dropped as infeasible for this action.
    pub skipped: usize,
    /// Largest |gradient - lp| endpoint gap when both paths ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gradient_gap: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub query: String,
    pub actions: Vec<ActionReport>,
    pub gamma: Option<GammaReport>,
    pub decision: Move,
    pub config_echo: ExploreConfig,
    pub seed: u64,
    /// Candidates rejected by the instrumental-inequality screen.
    pub net_rejected: usize,
    /// Distinct candidates the net produced.
    pub net_size: usize,
}

/// Outcome of the full pipeline: one decomposition per action plus the move.
pub struct ExploreOutcome {
    pub decompositions: Vec<UncertaintyDecomposition>,
    pub decision: Move,
    pub report: Report,
    /// Surviving candidate net, kept for reproducibility dumps.
    pub net: EpsilonNet,
}

/// Runs the whole pipeline: confidence box, ε-net, per-candidate bounds
/// (in parallel, aggregated in candidate order), four quantities, decision.
pub fn explore(
    d: &Dataset,
    g: &Admg,
    query: &Query,
    config: &ExploreConfig,
) -> Result<ExploreOutcome, DecomposeError> {
    let cbox = confidence_box(d, g, config.alpha)?;
    let mut net = build_epsilon_net(&cbox, config.eps_s, config.net_samples, config.seed)?;
    net = screen_with_instruments(net, g, query)?;
    if net.candidates.is_empty() {
        return Err(DecomposeError::NoSurvivors);
    }
    let net_size = net.candidates.len() + net.rejected_count;

    let actions = action_queries(g, query)?;
    let mut decompositions = Vec::with_capacity(actions.len());
    let mut action_reports = Vec::with_capacity(actions.len());
    for (name, action_query) in &actions {
        let solved: Vec<(usize, Result<BoundPair, BoundsError>)> = net
            .candidates
            .par_iter()
            .enumerate()
            .map(|(id, cand)| (id, solve_candidate(cand, g, action_query, config, id as u64)))
            .collect();
        let mut pairs: Vec<(usize, BoundPair)> = Vec::new();
        let mut skipped = 0usize;
        let mut gradient_gap: Option<f64> = None;
        for (id, res) in solved {
            match res {
                Ok(pair) => pairs.push((id, pair)),
                // LP infeasibility and trainer non-convergence both mean the
                // candidate is incompatible with the graph's model class
                // (the net draws coordinates independently, so it can emit
                // joints no parameterization reproduces): drop and count.
                Err(BoundsError::Infeasible { .. })
                | Err(BoundsError::OptimizationFailed { .. }) => skipped += 1,
                Err(e) => return Err(e.into()),
            }
        }
        if config.solver == SolverPath::Both {
            gradient_gap = Some(both_paths_gap(&net, g, action_query, config)?);
        }
        if pairs.is_empty() {
            return Err(DecomposeError::NoSurvivors);
        }
        let dec = four_quantities(&pairs)?;
        action_reports.push(ActionReport {
            name: name.clone(),
            u_hi: dec.u_hi,
            u_lo: dec.u_lo,
            l_hi: dec.l_hi,
            l_lo: dec.l_lo,
            inner: dec.inner.map(|(a, b)| [a, b]),
            outer: dec.outer.iter().map(|&(a, b)| [a, b]).collect(),
            method: match config.solver {
                SolverPath::Gradient => BoundMethod::Gradient,
                _ => BoundMethod::Lp,
            },
            candidates: pairs.len(),
            skipped,
            gradient_gap,
        });
        decompositions.push(dec);
    }

    let (gamma_report, decision) = decide(d, g, query, config, &decompositions)?;
    let report = Report {
        query: query.descriptor(),
        actions: action_reports,
        gamma: gamma_report,
        decision: decision.clone(),
        config_echo: config.clone(),
        seed: config.seed,
        net_rejected: net.rejected_count,
        net_size,
    };
    Ok(ExploreOutcome { decompositions, decision, report, net })
}

/// Applies the instrumental-inequality screen for every structural
/// instrument the graph declares for this treatment/outcome pair.
fn screen_with_instruments(
    mut net: EpsilonNet,
    g: &Admg,
    query: &Query,
) -> Result<EpsilonNet, DecomposeError> {
    let treatment = query.treatment().to_string();
    let outcome = query.outcome().to_string();
    for node in g.nodes().to_vec() {
        if node.name == treatment || node.name == outcome {
            continue;
        }
        if g.is_structural_instrument(&node.name, &treatment, &outcome)? {
            net = reject_incompatible(&net, g, &node.name, &treatment, &outcome)?;
        }
    }
    Ok(net)
}

/// Per-action query list: every treatment value for do-queries, the single
/// signed contrast (plus its mirror) for binary ATE.
fn action_queries(g: &Admg, query: &Query) -> Result<Vec<(String, Query)>, DecomposeError> {
    match query {
        Query::Do { treatment, outcome, y_value, .. } => {
            let tx = g.index_of(treatment)?;
            Ok((0..g.cardinality(tx))
                .map(|v| {
                    (
                        format!("do({}={})", treatment, v),
                        Query::Do {
                            treatment: treatment.clone(),
                            t_value: v,
                            outcome: outcome.clone(),
                            y_value: *y_value,
                        },
                    )
                })
                .collect())
        }
        Query::Ate { treatment, .. } => {
            Ok(vec![(format!("do({}=1) vs do({}=0)", treatment, treatment), query.clone())])
        }
    }
}

fn solve_candidate(
    cand: &crate::dist::DiscreteJoint,
    g: &Admg,
    query: &Query,
    config: &ExploreConfig,
    candidate_id: u64,
) -> Result<BoundPair, BoundsError> {
    match config.solver {
        SolverPath::Lp | SolverPath::Both => lp_bounds(cand, g, query),
        SolverPath::Gradient => {
            let base = trainer_config(config, candidate_id, TrainDirection::Max);
            gradient_bounds(cand, g, query, &base)
        }
    }
}

fn trainer_config(
    config: &ExploreConfig,
    candidate_id: u64,
    direction: TrainDirection,
) -> RelaxedTrainConfig {
    RelaxedTrainConfig {
        eps_s: config.eps_s,
        ate_weight: config.trainer_weight,
        dual_lr: config.trainer_dual_lr,
        step: config.trainer_step,
        max_epoch: config.trainer_epochs,
        seed: config.seed ^ candidate_id.wrapping_mul(0x9e37_79b9_7f4a_7c15),
        direction,
        dual_init: 0.0,
    }
}

/// Cross-check for the `both` path: the largest endpoint gap between the
/// gradient trainer and the exact LP over the surviving candidates.
fn both_paths_gap(
    net: &EpsilonNet,
    g: &Admg,
    query: &Query,
    config: &ExploreConfig,
) -> Result<f64, DecomposeError> {
    let gaps: Vec<Result<f64, BoundsError>> = net
        .candidates
        .par_iter()
        .enumerate()
        .map(|(id, cand)| {
            let lp = match lp_bounds(cand, g, query) {
                Ok(pair) => pair,
                Err(BoundsError::Infeasible { .. }) => return Ok(0.0),
                Err(e) => return Err(e),
            };
            let base = trainer_config(config, id as u64, TrainDirection::Max);
            let grad = match gradient_bounds(cand, g, query, &base) {
                Ok(pair) => pair,
                Err(BoundsError::OptimizationFailed { .. }) => return Ok(0.0),
                Err(e) => return Err(e),
            };
            Ok((grad.upper - lp.upper).abs().max((grad.lower - lp.lower).abs()))
        })
        .collect();
    let mut worst = 0.0f64;
    for gap in gaps {
        worst = worst.max(gap?);
    }
    Ok(worst)
}

fn decide(
    d: &Dataset,
    g: &Admg,
    query: &Query,
    config: &ExploreConfig,
    decompositions: &[UncertaintyDecomposition],
) -> Result<(Option<GammaReport>, Move), DecomposeError> {
    match query {
        Query::Ate { .. } => {
            let dec = &decompositions[0];
            Ok((None, decide_multi(dec)?))
        }
        Query::Do { treatment, t_value, outcome, y_value } => {
            let (value, lo, hi, source) = match config.gamma {
                GammaSpec::Fixed(v) => (v, v, v, "fixed".to_string()),
                GammaSpec::Empirical => {
                    let emp = d.empirical_joint()?;
                    let v = emp.prob_of(&[(outcome.as_str(), *y_value)])?;
                    // The threshold is itself estimated; widen it by its own
                    // Hoeffding interval and require both endpoints to agree.
                    let eps = hoeffding_halfwidth(d.len(), config.alpha)?;
                    (v, (v - eps).max(0.0), (v + eps).min(1.0), "empirical".to_string())
                }
            };
            let tx = g.index_of(treatment)?;
            let dec = decompositions
                .get(*t_value)
                .filter(|_| *t_value < g.cardinality(tx))
                .ok_or_else(|| DecomposeError::Internal("queried action missing".into()))?;
            let mv = decide_single_interval(dec, lo, hi)?;
            Ok((Some(GammaReport { value, lower: lo, upper: hi, source }), mv))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::BoundMethod;

    fn pair(lower: f64, upper: f64) -> BoundPair {
        let query = Query::Do {
            treatment: "X".into(),
            t_value: 1,
            outcome: "Y".into(),
            y_value: 1,
        };
        BoundPair::new(lower, upper, &query, BoundMethod::Lp).unwrap()
    }

    #[test]
    fn four_quantities_basic() {
        let dec =
            four_quantities(&[(0, pair(0.2, 0.6)), (1, pair(0.3, 0.7))]).unwrap();
        assert_eq!((dec.l_lo, dec.l_hi, dec.u_lo, dec.u_hi), (0.2, 0.3, 0.6, 0.7));
        assert_eq!(dec.inner, Some((0.3, 0.6)));
        assert_eq!(dec.outer, vec![(0.2, 0.3), (0.6, 0.7)]);
    }

    #[test]
    fn four_quantities_single_candidate() {
        let dec = four_quantities(&[(0, pair(0.25, 0.5))]).unwrap();
        assert_eq!(dec.inner, Some((0.25, 0.5)));
        assert_eq!(dec.outer, vec![(0.25, 0.25), (0.5, 0.5)]);
    }

    #[test]
    fn four_quantities_disjoint_pairs_empty_inner() {
        let dec = four_quantities(&[(0, pair(0.1, 0.2)), (1, pair(0.8, 0.9))]).unwrap();
        assert_eq!(dec.inner, None);
        assert_eq!((dec.l_hi, dec.u_lo), (0.8, 0.2));
    }

    #[test]
    fn four_quantities_rejects_empty_and_mixed() {
        assert!(matches!(four_quantities(&[]), Err(DecomposeError::EmptyInput)));
        let other = BoundPair::new(
            0.1,
            0.2,
            &Query::Do { treatment: "X".into(), t_value: 0, outcome: "Y".into(), y_value: 1 },
            BoundMethod::Lp,
        )
        .unwrap();
        assert!(matches!(
            four_quantities(&[(0, pair(0.1, 0.2)), (1, other)]),
            Err(DecomposeError::MixedQueries(_, _))
        ));
    }

    #[test]
    fn decide_single_branches() {
        let dec = four_quantities(&[(0, pair(0.2, 0.6)), (1, pair(0.3, 0.7))]).unwrap();
        // gamma below every lower bound: conclusive.
        let mv = decide_single(&dec, 0.1).unwrap();
        assert!(matches!(mv.kind, MoveKind::Return { .. }));
        assert_eq!(mv.rationale, "gamma < L_lo");
        // gamma inside the inner region: no data will help.
        let mv = decide_single(&dec, 0.45).unwrap();
        assert_eq!(mv.kind, MoveKind::Observe);
        // gamma inside the lower outer band: collect.
        let mv = decide_single(&dec, 0.25).unwrap();
        assert_eq!(mv.kind, MoveKind::Collect);
        // gamma above every upper bound: conclusive the other way.
        let mv = decide_single(&dec, 0.75).unwrap();
        assert!(matches!(mv.kind, MoveKind::Return { .. }));
        assert_eq!(mv.rationale, "gamma > U_hi");
    }

    #[test]
    fn decide_single_validates_gamma() {
        let dec = four_quantities(&[(0, pair(0.2, 0.6))]).unwrap();
        assert!(matches!(decide_single(&dec, 1.5), Err(DecomposeError::BadGamma(_))));
    }

    #[test]
    fn decide_interval_requires_both_endpoints() {
        let dec = four_quantities(&[(0, pair(0.2, 0.6)), (1, pair(0.3, 0.7))]).unwrap();
        // Interval straddling L_lo cannot conclude.
        let mv = decide_single_interval(&dec, 0.15, 0.25).unwrap();
        assert_eq!(mv.kind, MoveKind::Collect);
        // Interval fully inside the inner region observes.
        let mv = decide_single_interval(&dec, 0.4, 0.5).unwrap();
        assert_eq!(mv.kind, MoveKind::Observe);
    }

    fn ate_pair(lower: f64, upper: f64) -> BoundPair {
        BoundPair::new(
            lower,
            upper,
            &Query::Ate { treatment: "X".into(), outcome: "Y".into() },
            BoundMethod::Lp,
        )
        .unwrap()
    }

    #[test]
    fn decide_multi_branches() {
        // All lower bounds positive: the action wins outright.
        let dec = four_quantities(&[(0, ate_pair(0.05, 0.4)), (1, ate_pair(0.1, 0.5))]).unwrap();
        let mv = decide_multi(&dec).unwrap();
        assert!(matches!(mv.kind, MoveKind::Return { .. }));
        assert_eq!(mv.rationale, "L_lo > 0");

        // Inner region straddles zero: observe.
        let dec = four_quantities(&[(0, ate_pair(-0.1, 0.2)), (1, ate_pair(-0.05, 0.25))]).unwrap();
        assert_eq!(decide_multi(&dec).unwrap().kind, MoveKind::Observe);

        // Outer band straddles zero but the inner region does not: collect.
        let dec = four_quantities(&[(0, ate_pair(-0.02, 0.3)), (1, ate_pair(0.05, 0.2))]).unwrap();
        assert_eq!(decide_multi(&dec).unwrap().kind, MoveKind::Collect);

        // All upper bounds negative: excluded outright.
        let dec = four_quantities(&[(0, ate_pair(-0.4, -0.1)), (1, ate_pair(-0.3, -0.05))]).unwrap();
        let mv = decide_multi(&dec).unwrap();
        assert!(matches!(mv.kind, MoveKind::Return { .. }));
        assert_eq!(mv.rationale, "U_hi < 0");
    }

    #[test]
    fn nested_candidate_sets_are_monotone() {
        // B' restricted to a subset of B's candidates: the inner region can
        // only grow and the union can only shrink.
        let big: Vec<(usize, BoundPair)> = vec![
            (0, pair(0.15, 0.70)),
            (1, pair(0.25, 0.60)),
            (2, pair(0.30, 0.65)),
            (3, pair(0.20, 0.75)),
        ];
        let small: Vec<(usize, BoundPair)> = big[1..3].to_vec();
        let dec_big = four_quantities(&big).unwrap();
        let dec_small = four_quantities(&small).unwrap();
        let (big_in, small_in) = (dec_big.inner.unwrap(), dec_small.inner.unwrap());
        assert!(small_in.0 <= big_in.0 + 1e-12 && big_in.1 <= small_in.1 + 1e-12);
        assert!(dec_small.l_lo >= dec_big.l_lo && dec_small.u_hi <= dec_big.u_hi);
    }

    #[test]
    fn move_exit_codes() {
        assert_eq!(
            Move { kind: MoveKind::Return { conclusion: "x".into() }, rationale: "r".into() }
                .exit_code(),
            10
        );
        assert_eq!(Move { kind: MoveKind::Observe, rationale: "r".into() }.exit_code(), 11);
        assert_eq!(Move { kind: MoveKind::Collect, rationale: "r".into() }.exit_code(), 12);
    }
}
