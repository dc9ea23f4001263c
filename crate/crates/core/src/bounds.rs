//! Per-distribution causal-effect bounds.
//!
//! For a fixed joint distribution, the interval of effects over all model
//! parameterizations compatible with it is computed by one of three routes:
//! a closed form for the unconfounded-free bow pair, an exact linear program
//! over canonical response profiles, or a Lagrangian gradient trainer that
//! extremizes the query while holding every conditional of the model within
//! an `eps_s` total-variation slack of the target distribution.

use crate::canon::{
    build_response_space, context_weights_from_joint, observable_map, query_vector, CanonError,
    ObservableSystem, ResponseSpace,
};
use crate::confset::ConfidenceBox;
use crate::dist::{assignment_of, linear_index, DiscreteJoint, DistError, FactorCell};
use crate::graph::{Admg, GraphError, Node};
use crate::lpsolve::{self, LinearProgram, LpError, LpStatus};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("not supported: {0}")]
    Capability(String),
    #[error("distribution is inconsistent with the graph (L1 residual {residual:.3e})")]
    Infeasible { residual: f64 },
    #[error("positivity violation: {0}")]
    Positivity(String),
    #[error("trainer found no feasible iterate in {epochs} epochs (worst residual {residual:.3e})")]
    OptimizationFailed { epochs: usize, residual: f64 },
    #[error("bound pair violates its invariants: [{lower}, {upper}]")]
    BadPair { lower: f64, upper: f64 },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A causal query over named nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Query {
    /// `P(outcome = y_value | do(treatment = t_value))`.
    Do { treatment: String, t_value: usize, outcome: String, y_value: usize },
    /// `E[outcome | do(treatment = 1)] - E[outcome | do(treatment = 0)]`
    /// for a binary treatment and a 0/1-coded outcome.
    Ate { treatment: String, outcome: String },
}

impl Query {
    pub fn descriptor(&self) -> String {
        match self {
            Query::Do { treatment, t_value, outcome, y_value } => {
                format!("P({}={} | do({}={}))", outcome, y_value, treatment, t_value)
            }
            Query::Ate { treatment, outcome } => format!("ATE({} -> {})", treatment, outcome),
        }
    }

    pub fn treatment(&self) -> &str {
        match self {
            Query::Do { treatment, .. } | Query::Ate { treatment, .. } => treatment,
        }
    }

    pub fn outcome(&self) -> &str {
        match self {
            Query::Do { outcome, .. } | Query::Ate { outcome, .. } => outcome,
        }
    }

    fn is_ate(&self) -> bool {
        matches!(self, Query::Ate { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    ClosedForm,
    Lp,
    Gradient,
}

/// `[lower, upper]` on a query for one fixed distribution.
#[derive(Debug, Clone, Serialize)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
    pub query: String,
    pub method: BoundMethod,
}

impl BoundPair {
    pub fn new(
        lower: f64,
        upper: f64,
        query: &Query,
        method: BoundMethod,
    ) -> Result<Self, BoundsError> {
        let (lo_lim, hi_lim) = if query.is_ate() { (-1.0, 1.0) } else { (0.0, 1.0) };
        if lower > upper + 1e-9 || lower < lo_lim - 1e-9 || upper > hi_lim + 1e-9 {
            return Err(BoundsError::BadPair { lower, upper });
        }
        Ok(BoundPair { lower, upper, query: query.descriptor(), method })
    }

    pub fn width(&self) -> f64 {
        (self.upper - self.lower).max(0.0)
    }
}

// ── Closed form ──────────────────────────────────────────────────────────────

/// Unrestricted-confounding interval `[P(x,y), P(x,y) + 1 - P(x)]` for
/// `P(Y=y | do(X=x))` on a two-variable joint (treatment first).
pub fn tian_pearl_bow(p: &DiscreteJoint, x: usize, y: usize) -> Result<BoundPair, BoundsError> {
    let vars = p.variables();
    if vars.len() != 2 || vars.iter().any(|v| v.cardinality != 2) {
        return Err(BoundsError::Capability(
            "closed-form bow bound needs exactly two binary variables".into(),
        ));
    }
    let pxy = p.prob(&[x, y]);
    let px = p.prob(&[x, 0]) + p.prob(&[x, 1]);
    let query = Query::Do {
        treatment: vars[0].name.clone(),
        t_value: x,
        outcome: vars[1].name.clone(),
        y_value: y,
    };
    BoundPair::new(pxy, pxy + 1.0 - px, &query, BoundMethod::ClosedForm)
}

// ── Exact LP over canonical profiles ─────────────────────────────────────────

/// The component the LP runs over, plus its observable system: the
/// treatment's component when it contains the outcome, otherwise the
/// outcome's component with the treatment entering through the context.
pub(crate) fn query_system(
    g: &Admg,
    space: &ResponseSpace,
    query: &Query,
) -> Result<(usize, ObservableSystem), BoundsError> {
    let tx = g.index_of(query.treatment())?;
    let oy = g.index_of(query.outcome())?;
    if tx == oy {
        return Err(BoundsError::Capability("treatment and outcome coincide".into()));
    }
    let comp_t = space.component_of(tx);
    let comp = if space.components()[comp_t].contains(&oy) { comp_t } else { space.component_of(oy) };
    let system = observable_map(g, space, comp)?;
    // Free context must be causally upstream of the treatment, otherwise its
    // observational weights would not survive the intervention.
    let tx_desc = g.descendants_of(tx);
    for &cvar in &system.context {
        if cvar != tx && tx_desc.contains(&cvar) {
            return Err(BoundsError::Capability(format!(
                "context variable `{}` descends from the treatment",
                g.name(cvar)
            )));
        }
    }
    Ok((comp, system))
}

fn arm_vectors(
    g: &Admg,
    space: &ResponseSpace,
    system: &ObservableSystem,
    p: &DiscreteJoint,
    query: &Query,
) -> Result<Vec<f64>, BoundsError> {
    let tx = g.index_of(query.treatment())?;
    let oy = g.index_of(query.outcome())?;
    match query {
        Query::Do { t_value, y_value, .. } => {
            let weights = context_weights_from_joint(g, system, &[(tx, *t_value)], p)?;
            Ok(query_vector(g, space, system, &[(tx, *t_value)], (oy, *y_value), &weights)?)
        }
        Query::Ate { .. } => {
            if g.cardinality(tx) != 2 || g.cardinality(oy) != 2 {
                return Err(BoundsError::Capability(
                    "binary-ATE query needs binary treatment and outcome".into(),
                ));
            }
            let weights = context_weights_from_joint(g, system, &[(tx, 1)], p)?;
            let c1 = query_vector(g, space, system, &[(tx, 1)], (oy, 1), &weights)?;
            let c0 = query_vector(g, space, system, &[(tx, 0)], (oy, 1), &weights)?;
            Ok(c1.iter().zip(&c0).map(|(a, b)| a - b).collect())
        }
    }
}

/// Builds the constraint part `A q = b, q in simplex` for a candidate joint.
fn constraint_lp(
    g: &Admg,
    system: &ObservableSystem,
    p: &DiscreteJoint,
    n: usize,
) -> Result<LinearProgram, BoundsError> {
    let rhs = system.rhs_from_joint(g, p)?;
    let mut lp = LinearProgram::over_simplex(vec![0.0; n]);
    for (row, b) in system.rows.iter().zip(&rhs) {
        if let Some(b) = b {
            lp.push_row(row.coeffs.clone(), *b);
        }
    }
    Ok(lp)
}

/// Constraint rows plus objective for the query on one candidate: the raw
/// program `max c·q  s.t.  A q = b, q in simplex` shared by the solver and
/// the brute-force oracles.
pub(crate) fn build_query_lp(
    p: &DiscreteJoint,
    g: &Admg,
    query: &Query,
) -> Result<LinearProgram, BoundsError> {
    let space = build_response_space(g)?;
    let (_, system) = query_system(g, &space, query)?;
    let n = space.profile_size(system.component);
    let mut lp = constraint_lp(g, &system, p, n)?;
    lp.objective = arm_vectors(g, &space, &system, p, query)?;
    Ok(lp)
}

/// Exact `[min, max]` of the query over all canonical parameterizations
/// reproducing `p` on the observable events.
pub fn lp_bounds(p: &DiscreteJoint, g: &Admg, query: &Query) -> Result<BoundPair, BoundsError> {
    let lp = build_query_lp(p, g, query)?;
    let hi = lpsolve::solve(&lp)?;
    if hi.status == LpStatus::Infeasible {
        return Err(BoundsError::Infeasible { residual: l1_violation(&lp) });
    }
    let lo = lpsolve::minimize(&lp)?;
    debug_assert_eq!(lo.status, LpStatus::Optimal);
    BoundPair::new(lo.value, hi.value, query, BoundMethod::Lp)
}

/// Smallest total L1 slack that makes the constraint rows consistent;
/// reported alongside infeasibility errors.
fn l1_violation(lp: &LinearProgram) -> f64 {
    let n = lp.objective.len();
    let m = lp.a_eq.len();
    let total = n + 2 * m;
    let mut objective = vec![0.0; total];
    for j in n..total {
        objective[j] = -1.0;
    }
    let mut a_eq = Vec::with_capacity(m);
    for (r, row) in lp.a_eq.iter().enumerate() {
        let mut full = vec![0.0; total];
        full[..n].copy_from_slice(row);
        full[n + 2 * r] = 1.0;
        full[n + 2 * r + 1] = -1.0;
        a_eq.push(full);
    }
    // Keep the simplex row (assumed first) exact: no slack on it.
    if m > 0 {
        a_eq[0][n] = 0.0;
        a_eq[0][n + 1] = 0.0;
    }
    let relaxed = LinearProgram {
        objective,
        a_eq,
        b_eq: lp.b_eq.clone(),
        lower: vec![0.0; total],
        upper: vec![f64::INFINITY; total],
    };
    match lpsolve::solve(&relaxed) {
        Ok(sol) if sol.status == LpStatus::Optimal => -sol.value,
        _ => f64::NAN,
    }
}

// ── Backdoor adjustment ──────────────────────────────────────────────────────

/// Adjustment set: parents of treatment and outcome, minus the pair itself.
/// Supported when neither endpoint touches a bidirected edge.
fn backdoor_set(g: &Admg, tx: usize, oy: usize) -> Result<Vec<usize>, BoundsError> {
    if !g.spouses_of(tx).is_empty() || !g.spouses_of(oy).is_empty() {
        return Err(BoundsError::Capability(
            "backdoor formula needs treatment and outcome free of bidirected edges".into(),
        ));
    }
    let mut z: Vec<usize> = g
        .parents_of(tx)
        .into_iter()
        .chain(g.parents_of(oy))
        .filter(|&v| v != tx && v != oy)
        .collect();
    z.sort_unstable();
    z.dedup();
    let desc = g.descendants_of(tx);
    if z.iter().any(|v| desc.contains(v)) {
        return Err(BoundsError::Capability(
            "adjustment set contains a descendant of the treatment".into(),
        ));
    }
    Ok(z)
}

/// Point-identified `P(y | do(x)) = sum_z P(y | x, z) P(z)`.
pub fn backdoor_point(p: &DiscreteJoint, g: &Admg, query: &Query) -> Result<f64, BoundsError> {
    let Query::Do { treatment, t_value, outcome, y_value } = query else {
        return Err(BoundsError::Capability("backdoor point estimate needs a do-query".into()));
    };
    let tx = g.index_of(treatment)?;
    let oy = g.index_of(outcome)?;
    let z = backdoor_set(g, tx, oy)?;
    let z_nodes: Vec<Node> = z
        .iter()
        .map(|&v| Node { name: g.name(v).to_string(), cardinality: g.cardinality(v) })
        .collect();
    let n_cfg: usize = z_nodes.iter().map(|n| n.cardinality).product();
    let mut total = 0.0;
    for cfg in 0..n_cfg {
        let assign = assignment_of(&z_nodes, cfg);
        let z_event: Vec<(&str, usize)> =
            z.iter().zip(&assign).map(|(&v, &a)| (g.name(v), a)).collect();
        let pz = p.prob_of(&z_event)?;
        if pz <= 0.0 {
            continue;
        }
        let mut xz = z_event.clone();
        xz.push((treatment, *t_value));
        let pxz = p.prob_of(&xz)?;
        if pxz <= 0.0 {
            return Err(BoundsError::Positivity(format!(
                "P({}={}, z-config {}) = 0 while P(z) > 0",
                treatment, t_value, cfg
            )));
        }
        let mut xyz = xz.clone();
        xyz.push((outcome, *y_value));
        total += p.prob_of(&xyz)? / pxz * pz;
    }
    Ok(total)
}

/// Interval endpoints of a confidence-box coordinate for `P(v = s | h)`,
/// reconstructing the implied last state from the stored free states.
fn state_interval(states: &[crate::confset::CoordInterval], card: usize, s: usize) -> (f64, f64) {
    if s < card - 1 {
        (states[s].lower, states[s].upper)
    } else {
        let lo = (1.0 - states.iter().map(|c| c.upper).sum::<f64>()).max(0.0);
        let hi = (1.0 - states.iter().map(|c| c.lower).sum::<f64>()).min(1.0);
        (lo, hi)
    }
}

/// Backdoor bounds over a confidence box: conditionals pinned at their
/// extreme endpoints, the `P(z)` weights optimized by LP inside their box.
///
/// Requires the box order to list the adjustment variables first, then the
/// treatment, then the outcome last.
pub fn backdoor_box_bounds(
    cbox: &ConfidenceBox,
    g: &Admg,
    query: &Query,
) -> Result<BoundPair, BoundsError> {
    let Query::Do { treatment, t_value, outcome, y_value } = query else {
        return Err(BoundsError::Capability("backdoor box bounds need a do-query".into()));
    };
    let tx = g.index_of(treatment)?;
    let oy = g.index_of(outcome)?;
    backdoor_set(g, tx, oy)?;
    let k = cbox.order.len();
    if cbox.order[k - 1].name != *outcome || cbox.order[k - 2].name != *treatment {
        return Err(BoundsError::Capability(
            "box order must end with (treatment, outcome) for the backdoor LP".into(),
        ));
    }
    let z_nodes: Vec<Node> = cbox.order[..k - 2].to_vec();
    let n_cfg: usize = z_nodes.iter().map(|n| n.cardinality).product::<usize>().max(1);

    // Interval for each P(z-config) by interval-product along the chain.
    let mut z_lo = vec![1.0; n_cfg];
    let mut z_hi = vec![1.0; n_cfg];
    for cfg in 0..n_cfg {
        let assign = assignment_of(&z_nodes, cfg);
        for (pos, node) in z_nodes.iter().enumerate() {
            let prefix: Vec<Node> = z_nodes[..pos].to_vec();
            let h = linear_index(&prefix, &assign[..pos]);
            let states = &cbox.factors[pos].intervals[h];
            let (lo, hi) = state_interval(states, node.cardinality, assign[pos]);
            z_lo[cfg] *= lo;
            z_hi[cfg] *= hi;
        }
    }

    // Interval for P(y = y_value | x = t_value, z-config).
    let mut y_lo = vec![0.0; n_cfg];
    let mut y_hi = vec![0.0; n_cfg];
    let y_card = cbox.order[k - 1].cardinality;
    for cfg in 0..n_cfg {
        let assign = assignment_of(&z_nodes, cfg);
        let mut hist: Vec<usize> = assign.clone();
        hist.push(*t_value);
        let h = linear_index(&cbox.order[..k - 1], &hist);
        let states = &cbox.factors[k - 1].intervals[h];
        let (lo, hi) = state_interval(states, y_card, *y_value);
        y_lo[cfg] = lo;
        y_hi[cfg] = hi;
    }

    let solve_arm = |obj: &[f64], maximize: bool| -> Result<f64, BoundsError> {
        let lp = LinearProgram {
            objective: obj.to_vec(),
            a_eq: vec![vec![1.0; n_cfg]],
            b_eq: vec![1.0],
            lower: z_lo.clone(),
            upper: z_hi.clone(),
        };
        let sol = if maximize { lpsolve::solve(&lp)? } else { lpsolve::minimize(&lp)? };
        if sol.status == LpStatus::Infeasible {
            return Err(BoundsError::Infeasible { residual: f64::NAN });
        }
        Ok(sol.value)
    };
    let upper = solve_arm(&y_hi, true)?;
    let lower = solve_arm(&y_lo, false)?;
    BoundPair::new(lower.clamp(0.0, 1.0), upper.clamp(0.0, 1.0), query, BoundMethod::Lp)
}

// ── Lagrangian gradient trainer ──────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainDirection {
    Min,
    Max,
}

/// Hyperparameters of the relaxed trainer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelaxedTrainConfig {
    /// Per-conditional total-variation slack.
    pub eps_s: f64,
    /// Weight of the effect term in the loss.
    pub ate_weight: f64,
    /// Dual ascent step for the multipliers.
    pub dual_lr: f64,
    /// Parameter (logit) step.
    pub step: f64,
    pub max_epoch: usize,
    pub seed: u64,
    pub direction: TrainDirection,
    /// Initial value of every dual multiplier.
    pub dual_init: f64,
}

impl RelaxedTrainConfig {
    pub fn new(eps_s: f64, direction: TrainDirection, seed: u64) -> Self {
        RelaxedTrainConfig {
            eps_s,
            ate_weight: 1.0,
            dual_lr: 0.1,
            step: 0.05,
            max_epoch: 2000,
            seed,
            direction,
            dual_init: 0.0,
        }
    }

    fn validate(&self) -> Result<(), BoundsError> {
        if !(self.eps_s > 0.0) || !(self.dual_lr > 0.0) || !(self.step > 0.0) || self.max_epoch < 1
        {
            return Err(BoundsError::Capability(
                "trainer steps must be positive and max_epoch at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Feasibility margin on top of `eps_s` when reporting trained endpoints.
pub const TRAIN_FEAS_TOL: f64 = 1e-3;

/// Dual multipliers restart every this many epochs on long runs.
const DUAL_PHASE_EPOCHS: usize = 3000;

#[derive(Debug, Clone)]
pub struct TrainedEndpoint {
    pub value: f64,
    /// Epoch the reported iterate came from.
    pub epoch: usize,
    /// Worst conditional distance of the reported iterate.
    pub residual: f64,
}

/// Gradient analog of the exact LP: softmax-parameterized profile
/// distributions trained to extremize the query under per-conditional
/// total-variation constraints enforced by dual multipliers.
///
/// Returns the most extreme feasible iterate (all conditional distances
/// within `eps_s + 1e-3`); errors if no iterate ever becomes feasible.
pub fn relaxed_train(
    p_eps: &DiscreteJoint,
    g: &Admg,
    query: &Query,
    cfg: &RelaxedTrainConfig,
) -> Result<TrainedEndpoint, BoundsError> {
    cfg.validate()?;
    let space = build_response_space(g)?;
    let trainer = Trainer::prepare(p_eps, g, &space, query)?;
    trainer.run(cfg)
}

/// Precomputed evaluation tables: tuples never change, only their weights.
struct Trainer {
    /// Component profile sizes.
    sizes: Vec<usize>,
    /// Per tuple: component profile indices.
    tuple_profiles: Vec<Vec<usize>>,
    /// Per tuple: observational configuration index.
    tuple_config: Vec<usize>,
    /// Per tuple: query coefficient (0/1 for do-queries, -1/0/1 for ATE).
    kappa: Vec<f64>,
    /// Conditional coordinates to match.
    coords: Vec<CoordTarget>,
    /// Warm-start logits: product-form profiles from the candidate's own
    /// conditionals, so epoch zero already sits near the matching manifold.
    init_logits: Vec<Vec<f64>>,
    n_configs: usize,
}

struct CoordTarget {
    /// Target conditional from the candidate distribution (all states).
    target: Vec<f64>,
    /// Config indices of the denominator event.
    den: Vec<usize>,
    /// Config indices per state of the numerator events.
    num: Vec<Vec<usize>>,
}

impl Trainer {
    fn prepare(
        p_eps: &DiscreteJoint,
        g: &Admg,
        space: &ResponseSpace,
        query: &Query,
    ) -> Result<Self, BoundsError> {
        let order_idx = g.topological_order()?;
        let order: Vec<Node> = order_idx.iter().map(|&i| g.nodes()[i].clone()).collect();
        let order_names: Vec<&str> = order.iter().map(|n| n.name.as_str()).collect();
        let p = p_eps.reorder(&order_names)?;

        let sizes: Vec<usize> =
            (0..space.components().len()).map(|k| space.profile_size(k)).collect();
        let total: usize = sizes.iter().try_fold(1usize, |acc, &s| {
            acc.checked_mul(s).filter(|&t| t <= crate::canon::DEFAULT_PROFILE_CAP)
        }).ok_or_else(|| {
            BoundsError::Capability("full profile product exceeds the trainer cap".into())
        })?;

        let tx = g.index_of(query.treatment())?;
        let oy = g.index_of(query.outcome())?;
        let (do_arms, y_value): (Vec<Vec<(usize, usize)>>, usize) = match query {
            Query::Do { t_value, y_value, .. } => (vec![vec![(tx, *t_value)]], *y_value),
            Query::Ate { .. } => (vec![vec![(tx, 1)], vec![(tx, 0)]], 1),
        };

        // Enumerate tuples once; record config and query coefficients.
        let mut tuple_profiles = Vec::with_capacity(total);
        let mut tuple_config = Vec::with_capacity(total);
        let mut kappa = Vec::with_capacity(total);
        let scm_uniform = crate::canon::CanonicalScm {
            q: sizes.iter().map(|&s| vec![1.0 / s as f64; s]).collect(),
        };
        // Reuse canonical evaluation through point masses per tuple.
        let _ = &scm_uniform;
        let n_comp = sizes.len();
        let mut tuple = vec![0usize; n_comp];
        let g_order = g.topological_order()?;
        loop {
            let mut function_of = vec![0usize; g.node_count()];
            for k in 0..n_comp {
                let fns = space.decode_profile(k, tuple[k]);
                for (slot, &v) in space.components()[k].iter().enumerate() {
                    function_of[v] = fns[slot];
                }
            }
            let obs = eval_with(g, space, &g_order, &function_of, &[]);
            let obs_in_order: Vec<usize> = order_idx.iter().map(|&i| obs[i]).collect();
            tuple_config.push(linear_index(&order, &obs_in_order));
            let mut coeff = 0.0;
            let mut sign = 1.0;
            for arm in &do_arms {
                let vals = eval_with(g, space, &g_order, &function_of, arm);
                if vals[oy] == y_value {
                    coeff += sign;
                }
                sign = -1.0;
            }
            kappa.push(coeff);
            tuple_profiles.push(tuple.clone());
            let mut k = n_comp;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                tuple[k] += 1;
                if tuple[k] < sizes[k] {
                    break;
                }
                tuple[k] = 0;
            }
            if tuple.iter().all(|&t| t == 0) {
                break;
            }
        }

        // Conditional coordinates from the candidate's chain factorization.
        let fact = p.factorize(&order_names)?;
        let n_configs = p.table().len();
        let mut coords = Vec::new();
        for (k, factor) in fact.factors().iter().enumerate() {
            let prefix: Vec<Node> = order[..k].to_vec();
            let card = order[k].cardinality;
            for (h, cell) in factor.cells.iter().enumerate() {
                let FactorCell::Categorical(target) = cell else { continue };
                let hist = assignment_of(&prefix, h);
                let mut den = Vec::new();
                let mut num = vec![Vec::new(); card];
                for cfg in 0..n_configs {
                    let assign = assignment_of(&order, cfg);
                    if assign[..k] == hist[..] {
                        den.push(cfg);
                        num[assign[k]].push(cfg);
                    }
                }
                coords.push(CoordTarget { target: target.clone(), den, num });
            }
        }

        // Warm start: independent response choices per parent configuration
        // with the candidate's conditional as the output law.
        let mut init_logits: Vec<Vec<f64>> = Vec::with_capacity(sizes.len());
        for (k, comp) in space.components().iter().enumerate() {
            let mut behaviour: Vec<Vec<Vec<f64>>> = Vec::new();
            for &v in comp {
                let vr = space.variable(v);
                let mut t =
                    vec![vec![1.0 / vr.cardinality as f64; vr.cardinality]; vr.n_configs];
                for (cfg, cell) in t.iter_mut().enumerate() {
                    let mut rem = cfg;
                    let mut given: Vec<(&str, usize)> = Vec::new();
                    for &pn in vr.parents.iter().rev() {
                        given.push((g.name(pn), rem % g.cardinality(pn)));
                        rem /= g.cardinality(pn);
                    }
                    if let Ok(cond) = p.conditional(g.name(v), &given) {
                        *cell = cond;
                    }
                }
                behaviour.push(t);
            }
            let mut logit = vec![0.0; sizes[k]];
            for (profile, lv) in logit.iter_mut().enumerate() {
                let fns = space.decode_profile(k, profile);
                let mut w = 1.0;
                for (slot, &v) in comp.iter().enumerate() {
                    let vr = space.variable(v);
                    for cfg in 0..vr.n_configs {
                        w *= behaviour[slot][cfg][vr.output(fns[slot], cfg)];
                    }
                }
                *lv = (w + 1e-9).ln();
            }
            init_logits.push(logit);
        }

        Ok(Trainer {
            sizes,
            tuple_profiles,
            tuple_config,
            kappa,
            coords,
            init_logits,
            n_configs,
        })
    }

    fn run(&self, cfg: &RelaxedTrainConfig) -> Result<TrainedEndpoint, BoundsError> {
        let mut rng = SplitMix64::new(cfg.seed);
        let mut logits: Vec<Vec<f64>> = self
            .init_logits
            .iter()
            .map(|l| l.iter().map(|&v| v + 0.01 * rng.next_gaussian()).collect())
            .collect();
        let mut alphas = vec![cfg.dual_init.max(0.0); self.coords.len()];

        let mut best: Option<TrainedEndpoint> = None;
        let mut best_residual = f64::INFINITY;

        for epoch in 0..cfg.max_epoch {
            let fwd = self.forward(&logits);
            let worst = fwd.distances.iter().cloned().fold(0.0, f64::max);

            // Track the extreme feasible iterate.
            if worst <= cfg.eps_s + TRAIN_FEAS_TOL {
                let better = match &best {
                    None => true,
                    Some(b) => match cfg.direction {
                        TrainDirection::Max => fwd.query > b.value,
                        TrainDirection::Min => fwd.query < b.value,
                    },
                };
                if better {
                    best = Some(TrainedEndpoint { value: fwd.query, epoch, residual: worst });
                }
            }
            best_residual = best_residual.min(worst);

            let grads = self.gradients(&fwd, &alphas, cfg);
            for (k, grad) in grads.iter().enumerate() {
                for (a, gval) in grad.iter().enumerate() {
                    logits[k][a] -= cfg.step * gval;
                }
            }
            for (ci, d) in fwd.distances.iter().enumerate() {
                alphas[ci] = (alphas[ci] + cfg.dual_lr * (d - cfg.eps_s)).max(0.0);
            }
            // Long runs restart the multipliers periodically: accumulated
            // duals from early infeasible excursions otherwise pin the
            // iterate to whatever face it first reached.
            if epoch > 0 && epoch % DUAL_PHASE_EPOCHS == 0 {
                for a in alphas.iter_mut() {
                    *a = cfg.dual_init.max(0.0);
                }
            }
        }

        best.ok_or(BoundsError::OptimizationFailed {
            epochs: cfg.max_epoch,
            residual: best_residual,
        })
    }

    /// Forward pass: softmax profiles, tuple weights, observational table,
    /// query value, per-coordinate conditional distances.
    fn forward(&self, logits: &[Vec<f64>]) -> Forward {
        let n_tuples = self.tuple_profiles.len();
        let q: Vec<Vec<f64>> = logits
            .iter()
            .map(|l| {
                let mx = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let ex: Vec<f64> = l.iter().map(|&v| (v - mx).exp()).collect();
                let s: f64 = ex.iter().sum();
                ex.into_iter().map(|v| v / s).collect()
            })
            .collect();
        let mut weights = vec![0.0; n_tuples];
        let mut table = vec![0.0; self.n_configs];
        let mut query = 0.0;
        for t in 0..n_tuples {
            let mut w = 1.0;
            for (k, &profile) in self.tuple_profiles[t].iter().enumerate() {
                w *= q[k][profile];
            }
            weights[t] = w;
            table[self.tuple_config[t]] += w;
            query += w * self.kappa[t];
        }
        let distances = self
            .coords
            .iter()
            .map(|coord| {
                let den: f64 = coord.den.iter().map(|&c| table[c]).sum();
                let mut d = 0.0;
                for (s, &target) in coord.target.iter().enumerate() {
                    let num: f64 = coord.num[s].iter().map(|&c| table[c]).sum();
                    let p = if den > 0.0 { num / den } else { target };
                    d += 0.5 * (p - target).abs();
                }
                d
            })
            .collect();
        Forward { q, weights, table, query, distances }
    }

    /// Loss the updates descend: `sum_i alpha_i (d_i - eps_s)` plus the
    /// effect term `-lambda * ln(1 + Q)` (max) or `-lambda * ln(1 - Q)`
    /// (min); both shifted logs stay monotone over the query's range.
    /// The gradient step uses [`Trainer::gradients`]; this scalar form is
    /// the finite-difference oracle's target.
    #[cfg(test)]
    fn loss(&self, fwd: &Forward, alphas: &[f64], cfg: &RelaxedTrainConfig) -> f64 {
        let constraint: f64 =
            alphas.iter().zip(&fwd.distances).map(|(a, d)| a * (d - cfg.eps_s)).sum();
        let pressure = match cfg.direction {
            TrainDirection::Max => -cfg.ate_weight * (1.0 + fwd.query).max(1e-12).ln(),
            TrainDirection::Min => -cfg.ate_weight * (1.0 - fwd.query).max(1e-12).ln(),
        };
        constraint + pressure
    }

    /// Analytic gradient of [`Trainer::loss`] with respect to the logits.
    fn gradients(
        &self,
        fwd: &Forward,
        alphas: &[f64],
        cfg: &RelaxedTrainConfig,
    ) -> Vec<Vec<f64>> {
        // dLoss/dTable from the constraint terms.
        let mut dl_dtable = vec![0.0; self.n_configs];
        for (ci, coord) in self.coords.iter().enumerate() {
            if alphas[ci] == 0.0 {
                continue;
            }
            let den: f64 = coord.den.iter().map(|&c| fwd.table[c]).sum();
            if den <= 0.0 {
                continue;
            }
            for (s, &target) in coord.target.iter().enumerate() {
                let num: f64 = coord.num[s].iter().map(|&c| fwd.table[c]).sum();
                let p = num / den;
                let delta = p - target;
                let sign = if delta > 0.0 {
                    0.5
                } else if delta < 0.0 {
                    -0.5
                } else {
                    continue;
                };
                let coef = alphas[ci] * sign / den;
                for &c in &coord.num[s] {
                    dl_dtable[c] += coef;
                }
                let p_coef = alphas[ci] * sign * p / den;
                for &c in &coord.den {
                    dl_dtable[c] -= p_coef;
                }
            }
        }
        let dl_dq = match cfg.direction {
            TrainDirection::Max => -cfg.ate_weight / (1.0 + fwd.query).max(1e-12),
            TrainDirection::Min => cfg.ate_weight / (1.0 - fwd.query).max(1e-12),
        };

        // One pass over tuples: psi = dLoss/dw; bucket into logit gradients
        // through the softmax jacobian.
        let mut grads: Vec<Vec<f64>> = self.sizes.iter().map(|&s| vec![0.0; s]).collect();
        let mut psi_total = 0.0;
        for t in 0..self.tuple_profiles.len() {
            let psi = dl_dtable[self.tuple_config[t]] + dl_dq * self.kappa[t];
            let wpsi = fwd.weights[t] * psi;
            psi_total += wpsi;
            for (k, &profile) in self.tuple_profiles[t].iter().enumerate() {
                grads[k][profile] += wpsi;
            }
        }
        for (k, grad) in grads.iter_mut().enumerate() {
            for (a, gval) in grad.iter_mut().enumerate() {
                *gval -= fwd.q[k][a] * psi_total;
            }
        }
        grads
    }
}

struct Forward {
    q: Vec<Vec<f64>>,
    weights: Vec<f64>,
    table: Vec<f64>,
    query: f64,
    distances: Vec<f64>,
}

fn eval_with(
    g: &Admg,
    space: &ResponseSpace,
    order: &[usize],
    function_of: &[usize],
    interventions: &[(usize, usize)],
) -> Vec<usize> {
    let mut values = vec![usize::MAX; g.node_count()];
    for &v in order {
        if let Some(&(_, forced)) = interventions.iter().find(|&&(node, _)| node == v) {
            values[v] = forced;
            continue;
        }
        let vr = space.variable(v);
        let mut config = 0;
        for &pnode in &vr.parents {
            config = config * g.cardinality(pnode) + values[pnode];
        }
        values[v] = vr.output(function_of[v], config);
    }
    values
}

/// Both trainer endpoints as a pair.
pub fn gradient_bounds(
    p_eps: &DiscreteJoint,
    g: &Admg,
    query: &Query,
    base: &RelaxedTrainConfig,
) -> Result<BoundPair, BoundsError> {
    let mut lo_cfg = base.clone();
    lo_cfg.direction = TrainDirection::Min;
    let mut hi_cfg = base.clone();
    hi_cfg.direction = TrainDirection::Max;
    let lo = relaxed_train(p_eps, g, query, &lo_cfg)?;
    let hi = relaxed_train(p_eps, g, query, &hi_cfg)?;
    let (lo_lim, hi_lim) = if query.is_ate() { (-1.0, 1.0) } else { (0.0, 1.0) };
    BoundPair::new(
        lo.value.clamp(lo_lim, hi_lim).min(hi.value),
        hi.value.clamp(lo_lim, hi_lim).max(lo.value),
        query,
        BoundMethod::Gradient,
    )
}

// ── ATE helpers ──────────────────────────────────────────────────────────────

/// Exact ATE of a canonical SCM: `P(y=1|do(x=1)) - P(y=1|do(x=0))`.
pub fn ate_of_scm(
    g: &Admg,
    space: &ResponseSpace,
    scm: &crate::canon::CanonicalScm,
    treatment: &str,
    outcome: &str,
) -> Result<f64, BoundsError> {
    let tx = g.index_of(treatment)?;
    let oy = g.index_of(outcome)?;
    if g.cardinality(oy) != 2 {
        return Err(BoundsError::Capability("ATE needs a 0/1-coded outcome".into()));
    }
    let p1 = crate::canon::interventional(g, space, scm, &[(tx, 1)], (oy, 1));
    let p0 = crate::canon::interventional(g, space, scm, &[(tx, 0)], (oy, 1));
    Ok(p1 - p0)
}

/// Multi-action ATE bounds for action `x` against the best rival:
/// `ATE(x) = E[do(x)] - max_b E[do(b)]`, bounded conservatively by the
/// minimum over rivals of the pairwise difference bounds.
pub fn ate_of_multi(
    p: &DiscreteJoint,
    g: &Admg,
    treatment: &str,
    outcome: &str,
    action: usize,
) -> Result<BoundPair, BoundsError> {
    let tx = g.index_of(treatment)?;
    let oy = g.index_of(outcome)?;
    if g.cardinality(oy) != 2 {
        return Err(BoundsError::Capability("ATE needs a 0/1-coded outcome".into()));
    }
    let k = g.cardinality(tx);
    if action >= k {
        return Err(BoundsError::Capability(format!("action {} out of range", action)));
    }
    let space = build_response_space(g)?;
    let q_marker =
        Query::Ate { treatment: treatment.to_string(), outcome: outcome.to_string() };
    let (_, system) = query_system(g, &space, &q_marker)?;
    let n = space.profile_size(system.component);
    let lp_base = constraint_lp(g, &system, p, n)?;
    let weights = context_weights_from_joint(g, &system, &[(tx, action)], p)?;
    let c_action = query_vector(g, &space, &system, &[(tx, action)], (oy, 1), &weights)?;

    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    for rival in (0..k).filter(|&b| b != action) {
        let c_rival = query_vector(g, &space, &system, &[(tx, rival)], (oy, 1), &weights)?;
        let mut lp = lp_base.clone();
        lp.objective = c_action.iter().zip(&c_rival).map(|(a, b)| a - b).collect();
        let hi = lpsolve::solve(&lp)?;
        if hi.status == LpStatus::Infeasible {
            return Err(BoundsError::Infeasible { residual: l1_violation(&lp) });
        }
        let lo = lpsolve::minimize(&lp)?;
        lower = lower.min(lo.value);
        upper = upper.min(hi.value);
    }
    BoundPair::new(lower, upper.max(lower), &q_marker, BoundMethod::Lp)
}
