//! Confidence boxes around the empirical chain factorization and the ε-net
//! of candidate joints drawn inside them.
//!
//! Every conditional coordinate `P(V = s | prefix history)` gets a Hoeffding
//! interval at per-coordinate error `alpha / m_total` (union bound over all
//! coordinates), with `n` the number of rows matching the history. A history
//! that never occurs gets the whole interval `[0, 1]`.

use crate::dist::{
    linear_index, ConditionalFactorization, Dataset, DiscreteJoint, FactorCell,
};
use crate::graph::{Admg, Node};
use crate::rng::SplitMix64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfsetError {
    #[error("no observations for this coordinate; use the whole interval [0,1]")]
    DegenerateCoordinate,
    #[error("alpha must lie strictly between 0 and 1 (got {0})")]
    BadAlpha(f64),
    #[error("eps_s must be positive (got {0})")]
    BadEpsS(f64),
    #[error("net must draw at least one candidate")]
    BadNetSize,
    #[error("dataset variables do not match the graph: {0}")]
    VariableMismatch(String),
    #[error("({0},{1},{2}) is not a structural instrument triple")]
    NotAnInstrument(String, String, String),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Dist(#[from] crate::dist::DistError),
}

/// Hoeffding halfwidth `sqrt(ln(2/alpha) / (2n))`.
///
/// `n = 0` has no finite interval; the caller must fall back to `[0,1]`.
pub fn hoeffding_halfwidth(n: usize, alpha: f64) -> Result<f64, ConfsetError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ConfsetError::BadAlpha(alpha));
    }
    if n == 0 {
        return Err(ConfsetError::DegenerateCoordinate);
    }
    Ok(((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt())
}

/// One conditional-probability coordinate `P(V = state | history)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordInterval {
    pub lower: f64,
    pub upper: f64,
    /// Empirical center; `None` for never-observed histories.
    pub center: Option<f64>,
    /// Rows matching the conditioning history.
    pub count: usize,
}

impl CoordInterval {
    pub fn halfwidth(&self) -> f64 {
        (self.upper - self.lower) / 2.0
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.lower - 1e-12 && p <= self.upper + 1e-12
    }
}

/// Per-factor interval layout: `intervals[history][state]` for states
/// `0 .. card-1` (the last state is implied by normalization).
#[derive(Debug, Clone, Serialize)]
pub struct FactorBox {
    pub variable: Node,
    pub intervals: Vec<Vec<CoordInterval>>,
}

/// Product confidence set over all conditional coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct ConfidenceBox {
    /// Factorization order (a topological order of the graph).
    pub order: Vec<Node>,
    pub factors: Vec<FactorBox>,
    pub alpha: f64,
    /// Total number of free conditional coordinates (Bonferroni divisor).
    pub m_total: usize,
    /// Rows in the dataset the box was built from.
    pub sample_size: usize,
}

/// Builds the Hoeffding confidence box for a dataset under a graph.
///
/// Coordinates are the chain-factorization conditionals along the graph's
/// topological order; each uses error `alpha / m_total`, so the whole box
/// covers the true factorization with probability at least `1 - alpha`.
pub fn confidence_box(d: &Dataset, g: &Admg, alpha: f64) -> Result<ConfidenceBox, ConfsetError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ConfsetError::BadAlpha(alpha));
    }
    let order_idx = g.topological_order()?;
    let order: Vec<Node> = order_idx.iter().map(|&i| g.nodes()[i].clone()).collect();
    for node in &order {
        let dv = d
            .variables()
            .iter()
            .find(|v| v.name == node.name)
            .ok_or_else(|| ConfsetError::VariableMismatch(node.name.clone()))?;
        if dv.cardinality > node.cardinality {
            return Err(ConfsetError::VariableMismatch(format!(
                "`{}` has codes up to {} but cardinality {}",
                node.name,
                dv.cardinality - 1,
                node.cardinality
            )));
        }
    }
    if d.variables().len() != order.len() {
        return Err(ConfsetError::VariableMismatch(format!(
            "dataset has {} variables, graph has {}",
            d.variables().len(),
            order.len()
        )));
    }
    let names: Vec<&str> = order.iter().map(|n| n.name.as_str()).collect();
    let data = d.project(&names)?;

    let m_total: usize = (0..order.len())
        .map(|k| {
            let n_hist: usize = order[..k].iter().map(|v| v.cardinality).product();
            n_hist * (order[k].cardinality - 1)
        })
        .sum();

    let mut factors = Vec::with_capacity(order.len());
    for k in 0..order.len() {
        let prefix: Vec<Node> = order[..k].to_vec();
        let n_hist: usize = prefix.iter().map(|v| v.cardinality).product();
        let card = order[k].cardinality;
        let mut hist_count = vec![0usize; n_hist];
        let mut state_count = vec![vec![0usize; card]; n_hist];
        for row in data.rows() {
            let h = linear_index(&prefix, &row[..k]);
            hist_count[h] += 1;
            state_count[h][row[k]] += 1;
        }
        let mut intervals = Vec::with_capacity(n_hist);
        for h in 0..n_hist {
            let mut states = Vec::with_capacity(card - 1);
            for s in 0..card - 1 {
                if hist_count[h] == 0 {
                    states.push(CoordInterval { lower: 0.0, upper: 1.0, center: None, count: 0 });
                } else {
                    let n = hist_count[h];
                    let center = state_count[h][s] as f64 / n as f64;
                    let eps = hoeffding_halfwidth(n, alpha / m_total as f64)?;
                    states.push(CoordInterval {
                        lower: (center - eps).max(0.0),
                        upper: (center + eps).min(1.0),
                        center: Some(center),
                        count: n,
                    });
                }
            }
            intervals.push(states);
        }
        factors.push(FactorBox { variable: order[k].clone(), intervals });
    }
    Ok(ConfidenceBox { order, factors, alpha, m_total, sample_size: d.len() })
}

impl ConfidenceBox {
    /// Empirical joint the box is centered on, with never-observed histories
    /// filled uniformly (they carry no mass, so the fill is inert).
    pub fn center_joint(&self) -> Result<DiscreteJoint, ConfsetError> {
        let mut fact = self.empty_factorization();
        for (k, fb) in self.factors.iter().enumerate() {
            for (h, states) in fb.intervals.iter().enumerate() {
                let card = fb.variable.cardinality;
                let probs: Vec<f64> = match states[0].center {
                    Some(_) => {
                        let mut p: Vec<f64> =
                            states.iter().map(|c| c.center.unwrap_or(0.0)).collect();
                        let rest: f64 = 1.0 - p.iter().sum::<f64>();
                        p.push(rest.max(0.0));
                        p
                    }
                    None => vec![1.0 / card as f64; card],
                };
                fact.set_cell(k, h, probs);
            }
        }
        Ok(fact.compose()?)
    }

    fn empty_factorization(&self) -> ConditionalFactorization {
        // Start from a uniform joint's factorization to get the right shape.
        DiscreteJoint::uniform(self.order.clone())
            .factorize(&self.order.iter().map(|n| n.name.as_str()).collect::<Vec<_>>())
            .expect("uniform factorizes")
    }

    /// Coordinate-wise membership of a joint's factorization in the box.
    /// Histories the candidate itself makes unreachable are vacuous.
    pub fn contains_joint(&self, p: &DiscreteJoint) -> Result<bool, ConfsetError> {
        let names: Vec<&str> = self.order.iter().map(|n| n.name.as_str()).collect();
        let f = p.factorize(&names)?;
        for (k, fb) in self.factors.iter().enumerate() {
            for (h, states) in fb.intervals.iter().enumerate() {
                match &f.factors()[k].cells[h] {
                    FactorCell::Degenerate => continue,
                    FactorCell::Categorical(probs) => {
                        for (s, coord) in states.iter().enumerate() {
                            if !coord.contains(probs[s]) {
                                return Ok(false);
                            }
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    /// Centroid grid for one coordinate: midpoints of `ceil(halfwidth/eps_s)`
    /// equal subdivisions of the interval (a single midpoint when the
    /// interval is a point).
    pub fn centroids(&self, factor: usize, history: usize, state: usize, eps_s: f64) -> Vec<f64> {
        let coord = &self.factors[factor].intervals[history][state];
        let k = centroid_count(coord.halfwidth(), eps_s);
        let width = coord.upper - coord.lower;
        (0..k).map(|i| coord.lower + (i as f64 + 0.5) * width / k as f64).collect()
    }
}

pub(crate) fn centroid_count(halfwidth: f64, eps_s: f64) -> usize {
    ((halfwidth / eps_s).ceil() as usize).max(1)
}

/// Candidate joints drawn from the centroid lattice of a confidence box.
#[derive(Debug, Clone)]
pub struct EpsilonNet {
    pub candidates: Vec<DiscreteJoint>,
    pub eps_s: f64,
    pub seed: u64,
    pub alpha: f64,
    /// Candidates discarded by compatibility tests.
    pub rejected_count: usize,
}

/// Draws `m` candidate joints by independently and uniformly picking one
/// centroid per coordinate and composing along the chain. Duplicate picks
/// collapse, so the result can hold fewer than `m` distinct candidates.
pub fn build_epsilon_net(
    cbox: &ConfidenceBox,
    eps_s: f64,
    m: usize,
    seed: u64,
) -> Result<EpsilonNet, ConfsetError> {
    if !(eps_s > 0.0) {
        return Err(ConfsetError::BadEpsS(eps_s));
    }
    if m == 0 {
        return Err(ConfsetError::BadNetSize);
    }
    // Precompute centroid grids per coordinate.
    let mut grids: Vec<Vec<Vec<Vec<f64>>>> = Vec::new(); // [factor][history][state] -> grid
    for (k, fb) in cbox.factors.iter().enumerate() {
        let mut per_hist = Vec::new();
        for h in 0..fb.intervals.len() {
            let per_state: Vec<Vec<f64>> =
                (0..fb.variable.cardinality - 1).map(|s| cbox.centroids(k, h, s, eps_s)).collect();
            per_hist.push(per_state);
        }
        grids.push(per_hist);
    }

    let mut rng = SplitMix64::new(seed);
    // Dedup on the composed table itself: different centroid picks can
    // collapse onto one joint after clamping.
    let mut seen: std::collections::BTreeSet<Vec<u64>> = std::collections::BTreeSet::new();
    let mut candidates = Vec::new();
    for _ in 0..m {
        let mut fact = cbox_factorization_shape(cbox);
        let mut valid = true;
        for (k, fb) in cbox.factors.iter().enumerate() {
            let card = fb.variable.cardinality;
            for h in 0..fb.intervals.len() {
                let mut probs = Vec::with_capacity(card);
                let mut acc = 0.0;
                for s in 0..card - 1 {
                    let grid = &grids[k][h][s];
                    let p = grid[rng.next_index(grid.len())];
                    probs.push(p);
                    acc += p;
                }
                // Last state by renormalization; negative remainders mean the
                // independent picks do not form a distribution.
                let rest = 1.0 - acc;
                if rest < -1e-12 {
                    valid = false;
                    break;
                }
                probs.push(rest.max(0.0));
                let total: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|p| *p /= total);
                fact.set_cell(k, h, probs);
            }
            if !valid {
                break;
            }
        }
        if !valid {
            continue;
        }
        let joint = fact.compose()?;
        if seen.insert(joint.table().iter().map(|p| p.to_bits()).collect()) {
            candidates.push(joint);
        }
    }
    Ok(EpsilonNet { candidates, eps_s, seed, alpha: cbox.alpha, rejected_count: 0 })
}

fn cbox_factorization_shape(cbox: &ConfidenceBox) -> ConditionalFactorization {
    DiscreteJoint::uniform(cbox.order.clone())
        .factorize(&cbox.order.iter().map(|n| n.name.as_str()).collect::<Vec<_>>())
        .expect("uniform factorizes")
}

/// Instrumental-inequality screen: drops candidates with
/// `max_x sum_y max_i P(x, y | i) > 1` and counts them.
pub fn reject_incompatible(
    net: &EpsilonNet,
    g: &Admg,
    instrument: &str,
    treatment: &str,
    outcome: &str,
) -> Result<EpsilonNet, ConfsetError> {
    if !g.is_structural_instrument(instrument, treatment, outcome)? {
        return Err(ConfsetError::NotAnInstrument(
            instrument.to_string(),
            treatment.to_string(),
            outcome.to_string(),
        ));
    }
    let mut kept = Vec::new();
    let mut rejected = net.rejected_count;
    for cand in &net.candidates {
        if instrumental_inequality_holds(cand, instrument, treatment, outcome)? {
            kept.push(cand.clone());
        } else {
            rejected += 1;
        }
    }
    Ok(EpsilonNet {
        candidates: kept,
        eps_s: net.eps_s,
        seed: net.seed,
        alpha: net.alpha,
        rejected_count: rejected,
    })
}

/// `max_x sum_y max_i P(x,y|i) <= 1`, maxima over instrument values with
/// positive probability.
pub fn instrumental_inequality_holds(
    p: &DiscreteJoint,
    instrument: &str,
    treatment: &str,
    outcome: &str,
) -> Result<bool, ConfsetError> {
    let i_card = p.variables()[p.var_index(instrument)?].cardinality;
    let x_card = p.variables()[p.var_index(treatment)?].cardinality;
    let y_card = p.variables()[p.var_index(outcome)?].cardinality;
    let mut worst: f64 = 0.0;
    for x in 0..x_card {
        let mut total = 0.0;
        for y in 0..y_card {
            let mut best = 0.0f64;
            for i in 0..i_card {
                let pi = p.prob_of(&[(instrument, i)])?;
                if pi <= 0.0 {
                    continue;
                }
                let joint = p.prob_of(&[(instrument, i), (treatment, x), (outcome, y)])?;
                best = best.max(joint / pi);
            }
            total += best;
        }
        worst = worst.max(total);
    }
    Ok(worst <= 1.0 + 1e-9)
}

impl EpsilonNet {
    /// Reproducibility dump: metadata plus every candidate table.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            alpha: f64,
            eps_s: f64,
            seed: u64,
            rejected_count: usize,
            candidates: &'a [DiscreteJoint],
        }
        serde_json::to_string_pretty(&Dump {
            alpha: self.alpha,
            eps_s: self.eps_s,
            seed: self.seed,
            rejected_count: self.rejected_count,
            candidates: &self.candidates,
        })
        .expect("net serialization cannot fail")
    }
}
