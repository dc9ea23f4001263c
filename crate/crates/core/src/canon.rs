//! Response-function (canonical) parameterization of discrete mechanisms.
//!
//! Each variable's mechanism is a random choice among all functions from its
//! parent configurations to its values; variables sharing a confounded
//! component share one distribution over their joint choice of functions.
//! A distribution `q` per component fully determines the observational and
//! every interventional distribution, and observable events are linear in
//! the `q` of a single component once the outside parents are conditioned on.
//!
//! Enumeration order is lexicographic over parent-configuration outputs
//! (first parent = most significant config digit, first configuration = most
//! significant output digit), so function indices line up with the usual
//! response tables: for a binary variable with one binary parent, index 1 is
//! "output 0 at parent 0, output 1 at parent 1"; with two binary parents,
//! index 5 is "0,1,0,1" across the four configurations.

use crate::dist::{assignment_of, linear_index, DiscreteJoint, NORMALIZATION_TOL};
use crate::graph::{Admg, Node};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const DEFAULT_PROFILE_CAP: usize = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum CanonError {
    #[error("profile space of component {{{0}}} exceeds the cap of {1}")]
    CapExceeded(String, usize),
    #[error("query not supported: {0}")]
    Unsupported(String),
    #[error("`{0}` is not a node of the graph")]
    UnknownNode(String),
    #[error("q for component {0} must be a distribution over {1} profiles")]
    BadParameters(usize, usize),
}

/// One variable's response-function space.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableResponses {
    pub node: usize,
    pub cardinality: usize,
    /// Parents in declaration order; their configs index the function table.
    pub parents: Vec<usize>,
    pub n_configs: usize,
    pub n_functions: usize,
}

impl VariableResponses {
    /// Output of function `f` at parent configuration `config`.
    pub fn output(&self, f: usize, config: usize) -> usize {
        debug_assert!(f < self.n_functions && config < self.n_configs);
        let place = self.n_configs - 1 - config;
        (f / self.cardinality.pow(place as u32)) % self.cardinality
    }
}

/// Response spaces for every variable plus the component profile layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSpace {
    variables: Vec<VariableResponses>,
    components: Vec<Vec<usize>>,
    profile_sizes: Vec<usize>,
}

/// Enumerates response functions for every variable and sizes each
/// component's joint profile space, failing if any exceeds `cap`.
pub fn build_response_space(g: &Admg) -> Result<ResponseSpace, CanonError> {
    build_response_space_with_cap(g, DEFAULT_PROFILE_CAP)
}

pub fn build_response_space_with_cap(g: &Admg, cap: usize) -> Result<ResponseSpace, CanonError> {
    let mut variables = Vec::with_capacity(g.node_count());
    for v in 0..g.node_count() {
        let parents = g.parents_of(v);
        let n_configs: usize = parents.iter().map(|&p| g.cardinality(p)).product();
        let card = g.cardinality(v);
        let n_functions = card
            .checked_pow(n_configs as u32)
            .filter(|&n| n <= cap)
            .ok_or_else(|| CanonError::CapExceeded(g.name(v).to_string(), cap))?;
        variables.push(VariableResponses {
            node: v,
            cardinality: card,
            parents,
            n_configs,
            n_functions,
        });
    }
    let components = g.c_components();
    let mut profile_sizes = Vec::with_capacity(components.len());
    for comp in &components {
        let mut size: usize = 1;
        for &v in comp {
            size = size
                .checked_mul(variables[v].n_functions)
                .filter(|&n| n <= cap)
                .ok_or_else(|| {
                    let names: Vec<&str> = comp.iter().map(|&i| g.name(i)).collect();
                    CanonError::CapExceeded(names.join(","), cap)
                })?;
        }
        profile_sizes.push(size);
    }
    Ok(ResponseSpace { variables, components, profile_sizes })
}

impl ResponseSpace {
    pub fn variable(&self, node: usize) -> &VariableResponses {
        &self.variables[node]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn profile_size(&self, component: usize) -> usize {
        self.profile_sizes[component]
    }

    pub fn component_of(&self, node: usize) -> usize {
        self.components
            .iter()
            .position(|c| c.contains(&node))
            .expect("every node lies in a component")
    }

    /// Splits a component profile index into per-member function indices
    /// (members in declaration order, first member most significant).
    pub fn decode_profile(&self, component: usize, mut profile: usize) -> Vec<usize> {
        let members = &self.components[component];
        let mut out = vec![0; members.len()];
        for (k, &v) in members.iter().enumerate().rev() {
            let size = self.variables[v].n_functions;
            out[k] = profile % size;
            profile /= size;
        }
        out
    }

    /// Inverse of [`ResponseSpace::decode_profile`].
    pub fn encode_profile(&self, component: usize, functions: &[usize]) -> usize {
        let members = &self.components[component];
        let mut idx = 0;
        for (k, &v) in members.iter().enumerate() {
            idx = idx * self.variables[v].n_functions + functions[k];
        }
        idx
    }
}

/// Distribution over each component's profile space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalScm {
    /// One probability vector per c-component, in component order.
    pub q: Vec<Vec<f64>>,
}

impl CanonicalScm {
    pub fn new(space: &ResponseSpace, q: Vec<Vec<f64>>) -> Result<Self, CanonError> {
        if q.len() != space.components.len() {
            return Err(CanonError::BadParameters(q.len(), space.components.len()));
        }
        for (k, qk) in q.iter().enumerate() {
            let sum: f64 = qk.iter().sum();
            if qk.len() != space.profile_sizes[k]
                || qk.iter().any(|&p| p < 0.0)
                || (sum - 1.0).abs() > NORMALIZATION_TOL
            {
                return Err(CanonError::BadParameters(k, space.profile_sizes[k]));
            }
        }
        Ok(CanonicalScm { q })
    }

    /// Point mass on one profile per component.
    pub fn point_mass(space: &ResponseSpace, profiles: &[usize]) -> Self {
        let q = profiles
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let mut v = vec![0.0; space.profile_sizes[k]];
                v[p] = 1.0;
                v
            })
            .collect();
        CanonicalScm { q }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scm serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

// ── Evaluation ───────────────────────────────────────────────────────────────

/// Evaluates every variable given one response function per variable,
/// overriding the intervened nodes.
fn eval_functions(
    g: &Admg,
    space: &ResponseSpace,
    order: &[usize],
    function_of: &[usize],
    interventions: &BTreeMap<usize, usize>,
) -> Vec<usize> {
    let mut values = vec![usize::MAX; g.node_count()];
    for &v in order {
        if let Some(&forced) = interventions.get(&v) {
            values[v] = forced;
            continue;
        }
        let vr = space.variable(v);
        let parent_nodes: Vec<Node> = vr
            .parents
            .iter()
            .map(|&p| Node { name: g.name(p).to_string(), cardinality: g.cardinality(p) })
            .collect();
        let parent_vals: Vec<usize> = vr.parents.iter().map(|&p| values[p]).collect();
        let config = linear_index(&parent_nodes, &parent_vals);
        values[v] = vr.output(function_of[v], config);
    }
    values
}

/// All (profile tuple, joint weight, induced configuration) triples of an
/// SCM, optionally under intervention. The tuple count is the product of the
/// component profile sizes; callers guard the cap.
fn for_each_tuple<F: FnMut(&[usize], f64, &[usize])>(
    g: &Admg,
    space: &ResponseSpace,
    scm: &CanonicalScm,
    interventions: &BTreeMap<usize, usize>,
    mut f: F,
) {
    let order = g.topological_order().expect("admg is acyclic");
    let n_comp = space.components.len();
    let mut tuple = vec![0usize; n_comp];
    loop {
        let mut weight = 1.0;
        for k in 0..n_comp {
            weight *= scm.q[k][tuple[k]];
        }
        if weight > 0.0 {
            let mut function_of = vec![0usize; g.node_count()];
            for k in 0..n_comp {
                let fns = space.decode_profile(k, tuple[k]);
                for (slot, &v) in space.components[k].iter().enumerate() {
                    function_of[v] = fns[slot];
                }
            }
            let values = eval_functions(g, space, &order, &function_of, interventions);
            f(&tuple, weight, &values);
        }
        // Odometer increment over the component profile spaces.
        let mut k = n_comp;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            tuple[k] += 1;
            if tuple[k] < space.profile_sizes[k] {
                break;
            }
            tuple[k] = 0;
        }
    }
}

/// Exact observational joint induced by the SCM.
pub fn induced_joint(g: &Admg, space: &ResponseSpace, scm: &CanonicalScm) -> DiscreteJoint {
    let vars: Vec<Node> = g.nodes().to_vec();
    let mut table = vec![0.0; vars.iter().map(|v| v.cardinality).product()];
    for_each_tuple(g, space, scm, &BTreeMap::new(), |_, w, values| {
        table[linear_index(&vars, values)] += w;
    });
    let sum: f64 = table.iter().sum();
    for p in &mut table {
        *p /= sum;
    }
    DiscreteJoint::new(vars, table).expect("induced table is a distribution")
}

/// Exact `P(outcome | do(interventions))` by profile enumeration.
pub fn interventional(
    g: &Admg,
    space: &ResponseSpace,
    scm: &CanonicalScm,
    interventions: &[(usize, usize)],
    outcome: (usize, usize),
) -> f64 {
    let do_map: BTreeMap<usize, usize> = interventions.iter().copied().collect();
    let mut total = 0.0;
    for_each_tuple(g, space, scm, &do_map, |_, w, values| {
        if values[outcome.0] == outcome.1 {
            total += w;
        }
    });
    total
}

/// Draws `n` samples by ancestral simulation of the response-function SCM,
/// overriding intervened nodes. Deterministic per seed.
pub fn simulate_canonical(
    g: &Admg,
    space: &ResponseSpace,
    scm: &CanonicalScm,
    interventions: &[(usize, usize)],
    n: usize,
    seed: u64,
) -> crate::dist::Dataset {
    let order = g.topological_order().expect("admg is acyclic");
    let do_map: BTreeMap<usize, usize> = interventions.iter().copied().collect();
    let mut rng = SplitMix64::new(seed);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut function_of = vec![0usize; g.node_count()];
        for (k, qk) in scm.q.iter().enumerate() {
            let u = rng.next_f64();
            let mut acc = 0.0;
            let mut profile = qk.len() - 1;
            for (i, &p) in qk.iter().enumerate() {
                acc += p;
                if u < acc {
                    profile = i;
                    break;
                }
            }
            let fns = space.decode_profile(k, profile);
            for (slot, &v) in space.components[k].iter().enumerate() {
                function_of[v] = fns[slot];
            }
        }
        rows.push(eval_functions(g, space, &order, &function_of, &do_map));
    }
    crate::dist::Dataset::new(g.nodes().to_vec(), rows).expect("simulated values in range")
}

// ── Linear observable map ────────────────────────────────────────────────────

/// One observable event: the component members take `member_config` when the
/// outside parents take `context_config`; `coeffs` are the 0/1 profile
/// selections with `coeffs · q = P(member_config | context_config)`.
#[derive(Debug, Clone)]
pub struct ObsRow {
    pub member_config: Vec<usize>,
    pub context_config: Vec<usize>,
    pub coeffs: Vec<f64>,
}

/// Linear system tying one component's `q` to observable conditionals.
#[derive(Debug, Clone)]
pub struct ObservableSystem {
    pub component: usize,
    /// Component members, declaration order.
    pub members: Vec<usize>,
    /// Parents of members outside the component, declaration order.
    pub context: Vec<usize>,
    pub rows: Vec<ObsRow>,
}

/// Evaluates the members of `component` for one profile, one context
/// configuration, and optional interventions on members.
fn eval_component(
    g: &Admg,
    space: &ResponseSpace,
    component: usize,
    profile: usize,
    context: &[usize],
    context_config: &[usize],
    interventions: &BTreeMap<usize, usize>,
) -> Vec<usize> {
    let members = &space.components[component];
    let fns = space.decode_profile(component, profile);
    let order = g.topological_order().expect("admg is acyclic");
    let mut values = vec![usize::MAX; g.node_count()];
    for (slot, &cvar) in context.iter().enumerate() {
        values[cvar] = context_config[slot];
    }
    for &v in &order {
        let Some(slot) = members.iter().position(|&m| m == v) else { continue };
        if let Some(&forced) = interventions.get(&v) {
            values[v] = forced;
            continue;
        }
        let vr = space.variable(v);
        let parent_nodes: Vec<Node> = vr
            .parents
            .iter()
            .map(|&p| Node { name: g.name(p).to_string(), cardinality: g.cardinality(p) })
            .collect();
        let parent_vals: Vec<usize> = vr.parents.iter().map(|&p| values[p]).collect();
        let config = linear_index(&parent_nodes, &parent_vals);
        values[v] = vr.output(fns[slot], config);
    }
    members.iter().map(|&m| values[m]).collect()
}

/// Builds the observable linear map for one confounded component.
///
/// Requires every outside parent of a member to be a non-descendant of all
/// members, so that conditioning on the context is intervention-free.
pub fn observable_map(
    g: &Admg,
    space: &ResponseSpace,
    component: usize,
) -> Result<ObservableSystem, CanonError> {
    let members = space.components[component].clone();
    let mut context: Vec<usize> = Vec::new();
    for &v in &members {
        for p in g.parents_of(v) {
            if !members.contains(&p) && !context.contains(&p) {
                context.push(p);
            }
        }
    }
    context.sort_unstable();
    for &c in &context {
        for &m in &members {
            if g.descendants_of(m).contains(&c) {
                return Err(CanonError::Unsupported(format!(
                    "outside parent `{}` descends from component member `{}`",
                    g.name(c),
                    g.name(m)
                )));
            }
        }
    }

    let member_nodes: Vec<Node> = members
        .iter()
        .map(|&v| Node { name: g.name(v).to_string(), cardinality: g.cardinality(v) })
        .collect();
    let context_nodes: Vec<Node> = context
        .iter()
        .map(|&v| Node { name: g.name(v).to_string(), cardinality: g.cardinality(v) })
        .collect();
    let n_member_cfg: usize = member_nodes.iter().map(|n| n.cardinality).product();
    let n_context_cfg: usize = context_nodes.iter().map(|n| n.cardinality).product();
    let size = space.profile_sizes[component];

    let mut rows = Vec::with_capacity(n_member_cfg * n_context_cfg);
    for ctx_idx in 0..n_context_cfg {
        let context_config = assignment_of(&context_nodes, ctx_idx);
        // Evaluate each profile once per context; scatter into member rows.
        let mut row_for: Vec<Vec<f64>> = vec![vec![0.0; size]; n_member_cfg];
        for profile in 0..size {
            let vals = eval_component(
                g,
                space,
                component,
                profile,
                &context,
                &context_config,
                &BTreeMap::new(),
            );
            let mi = linear_index(&member_nodes, &vals);
            row_for[mi][profile] = 1.0;
        }
        for (mi, coeffs) in row_for.into_iter().enumerate() {
            rows.push(ObsRow {
                member_config: assignment_of(&member_nodes, mi),
                context_config: context_config.clone(),
                coeffs,
            });
        }
    }
    Ok(ObservableSystem { component, members, context, rows })
}

impl ObservableSystem {
    /// Right-hand sides `P(member_config | context_config)` from a joint.
    /// Rows whose context has probability zero come back as `None`.
    pub fn rhs_from_joint(
        &self,
        g: &Admg,
        p: &DiscreteJoint,
    ) -> Result<Vec<Option<f64>>, crate::dist::DistError> {
        let mut out = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let ctx_event: Vec<(&str, usize)> = self
                .context
                .iter()
                .zip(&row.context_config)
                .map(|(&v, &a)| (g.name(v), a))
                .collect();
            let denom = p.prob_of(&ctx_event)?;
            if denom <= 0.0 {
                out.push(None);
                continue;
            }
            let mut event = ctx_event.clone();
            for (&v, &a) in self.members.iter().zip(&row.member_config) {
                event.push((g.name(v), a));
            }
            out.push(Some(p.prob_of(&event)? / denom));
        }
        Ok(out)
    }
}

/// Linear objective for `P(outcome | do(interventions))` over one
/// component's `q`, given weights for the non-intervened context variables.
///
/// `context_weights[c]` must be the probability of the context configuration
/// with linear index `c` over the non-intervened context variables (weights
/// of an empty context are the single entry 1.0). The result satisfies
/// `c · q = P(outcome | do)` for every SCM whose component parameters are
/// `q` and whose context marginal matches the weights.
pub fn query_vector(
    g: &Admg,
    space: &ResponseSpace,
    system: &ObservableSystem,
    interventions: &[(usize, usize)],
    outcome: (usize, usize),
    context_weights: &[f64],
) -> Result<Vec<f64>, CanonError> {
    let (y, y_val) = outcome;
    if !system.members.contains(&y) {
        return Err(CanonError::Unsupported(format!(
            "outcome `{}` lies outside the solved component",
            g.name(y)
        )));
    }
    let do_map: BTreeMap<usize, usize> = interventions.iter().copied().collect();
    for &node in do_map.keys() {
        if !system.members.contains(&node) && !system.context.contains(&node) {
            return Err(CanonError::Unsupported(format!(
                "intervened node `{}` is neither a member nor a context parent",
                g.name(node)
            )));
        }
    }
    let free_context: Vec<usize> =
        system.context.iter().copied().filter(|v| !do_map.contains_key(v)).collect();
    let free_nodes: Vec<Node> = free_context
        .iter()
        .map(|&v| Node { name: g.name(v).to_string(), cardinality: g.cardinality(v) })
        .collect();
    let n_free: usize = free_nodes.iter().map(|n| n.cardinality).product();
    if context_weights.len() != n_free {
        return Err(CanonError::Unsupported(format!(
            "expected {} context weights, got {}",
            n_free,
            context_weights.len()
        )));
    }

    let size = space.profile_sizes[system.component];
    let y_slot = system.members.iter().position(|&m| m == y).expect("outcome is a member");
    let mut c = vec![0.0; size];
    for free_idx in 0..n_free {
        let w = context_weights[free_idx];
        if w == 0.0 {
            continue;
        }
        let free_vals = assignment_of(&free_nodes, free_idx);
        // Full context config: free values plus forced values.
        let context_config: Vec<usize> = system
            .context
            .iter()
            .map(|v| {
                do_map.get(v).copied().unwrap_or_else(|| {
                    free_vals[free_context.iter().position(|f| f == v).expect("free var")]
                })
            })
            .collect();
        for (profile, coeff) in c.iter_mut().enumerate() {
            let vals = eval_component(
                g,
                space,
                system.component,
                profile,
                &system.context,
                &context_config,
                &do_map,
            );
            if vals[y_slot] == y_val {
                *coeff += w;
            }
        }
    }
    Ok(c)
}

/// Weights for the non-intervened context variables taken from a joint.
pub fn context_weights_from_joint(
    g: &Admg,
    system: &ObservableSystem,
    interventions: &[(usize, usize)],
    p: &DiscreteJoint,
) -> Result<Vec<f64>, crate::dist::DistError> {
    let do_nodes: Vec<usize> = interventions.iter().map(|&(v, _)| v).collect();
    let free: Vec<&str> = system
        .context
        .iter()
        .filter(|v| !do_nodes.contains(v))
        .map(|&v| g.name(v))
        .collect();
    if free.is_empty() {
        return Ok(vec![1.0]);
    }
    Ok(p.marginal(&free)?.table().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{bow_backdoor_graph, bow_graph, iv_graph, two_confounder_graph};

    #[test]
    fn response_counts_match_reference_tables() {
        // Observed-confounder bow: X has parent Z (4 functions), Y has
        // parents Z,X (16 functions), confounded pair space 4*16 = 64.
        let g = bow_backdoor_graph();
        let space = build_response_space(&g).unwrap();
        let x = g.index_of("X").unwrap();
        let y = g.index_of("Y").unwrap();
        assert_eq!(space.variable(x).n_functions, 4);
        assert_eq!(space.variable(y).n_functions, 16);
        let comp = space.component_of(x);
        assert_eq!(space.profile_size(comp), 64);
    }

    #[test]
    fn iv_graph_profile_space_is_sixteen() {
        let g = iv_graph();
        let space = build_response_space(&g).unwrap();
        assert_eq!(space.variable(g.index_of("X").unwrap()).n_functions, 4);
        assert_eq!(space.variable(g.index_of("Y").unwrap()).n_functions, 4);
        assert_eq!(space.profile_size(space.component_of(g.index_of("X").unwrap())), 16);
    }

    #[test]
    fn constant_functions_for_root() {
        let g = bow_graph();
        let space = build_response_space(&g).unwrap();
        let x = g.index_of("X").unwrap();
        assert_eq!(space.variable(x).n_functions, 2);
        assert_eq!(space.variable(x).output(0, 0), 0);
        assert_eq!(space.variable(x).output(1, 0), 1);
    }

    #[test]
    fn response_table_row_five() {
        // Row 5 of the two-parent table reads 0,1,0,1 across configurations
        // (z0,x0),(z0,x1),(z1,x0),(z1,x1).
        let g = bow_backdoor_graph();
        let space = build_response_space(&g).unwrap();
        let y = g.index_of("Y").unwrap();
        let vr = space.variable(y);
        assert_eq!(
            (0..4).map(|c| vr.output(5, c)).collect::<Vec<_>>(),
            vec![0, 1, 0, 1]
        );
        // Row 1: 0,0,0,1. Row 8: 1,0,0,0.
        assert_eq!((0..4).map(|c| vr.output(1, c)).collect::<Vec<_>>(), vec![0, 0, 0, 1]);
        assert_eq!((0..4).map(|c| vr.output(8, c)).collect::<Vec<_>>(), vec![1, 0, 0, 0]);
    }

    #[test]
    fn cap_is_enforced() {
        let g = two_confounder_graph();
        let err = build_response_space_with_cap(&g, 8).unwrap_err();
        assert!(matches!(err, CanonError::CapExceeded(_, 8)));
    }

    #[test]
    fn iv_observable_row_selection() {
        // P(y0,x0 | i0) selects profiles with R_x in {0,1} and R_y in {0,1}.
        let g = iv_graph();
        let space = build_response_space(&g).unwrap();
        let comp = space.component_of(g.index_of("X").unwrap());
        let system = observable_map(&g, &space, comp).unwrap();
        let row = system
            .rows
            .iter()
            .find(|r| r.member_config == vec![0, 0] && r.context_config == vec![0])
            .expect("row exists");
        let selected: Vec<usize> = row
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 1.0)
            .map(|(i, _)| i)
            .collect();
        // Profile index = rx * 4 + ry.
        assert_eq!(selected, vec![0, 1, 4, 5]);
    }

    #[test]
    fn observable_columns_sum_to_one_per_context_block() {
        let g = iv_graph();
        let space = build_response_space(&g).unwrap();
        let comp = space.component_of(g.index_of("X").unwrap());
        let system = observable_map(&g, &space, comp).unwrap();
        for ctx in 0..2 {
            let block: Vec<&ObsRow> =
                system.rows.iter().filter(|r| r.context_config == vec![ctx]).collect();
            for col in 0..space.profile_size(comp) {
                let s: f64 = block.iter().map(|r| r.coeffs[col]).sum();
                assert_eq!(s, 1.0, "column {} in context {}", col, ctx);
            }
        }
    }

    #[test]
    fn query_vector_matches_reference_selection() {
        // P(y1|do(x1)) on the instrument graph selects R_y in {1,3} for all
        // R_x, i.e. profile indices {1,3,5,7,9,11,13,15}.
        let g = iv_graph();
        let space = build_response_space(&g).unwrap();
        let x = g.index_of("X").unwrap();
        let y = g.index_of("Y").unwrap();
        let comp = space.component_of(x);
        let system = observable_map(&g, &space, comp).unwrap();
        let weights = vec![0.3, 0.7]; // any distribution over I; must sum out
        let c = query_vector(&g, &space, &system, &[(x, 1)], (y, 1), &weights).unwrap();
        for (profile, coeff) in c.iter().enumerate() {
            let expected = if profile % 4 == 1 || profile % 4 == 3 { 1.0 } else { 0.0 };
            assert!((coeff - expected).abs() < 1e-12, "profile {}", profile);
        }
    }

    #[test]
    fn point_mass_all_ones_response_under_do() {
        // Profile (R_x=0, R_y=15) on the observed-confounder bow: Y outputs 1
        // everywhere, so P(y1|do(x0)) = 1.
        let g = bow_backdoor_graph();
        let space = build_response_space(&g).unwrap();
        let x = g.index_of("X").unwrap();
        let y = g.index_of("Y").unwrap();
        let comp = space.component_of(x);
        let z_comp = space.component_of(g.index_of("Z").unwrap());
        let mut profiles = vec![0; 2];
        profiles[comp] = space.encode_profile(comp, &[0, 15]);
        profiles[z_comp] = 0;
        let scm = CanonicalScm::point_mass(&space, &profiles);
        let v = interventional(&g, &space, &scm, &[(x, 0)], (y, 1));
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn intervene_everything_gives_constant_data() {
        let g = iv_graph();
        let space = build_response_space(&g).unwrap();
        let scm = random_scm_for_tests(&space, 3);
        let all: Vec<(usize, usize)> = (0..3).map(|v| (v, 1)).collect();
        let data = simulate_canonical(&g, &space, &scm, &all, 25, 11);
        for row in data.rows() {
            assert_eq!(row, &vec![1, 1, 1]);
        }
    }

    #[test]
    fn point_mass_scm_is_deterministic() {
        let g = bow_graph();
        let space = build_response_space(&g).unwrap();
        let scm = CanonicalScm::point_mass(&space, &[space.encode_profile(0, &[1, 2])]);
        let data = simulate_canonical(&g, &space, &scm, &[], 10, 5);
        // R_x = 1 outputs x1; R_y = 2 maps x0 -> 1, x1 -> 0.
        for row in data.rows() {
            assert_eq!(row, &vec![1, 0]);
        }
    }

    #[test]
    fn simulation_matches_linear_map() {
        let g = iv_graph();
        let space = build_response_space(&g).unwrap();
        let comp = space.component_of(g.index_of("X").unwrap());
        let system = observable_map(&g, &space, comp).unwrap();
        let scm = random_scm_for_tests(&space, 17);
        let data = simulate_canonical(&g, &space, &scm, &[], 100_000, 23);
        let emp = data.empirical_joint().unwrap();
        let rhs = system.rhs_from_joint(&g, &induced_joint(&g, &space, &scm)).unwrap();
        let emp_rhs = system.rhs_from_joint(&g, &emp).unwrap();
        for (row_idx, (exact, sampled)) in rhs.iter().zip(&emp_rhs).enumerate() {
            let (Some(exact), Some(sampled)) = (exact, sampled) else { continue };
            let q_side: f64 = system.rows[row_idx]
                .coeffs
                .iter()
                .zip(&scm.q[comp])
                .map(|(c, q)| c * q)
                .sum();
            assert!((exact - q_side).abs() < 1e-12, "A·q mismatch at row {}", row_idx);
            assert!((exact - sampled).abs() < 0.01, "simulation off at row {}", row_idx);
        }
    }

    #[test]
    fn simulation_matches_linear_map_across_models() {
        // Fifty random parameterizations: simulated conditional frequencies
        // track A·q within binomial noise (at most 1% of rows beyond 3
        // standard deviations).
        let g = iv_graph();
        let space = build_response_space(&g).unwrap();
        let comp = space.component_of(g.index_of("X").unwrap());
        let system = observable_map(&g, &space, comp).unwrap();
        let n = 20_000usize;
        let mut rows_checked = 0usize;
        let mut rows_beyond = 0usize;
        for seed in 0..50u64 {
            let scm = random_scm_for_tests(&space, 1000 + seed);
            let exact_joint = induced_joint(&g, &space, &scm);
            let exact = system.rhs_from_joint(&g, &exact_joint).unwrap();
            let data = simulate_canonical(&g, &space, &scm, &[], n, 2000 + seed);
            let emp = data.empirical_joint().unwrap();
            let sampled = system.rhs_from_joint(&g, &emp).unwrap();
            for (row_idx, (e, s)) in exact.iter().zip(&sampled).enumerate() {
                let (Some(e), Some(s)) = (e, s) else { continue };
                let ctx_event: Vec<(&str, usize)> = system
                    .context
                    .iter()
                    .zip(&system.rows[row_idx].context_config)
                    .map(|(&v, &a)| (g.name(v), a))
                    .collect();
                let m_ctx = (emp.prob_of(&ctx_event).unwrap() * n as f64).round();
                if m_ctx < 50.0 {
                    continue;
                }
                let sigma = (e * (1.0 - e) / m_ctx).sqrt();
                rows_checked += 1;
                if (e - s).abs() > 3.0 * sigma + 1e-12 {
                    rows_beyond += 1;
                }
            }
        }
        assert!(rows_checked > 300, "only {} rows checked", rows_checked);
        assert!(
            (rows_beyond as f64) <= 0.01 * rows_checked as f64,
            "{} of {} rows beyond 3 sigma",
            rows_beyond,
            rows_checked
        );
    }

    #[test]
    fn query_matches_monte_carlo() {
        let g = iv_graph();
        let space = build_response_space(&g).unwrap();
        let x = g.index_of("X").unwrap();
        let y = g.index_of("Y").unwrap();
        let comp = space.component_of(x);
        let system = observable_map(&g, &space, comp).unwrap();
        let scm = random_scm_for_tests(&space, 29);
        let p = induced_joint(&g, &space, &scm);
        let weights = context_weights_from_joint(&g, &system, &[(x, 1)], &p).unwrap();
        let c = query_vector(&g, &space, &system, &[(x, 1)], (y, 1), &weights).unwrap();
        let linear: f64 = c.iter().zip(&scm.q[comp]).map(|(c, q)| c * q).sum();
        let exact = interventional(&g, &space, &scm, &[(x, 1)], (y, 1));
        assert!((linear - exact).abs() < 1e-12);
        let data = simulate_canonical(&g, &space, &scm, &[(x, 1)], 100_000, 31);
        let freq = data.rows().iter().filter(|r| r[y] == 1).count() as f64 / 100_000.0;
        assert!((linear - freq).abs() < 0.01);
    }

    pub(crate) fn random_scm_for_tests(space: &ResponseSpace, seed: u64) -> CanonicalScm {
        let mut rng = SplitMix64::new(seed);
        let q = space
            .profile_sizes
            .iter()
            .map(|&size| {
                let mut v: Vec<f64> = (0..size).map(|_| rng.next_gaussian().exp()).collect();
                let s: f64 = v.iter().sum();
                v.iter_mut().for_each(|p| *p /= s);
                v
            })
            .collect();
        CanonicalScm { q }
    }
}
