//! Discrete joint distributions over named variables, their chain-rule
//! factorizations, distances, and seeded sampling.
//!
//! Tables are row-major over the variable order with the first variable as
//! the most significant digit. Probabilities are f64 and every normalization
//! check uses the crate-wide 1e-12 tolerance.

use crate::graph::Node;
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("tables have different variable sets or orders")]
    ShapeMismatch,
    #[error("`{0}` is not a variable of this distribution")]
    UnknownVariable(String),
    #[error("order is not a permutation of the table's variables")]
    OrderMismatch,
    #[error("table entries must be nonnegative and sum to 1 (got sum {0})")]
    NotNormalized(f64),
    #[error("table length {got} does not match cardinality product {want}")]
    BadTableLength { got: usize, want: usize },
    #[error("conditioning event has probability zero")]
    ZeroProbabilityEvent,
    #[error("factor for `{variable}` at history {history} is degenerate and unresolved")]
    UnresolvedDegenerate { variable: String, history: usize },
    #[error("value {value} out of range for `{variable}` (cardinality {cardinality})")]
    ValueOutOfRange { variable: String, value: usize, cardinality: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

fn table_len(variables: &[Node]) -> usize {
    variables.iter().map(|v| v.cardinality).product()
}

/// Full probability table over an ordered set of discrete variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteJoint {
    variables: Vec<Node>,
    table: Vec<f64>,
}

impl DiscreteJoint {
    pub fn new(variables: Vec<Node>, table: Vec<f64>) -> Result<Self, DistError> {
        let want = table_len(&variables);
        if table.len() != want {
            return Err(DistError::BadTableLength { got: table.len(), want });
        }
        let sum: f64 = table.iter().sum();
        if table.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(DistError::NotNormalized(sum));
        }
        Ok(DiscreteJoint { variables, table })
    }

    pub fn uniform(variables: Vec<Node>) -> Self {
        let len = table_len(&variables);
        DiscreteJoint { table: vec![1.0 / len as f64; len], variables }
    }

    pub fn point_mass(variables: Vec<Node>, assignment: &[usize]) -> Self {
        let len = table_len(&variables);
        let mut table = vec![0.0; len];
        let idx = linear_index(&variables, assignment);
        table[idx] = 1.0;
        DiscreteJoint { variables, table }
    }

    /// Dirichlet-like random table: normalized exponentials of seeded
    /// Gaussian draws. Deterministic per seed.
    pub fn random(variables: Vec<Node>, seed: u64) -> Self {
        let len = table_len(&variables);
        let mut rng = SplitMix64::new(seed);
        let mut table: Vec<f64> = (0..len).map(|_| rng.next_gaussian().exp()).collect();
        let sum: f64 = table.iter().sum();
        for p in &mut table {
            *p /= sum;
        }
        DiscreteJoint { variables, table }
    }

    pub fn variables(&self) -> &[Node] {
        &self.variables
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn var_index(&self, name: &str) -> Result<usize, DistError> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| DistError::UnknownVariable(name.to_string()))
    }

    pub fn prob(&self, assignment: &[usize]) -> f64 {
        self.table[linear_index(&self.variables, assignment)]
    }

    /// Probability of a partial assignment, summing out the rest.
    pub fn prob_of(&self, event: &[(&str, usize)]) -> Result<f64, DistError> {
        let mut fixed: Vec<Option<usize>> = vec![None; self.variables.len()];
        for &(name, value) in event {
            let i = self.var_index(name)?;
            if value >= self.variables[i].cardinality {
                return Err(DistError::ValueOutOfRange {
                    variable: name.to_string(),
                    value,
                    cardinality: self.variables[i].cardinality,
                });
            }
            fixed[i] = Some(value);
        }
        let mut total = 0.0;
        for (idx, &p) in self.table.iter().enumerate() {
            let assign = assignment_of(&self.variables, idx);
            if fixed.iter().zip(&assign).all(|(f, &a)| f.is_none_or(|v| v == a)) {
                total += p;
            }
        }
        Ok(total)
    }

    /// Sum out everything but `keep` (order of `keep` becomes the new order).
    pub fn marginal(&self, keep: &[&str]) -> Result<DiscreteJoint, DistError> {
        let keep_idx: Vec<usize> =
            keep.iter().map(|n| self.var_index(n)).collect::<Result<_, _>>()?;
        let new_vars: Vec<Node> = keep_idx.iter().map(|&i| self.variables[i].clone()).collect();
        let mut table = vec![0.0; table_len(&new_vars)];
        for (idx, &p) in self.table.iter().enumerate() {
            let assign = assignment_of(&self.variables, idx);
            let sub: Vec<usize> = keep_idx.iter().map(|&i| assign[i]).collect();
            table[linear_index(&new_vars, &sub)] += p;
        }
        Ok(DiscreteJoint { variables: new_vars, table })
    }

    /// Categorical over `target` given a full assignment of `given`.
    /// Conditioning on a zero-probability event is an error.
    pub fn conditional(
        &self,
        target: &str,
        given: &[(&str, usize)],
    ) -> Result<Vec<f64>, DistError> {
        let t = self.var_index(target)?;
        let card = self.variables[t].cardinality;
        let denom = self.prob_of(given)?;
        if denom <= 0.0 {
            return Err(DistError::ZeroProbabilityEvent);
        }
        let mut out = Vec::with_capacity(card);
        for v in 0..card {
            let mut event: Vec<(&str, usize)> = given.to_vec();
            event.push((target, v));
            out.push(self.prob_of(&event)? / denom);
        }
        Ok(out)
    }

    /// Same table with variables permuted into `order`.
    pub fn reorder(&self, order: &[&str]) -> Result<DiscreteJoint, DistError> {
        let perm: Vec<usize> =
            order.iter().map(|n| self.var_index(n)).collect::<Result<_, _>>()?;
        if perm.len() != self.variables.len() {
            return Err(DistError::OrderMismatch);
        }
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.variables.len() {
            return Err(DistError::OrderMismatch);
        }
        let new_vars: Vec<Node> = perm.iter().map(|&i| self.variables[i].clone()).collect();
        let mut table = vec![0.0; self.table.len()];
        for (idx, &p) in self.table.iter().enumerate() {
            let assign = assignment_of(&self.variables, idx);
            let sub: Vec<usize> = perm.iter().map(|&i| assign[i]).collect();
            table[linear_index(&new_vars, &sub)] = p;
        }
        Ok(DiscreteJoint { variables: new_vars, table })
    }

    /// Half the L1 distance between two same-shaped tables.
    pub fn tvd(&self, other: &DiscreteJoint) -> Result<f64, DistError> {
        if self.variables != other.variables {
            return Err(DistError::ShapeMismatch);
        }
        Ok(self
            .table
            .iter()
            .zip(&other.table)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0)
    }

    /// Chain-rule factorization along `order` (a permutation of the
    /// variables). Zero-probability histories yield degenerate cells.
    pub fn factorize(&self, order: &[&str]) -> Result<ConditionalFactorization, DistError> {
        let p = self.reorder(order)?;
        let mut factors = Vec::with_capacity(p.variables.len());
        for k in 0..p.variables.len() {
            let prefix: Vec<Node> = p.variables[..k].to_vec();
            let n_hist = table_len(&prefix);
            let card = p.variables[k].cardinality;
            let mut cells = Vec::with_capacity(n_hist);
            for h in 0..n_hist {
                let hist = assignment_of(&prefix, h);
                let given: Vec<(&str, usize)> = p.variables[..k]
                    .iter()
                    .zip(&hist)
                    .map(|(v, &a)| (v.name.as_str(), a))
                    .collect();
                let denom = p.prob_of(&given)?;
                if denom <= 0.0 {
                    cells.push(FactorCell::Degenerate);
                } else {
                    let mut probs = Vec::with_capacity(card);
                    for v in 0..card {
                        let mut ev = given.clone();
                        ev.push((p.variables[k].name.as_str(), v));
                        probs.push(p.prob_of(&ev)? / denom);
                    }
                    cells.push(FactorCell::Categorical(probs));
                }
            }
            factors.push(Factor { variable: p.variables[k].clone(), cells });
        }
        Ok(ConditionalFactorization { variables: p.variables, factors })
    }

    /// IID draws, deterministic per seed.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        let mut rng = SplitMix64::new(seed);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let u = rng.next_f64();
            let mut acc = 0.0;
            let mut idx = self.table.len() - 1;
            for (i, &p) in self.table.iter().enumerate() {
                acc += p;
                if u < acc {
                    idx = i;
                    break;
                }
            }
            rows.push(assignment_of(&self.variables, idx));
        }
        Dataset { variables: self.variables.clone(), rows }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("joint serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, DistError> {
        let raw: DiscreteJoint =
            serde_json::from_str(text).map_err(|e| DistError::Parse(e.to_string()))?;
        DiscreteJoint::new(raw.variables, raw.table)
    }
}

/// Row-major linear index of a full assignment.
pub fn linear_index(variables: &[Node], assignment: &[usize]) -> usize {
    debug_assert_eq!(variables.len(), assignment.len());
    let mut idx = 0;
    for (v, &a) in variables.iter().zip(assignment) {
        debug_assert!(a < v.cardinality);
        idx = idx * v.cardinality + a;
    }
    idx
}

/// Inverse of [`linear_index`].
pub fn assignment_of(variables: &[Node], mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; variables.len()];
    for (k, v) in variables.iter().enumerate().rev() {
        out[k] = idx % v.cardinality;
        idx /= v.cardinality;
    }
    out
}

/// Rows of integer-coded observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    variables: Vec<Node>,
    rows: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn new(variables: Vec<Node>, rows: Vec<Vec<usize>>) -> Result<Self, DistError> {
        for row in &rows {
            for (v, &a) in variables.iter().zip(row) {
                if a >= v.cardinality {
                    return Err(DistError::ValueOutOfRange {
                        variable: v.name.clone(),
                        value: a,
                        cardinality: v.cardinality,
                    });
                }
            }
        }
        Ok(Dataset { variables, rows })
    }

    pub fn variables(&self) -> &[Node] {
        &self.variables
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Relative-frequency joint. Never-observed configurations get zero.
    pub fn empirical_joint(&self) -> Result<DiscreteJoint, DistError> {
        if self.rows.is_empty() {
            return Err(DistError::EmptyDataset);
        }
        let mut table = vec![0.0; table_len(&self.variables)];
        for row in &self.rows {
            table[linear_index(&self.variables, row)] += 1.0;
        }
        let n = self.rows.len() as f64;
        for p in &mut table {
            *p /= n;
        }
        Ok(DiscreteJoint { variables: self.variables.clone(), table })
    }

    /// Keep only the named columns, in the given order.
    pub fn project(&self, keep: &[&str]) -> Result<Dataset, DistError> {
        let idx: Vec<usize> = keep
            .iter()
            .map(|n| {
                self.variables
                    .iter()
                    .position(|v| v.name == *n)
                    .ok_or_else(|| DistError::UnknownVariable(n.to_string()))
            })
            .collect::<Result<_, _>>()?;
        let variables: Vec<Node> = idx.iter().map(|&i| self.variables[i].clone()).collect();
        let rows = self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect();
        Ok(Dataset { variables, rows })
    }

    /// CSV with a header of variable names and integer-coded rows.
    /// Cardinalities are inferred as `max(seen) + 1`, floored at 2.
    pub fn from_csv(text: &str) -> Result<Dataset, DistError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(DistError::EmptyDataset)?;
        let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        if names.iter().any(|n| n.is_empty()) {
            return Err(DistError::Parse("empty column name in header".into()));
        }
        let mut rows: Vec<Vec<usize>> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').map(|s| s.trim()).collect();
            if cells.len() != names.len() {
                return Err(DistError::Parse(format!(
                    "row {} has {} cells, expected {}",
                    lineno + 2,
                    cells.len(),
                    names.len()
                )));
            }
            let row: Vec<usize> = cells
                .iter()
                .map(|c| {
                    c.parse::<usize>().map_err(|_| {
                        DistError::Parse(format!("row {}: `{}` is not an integer code", lineno + 2, c))
                    })
                })
                .collect::<Result<_, _>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(DistError::EmptyDataset);
        }
        let variables: Vec<Node> = names
            .into_iter()
            .enumerate()
            .map(|(i, name)| Node {
                name,
                cardinality: rows.iter().map(|r| r[i] + 1).max().unwrap_or(2).max(2),
            })
            .collect();
        Dataset::new(variables, rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(
            &self.variables.iter().map(|v| v.name.as_str()).collect::<Vec<_>>().join(","),
        );
        out.push('\n');
        for row in &self.rows {
            out.push_str(
                &row.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(","),
            );
            out.push('\n');
        }
        out
    }
}

/// One chain-rule factor: a categorical over `variable` per history of the
/// preceding variables (row-major over the prefix).
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub variable: Node,
    pub cells: Vec<FactorCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FactorCell {
    Categorical(Vec<f64>),
    /// Zero-probability history; no distribution is implied by the data.
    Degenerate,
}

/// Chain-rule factorization of a joint along a fixed variable order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalFactorization {
    variables: Vec<Node>,
    factors: Vec<Factor>,
}

impl ConditionalFactorization {
    pub fn variables(&self) -> &[Node] {
        &self.variables
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn has_degenerate(&self) -> bool {
        self.factors
            .iter()
            .any(|f| f.cells.iter().any(|c| matches!(c, FactorCell::Degenerate)))
    }

    /// Replace every degenerate cell with an explicit categorical.
    pub fn resolve_degenerate(&mut self, fill: &[f64]) {
        for f in &mut self.factors {
            for c in &mut f.cells {
                if matches!(c, FactorCell::Degenerate) {
                    *c = FactorCell::Categorical(fill.to_vec());
                }
            }
        }
    }

    /// Overwrite a single cell; used by the ε-net when composing candidates.
    pub fn set_cell(&mut self, factor: usize, history: usize, probs: Vec<f64>) {
        self.factors[factor].cells[history] = FactorCell::Categorical(probs);
    }

    /// Product of the factors along the chain. Every cell reachable with
    /// positive probability must be resolved.
    pub fn compose(&self) -> Result<DiscreteJoint, DistError> {
        let len = table_len(&self.variables);
        let mut table = vec![0.0; len];
        for idx in 0..len {
            let assign = assignment_of(&self.variables, idx);
            let mut p = 1.0;
            for (k, factor) in self.factors.iter().enumerate() {
                let prefix: Vec<Node> = self.variables[..k].to_vec();
                let h = linear_index(&prefix, &assign[..k]);
                match &factor.cells[h] {
                    FactorCell::Categorical(probs) => p *= probs[assign[k]],
                    FactorCell::Degenerate => {
                        if p > 0.0 {
                            return Err(DistError::UnresolvedDegenerate {
                                variable: factor.variable.name.clone(),
                                history: h,
                            });
                        }
                        p = 0.0;
                    }
                }
                if p == 0.0 {
                    break;
                }
            }
            table[idx] = p;
        }
        // Renormalize away float dust so composed candidates always satisfy
        // the joint invariants.
        let sum: f64 = table.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            if sum <= 0.0 {
                return Err(DistError::NotNormalized(sum));
            }
            for p in &mut table {
                *p /= sum;
            }
        }
        DiscreteJoint::new(self.variables.clone(), table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Vec<Node> {
        vec![
            Node { name: "X".into(), cardinality: 2 },
            Node { name: "Y".into(), cardinality: 2 },
        ]
    }

    #[test]
    fn empirical_uniform() {
        let d = Dataset::new(xy(), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap();
        let p = d.empirical_joint().unwrap();
        assert_eq!(p.table(), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn empirical_point_mass() {
        let d = Dataset::new(xy(), vec![vec![1, 1], vec![1, 1]]).unwrap();
        let p = d.empirical_joint().unwrap();
        assert_eq!(p.prob(&[1, 1]), 1.0);
        assert_eq!(p.prob(&[0, 0]), 0.0);
    }

    #[test]
    fn empirical_empty_errors() {
        let d = Dataset::new(xy(), vec![]).unwrap();
        assert_eq!(d.empirical_joint().unwrap_err(), DistError::EmptyDataset);
    }

    #[test]
    fn empirical_close_to_truth_at_1000() {
        let p = DiscreteJoint::random(xy(), 7);
        let emp = p.sample(1000, 7).empirical_joint().unwrap();
        for (a, b) in p.table().iter().zip(emp.table()) {
            assert!((a - b).abs() < 0.05, "entry off by {}", (a - b).abs());
        }
    }

    #[test]
    fn factorize_uniform() {
        let p = DiscreteJoint::uniform(xy());
        let f = p.factorize(&["X", "Y"]).unwrap();
        match &f.factors()[0].cells[0] {
            FactorCell::Categorical(c) => assert_eq!(c, &vec![0.5, 0.5]),
            _ => panic!("unexpected degenerate"),
        }
        match &f.factors()[1].cells[0] {
            FactorCell::Categorical(c) => assert_eq!(c, &vec![0.5, 0.5]),
            _ => panic!("unexpected degenerate"),
        }
    }

    #[test]
    fn factorize_flags_degenerate() {
        let p = DiscreteJoint::point_mass(xy(), &[1, 1]);
        let f = p.factorize(&["X", "Y"]).unwrap();
        // P(Y | X=0) has history probability zero.
        assert_eq!(f.factors()[1].cells[0], FactorCell::Degenerate);
        match &f.factors()[1].cells[1] {
            FactorCell::Categorical(c) => assert_eq!(c, &vec![0.0, 1.0]),
            _ => panic!("resolved cell expected"),
        }
    }

    #[test]
    fn compose_round_trip() {
        for seed in [1u64, 2, 3] {
            let p = DiscreteJoint::random(xy(), seed);
            let back = p.factorize(&["X", "Y"]).unwrap().compose().unwrap();
            for (a, b) in p.table().iter().zip(back.table()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn compose_rejects_unresolved_degenerate() {
        let p = DiscreteJoint::point_mass(xy(), &[1, 1]);
        let mut f = p.factorize(&["X", "Y"]).unwrap();
        // Make the degenerate history reachable, leaving the cell unresolved.
        f.set_cell(0, 0, vec![0.5, 0.5]);
        assert!(matches!(
            f.compose().unwrap_err(),
            DistError::UnresolvedDegenerate { .. }
        ));
    }

    #[test]
    fn compose_deterministic_factors_give_point_mass() {
        let p = DiscreteJoint::point_mass(xy(), &[1, 0]);
        let mut f = p.factorize(&["X", "Y"]).unwrap();
        f.resolve_degenerate(&[1.0, 0.0]);
        let q = f.compose().unwrap();
        assert_eq!(q.prob(&[1, 0]), 1.0);
    }

    #[test]
    fn compose_matches_hand_multiplication() {
        // Three binary variables, seed 11; conditionals multiplied by hand.
        let vars = vec![
            Node { name: "A".into(), cardinality: 2 },
            Node { name: "B".into(), cardinality: 2 },
            Node { name: "C".into(), cardinality: 2 },
        ];
        let p = DiscreteJoint::random(vars, 11);
        let f = p.factorize(&["A", "B", "C"]).unwrap();
        let q = f.compose().unwrap();
        let pa = |c: &FactorCell, v: usize| match c {
            FactorCell::Categorical(probs) => probs[v],
            _ => panic!("degenerate"),
        };
        for idx in 0..8 {
            let a = assignment_of(q.variables(), idx);
            let hand = pa(&f.factors()[0].cells[0], a[0])
                * pa(&f.factors()[1].cells[a[0]], a[1])
                * pa(&f.factors()[2].cells[a[0] * 2 + a[1]], a[2]);
            assert!((q.table()[idx] - hand).abs() <= 1e-12);
        }
    }

    #[test]
    fn tvd_cases() {
        let p = DiscreteJoint::random(xy(), 5);
        assert_eq!(p.tvd(&p).unwrap(), 0.0);
        let a = DiscreteJoint::point_mass(xy(), &[0, 0]);
        let b = DiscreteJoint::point_mass(xy(), &[1, 1]);
        assert_eq!(a.tvd(&b).unwrap(), 1.0);
        let u = DiscreteJoint::uniform(xy());
        let half = DiscreteJoint::new(xy(), vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!((u.tvd(&half).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tvd_shape_mismatch() {
        let p = DiscreteJoint::uniform(xy());
        let q = DiscreteJoint::uniform(vec![Node { name: "X".into(), cardinality: 2 }]);
        assert_eq!(p.tvd(&q).unwrap_err(), DistError::ShapeMismatch);
    }

    #[test]
    fn marginal_of_uniform_is_uniform() {
        let p = DiscreteJoint::uniform(xy());
        let m = p.marginal(&["Y"]).unwrap();
        assert_eq!(m.table(), &[0.5, 0.5]);
    }

    #[test]
    fn conditional_of_independent_equals_marginal() {
        // Product of independent marginals: P(Y|X=x) = P(Y).
        let p = DiscreteJoint::new(xy(), vec![0.3 * 0.6, 0.3 * 0.4, 0.7 * 0.6, 0.7 * 0.4]).unwrap();
        let c = p.conditional("Y", &[("X", 1)]).unwrap();
        assert!((c[0] - 0.6).abs() < 1e-12);
        assert!((c[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn conditional_zero_event_errors() {
        let p = DiscreteJoint::point_mass(xy(), &[1, 1]);
        assert_eq!(
            p.conditional("Y", &[("X", 0)]).unwrap_err(),
            DistError::ZeroProbabilityEvent
        );
    }

    #[test]
    fn marginal_matches_brute_force_sum() {
        let vars = vec![
            Node { name: "A".into(), cardinality: 2 },
            Node { name: "B".into(), cardinality: 2 },
            Node { name: "C".into(), cardinality: 2 },
        ];
        let p = DiscreteJoint::random(vars.clone(), 3);
        let m = p.marginal(&["B"]).unwrap();
        for b in 0..2 {
            let mut s = 0.0;
            for a in 0..2 {
                for c in 0..2 {
                    s += p.prob(&[a, b, c]);
                }
            }
            assert!((m.table()[b] - s).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_point_mass() {
        let p = DiscreteJoint::point_mass(xy(), &[1, 0]);
        let d = p.sample(1, 99);
        assert_eq!(d.rows(), &[vec![1, 0]]);
    }

    #[test]
    fn sample_seed_determinism() {
        let p = DiscreteJoint::random(xy(), 4);
        assert_eq!(p.sample(50, 8), p.sample(50, 8));
    }

    #[test]
    fn csv_round_trip() {
        let d = Dataset::new(xy(), vec![vec![0, 1], vec![1, 0]]).unwrap();
        let back = Dataset::from_csv(&d.to_csv()).unwrap();
        assert_eq!(back.rows(), d.rows());
        assert_eq!(back.variables(), d.variables());
    }

    #[test]
    fn csv_malformed_rejected() {
        assert!(Dataset::from_csv("X,Y\n0,1\n1").is_err());
        assert!(Dataset::from_csv("X,Y\n0,banana").is_err());
    }

    #[test]
    fn joint_json_round_trip() {
        let p = DiscreteJoint::random(xy(), 21);
        let back = DiscreteJoint::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn reorder_permutes() {
        let p = DiscreteJoint::new(xy(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let q = p.reorder(&["Y", "X"]).unwrap();
        assert_eq!(q.prob(&[1, 0]), p.prob(&[0, 1]));
        let back = q.reorder(&["X", "Y"]).unwrap();
        assert_eq!(back, p);
    }
}
