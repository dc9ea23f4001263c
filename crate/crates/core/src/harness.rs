//! Synthetic-model generators, brute-force oracles, and scripted experiment
//! protocols.
//!
//! The oracles deliberately avoid the simplex solver: vertex enumeration
//! solves square systems by Gaussian elimination, and the randomized path
//! walks the feasible polytope with projections only, so agreement between
//! the two routes is meaningful evidence.

use crate::bounds::{build_query_lp, lp_bounds, BoundMethod, BoundPair, BoundsError, Query};
use crate::canon::{
    build_response_space, induced_joint, CanonError, CanonicalScm, ResponseSpace,
};
use crate::confset::{
    build_epsilon_net, hoeffding_halfwidth, ConfidenceBox, ConfsetError, CoordInterval, FactorBox,
};
use crate::decompose::{
    decide_multi, decide_single, explore, four_quantities, DecomposeError, ExploreConfig,
    MoveKind, SolverPath,
};
use crate::dist::{DiscreteJoint, DistError, FactorCell};
use crate::graph::{bow_graph, two_confounder_graph, two_instrument_graph, Admg, GraphError};
use crate::lpsolve::{LinearProgram, LpError};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("vertex enumeration needs at most {cap} bases, this program has {have}")]
    TooManyBases { have: u128, cap: u128 },
    #[error("experiment spec invalid: {0}")]
    BadSpec(String),
    #[error("no feasible point found for the oracle walk")]
    NoFeasiblePoint,
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error(transparent)]
    Confset(#[from] ConfsetError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

// ── Random models ────────────────────────────────────────────────────────────

/// Dirichlet-like profile distributions: normalized exponentials of seeded
/// Gaussian draws, one vector per component. Deterministic per seed.
pub fn gen_random_scm(space: &ResponseSpace, seed: u64) -> Result<CanonicalScm, CanonError> {
    let mut rng = SplitMix64::new(seed);
    let q = (0..space.components().len())
        .map(|k| {
            let size = space.profile_size(k);
            let mut v: Vec<f64> = (0..size).map(|_| rng.next_gaussian().exp()).collect();
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|p| *p /= s);
            v
        })
        .collect();
    CanonicalScm::new(space, q)
}

// ── Brute-force bound oracle ─────────────────────────────────────────────────

const VERTEX_BASIS_CAP: u128 = 2_000_000;

/// Independent `[min, max]` of the query: exact vertex enumeration when the
/// basis count is tractable, otherwise a budgeted feasible-point walk whose
/// values always bracket no wider than the true bounds.
pub fn brute_force_bounds(
    p: &DiscreteJoint,
    g: &Admg,
    query: &Query,
    budget: usize,
) -> Result<BoundPair, HarnessError> {
    let lp = build_query_lp(p, g, query)?;
    let (lo, hi) = brute_force_lp(&lp, budget, 97)?;
    Ok(BoundPair::new(lo, hi, query, BoundMethod::Lp)?)
}

/// Oracle over a raw program (`lower` bounds must be zero, no finite upper
/// bounds: the polytope is `A x = b, x >= 0`).
pub fn brute_force_lp(
    lp: &LinearProgram,
    budget: usize,
    seed: u64,
) -> Result<(f64, f64), HarnessError> {
    let n = lp.objective.len();
    let m = lp.a_eq.len();
    let bases = binomial(n as u128, m as u128);
    if budget == 0 || bases <= VERTEX_BASIS_CAP {
        if bases > VERTEX_BASIS_CAP {
            return Err(HarnessError::TooManyBases { have: bases, cap: VERTEX_BASIS_CAP });
        }
        vertex_enumerate(lp)
    } else {
        feasible_walk(lp, budget, seed)
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc > u128::MAX / 2 {
            return u128::MAX;
        }
    }
    acc
}

/// Exact extremes over all basic feasible solutions of `A x = b, x >= 0`.
/// Linearly dependent rows are dropped first; they would make every square
/// basis singular.
fn vertex_enumerate(lp: &LinearProgram) -> Result<(f64, f64), HarnessError> {
    let n = lp.objective.len();
    let (a_ind, b_ind) = independent_rows(&lp.a_eq, &lp.b_eq);
    let m = a_ind.len();
    if m > n {
        return Err(HarnessError::NoFeasiblePoint);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut basis: Vec<usize> = (0..m).collect();
    loop {
        // Solve the square system A_B x_B = b.
        let a: Vec<Vec<f64>> =
            (0..m).map(|r| basis.iter().map(|&c| a_ind[r][c]).collect()).collect();
        if let Some(xb) = solve_square(&a, &b_ind) {
            if xb.iter().all(|&v| v >= -1e-9) {
                let mut value = 0.0;
                for (slot, &col) in basis.iter().enumerate() {
                    value += lp.objective[col] * xb[slot];
                }
                lo = lo.min(value);
                hi = hi.max(value);
            }
        }
        if !next_combination(&mut basis, n) {
            break;
        }
    }
    if !lo.is_finite() {
        return Err(HarnessError::NoFeasiblePoint);
    }
    Ok((lo, hi))
}

/// Maximal linearly independent subset of rows (Gaussian elimination with
/// partial pivoting on a working copy).
fn independent_rows(a: &[Vec<f64>], b: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let m = a.len();
    if m == 0 {
        return (Vec::new(), Vec::new());
    }
    let n = a[0].len();
    let mut work: Vec<Vec<f64>> = a.to_vec();
    let mut kept: Vec<usize> = Vec::new();
    let mut used_cols: Vec<usize> = Vec::new();
    for r in 0..m {
        // Eliminate the pivots of previously kept rows from row r.
        for (ki, &kr) in kept.iter().enumerate() {
            let col = used_cols[ki];
            let f = work[r][col] / work[kr][col];
            if f != 0.0 {
                let kr_row = work[kr].clone();
                for c in 0..n {
                    work[r][c] -= f * kr_row[c];
                }
            }
        }
        let pivot = (0..n)
            .filter(|c| !used_cols.contains(c))
            .max_by(|&i, &j| work[r][i].abs().partial_cmp(&work[r][j].abs()).expect("finite"));
        if let Some(col) = pivot {
            if work[r][col].abs() > 1e-9 {
                kept.push(r);
                used_cols.push(col);
            }
        }
    }
    (
        kept.iter().map(|&r| a[r].clone()).collect(),
        kept.iter().map(|&r| b[r]).collect(),
    )
}

/// Advances a sorted index combination; false when exhausted.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - (k - i) {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Gaussian elimination with partial pivoting; None on singular systems.
fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let m = a.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| {
            aug[i][col].abs().partial_cmp(&aug[j][col].abs()).expect("finite")
        })?;
        if aug[pivot][col].abs() < 1e-11 {
            return None;
        }
        aug.swap(col, pivot);
        for r in 0..m {
            if r == col {
                continue;
            }
            let f = aug[r][col] / aug[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..=m {
                aug[r][c] -= f * aug[col][c];
            }
        }
    }
    Some((0..m).map(|r| aug[r][m] / aug[r][r]).collect())
}

/// Budgeted walk over `{A x = b, x >= 0}`: alternating projections find a
/// feasible point, then random chords interleaved with objective pushes
/// explore toward both extremes. Every visited point is feasible, so the
/// recorded extremes always lie inside the true LP interval.
fn feasible_walk(lp: &LinearProgram, budget: usize, seed: u64) -> Result<(f64, f64), HarnessError> {
    let n = lp.objective.len();
    let (a_rows, b_rows) = independent_rows(&lp.a_eq, &lp.b_eq);
    let m = a_rows.len();
    let mut rng = SplitMix64::new(seed);

    let gram = gram_matrix(&a_rows, m, n);
    let project_affine = |x: &mut Vec<f64>| {
        // x <- x - A^T (A A^T)^-1 (A x - b)
        let resid: Vec<f64> = (0..m)
            .map(|r| a_rows[r].iter().zip(x.iter()).map(|(a, v)| a * v).sum::<f64>() - b_rows[r])
            .collect();
        if let Some(y) = solve_square(&gram, &resid) {
            for (j, xv) in x.iter_mut().enumerate() {
                let corr: f64 = (0..m).map(|r| a_rows[r][j] * y[r]).sum();
                *xv -= corr;
            }
        }
    };
    let project_null = |d: &mut Vec<f64>| {
        let ad: Vec<f64> =
            (0..m).map(|r| a_rows[r].iter().zip(d.iter()).map(|(a, v)| a * v).sum()).collect();
        if let Some(y) = solve_square(&gram, &ad) {
            for (j, dv) in d.iter_mut().enumerate() {
                let corr: f64 = (0..m).map(|r| a_rows[r][j] * y[r]).sum();
                *dv -= corr;
            }
        }
    };

    // Feasible point by alternating projections.
    let mut x = vec![1.0 / n as f64; n];
    let mut feasible = false;
    for _ in 0..2000 {
        project_affine(&mut x);
        for v in x.iter_mut() {
            *v = v.max(0.0);
        }
        let resid: f64 = (0..m)
            .map(|r| {
                (a_rows[r].iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() - b_rows[r]).abs()
            })
            .fold(0.0, f64::max);
        if resid < 1e-10 && x.iter().all(|&v| v >= -1e-12) {
            feasible = true;
            break;
        }
    }
    if !feasible {
        return Err(HarnessError::NoFeasiblePoint);
    }

    let value = |x: &[f64]| -> f64 { lp.objective.iter().zip(x).map(|(c, v)| c * v).sum() };
    let residual = |x: &[f64]| -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..m {
            let lhs: f64 = a_rows[r].iter().zip(x).map(|(a, v)| a * v).sum();
            worst = worst.max((lhs - b_rows[r]).abs());
        }
        for &v in x {
            worst = worst.max(-v);
        }
        worst
    };
    // Alternating projections until the point is verifiably feasible; only
    // such points may contribute recorded values.
    let settle = |x: &mut Vec<f64>| -> bool {
        for _ in 0..50 {
            if residual(x) < 1e-10 {
                return true;
            }
            project_affine(x);
            for v in x.iter_mut() {
                *v = v.max(0.0);
            }
        }
        residual(x) < 1e-10
    };
    let mut lo = value(&x);
    let mut hi = lo;

    // Exact projection of a vector onto {A d = 0, d_j = 0 for pinned j}:
    // restrict A to the free columns and apply the closed-form projector.
    let project_masked = |d: &mut Vec<f64>, pinned: &[bool]| {
        for j in 0..n {
            if pinned[j] {
                d[j] = 0.0;
            }
        }
        let mut gram_f = vec![vec![0.0; m]; m];
        for i in 0..m {
            for jj in 0..m {
                let mut s = 0.0;
                for k in 0..n {
                    if !pinned[k] {
                        s += a_rows[i][k] * a_rows[jj][k];
                    }
                }
                gram_f[i][jj] = s + if i == jj { 1e-12 } else { 0.0 };
            }
        }
        let ad: Vec<f64> = (0..m)
            .map(|r| a_rows[r].iter().zip(d.iter()).map(|(a, v)| a * v).sum())
            .collect();
        if let Some(y) = solve_square(&gram_f, &ad) {
            for j in 0..n {
                if pinned[j] {
                    continue;
                }
                let corr: f64 = (0..m).map(|r| a_rows[r][j] * y[r]).sum();
                d[j] -= corr;
            }
        }
    };

    // Tangent-cone projection of the (signed) objective: pin boundary
    // coordinates the projected direction would push negative and
    // re-project until the pin set stabilizes. A zero fixed point satisfies
    // the KKT conditions, so boundary walks along these directions
    // terminate at an extreme value.
    let tangent = |x: &[f64], sign: f64| -> Vec<f64> {
        let mut pinned = vec![false; n];
        loop {
            let mut d: Vec<f64> = lp.objective.iter().map(|c| sign * c).collect();
            project_masked(&mut d, &pinned);
            let mut changed = false;
            for j in 0..n {
                if !pinned[j] && x[j] <= 1e-11 && d[j] < -1e-12 {
                    pinned[j] = true;
                    changed = true;
                }
            }
            if !changed {
                return d;
            }
        }
    };
    let max_step = |x: &[f64], d: &[f64]| -> f64 {
        let mut t = f64::INFINITY;
        for j in 0..n {
            if d[j] < -1e-14 {
                t = t.min(-x[j] / d[j]);
            }
        }
        if t.is_finite() { t.max(0.0) } else { 0.0 }
    };

    // Boundary ascent from `x` along the signed objective; values are
    // recorded only after the iterate settles back to verified feasibility.
    let push_extreme = |start: &[f64], sign: f64, lo: &mut f64, hi: &mut f64| -> usize {
        let mut x = start.to_vec();
        let mut used = 0;
        for _ in 0..2 * n {
            let d = tangent(&x, sign);
            used += 1;
            let norm: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-10 {
                break;
            }
            let t = max_step(&x, &d);
            if !(t > 1e-13) {
                break;
            }
            for j in 0..n {
                x[j] = (x[j] + t * d[j]).max(0.0);
            }
            if !settle(&mut x) {
                break;
            }
            let val = value(&x);
            *lo = lo.min(val);
            *hi = hi.max(val);
        }
        used
    };

    let mut spent = push_extreme(&x, 1.0, &mut lo, &mut hi);
    spent += push_extreme(&x, -1.0, &mut lo, &mut hi);

    // Spend the rest of the budget on random chords with occasional
    // re-pushes from fresh interior points.
    let mut step = spent;
    while step < budget {
        let mut d: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
        project_null(&mut d);
        let t_plus = max_step(&x, &d);
        let neg: Vec<f64> = d.iter().map(|v| -v).collect();
        let t_minus = max_step(&x, &neg);
        let span = t_plus + t_minus;
        if span > 0.0 {
            let t = rng.next_f64() * span - t_minus;
            for j in 0..n {
                x[j] = (x[j] + t * d[j]).max(0.0);
            }
            if residual(&x) < 1e-10 {
                let v = value(&x);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if step % 512 == 0 {
            if !settle(&mut x) {
                break;
            }
            step += push_extreme(&x, 1.0, &mut lo, &mut hi);
            step += push_extreme(&x, -1.0, &mut lo, &mut hi);
        }
        step += 1;
    }
    Ok((lo, hi))
}

fn gram_matrix(a: &[Vec<f64>], m: usize, n: usize) -> Vec<Vec<f64>> {
    let mut gram = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let mut s = 0.0;
            for k in 0..n {
                s += a[i][k] * a[j][k];
            }
            gram[i][j] = s + if i == j { 1e-12 } else { 0.0 };
        }
    }
    gram
}

/// LP bounds with every observable row relaxed to `|A q - b| <= slack`;
/// dominates any trainer run whose per-conditional slack stays within the
/// matching budget.
pub fn slack_relaxed_lp_bounds(
    p: &DiscreteJoint,
    g: &Admg,
    query: &Query,
    slack: f64,
) -> Result<BoundPair, HarnessError> {
    let base = build_query_lp(p, g, query)?;
    let n = base.objective.len();
    let m = base.a_eq.len();
    // Row 0 is the simplex row: keep exact. Others get bounded slack pairs.
    let extra = 2 * (m - 1);
    let mut objective = base.objective.clone();
    objective.extend(vec![0.0; extra]);
    let mut a_eq = Vec::with_capacity(m);
    for (r, row) in base.a_eq.iter().enumerate() {
        let mut full = row.clone();
        full.extend(vec![0.0; extra]);
        if r > 0 {
            full[n + 2 * (r - 1)] = 1.0;
            full[n + 2 * (r - 1) + 1] = -1.0;
        }
        a_eq.push(full);
    }
    let mut lower = vec![0.0; n + extra];
    let mut upper = vec![f64::INFINITY; n + extra];
    for j in n..n + extra {
        lower[j] = 0.0;
        upper[j] = slack;
    }
    let lp = LinearProgram { objective, a_eq, b_eq: base.b_eq.clone(), lower, upper };
    let hi = crate::lpsolve::solve(&lp)?;
    let lo = crate::lpsolve::minimize(&lp)?;
    let (lo_lim, hi_lim) = match query {
        Query::Ate { .. } => (-1.0, 1.0),
        _ => (0.0, 1.0),
    };
    Ok(BoundPair::new(
        lo.value.clamp(lo_lim, hi_lim),
        hi.value.clamp(lo_lim, hi_lim),
        query,
        BoundMethod::Lp,
    )?)
}

// ── Fixture models ───────────────────────────────────────────────────────────

/// Canonical SCM for a graph whose components are all singletons, built from
/// per-variable conditional tables `P(v = 1 | parent config)` (binary only):
/// each response function gets the product of its per-configuration output
/// probabilities.
pub fn scm_from_tables(
    g: &Admg,
    space: &ResponseSpace,
    tables: &[Vec<f64>],
) -> Result<CanonicalScm, HarnessError> {
    let mut q = Vec::new();
    for comp in space.components() {
        if comp.len() != 1 {
            return Err(HarnessError::BadSpec(
                "table-built models need singleton components".into(),
            ));
        }
        let v = comp[0];
        let vr = space.variable(v);
        if vr.cardinality != 2 {
            return Err(HarnessError::BadSpec("table-built models are binary".into()));
        }
        let table = &tables[v];
        if table.len() != vr.n_configs {
            return Err(HarnessError::BadSpec(format!(
                "table for `{}` must have {} entries",
                g.name(v),
                vr.n_configs
            )));
        }
        let mut qk = vec![0.0; vr.n_functions];
        for (f, qf) in qk.iter_mut().enumerate() {
            let mut w = 1.0;
            for (cfg, &p1) in table.iter().enumerate() {
                w *= if vr.output(f, cfg) == 1 { p1 } else { 1.0 - p1 };
            }
            *qf = w;
        }
        q.push(qk);
    }
    Ok(CanonicalScm::new(space, q)?)
}

/// Joint `q` for one confounded pair component from a binary latent mixture:
/// `q(rx, ry) = sum_u w_u qx_u(rx) qy_u(ry)` with per-latent product-form
/// response distributions from the conditional tables.
pub fn confounded_pair_q(
    space: &ResponseSpace,
    component: usize,
    latent_weights: &[f64],
    x_tables: &[Vec<f64>],
    y_tables: &[Vec<f64>],
) -> Result<Vec<f64>, HarnessError> {
    let members = &space.components()[component];
    if members.len() != 2 {
        return Err(HarnessError::BadSpec("confounded pair needs two members".into()));
    }
    let (x, y) = (members[0], members[1]);
    let (vx, vy) = (space.variable(x), space.variable(y));
    let product_form = |vr: &crate::canon::VariableResponses, table: &[f64]| -> Vec<f64> {
        (0..vr.n_functions)
            .map(|f| {
                (0..vr.n_configs)
                    .map(|cfg| if vr.output(f, cfg) == 1 { table[cfg] } else { 1.0 - table[cfg] })
                    .product()
            })
            .collect()
    };
    let mut q = vec![0.0; space.profile_size(component)];
    for (u, &w) in latent_weights.iter().enumerate() {
        let qx = product_form(vx, &x_tables[u]);
        let qy = product_form(vy, &y_tables[u]);
        for (fx, &px) in qx.iter().enumerate() {
            for (fy, &py) in qy.iter().enumerate() {
                q[space.encode_profile(component, &[fx, fy])] += w * px * py;
            }
        }
    }
    Ok(q)
}

/// Fixture: two instruments of very different strength, one latent
/// confounder pulling treatment and outcome together, true ATE near 0.236.
pub fn scm1_fixture() -> (Admg, ResponseSpace, CanonicalScm) {
    let g = two_instrument_graph();
    let space = build_response_space(&g).expect("fixture fits the cap");
    // Latent U ~ Bernoulli(0.5).
    // X | I1, I2, U (configs ordered i1-major): I2 is the stronger
    // instrument; the exact two-instrument bound sits strictly positive, so
    // enough samples eventually certify the best action.
    let x_table = |u: usize| -> Vec<f64> {
        (0..4)
            .map(|cfg| {
                let i1 = cfg / 2;
                let i2 = cfg % 2;
                0.03 + 0.25 * i1 as f64 + 0.55 * i2 as f64 + 0.15 * u as f64
            })
            .collect()
    };
    // Y | X, U; means give E[Y|do(1)] = 0.501 and E[Y|do(0)] = 0.265.
    let y_table = |u: usize| -> Vec<f64> {
        (0..2)
            .map(|x| match (u, x) {
                (0, 0) => 0.20,
                (0, 1) => 0.40,
                (1, 0) => 0.33,
                (1, 1) => 0.602,
                _ => unreachable!(),
            })
            .collect()
    };
    let comp_xy = space.component_of(g.index_of("X").unwrap());
    let q_xy = confounded_pair_q(
        &space,
        comp_xy,
        &[0.5, 0.5],
        &[x_table(0), x_table(1)],
        &[y_table(0), y_table(1)],
    )
    .expect("pair construction");
    let mut q: Vec<Vec<f64>> = Vec::new();
    for (k, comp) in space.components().iter().enumerate() {
        if k == comp_xy {
            q.push(q_xy.clone());
        } else {
            // Instruments are fair coins.
            let v = comp[0];
            debug_assert!(space.variable(v).parents.is_empty());
            q.push(vec![0.5, 0.5]);
        }
    }
    let scm = CanonicalScm::new(&space, q).expect("fixture q valid");
    (g, space, scm)
}

/// Fixture: two observed confounders, no latent confounding, ATE exactly
/// 0.06 (the treatment coefficient is additive with no interaction).
pub fn scm2_fixture() -> (Admg, ResponseSpace, CanonicalScm) {
    let g = two_confounder_graph();
    let space = build_response_space(&g).expect("fixture fits the cap");
    let z1 = vec![0.40];
    let z2 = vec![0.60];
    // X | Z1, Z2.
    let x: Vec<f64> =
        (0..4).map(|cfg| 0.20 + 0.25 * (cfg / 2) as f64 + 0.35 * (cfg % 2) as f64).collect();
    // Y | Z1, Z2, X with configs z1-major, x fastest.
    let y: Vec<f64> = (0..8)
        .map(|cfg| {
            let z1v = cfg / 4;
            let z2v = (cfg / 2) % 2;
            let xv = cfg % 2;
            0.25 + 0.20 * z1v as f64 + 0.25 * z2v as f64 + 0.06 * xv as f64
        })
        .collect();
    let scm = scm_from_tables(&g, &space, &[z1, z2, x, y]).expect("fixture tables valid");
    (g, space, scm)
}

/// Fixture: plain bow with strong confounding; every candidate's bound
/// stays wide, so thresholds inside it force the observe verdict.
pub fn bow_fixture() -> (Admg, ResponseSpace, CanonicalScm) {
    let g = bow_graph();
    let space = build_response_space(&g).expect("fixture fits the cap");
    let comp = space.component_of(0);
    let q = confounded_pair_q(
        &space,
        comp,
        &[0.5, 0.5],
        &[vec![0.25], vec![0.75]],
        &[vec![0.30, 0.55], vec![0.45, 0.80]],
    )
    .expect("pair construction");
    let scm = CanonicalScm::new(&space, vec![q]).expect("fixture q valid");
    (g, space, scm)
}

// ── Truth-centered boxes and nested lattices ─────────────────────────────────

/// Confidence box centered on the exact factorization of `p` with Hoeffding
/// widths computed from implied counts at sample size `n`. Boxes built this
/// way nest exactly as `n` grows, which isolates the monotonicity of the
/// decomposition from sampling noise.
pub fn truth_centered_box(
    p: &DiscreteJoint,
    g: &Admg,
    alpha: f64,
    n: usize,
) -> Result<ConfidenceBox, HarnessError> {
    let order_idx = g.topological_order()?;
    let order: Vec<crate::graph::Node> =
        order_idx.iter().map(|&i| g.nodes()[i].clone()).collect();
    let names: Vec<&str> = order.iter().map(|v| v.name.as_str()).collect();
    let q = p.reorder(&names)?;
    let fact = q.factorize(&names)?;
    let m_total: usize = (0..order.len())
        .map(|k| {
            let n_hist: usize = order[..k].iter().map(|v| v.cardinality).product();
            n_hist * (order[k].cardinality - 1)
        })
        .sum();
    let mut factors = Vec::new();
    for (k, factor) in fact.factors().iter().enumerate() {
        let prefix: Vec<crate::graph::Node> = order[..k].to_vec();
        let mut intervals = Vec::new();
        for (h, cell) in factor.cells.iter().enumerate() {
            let hist = crate::dist::assignment_of(&prefix, h);
            let hist_event: Vec<(&str, usize)> =
                names[..k].iter().zip(&hist).map(|(&nm, &a)| (nm, a)).collect();
            let p_hist = q.prob_of(&hist_event)?;
            let count = (n as f64 * p_hist).round() as usize;
            let mut states = Vec::new();
            match cell {
                FactorCell::Categorical(probs) if count > 0 => {
                    let eps = hoeffding_halfwidth(count, alpha / m_total as f64)?;
                    for s in 0..order[k].cardinality - 1 {
                        states.push(CoordInterval {
                            lower: (probs[s] - eps).max(0.0),
                            upper: (probs[s] + eps).min(1.0),
                            center: Some(probs[s]),
                            count,
                        });
                    }
                }
                _ => {
                    for _ in 0..order[k].cardinality - 1 {
                        states.push(CoordInterval { lower: 0.0, upper: 1.0, center: None, count: 0 });
                    }
                }
            }
            intervals.push(states);
        }
        factors.push(FactorBox { variable: order[k].clone(), intervals });
    }
    Ok(ConfidenceBox { order, factors, alpha, m_total, sample_size: n })
}

/// One schedule step of the nested-lattice protocol.
#[derive(Debug, Clone, Serialize)]
pub struct LatticeStep {
    pub n: usize,
    pub inner_width: f64,
    pub union_width: f64,
    pub outer_width: f64,
    pub candidate_count: usize,
    pub decision: String,
    /// Gap `u_lo - l_hi` (negative when the inner region is empty).
    pub inner_gap: f64,
    pub max_candidate_width: f64,
}

/// Runs the decomposition over truth-centered boxes at each `n`, with one
/// shared candidate lattice drawn from the widest box and restricted to each
/// tighter box (plus the common center), so candidate sets nest exactly.
pub fn nested_lattice_run(
    p_true: &DiscreteJoint,
    g: &Admg,
    query: &Query,
    schedule: &[usize],
    alpha: f64,
    eps_s: f64,
    m: usize,
    seed: u64,
    gamma: Option<f64>,
) -> Result<Vec<LatticeStep>, HarnessError> {
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::BadSpec("schedule must be strictly increasing".into()));
    }
    let widest = truth_centered_box(p_true, g, alpha, schedule[0])?;
    let base_net = build_epsilon_net(&widest, eps_s, m, seed)?;
    let center = widest.center_joint()?;
    let mut steps = Vec::new();
    for &n in schedule {
        let cbox = truth_centered_box(p_true, g, alpha, n)?;
        let mut candidates: Vec<DiscreteJoint> = Vec::new();
        for cand in &base_net.candidates {
            if cbox.contains_joint(cand)? {
                candidates.push(cand.clone());
            }
        }
        candidates.push(center.clone());
        let mut pairs = Vec::new();
        let mut skipped = 0usize;
        for (id, cand) in candidates.iter().enumerate() {
            match lp_bounds(cand, g, query) {
                Ok(pair) => pairs.push((id, pair)),
                Err(BoundsError::Infeasible { .. }) => skipped += 1,
                Err(e) => return Err(e.into()),
            }
        }
        let _ = skipped;
        let dec = four_quantities(&pairs)?;
        let decision = match (query, gamma) {
            (Query::Ate { .. }, _) => decide_multi(&dec)?,
            (_, Some(gv)) => decide_single(&dec, gv)?,
            (_, None) => decide_multi(&dec)?,
        };
        let max_width =
            pairs.iter().map(|(_, b)| b.width()).fold(0.0, f64::max);
        steps.push(LatticeStep {
            n,
            inner_width: dec.inner_width(),
            union_width: dec.union_width(),
            outer_width: dec.outer_width(),
            candidate_count: dec.candidate_count,
            decision: match decision.kind {
                MoveKind::Return { .. } => "return".into(),
                MoveKind::Observe => "observe".into(),
                MoveKind::Collect => "collect".into(),
            },
            inner_gap: dec.u_lo - dec.l_hi,
            max_candidate_width: max_width,
        });
    }
    Ok(steps)
}

// ── Scripted experiments ─────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Seeds {
    pub scm: u64,
    pub data: u64,
    pub net: u64,
}

/// One observed-variable setup: a sub-graph file and a sample size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetupSpec {
    pub name: String,
    pub graph: String,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    /// Graph file (JSON) for the full data-generating model.
    pub graph: String,
    /// Canonical-SCM file (JSON `q` vectors); random per seed when absent.
    #[serde(default)]
    pub scm: Option<String>,
    /// Strictly increasing sample sizes (schedule protocol).
    #[serde(default)]
    pub schedule: Vec<usize>,
    /// Observed-variable setups (setup protocol); overrides the schedule.
    #[serde(default)]
    pub setups: Vec<SetupSpec>,
    pub query: Query,
    pub solver: SolverPath,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_eps_s")]
    pub eps_s: f64,
    #[serde(default = "default_net_samples")]
    pub net_samples: usize,
    pub seeds: Seeds,
    pub out_dir: String,
    /// Use truth-centered nested boxes instead of sampled datasets.
    #[serde(default)]
    pub nested_lattice: bool,
}

fn default_alpha() -> f64 {
    0.05
}
fn default_eps_s() -> f64 {
    0.01
}
fn default_net_samples() -> usize {
    200
}

impl ExperimentSpec {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(e.to_string()))?;
        let spec: ExperimentSpec = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| HarnessError::BadSpec(e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| HarnessError::BadSpec(e.to_string()))?
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.setups.is_empty() {
            if self.schedule.is_empty() {
                return Err(HarnessError::BadSpec("need a schedule or setups".into()));
            }
            if self.schedule.windows(2).any(|w| w[0] >= w[1]) {
                return Err(HarnessError::BadSpec("schedule must be strictly increasing".into()));
            }
        }
        Ok(())
    }
}

/// One summary row of an experiment run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub setup: String,
    pub n: usize,
    pub action: String,
    pub l_lo: f64,
    pub l_hi: f64,
    pub u_lo: f64,
    pub u_hi: f64,
    pub inner_width: f64,
    pub outer_width: f64,
    pub decision: String,
    pub mean_candidate_width: f64,
}

pub struct ExperimentBundle {
    pub records: Vec<RunRecord>,
    /// (file name, report JSON) per run.
    pub reports: Vec<(String, String)>,
    pub summary_csv: String,
}

/// Executes the spec: per setup (or per schedule step), sample data from the
/// true model, run the pipeline, and collect one report plus summary rows.
/// Writes `report_*.json` and `summary.csv` under `out_dir` when it is
/// non-empty. Identical specs and seeds produce byte-identical bundles.
pub fn run_experiment(spec: &ExperimentSpec, base: &Path) -> Result<ExperimentBundle, HarnessError> {
    spec.validate()?;
    let graph_text = std::fs::read_to_string(base.join(&spec.graph))
        .map_err(|e| HarnessError::Io(format!("{}: {}", spec.graph, e)))?;
    let full_graph = Admg::from_json(&graph_text)?;
    let space = build_response_space(&full_graph)?;
    let scm = match &spec.scm {
        Some(path) => {
            let text = std::fs::read_to_string(base.join(path))
                .map_err(|e| HarnessError::Io(format!("{}: {}", path, e)))?;
            let raw = CanonicalScm::from_json(&text)
                .map_err(|e| HarnessError::BadSpec(e.to_string()))?;
            CanonicalScm::new(&space, raw.q)?
        }
        None => gen_random_scm(&space, spec.seeds.scm)?,
    };

    let setups: Vec<SetupSpec> = if spec.setups.is_empty() {
        spec.schedule
            .iter()
            .map(|&n| SetupSpec { name: format!("n{}", n), graph: spec.graph.clone(), n })
            .collect()
    } else {
        spec.setups.clone()
    };

    let mut records = Vec::new();
    let mut reports = Vec::new();
    for (idx, setup) in setups.iter().enumerate() {
        let sub_graph = if setup.graph == spec.graph {
            full_graph.clone()
        } else {
            let text = std::fs::read_to_string(base.join(&setup.graph))
                .map_err(|e| HarnessError::Io(format!("{}: {}", setup.graph, e)))?;
            Admg::from_json(&text)?
        };
        let observed: Vec<&str> = sub_graph.nodes().iter().map(|v| v.name.as_str()).collect();

        if spec.nested_lattice {
            let p_true = induced_joint(&full_graph, &space, &scm).marginal(&observed)?;
            let steps = nested_lattice_run(
                &p_true,
                &sub_graph,
                &spec.query,
                &[setup.n],
                spec.alpha,
                spec.eps_s,
                spec.net_samples,
                spec.seeds.net,
                None,
            )?;
            let step = &steps[0];
            records.push(RunRecord {
                setup: setup.name.clone(),
                n: setup.n,
                action: spec.query.descriptor(),
                l_lo: f64::NAN,
                l_hi: f64::NAN,
                u_lo: f64::NAN,
                u_hi: f64::NAN,
                inner_width: step.inner_width,
                outer_width: step.outer_width,
                decision: step.decision.clone(),
                mean_candidate_width: step.max_candidate_width,
            });
            reports.push((
                format!("report_{}_{}.json", sanitize(&setup.name), setup.n),
                serde_json::to_string_pretty(step).expect("step serializes"),
            ));
            continue;
        }

        let data_seed = spec.seeds.data.wrapping_add(idx as u64);
        let full_data =
            crate::canon::simulate_canonical(&full_graph, &space, &scm, &[], setup.n, data_seed);
        let data = full_data.project(&observed)?;
        let config = ExploreConfig {
            alpha: spec.alpha,
            eps_s: spec.eps_s,
            net_samples: spec.net_samples,
            seed: spec.seeds.net,
            solver: spec.solver,
            gamma: crate::decompose::GammaSpec::Empirical,
            ..ExploreConfig::default()
        };
        let outcome = explore(&data, &sub_graph, &spec.query, &config)?;
        for (dec, action) in outcome.decompositions.iter().zip(&outcome.report.actions) {
            records.push(RunRecord {
                setup: setup.name.clone(),
                n: setup.n,
                action: action.name.clone(),
                l_lo: dec.l_lo,
                l_hi: dec.l_hi,
                u_lo: dec.u_lo,
                u_hi: dec.u_hi,
                inner_width: dec.inner_width(),
                outer_width: dec.outer_width(),
                decision: match outcome.decision.kind {
                    MoveKind::Return { .. } => "return".into(),
                    MoveKind::Observe => "observe".into(),
                    MoveKind::Collect => "collect".into(),
                },
                mean_candidate_width: f64::NAN,
            });
        }
        reports.push((
            format!("report_{}_{}.json", sanitize(&setup.name), setup.n),
            serde_json::to_string_pretty(&outcome.report).expect("report serializes"),
        ));
    }

    let mut summary = String::from(
        "setup,n,action,L_lo,L_hi,U_lo,U_hi,inner_width,outer_width,decision\n",
    );
    for r in &records {
        summary.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
            r.setup, r.n, r.action, r.l_lo, r.l_hi, r.u_lo, r.u_hi, r.inner_width,
            r.outer_width, r.decision
        ));
    }

    if !spec.out_dir.is_empty() {
        let out = base.join(&spec.out_dir);
        std::fs::create_dir_all(&out).map_err(|e| HarnessError::Io(e.to_string()))?;
        for (name, text) in &reports {
            std::fs::write(out.join(name), text).map_err(|e| HarnessError::Io(e.to_string()))?;
        }
        std::fs::write(out.join("summary.csv"), &summary)
            .map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    Ok(ExperimentBundle { records, reports, summary_csv: summary })
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_alphanumeric() { c } else { '_' }).collect()
}
