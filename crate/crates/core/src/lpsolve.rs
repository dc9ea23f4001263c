//! Dense two-phase simplex for the small equality-constrained programs the
//! bound solvers produce (a few hundred variables, a handful of rows).
//!
//! Bland's smallest-index pivoting rule is used throughout, so the method
//! terminates on degenerate problems without perturbation in the common
//! case; a one-shot `<= 1e-12` perturbation of `b` is applied only if the
//! iteration cap is hit, and is reported on the solution.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("bound lo > hi at coordinate {0}")]
    BadBounds(usize),
    #[error("simplex stalled after {iterations} iterations (phase {phase})")]
    Stalled { iterations: usize, phase: u8 },
    #[error("optimizer failed the feasibility audit: max residual {residual:.3e}")]
    AuditFailed { residual: f64 },
}

/// Maximization problem: `max c·x  s.t.  A_eq x = b_eq, lo <= x <= hi`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective at the optimizer; meaningful only when `status == Optimal`.
    pub value: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True when the anti-stall perturbation had to be applied.
    pub perturbed: bool,
}

/// Centralized tolerances.
#[derive(Debug, Clone, Copy)]
pub struct SimplexConfig {
    pub feas_tol: f64,
    pub pivot_tol: f64,
    pub max_iterations: usize,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        SimplexConfig { feas_tol: 1e-8, pivot_tol: 1e-10, max_iterations: 50_000 }
    }
}

impl LinearProgram {
    /// Program over the probability simplex: `max c·x, sum x = 1, x >= 0`.
    pub fn over_simplex(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            a_eq: vec![vec![1.0; n]],
            b_eq: vec![1.0],
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    /// Adds an equality row.
    pub fn push_row(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimension(format!(
                "{} objective coefficients but {}/{} bounds",
                n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.a_eq.len() != self.b_eq.len() {
            return Err(LpError::Dimension(format!(
                "{} rows but {} right-hand sides",
                self.a_eq.len(),
                self.b_eq.len()
            )));
        }
        for (i, row) in self.a_eq.iter().enumerate() {
            if row.len() != n {
                return Err(LpError::Dimension(format!("row {} has length {}", i, row.len())));
            }
        }
        if self.a_eq.is_empty() && self.lower.iter().zip(&self.upper).all(|(l, h)| h <= l) {
            return Err(LpError::Dimension("no constraint rows or usable bounds".into()));
        }
        for (i, (&l, &h)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l > h {
                return Err(LpError::BadBounds(i));
            }
        }
        Ok(())
    }

    /// Plain-text dump for triage.
    pub fn dump(&self) -> String {
        let mut s = String::from("max ");
        s.push_str(
            &self
                .objective
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{:+.6}*x{}", c, i))
                .collect::<Vec<_>>()
                .join(" "),
        );
        s.push('\n');
        for (row, rhs) in self.a_eq.iter().zip(&self.b_eq) {
            s.push_str(
                &row.iter()
                    .enumerate()
                    .filter(|(_, a)| **a != 0.0)
                    .map(|(i, a)| format!("{:+.6}*x{}", a, i))
                    .collect::<Vec<_>>()
                    .join(" "),
            );
            s.push_str(&format!(" = {:.6}\n", rhs));
        }
        for (i, (l, h)) in self.lower.iter().zip(&self.upper).enumerate() {
            s.push_str(&format!("x{} in [{:.6}, {:.6}]\n", i, l, h));
        }
        s
    }
}

/// Maximizes the program. See [`minimize`] for the negated direction.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with(lp, &SimplexConfig::default())
}

/// Minimizes by objective negation; same contract as [`solve`].
pub fn minimize(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let neg = LinearProgram {
        objective: lp.objective.iter().map(|c| -c).collect(),
        ..lp.clone()
    };
    let mut sol = solve(&neg)?;
    sol.value = -sol.value;
    Ok(sol)
}

pub fn solve_with(lp: &LinearProgram, cfg: &SimplexConfig) -> Result<LpSolution, LpError> {
    lp.validate()?;
    match run_two_phase(lp, cfg, 0.0) {
        Err(LpError::Stalled { .. }) => {
            // Anti-stall fallback: deterministic tiny perturbation of b.
            let mut sol = run_two_phase(lp, cfg, 1e-12)?;
            sol.perturbed = true;
            Ok(sol)
        }
        other => other,
    }
}

/// Converts to standard form, runs both phases, audits the result.
fn run_two_phase(
    lp: &LinearProgram,
    cfg: &SimplexConfig,
    perturbation: f64,
) -> Result<LpSolution, LpError> {
    let n_orig = lp.objective.len();

    // Shift x = lo + y so that y >= 0; finite upper bounds become rows
    // y_i + s_i = hi_i - lo_i with a fresh slack per bound.
    let mut finite_upper: Vec<usize> = Vec::new();
    for i in 0..n_orig {
        if lp.upper[i].is_finite() {
            finite_upper.push(i);
        }
        if !lp.lower[i].is_finite() {
            return Err(LpError::Dimension(format!(
                "coordinate {} has an infinite lower bound; not supported",
                i
            )));
        }
    }
    let n = n_orig + finite_upper.len();
    let m = lp.a_eq.len() + finite_upper.len();

    let mut a = vec![vec![0.0; n]; m];
    let mut b = vec![0.0; m];
    for (r, row) in lp.a_eq.iter().enumerate() {
        let mut rhs = lp.b_eq[r] + perturbation * ((r % 7) as f64 + 1.0) / 7.0;
        for (i, &coef) in row.iter().enumerate() {
            a[r][i] = coef;
            rhs -= coef * lp.lower[i];
        }
        b[r] = rhs;
    }
    for (k, &i) in finite_upper.iter().enumerate() {
        let r = lp.a_eq.len() + k;
        a[r][i] = 1.0;
        a[r][n_orig + k] = 1.0;
        b[r] = lp.upper[i] - lp.lower[i];
    }
    let mut c = vec![0.0; n];
    c[..n_orig].copy_from_slice(&lp.objective);

    let mut tab = Tableau::new(a, b, cfg);
    let mut iterations = 0;

    match tab.phase_one(&mut iterations)? {
        PhaseOutcome::Feasible => {}
        PhaseOutcome::Infeasible => {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                value: f64::NAN,
                x: Vec::new(),
                iterations,
                perturbed: false,
            })
        }
    }

    match tab.phase_two(&c, &mut iterations)? {
        PhaseOutcome2::Unbounded => Ok(LpSolution {
            status: LpStatus::Unbounded,
            value: f64::INFINITY,
            x: Vec::new(),
            iterations,
            perturbed: false,
        }),
        PhaseOutcome2::Optimal => {
            let y = tab.extract(n);
            let x: Vec<f64> = (0..n_orig).map(|i| lp.lower[i] + y[i]).collect();
            audit(lp, &x, cfg)?;
            let value = lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
            Ok(LpSolution { status: LpStatus::Optimal, value, x, iterations, perturbed: false })
        }
    }
}

/// Feasibility audit on the reported optimizer.
fn audit(lp: &LinearProgram, x: &[f64], cfg: &SimplexConfig) -> Result<(), LpError> {
    let mut residual: f64 = 0.0;
    for (row, &rhs) in lp.a_eq.iter().zip(&lp.b_eq) {
        let lhs: f64 = row.iter().zip(x).map(|(a, x)| a * x).sum();
        residual = residual.max((lhs - rhs).abs());
    }
    for i in 0..x.len() {
        residual = residual.max(lp.lower[i] - x[i]).max(x[i] - lp.upper[i]);
    }
    if residual > cfg.feas_tol {
        return Err(LpError::AuditFailed { residual });
    }
    Ok(())
}

enum PhaseOutcome {
    Feasible,
    Infeasible,
}

enum PhaseOutcome2 {
    Optimal,
    Unbounded,
}

/// Row-reduced tableau over structural columns plus one artificial per row.
struct Tableau {
    m: usize,
    n: usize,
    /// m rows of n structural + m artificial coefficients, then the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Rows dropped as redundant during the artificial drive-out.
    live: Vec<bool>,
    cfg: SimplexConfig,
}

impl Tableau {
    fn new(a: Vec<Vec<f64>>, b: Vec<f64>, cfg: &SimplexConfig) -> Self {
        let m = a.len();
        let n = if m > 0 { a[0].len() } else { 0 };
        let mut rows = Vec::with_capacity(m);
        for (r, mut row) in a.into_iter().enumerate() {
            let mut rhs = b[r];
            if rhs < 0.0 {
                for v in &mut row {
                    *v = -*v;
                }
                rhs = -rhs;
            }
            let mut full = vec![0.0; n + m + 1];
            full[..n].copy_from_slice(&row);
            full[n + r] = 1.0;
            full[n + m] = rhs;
            rows.push(full);
        }
        Tableau { m, n, rows, basis: (0..m).map(|r| n + r).collect(), live: vec![true; m], cfg: *cfg }
    }

    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.n + self.m]
    }

    /// One Bland step for the reduced costs of `obj` (a maximization):
    /// entering column = smallest index with positive reduced cost.
    fn bland_step(
        &mut self,
        reduced: &[f64],
        allowed: usize,
        iterations: &mut usize,
    ) -> Result<Option<bool>, LpError> {
        let entering = (0..allowed).find(|&j| reduced[j] > self.cfg.pivot_tol);
        let Some(j) = entering else {
            return Ok(Some(true)); // optimal
        };
        // Ratio test, ties broken by smallest basic variable index.
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for r in 0..self.m {
            if !self.live[r] {
                continue;
            }
            let a = self.rows[r][j];
            if a > self.cfg.pivot_tol {
                let ratio = self.rhs(r) / a;
                let better = ratio < best - self.cfg.pivot_tol
                    || ((ratio - best).abs() <= self.cfg.pivot_tol
                        && leave.is_none_or(|l| self.basis[r] < self.basis[l]));
                if better {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(r) = leave else {
            return Ok(Some(false)); // unbounded in this direction
        };
        self.pivot(r, j);
        *iterations += 1;
        if *iterations > self.cfg.max_iterations {
            return Err(LpError::Stalled { iterations: *iterations, phase: 0 });
        }
        Ok(None)
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.rows[r][j];
        for v in &mut self.rows[r] {
            *v /= piv;
        }
        for rr in 0..self.m {
            if rr == r || !self.live[rr] {
                continue;
            }
            let factor = self.rows[rr][j];
            if factor == 0.0 {
                continue;
            }
            for k in 0..self.rows[rr].len() {
                self.rows[rr][k] -= factor * self.rows[r][k];
            }
            self.rows[rr][j] = 0.0;
        }
        self.basis[r] = j;
    }

    /// Reduced costs of a maximization objective under the current basis.
    fn reduced_costs(&self, obj: &[f64]) -> Vec<f64> {
        let width = self.n + self.m;
        let mut reduced = vec![0.0; width];
        reduced[..obj.len()].copy_from_slice(obj);
        for r in 0..self.m {
            if !self.live[r] {
                continue;
            }
            let cb = if self.basis[r] < obj.len() { obj[self.basis[r]] } else { 0.0 };
            if cb == 0.0 {
                continue;
            }
            for j in 0..width {
                reduced[j] -= cb * self.rows[r][j];
            }
        }
        reduced
    }

    fn phase_one(&mut self, iterations: &mut usize) -> Result<PhaseOutcome, LpError> {
        // Maximize -(sum of artificials).
        let width = self.n + self.m;
        let mut obj = vec![0.0; width];
        for j in self.n..width {
            obj[j] = -1.0;
        }
        loop {
            let reduced = self.reduced_costs(&obj);
            match self.bland_step(&reduced, self.n, iterations)? {
                Some(true) => break,
                Some(false) => break, // bounded above by 0 anyway
                None => continue,
            }
        }
        let infeas: f64 =
            (0..self.m).filter(|&r| self.live[r] && self.basis[r] >= self.n).map(|r| self.rhs(r)).sum();
        if infeas > self.cfg.feas_tol {
            return Ok(PhaseOutcome::Infeasible);
        }
        // Drive remaining artificials out of the basis; a row with no
        // eligible structural pivot is redundant and gets dropped.
        for r in 0..self.m {
            if !self.live[r] || self.basis[r] < self.n {
                continue;
            }
            let pivot_col = (0..self.n).find(|&j| self.rows[r][j].abs() > self.cfg.pivot_tol);
            match pivot_col {
                Some(j) => self.pivot(r, j),
                None => self.live[r] = false,
            }
        }
        Ok(PhaseOutcome::Feasible)
    }

    fn phase_two(&mut self, c: &[f64], iterations: &mut usize) -> Result<PhaseOutcome2, LpError> {
        loop {
            let reduced = self.reduced_costs(c);
            match self.bland_step(&reduced, self.n, iterations) {
                Ok(Some(true)) => return Ok(PhaseOutcome2::Optimal),
                Ok(Some(false)) => return Ok(PhaseOutcome2::Unbounded),
                Ok(None) => continue,
                Err(LpError::Stalled { iterations, .. }) => {
                    return Err(LpError::Stalled { iterations, phase: 2 })
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn extract(&self, n_wanted: usize) -> Vec<f64> {
        let mut x = vec![0.0; n_wanted];
        for r in 0..self.m {
            if self.live[r] && self.basis[r] < n_wanted {
                x[self.basis[r]] = self.rhs(r).max(0.0);
            }
        }
        x
    }
}
