//! Dense two-phase simplex for small linear programs.
//!
//! Problems are stated as `maximize c.x` subject to `<=`, `=` and `>=` rows
//! with every variable implicitly nonnegative. Phase one drives a set of
//! artificial variables to zero; phase two optimizes the real objective from
//! the feasible basis phase one leaves behind.
//!
//! Pricing is Dantzig's largest-coefficient rule. After `2 * (rows + cols)`
//! consecutive degenerate pivots a phase switches permanently to Bland's
//! lowest-index rule, which cannot cycle.

use log::{log_enabled, trace, Level};

use crate::error::{Error, Result};

/// Pivot elements smaller than this are never used.
pub const PIVOT_TOL: f64 = 1e-9;

/// Feasibility residual promised for optimal solutions of well-scaled problems.
pub const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Amount by which `x` violates this row (zero when satisfied).
    pub fn residual(&self, x: &[f64]) -> f64 {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `maximize objective.x` subject to `constraints`, `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LpProblem {
    /// A problem with `num_vars` variables and a zero objective.
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) {
        self.objective = objective;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Adds a row given as `(variable, coefficient)` terms. Repeated
    /// variables accumulate.
    pub fn add_sparse(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) {
        let mut coeffs = vec![0.0; self.num_vars];
        for &(j, a) in terms {
            coeffs[j] += a;
        }
        self.add_constraint(coeffs, relation, rhs);
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::Dimension(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                self.num_vars
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("objective has a non-finite coefficient".into()));
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != self.num_vars {
                return Err(Error::Dimension(format!(
                    "constraint {r} has {} coefficients for {} variables",
                    c.coeffs.len(),
                    self.num_vars
                )));
            }
            if c.coeffs.iter().any(|a| !a.is_finite()) || !c.rhs.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "constraint {r} has a non-finite coefficient"
                )));
            }
        }
        Ok(())
    }

    /// Largest residual of `x` over all rows and sign constraints.
    pub fn max_residual(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.residual(x))
            .fold(0.0, f64::max);
        let signs = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        rows.max(signs)
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal assignment; all zeros unless `status` is `Optimal`.
    pub x: Vec<f64>,
    pub objective_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pricing {
    Dantzig,
    Bland,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows x (cols + 1)`, last column is the right-hand side.
    a: Vec<f64>,
    /// Reduced costs; the last entry holds minus the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    allowed: Vec<bool>,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn set_objective(&mut self, costs: &[f64]) {
        let w = self.width();
        self.obj = vec![0.0; w];
        self.obj[..costs.len()].copy_from_slice(costs);
        for r in 0..self.rows {
            let cb = self.obj[self.basis[r]];
            if cb != 0.0 {
                let row = &self.a[r * w..(r + 1) * w];
                for (o, x) in self.obj.iter_mut().zip(row) {
                    *o -= cb * x;
                }
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let inv = 1.0 / self.at(pr, pc);
        for x in &mut self.a[pr * w..(pr + 1) * w] {
            *x *= inv;
        }
        self.a[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.a[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.a[r * w + pc];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[r * w..(r + 1) * w];
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                *x -= f * p;
            }
            row[pc] = 0.0;
            if row[self.cols] < 0.0 && row[self.cols] > -1e-11 {
                row[self.cols] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (x, p) in self.obj.iter_mut().zip(&pivot_row) {
                *x -= f * p;
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    fn entering(&self, pricing: Pricing) -> Option<usize> {
        let candidates = (0..self.cols).filter(|&j| self.allowed[j] && self.obj[j] > PIVOT_TOL);
        match pricing {
            Pricing::Bland => candidates.into_iter().next(),
            Pricing::Dantzig => candidates.fold(None, |best: Option<usize>, j| match best {
                Some(b) if self.obj[b] >= self.obj[j] => Some(b),
                _ => Some(j),
            }),
        }
    }

    fn leaving(&self, pc: usize, pricing: Pricing) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, pc);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.rhs(r).max(0.0) / a;
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                    let better = if tie {
                        match pricing {
                            Pricing::Bland => self.basis[r] < self.basis[br],
                            Pricing::Dantzig => a > self.at(br, pc),
                        }
                    } else {
                        ratio < bratio
                    };
                    if better {
                        Some((r, ratio))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    fn run_phase(&mut self, phase: u8) -> Result<PhaseEnd> {
        let stall_limit = 2 * (self.rows + self.cols);
        let max_iters = 50 * (self.rows + self.cols) + 1000;
        let mut pricing = Pricing::Dantzig;
        let mut stalled = 0usize;
        for iter in 0..max_iters {
            let Some(pc) = self.entering(pricing) else {
                return Ok(PhaseEnd::Optimal);
            };
            let Some(pr) = self.leaving(pc, pricing) else {
                return Ok(PhaseEnd::Unbounded);
            };
            let step = self.rhs(pr).max(0.0) / self.at(pr, pc);
            if step <= 1e-12 {
                stalled += 1;
                if stalled >= stall_limit && pricing == Pricing::Dantzig {
                    trace!("phase {phase}: switching to Bland's rule after {stalled} degenerate pivots");
                    pricing = Pricing::Bland;
                }
            } else {
                stalled = 0;
            }
            if log_enabled!(Level::Trace) {
                trace!(
                    "phase {phase} iter {iter}: enter {pc} leave row {pr} (var {}) step {step:e} objective {}",
                    self.basis[pr],
                    -self.obj[self.cols]
                );
            }
            self.pivot(pr, pc);
            if !self.obj[self.cols].is_finite() {
                return Err(Error::NumericFailure(format!(
                    "objective became non-finite in phase {phase} at iteration {iter}"
                )));
            }
        }
        Err(Error::NumericFailure(format!(
            "phase {phase} did not converge within {max_iters} pivots ({} rows, {} columns)",
            self.rows, self.cols
        )))
    }

    fn dump(&self, label: &str) {
        if !log_enabled!(Level::Trace) {
            return;
        }
        let mut out = format!("tableau {label} ({} x {}):\n", self.rows, self.cols);
        for r in 0..self.rows {
            out.push_str(&format!("  [x{:>4}]", self.basis[r]));
            for c in 0..=self.cols {
                out.push_str(&format!(" {:>10.4}", self.at(r, c)));
            }
            out.push('\n');
        }
        out.push_str("  [ obj ]");
        for c in 0..=self.cols {
            out.push_str(&format!(" {:>10.4}", self.obj[c]));
        }
        trace!("{out}");
    }
}

/// Solves `problem` with the two-phase simplex method.
///
/// Infeasible and unbounded problems are reported through
/// [`LpSolution::status`]; `Err` is reserved for malformed input and
/// numerical breakdown.
pub fn solve(problem: &LpProblem) -> Result<LpSolution> {
    problem.validate()?;
    let n = problem.num_vars;

    // Orient every row to a nonnegative right-hand side and equilibrate it.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(problem.constraints.len());
    for c in &problem.constraints {
        let scale = c.coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if scale == 0.0 {
            let ok = match c.relation {
                Relation::Le => c.rhs >= -FEAS_TOL,
                Relation::Ge => c.rhs <= FEAS_TOL,
                Relation::Eq => c.rhs.abs() <= FEAS_TOL,
            };
            if !ok {
                return Ok(infeasible(n));
            }
            continue;
        }
        let mut coeffs: Vec<f64> = c.coeffs.iter().map(|a| a / scale).collect();
        let mut rhs = c.rhs / scale;
        let mut rel = c.relation;
        if rhs < 0.0 {
            coeffs.iter_mut().for_each(|a| *a = -*a);
            rhs = -rhs;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        rows.push((coeffs, rel, rhs));
    }

    let m = rows.len();
    let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let art_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = n + slack_count + art_count;
    let w = cols + 1;
    let mut a = vec![0.0; m * w];
    let mut basis = vec![0usize; m];
    let mut is_art = vec![false; cols];
    let (mut next_slack, mut next_art) = (n, n + slack_count);
    for (r, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        a[r * w..r * w + n].copy_from_slice(coeffs);
        a[r * w + cols] = *rhs;
        match rel {
            Relation::Le => {
                a[r * w + next_slack] = 1.0;
                basis[r] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                a[r * w + next_slack] = -1.0;
                next_slack += 1;
                a[r * w + next_art] = 1.0;
                basis[r] = next_art;
                is_art[next_art] = true;
                next_art += 1;
            }
            Relation::Eq => {
                a[r * w + next_art] = 1.0;
                basis[r] = next_art;
                is_art[next_art] = true;
                next_art += 1;
            }
        }
    }

    let mut t = Tableau {
        rows: m,
        cols,
        a,
        obj: Vec::new(),
        basis,
        allowed: vec![true; cols],
    };

    if art_count > 0 {
        let costs: Vec<f64> = is_art.iter().map(|&x| if x { -1.0 } else { 0.0 }).collect();
        t.set_objective(&costs);
        t.dump("phase 1 start");
        t.run_phase(1)?;
        let infeasibility = t.obj[cols];
        let rhs_scale = rows.iter().fold(1.0f64, |s, r| s.max(r.2));
        if infeasibility > FEAS_TOL * rhs_scale {
            trace!("phase 1 ended with infeasibility {infeasibility:e}");
            return Ok(infeasible(n));
        }
        drive_out_artificials(&mut t, &is_art);
        for (j, &art) in is_art.iter().enumerate() {
            if art {
                t.allowed[j] = false;
            }
        }
    }

    let mut costs = vec![0.0; cols];
    costs[..n].copy_from_slice(&problem.objective);
    t.set_objective(&costs);
    t.dump("phase 2 start");
    match t.run_phase(2)? {
        PhaseEnd::Unbounded => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: vec![0.0; n],
                objective_value: f64::INFINITY,
            })
        }
        PhaseEnd::Optimal => {}
    }
    t.dump("final");

    let mut x = vec![0.0; n];
    for r in 0..t.rows {
        let b = t.basis[r];
        if b < n {
            x[b] = t.rhs(r).max(0.0);
        }
    }
    let residual = problem.max_residual(&x);
    let scale = problem
        .constraints
        .iter()
        .flat_map(|c| c.coeffs.iter().chain(std::iter::once(&c.rhs)))
        .fold(1.0f64, |s, a| s.max(a.abs()));
    if residual > 1e-6 * scale {
        return Err(Error::NumericFailure(format!(
            "optimal basis violates a constraint by {residual:e} (coefficient scale {scale:e})"
        )));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value: problem.objective_at(&x),
        x,
    })
}

fn infeasible(n: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        x: vec![0.0; n],
        objective_value: f64::NEG_INFINITY,
    }
}

/// Pivots basic artificials (at level zero) out of the basis; rows where that
/// is impossible are redundant and get dropped.
fn drive_out_artificials(t: &mut Tableau, is_art: &[bool]) {
    let mut r = 0;
    while r < t.rows {
        if !is_art[t.basis[r]] {
            r += 1;
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for c in 0..t.cols {
            if is_art[c] {
                continue;
            }
            let v = t.at(r, c).abs();
            if v > PIVOT_TOL && best.is_none_or(|(_, bv)| v > bv) {
                best = Some((c, v));
            }
        }
        match best {
            Some((c, _)) => {
                t.pivot(r, c);
                r += 1;
            }
            None => {
                let w = t.width();
                t.a.drain(r * w..(r + 1) * w);
                t.basis.remove(r);
                t.rows -= 1;
            }
        }
    }
}

/// Largest margin `t` such that `a.x >= t` for every row `a`, over points
/// `x` of the probability simplex. `t` is capped at 1.
///
/// The closed cone `{x >= 0 : a.x >= 0}` has a nonempty interior exactly
/// when the returned margin is positive. Returns the margin and a witness.
pub fn max_margin_point(constraints: &[Vec<f64>], dim: usize) -> Result<(f64, Vec<f64>)> {
    if dim == 0 {
        return Err(Error::Dimension("margin problem needs at least one coordinate".into()));
    }
    // Variables: x (dim), t_plus, t_minus.
    let tp = dim;
    let tm = dim + 1;
    let mut lp = LpProblem::new(dim + 2);
    let mut obj = vec![0.0; dim + 2];
    obj[tp] = 1.0;
    obj[tm] = -1.0;
    lp.set_objective(obj);
    for a in constraints {
        if a.len() != dim {
            return Err(Error::Dimension(format!(
                "margin constraint has {} coefficients, expected {dim}",
                a.len()
            )));
        }
        let mut row = a.clone();
        row.push(-1.0);
        row.push(1.0);
        lp.add_constraint(row, Relation::Ge, 0.0);
    }
    let mut simplex = vec![1.0; dim];
    simplex.extend([0.0, 0.0]);
    lp.add_constraint(simplex, Relation::Eq, 1.0);
    lp.add_sparse(&[(tp, 1.0)], Relation::Le, 1.0);
    let sol = solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "margin problem reported {:?}",
            sol.status
        )));
    }
    Ok((sol.x[tp] - sol.x[tm], sol.x[..dim].to_vec()))
}
