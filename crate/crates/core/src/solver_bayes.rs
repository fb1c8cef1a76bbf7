//! Solvers for Bayesian instances, where the valuation matrix is drawn from
//! a finite set of outcomes.
//!
//! A label tuple assigns an ordered (top, second) bidder pair to every
//! outcome. Signals sharing a label tuple can be merged, so an optimal
//! scheme needs at most one signal per tuple. With few outcomes every tuple
//! gets a block in one LP; with few goods only tuples whose region of the
//! signal simplex has a nonempty interior are kept.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gadgets::ordered_pairs;
use crate::lp::{self, max_margin_point, LpProblem, LpStatus, Relation};
pub use crate::model::LabelTuple;
use crate::model::{
    merge_equal_label_signals, report, signal_revenue, BayesInstance, SignalingScheme, Solution,
    Valuations, ZERO_ENTRY,
};

/// Default cap on the number of label tuples for [`solve_fixed_k`].
pub const LABEL_GUARD: u128 = 1_000;
/// Default cap on candidate checks during region enumeration.
pub const REGION_GUARD: u128 = 100_000;
/// A region is kept when its interior margin exceeds this.
pub const MARGIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BayesOptions {
    /// Require each outcome's labels to match the actual top and second bidders.
    pub ordering: bool,
    pub label_guard: u128,
    pub region_guard: u128,
}

impl Default for BayesOptions {
    fn default() -> Self {
        Self {
            ordering: true,
            label_guard: LABEL_GUARD,
            region_guard: REGION_GUARD,
        }
    }
}

/// `(n(n-1))^k`, saturating.
pub fn label_count(n: usize, k: usize) -> u128 {
    let pairs = (n * n.saturating_sub(1)) as u128;
    (0..k).fold(1u128, |acc, _| acc.saturating_mul(pairs))
}

/// All label tuples in lexicographic order.
pub fn all_label_tuples(n: usize, k: usize, guard: u128) -> Result<Vec<LabelTuple>> {
    let count = label_count(n, k);
    if count > guard {
        return Err(Error::GuardExceeded {
            what: "label tuple",
            count,
            limit: guard,
            note: " (raise --max-labels, or use --mode bayes-m)".into(),
        });
    }
    let pairs = ordered_pairs(n);
    let mut out = vec![Vec::with_capacity(k)];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                pairs.iter().map(move |&pair| {
                    let mut next = prefix.clone();
                    next.push(pair);
                    next
                })
            })
            .collect();
    }
    Ok(out.into_iter().map(LabelTuple).collect())
}

/// LP over one signal block per label tuple. Block `b` owns `phi(b, 0..m)`
/// followed by `R(b)`.
#[derive(Debug, Clone)]
pub struct Lp2 {
    pub problem: LpProblem,
    pub labels: Vec<LabelTuple>,
    /// Valuations enter the LP divided by this; `R` is in the same units.
    pub value_scale: f64,
    m: usize,
}

impl Lp2 {
    pub fn phi_var(&self, block: usize, good: usize) -> usize {
        block * (self.m + 1) + good
    }

    pub fn revenue_var(&self, block: usize) -> usize {
        block * (self.m + 1) + self.m
    }

    pub fn rows(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.labels.len())
            .map(|b| (0..self.m).map(|j| x[self.phi_var(b, j)]).collect())
            .collect()
    }
}

/// Inequalities `a.x >= 0` stating that, in every outcome covered by
/// `label`, the labeled pair are the top and second bidders.
///
/// Returns `None` when a tie between two bidders with identical rows is
/// broken against the lower index, which the evaluation never does.
fn ordering_rows(inst: &BayesInstance, label: &LabelTuple) -> Option<Vec<Vec<f64>>> {
    let (n, m) = (inst.n(), inst.m());
    let mut rows = Vec::new();
    for (l, &(a, b)) in label.pairs().iter().enumerate() {
        let psi = inst.psi(l);
        let scale = psi.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
        let mut push = |hi: usize, lo: usize| -> bool {
            let row: Vec<f64> = (0..m).map(|j| psi[hi][j] - psi[lo][j]).collect();
            let norm = row.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            if norm <= ZERO_ENTRY * scale.max(1.0) {
                return hi < lo;
            }
            rows.push(row.into_iter().map(|x| x / norm).collect());
            true
        };
        if !push(a, b) {
            return None;
        }
        for i in (0..n).filter(|&i| i != a && i != b) {
            if !push(b, i) {
                return None;
            }
        }
    }
    Some(rows)
}

/// Builds the LP for the given label tuples. Per block: `R <= value(top)` and
/// `R = value(second)` aggregated over outcomes, and per good the blocks'
/// `phi` sum to one. With `ordering`, every outcome's labels must also be
/// its actual top and second bidders.
pub fn build_lp2(inst: &BayesInstance, ordering: bool, labels: &[LabelTuple]) -> Result<Lp2> {
    if labels.is_empty() {
        return Err(Error::InvalidArgument("label set is empty".into()));
    }
    let (n, m, k) = (inst.n(), inst.m(), inst.k());
    for label in labels {
        if label.len() != k || label.pairs().iter().any(|&(a, b)| a == b || a >= n || b >= n) {
            return Err(Error::InvalidArgument(format!("label {label} is not valid for this instance")));
        }
    }
    let mut weighted: Vec<_> = (0..k).map(|l| inst.weighted_psi(l)).collect();
    let value_scale = weighted.iter().flatten().flatten().fold(0.0f64, |a, &v| a.max(v));
    let value_scale = if value_scale > 0.0 { value_scale } else { 1.0 };
    for v in weighted.iter_mut().flatten().flatten() {
        *v /= value_scale;
    }
    let num_vars = labels.len() * (m + 1);
    let mut lp = Lp2 {
        problem: LpProblem::new(num_vars),
        labels: labels.to_vec(),
        value_scale,
        m,
    };
    let mut objective = vec![0.0; num_vars];
    for b in 0..labels.len() {
        objective[lp.revenue_var(b)] = 1.0;
    }
    lp.problem.set_objective(objective);
    for (b, label) in labels.iter().enumerate() {
        let r = lp.revenue_var(b);
        let mut top = vec![0.0; m];
        let mut second = vec![0.0; m];
        for (l, &(a, c)) in label.pairs().iter().enumerate() {
            for j in 0..m {
                top[j] += weighted[l][a][j];
                second[j] += weighted[l][c][j];
            }
        }
        let terms = |coef: &[f64]| -> Vec<(usize, f64)> {
            std::iter::once((r, 1.0))
                .chain(coef.iter().enumerate().map(|(j, &v)| (lp.phi_var(b, j), -v)))
                .collect()
        };
        let (top_terms, second_terms) = (terms(&top), terms(&second));
        lp.problem.add_sparse(&top_terms, Relation::Le, 0.0);
        lp.problem.add_sparse(&second_terms, Relation::Eq, 0.0);
        if ordering {
            for (l, &(a, c)) in label.pairs().iter().enumerate() {
                let psi = inst.psi(l);
                let mut order = |hi: usize, lo: usize| {
                    let t: Vec<(usize, f64)> = (0..m)
                        .map(|j| (lp.phi_var(b, j), psi[hi][j] - psi[lo][j]))
                        .collect();
                    lp.problem.add_sparse(&t, Relation::Ge, 0.0);
                };
                order(a, c);
                for i in (0..n).filter(|&i| i != a && i != c) {
                    order(c, i);
                }
            }
        }
    }
    for j in 0..m {
        let t: Vec<(usize, f64)> = (0..labels.len()).map(|b| (lp.phi_var(b, j), 1.0)).collect();
        lp.problem.add_sparse(&t, Relation::Eq, 1.0);
    }
    Ok(lp)
}

/// Solves [`build_lp2`] and extracts the merged scheme.
pub fn solve_lp2(inst: &BayesInstance, ordering: bool, labels: &[LabelTuple]) -> Result<Solution> {
    let lp = build_lp2(inst, ordering, labels)?;
    let sol = lp::solve(&lp.problem)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!("signaling LP reported {:?}", sol.status)));
    }
    let raw = SignalingScheme::from_approximate(lp.rows(&sol.x), inst.m())?;
    let scheme = merge_equal_label_signals(inst, &raw)?;
    let report = report(inst, &scheme)?;
    Ok(Solution {
        scheme,
        report,
        objective: sol.objective_value * lp.value_scale,
    })
}

/// Optimal scheme with one LP block per label tuple; practical for few outcomes.
pub fn solve_fixed_k(inst: &BayesInstance) -> Result<Solution> {
    solve_fixed_k_with(inst, &BayesOptions::default())
}

pub fn solve_fixed_k_with(inst: &BayesInstance, opts: &BayesOptions) -> Result<Solution> {
    let labels = all_label_tuples(inst.n(), inst.k(), opts.label_guard)?;
    solve_lp2(inst, opts.ordering, &labels)
}

/// Cell of the signal simplex on which every outcome's top and second
/// bidders are fixed by `label`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub label: LabelTuple,
    /// Rows `a` of the closed cone `a.x >= 0`, each scaled to unit max-norm.
    pub constraints: Vec<Vec<f64>>,
    pub interior_witness: Option<Vec<f64>>,
}

impl Region {
    /// Whether `x` lies in the closed region up to `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.constraints
            .iter()
            .all(|a| a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() >= -tol)
    }
}

/// `sum_{i=0}^{d} C(t, i)`: the most cells `t` hyperplanes cut `R^d` into.
pub fn whitney_bound(d: usize, t: usize) -> u128 {
    let mut total = 0u128;
    let mut c = 1u128;
    for i in 0..=d.min(t) {
        total = total.saturating_add(c);
        c = c.saturating_mul((t - i) as u128) / (i as u128 + 1);
    }
    total
}

/// Label tuples whose region has a nonempty interior, found level by level
/// over outcomes. Sorted by label.
pub fn enumerate_regions(inst: &BayesInstance) -> Result<Vec<Region>> {
    enumerate_regions_with(inst, REGION_GUARD)
}

pub fn enumerate_regions_with(inst: &BayesInstance, guard: u128) -> Result<Vec<Region>> {
    let (n, m, k) = (inst.n(), inst.m(), inst.k());
    let pairs = ordered_pairs(n);
    let mut checks = 0u128;
    let mut frontier: Vec<Region> = vec![Region {
        label: LabelTuple(Vec::new()),
        constraints: Vec::new(),
        interior_witness: None,
    }];
    for _ in 0..k {
        let candidates: Vec<LabelTuple> = frontier
            .iter()
            .flat_map(|r| {
                pairs.iter().map(move |&p| {
                    let mut next = r.label.0.clone();
                    next.push(p);
                    LabelTuple(next)
                })
            })
            .collect();
        checks += candidates.len() as u128;
        if checks > guard {
            return Err(Error::GuardExceeded {
                what: "region candidate",
                count: checks,
                limit: guard,
                note: format!(
                    " (Whitney bound estimate {} regions; raise --max-regions)",
                    whitney_bound(m, n * n * k)
                ),
            });
        }
        let checked: Vec<Option<Region>> = candidates
            .into_par_iter()
            .map(|label| -> Result<Option<Region>> {
                let Some(constraints) = ordering_rows(inst, &label) else {
                    return Ok(None);
                };
                let (t, x) = max_margin_point(&constraints, m)?;
                Ok((t > MARGIN_TOL).then(|| Region {
                    label,
                    constraints,
                    interior_witness: Some(x),
                }))
            })
            .collect::<Result<_>>()?;
        frontier = checked.into_iter().flatten().collect();
        frontier.sort_by(|a, b| a.label.cmp(&b.label));
    }
    Ok(frontier)
}

/// Optimal scheme with one LP block per region; practical for few goods.
pub fn solve_fixed_m(inst: &BayesInstance) -> Result<Solution> {
    solve_fixed_m_with(inst, &BayesOptions::default())
}

pub fn solve_fixed_m_with(inst: &BayesInstance, opts: &BayesOptions) -> Result<Solution> {
    let regions = enumerate_regions_with(inst, opts.region_guard)?;
    let labels: Vec<LabelTuple> = regions.into_iter().map(|r| r.label).collect();
    solve_lp2(inst, true, &labels)
}

const PIVOT_TOL: f64 = 1e-9;
const COEFF_TOL: f64 = 1e-12;

/// Nonzero `x` with `sum_s x[s] * rows[s] = 0`, if the rows are dependent.
fn dependence(rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    let s = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    // a is m x s: column s holds signal s.
    let mut a: Vec<Vec<f64>> = (0..m).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let scale = rows.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut pivot_cols = Vec::new();
    let mut free = None;
    let mut r = 0;
    for c in 0..s {
        let best = (r..m).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()));
        match best {
            Some(p) if a[p][c].abs() > PIVOT_TOL * scale => {
                a.swap(r, p);
                let piv = a[r][c];
                for v in a[r].iter_mut() {
                    *v /= piv;
                }
                for i in 0..m {
                    if i != r && a[i][c] != 0.0 {
                        let f = a[i][c];
                        for cc in 0..s {
                            a[i][cc] -= f * a[r][cc];
                        }
                    }
                }
                pivot_cols.push(c);
                r += 1;
            }
            _ => {
                free = Some(c);
                break;
            }
        }
    }
    let f = free?;
    let mut x = vec![0.0; s];
    x[f] = 1.0;
    for (row, &c) in pivot_cols.iter().enumerate() {
        x[c] = -a[row][f];
    }
    let top = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for v in x.iter_mut() {
        *v /= top;
        if v.abs() < COEFF_TOL {
            *v = 0.0;
        }
    }
    Some(x)
}

/// Rewrites a scheme so that its signals are linearly independent, hence at
/// most `m` of them, without lowering revenue. Schemes with at most `m`
/// signals are returned unchanged.
pub fn reduce_to_m_signals<I: Valuations + ?Sized>(inst: &I, scheme: &SignalingScheme) -> Result<SignalingScheme> {
    let m = inst.goods();
    crate::model::validate_scheme(scheme, m).map_err(Error::InvalidScheme)?;
    if scheme.signals() <= m {
        return Ok(scheme.clone());
    }
    let before = crate::model::revenue(inst, scheme)?;
    let mut rows = scheme.without_zero_signals().into_rows();
    while let Some(x) = dependence(&rows) {
        let rev: Vec<f64> = rows.iter().map(|r| signal_revenue(inst, r)).collect();
        let (mut max_pos, mut max_neg, mut drift) = (0.0f64, 0.0f64, 0.0);
        for (&xs, &rs) in x.iter().zip(&rev) {
            if xs > 0.0 {
                max_pos = max_pos.max(xs);
            } else if xs < 0.0 {
                max_neg = max_neg.max(-xs);
            }
            drift += xs * rs;
        }
        if max_pos == 0.0 || max_neg == 0.0 {
            return Err(Error::NumericFailure(
                "dependence among nonnegative signals has one-signed coefficients".into(),
            ));
        }
        let eps = if drift >= 0.0 { 1.0 / max_neg } else { -1.0 / max_pos };
        let hit = if drift >= 0.0 { -max_neg } else { max_pos };
        rows = rows
            .into_iter()
            .zip(&x)
            .filter(|&(_, &xs)| xs != hit)
            .filter_map(|(row, &xs)| {
                let f = 1.0 + eps * xs;
                (f > COEFF_TOL).then(|| row.into_iter().map(|v| v * f).collect::<Vec<f64>>())
            })
            .collect();
        for j in 0..m {
            let total: f64 = rows.iter().map(|r| r[j]).sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::NumericFailure(format!(
                    "column {} drifted to {total} during signal reduction",
                    j + 1
                )));
            }
            for r in rows.iter_mut() {
                r[j] /= total;
            }
        }
    }
    let out = SignalingScheme::new(rows);
    crate::model::validate_scheme(&out, m)
        .map_err(|v| Error::NumericFailure(format!("reduced scheme is invalid: {}", Error::InvalidScheme(v))))?;
    let after = crate::model::revenue(inst, &out)?;
    if after < before - 1e-9 * before.abs().max(1.0) {
        return Err(Error::NumericFailure(format!(
            "signal reduction lowered revenue from {before} to {after}"
        )));
    }
    Ok(out)
}
