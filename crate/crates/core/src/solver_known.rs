//! Optimal signaling when the valuation matrix is known.
//!
//! Some optimal scheme uses at most one signal per ordered pair of
//! (top, second) bidders, since two signals with the same pair can be summed
//! without changing revenue. The linear program below therefore has one
//! signal block per ordered pair `(i1, i2)`: the block's revenue variable is
//! pinned to the value bidder `i2` places on the block and capped by the
//! value of `i1`. Any feasible point has at least two bidders valuing the
//! block at `R` or more, so the extracted scheme earns at least the LP
//! objective, and every scheme's optimum is representable.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gadgets::ordered_pairs;
use crate::lp::{self, LpProblem, LpStatus, Relation};
use crate::model::{
    best_bidder, bids, merge_equal_label_signals, optimal_welfare_star, report, signal_labels,
    signal_revenue, KnownInstance, SignalingScheme, Solution,
};

/// LP over signal blocks indexed by ordered bidder pairs.
///
/// Variable layout: block `b` owns `phi(b, 0..m)` followed by its revenue
/// variable `R(b)`.
#[derive(Debug, Clone)]
pub struct Lp1 {
    pub problem: LpProblem,
    pub pairs: Vec<(usize, usize)>,
    /// Valuations enter the LP divided by this; `R` is in the same units.
    pub value_scale: f64,
    m: usize,
}

impl Lp1 {
    pub fn phi_var(&self, block: usize, good: usize) -> usize {
        block * (self.m + 1) + good
    }

    pub fn revenue_var(&self, block: usize) -> usize {
        block * (self.m + 1) + self.m
    }

    pub fn blocks(&self) -> usize {
        self.pairs.len()
    }

    /// Signal rows read from an LP assignment.
    pub fn rows(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.blocks())
            .map(|b| (0..self.m).map(|j| x[self.phi_var(b, j)]).collect())
            .collect()
    }
}

/// Builds the LP as stated: per block `R <= value(i1)`, `R = value(i2)`, and
/// the per-good coupling `sum_blocks phi = 1`.
pub fn build_lp1(inst: &KnownInstance) -> Lp1 {
    build_lp1_with(inst, false)
}

/// With `ordering`, each block additionally requires `value(i2) >= value(i)`
/// for every other bidder `i`.
pub fn build_lp1_with(inst: &KnownInstance, ordering: bool) -> Lp1 {
    let (n, m) = (inst.n(), inst.m());
    let value_scale = unit_scale(inst);
    let psi: Vec<Vec<f64>> = inst
        .psi()
        .iter()
        .map(|row| row.iter().map(|v| v / value_scale).collect())
        .collect();
    let pairs = ordered_pairs(n);
    let num_vars = pairs.len() * (m + 1);
    let mut lp = Lp1 {
        problem: LpProblem::new(num_vars),
        pairs,
        value_scale,
        m,
    };
    let mut objective = vec![0.0; num_vars];
    for b in 0..lp.blocks() {
        objective[lp.revenue_var(b)] = 1.0;
    }
    lp.problem.set_objective(objective);
    for (b, &(i1, i2)) in lp.pairs.clone().iter().enumerate() {
        let r = lp.revenue_var(b);
        let mut top = vec![(r, 1.0)];
        let mut second = vec![(r, 1.0)];
        for j in 0..m {
            top.push((lp.phi_var(b, j), -psi[i1][j]));
            second.push((lp.phi_var(b, j), -psi[i2][j]));
        }
        lp.problem.add_sparse(&top, Relation::Le, 0.0);
        lp.problem.add_sparse(&second, Relation::Eq, 0.0);
        if ordering {
            for i in (0..n).filter(|&i| i != i1 && i != i2) {
                let terms: Vec<(usize, f64)> = (0..m)
                    .map(|j| (lp.phi_var(b, j), psi[i2][j] - psi[i][j]))
                    .collect();
                lp.problem.add_sparse(&terms, Relation::Ge, 0.0);
            }
        }
    }
    for j in 0..m {
        let terms: Vec<(usize, f64)> = (0..lp.blocks()).map(|b| (lp.phi_var(b, j), 1.0)).collect();
        lp.problem.add_sparse(&terms, Relation::Eq, 1.0);
    }
    lp
}

fn unit_scale(inst: &KnownInstance) -> f64 {
    let top = inst.psi().iter().flatten().fold(0.0f64, |a, &v| a.max(v));
    if top > 0.0 {
        top
    } else {
        1.0
    }
}

fn extract(inst: &KnownInstance, lp: &Lp1, x: &[f64], objective: f64) -> Result<Solution> {
    let raw = SignalingScheme::from_approximate(lp.rows(x), inst.m())?;
    let scheme = merge_equal_label_signals(inst, &raw)?;
    let report = report(inst, &scheme)?;
    Ok(Solution {
        scheme,
        report,
        objective: objective * lp.value_scale,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KnownOptions {
    /// Add per-block ordering rows to the LP.
    pub ordering: bool,
}

/// Revenue-optimal scheme. Uses at most `n(n-1)` signals.
pub fn solve_optimal(inst: &KnownInstance) -> Result<Solution> {
    solve_optimal_with(inst, KnownOptions::default())
}

pub fn solve_optimal_with(inst: &KnownInstance, opts: KnownOptions) -> Result<Solution> {
    let lp = build_lp1_with(inst, opts.ordering);
    let sol = lp::solve(&lp.problem)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "signaling LP reported {:?}; the all-zero revenue point is always feasible",
            sol.status
        )));
    }
    extract(inst, &lp, &sol.x, sol.objective_value)
}

/// Highest revenue among schemes whose labeled top bidders collect at least
/// `beta * W*`. Fails with [`Error::InfeasibleAtBeta`] when no scheme does.
pub fn solve_welfare_constrained(inst: &KnownInstance, beta: f64) -> Result<Solution> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("beta must lie in [0, 1], got {beta}")));
    }
    let mut lp = build_lp1(inst);
    let psi = inst.psi();
    let scale = lp.value_scale;
    let mut terms = Vec::with_capacity(lp.blocks() * inst.m());
    for (b, &(i1, _)) in lp.pairs.iter().enumerate() {
        for j in 0..inst.m() {
            terms.push((lp.phi_var(b, j), psi[i1][j] / scale));
        }
    }
    let floor = beta * optimal_welfare_star(inst) / scale;
    lp.problem.add_sparse(&terms, Relation::Ge, floor);
    let sol = lp::solve(&lp.problem)?;
    match sol.status {
        LpStatus::Optimal => extract(inst, &lp, &sol.x, sol.objective_value),
        LpStatus::Infeasible => Err(Error::InfeasibleAtBeta { beta }),
        LpStatus::Unbounded => Err(Error::Internal("welfare-constrained LP is unbounded".into())),
    }
}

/// First `(signal, good)` whose good is carried by a multi-good signal
/// although its welfare-maximizing bidder is neither of the signal's labels.
pub fn find_welfare_violation(inst: &KnownInstance, scheme: &SignalingScheme) -> Option<(usize, usize)> {
    let mu: Vec<usize> = (0..inst.m()).map(|j| best_bidder(inst, j)).collect();
    scheme.rows().iter().enumerate().find_map(|(s, row)| {
        let support = row.iter().filter(|&&x| x > 0.0).count();
        if support < 2 {
            return None;
        }
        let (h1, h2) = signal_labels(inst, row).0[0];
        row.iter()
            .enumerate()
            .find(|&(j, &x)| x > 0.0 && mu[j] != h1 && mu[j] != h2)
            .map(|(j, _)| (s, j))
    })
}

/// Splits goods out of signals until every emitted good's welfare-maximizing
/// bidder is the top or second bidder of its signal. No split lowers revenue;
/// applied to a revenue-optimal scheme the result keeps at least half of `W*`.
pub fn welfare_repair(inst: &KnownInstance, scheme: &SignalingScheme) -> Result<SignalingScheme> {
    crate::model::validate_scheme(scheme, inst.m()).map_err(Error::InvalidScheme)?;
    let mut rows = scheme.rows().clone();
    while let Some((s, j)) = find_welfare_violation(inst, &SignalingScheme::new(rows.clone())) {
        let before = signal_revenue(inst, &rows[s]);
        let mut single = vec![0.0; inst.m()];
        single[j] = rows[s][j];
        rows[s][j] = 0.0;
        let after = signal_revenue(inst, &rows[s]) + signal_revenue(inst, &single);
        debug_assert!(after >= before - 1e-9 * before.abs().max(1.0));
        rows.push(single);
    }
    Ok(SignalingScheme::new(rows))
}

/// Disjoint nonempty clusters covering all goods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    clusters: Vec<Vec<usize>>,
}

impl ClusterPartition {
    pub fn new(clusters: Vec<Vec<usize>>, m: usize) -> Result<Self> {
        let mut seen = vec![false; m];
        for c in &clusters {
            if c.is_empty() {
                return Err(Error::InvalidPartition("empty cluster".into()));
            }
            for &j in c {
                if j >= m {
                    return Err(Error::InvalidPartition(format!("good {} out of range", j + 1)));
                }
                if std::mem::replace(&mut seen[j], true) {
                    return Err(Error::InvalidPartition(format!("good {} appears twice", j + 1)));
                }
            }
        }
        if let Some(j) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidPartition(format!("good {} is not covered", j + 1)));
        }
        Ok(Self { clusters })
    }

    /// Partition from a restricted growth string (`labels[j]` = cluster of good `j`).
    pub fn from_growth_string(labels: &[usize]) -> Self {
        let count = labels.iter().max().map_or(0, |&b| b + 1);
        let mut clusters = vec![Vec::new(); count];
        for (j, &c) in labels.iter().enumerate() {
            clusters[c].push(j);
        }
        Self { clusters }
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    /// The induced 0/1 scheme: one signal per cluster.
    pub fn to_scheme(&self, m: usize) -> SignalingScheme {
        SignalingScheme::new(
            self.clusters
                .iter()
                .map(|c| {
                    let mut row = vec![0.0; m];
                    for &j in c {
                        row[j] = 1.0;
                    }
                    row
                })
                .collect(),
        )
    }
}

pub fn clustering_revenue(inst: &KnownInstance, partition: &ClusterPartition) -> Result<f64> {
    let checked = ClusterPartition::new(partition.clusters.clone(), inst.m())?;
    Ok(checked
        .clusters
        .iter()
        .map(|c| {
            let totals: Vec<f64> = inst.psi().iter().map(|row| c.iter().map(|&j| row[j]).sum()).collect();
            crate::model::max_and_second(&totals).1
        })
        .sum())
}

/// Restricted growth strings of length `m` in lexicographic order; each one
/// encodes a set partition of `0..m`.
#[derive(Debug, Clone)]
pub struct GrowthStrings {
    current: Vec<usize>,
    started: bool,
    done: bool,
}

impl GrowthStrings {
    pub fn new(m: usize) -> Self {
        Self {
            current: vec![0; m],
            started: false,
            done: m == 0,
        }
    }
}

impl Iterator for GrowthStrings {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.current.clone());
        }
        let a = &mut self.current;
        // prefix_max[i] = max(a[0..i])
        let mut prefix_max = vec![0usize; a.len()];
        for i in 1..a.len() {
            prefix_max[i] = prefix_max[i - 1].max(a[i - 1]);
        }
        for i in (1..a.len()).rev() {
            if a[i] <= prefix_max[i] {
                a[i] += 1;
                for v in a.iter_mut().skip(i + 1) {
                    *v = 0;
                }
                return Some(a.clone());
            }
        }
        self.done = true;
        None
    }
}

/// Default cap on `m` for exhaustive clustering search (Bell(10) = 115975).
pub const PARTITION_GUARD: usize = 10;

/// Best clustering scheme by exhaustive enumeration of set partitions. Ties
/// go to the first partition in enumeration order.
pub fn clustering_bruteforce(inst: &KnownInstance, guard: usize) -> Result<(ClusterPartition, f64)> {
    let m = inst.m();
    if m > guard {
        return Err(Error::GuardExceeded {
            what: "clustering good",
            count: m as u128,
            limit: guard as u128,
            note: " (raise --max-partition-m to enumerate all set partitions)".into(),
        });
    }
    let psi = inst.psi();
    let strings: Vec<Vec<usize>> = GrowthStrings::new(m).collect();
    let value = |labels: &[usize]| -> f64 {
        let count = labels.iter().max().map_or(0, |&b| b + 1);
        let mut totals = vec![vec![0.0; inst.n()]; count];
        for (j, &c) in labels.iter().enumerate() {
            for (i, row) in psi.iter().enumerate() {
                totals[c][i] += row[j];
            }
        }
        totals.iter().map(|t| crate::model::max_and_second(t).1).sum()
    };
    let (idx, best) = strings
        .par_iter()
        .enumerate()
        .map(|(idx, s)| (idx, value(s)))
        .reduce(
            || (usize::MAX, f64::NEG_INFINITY),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    Ok((ClusterPartition::from_growth_string(&strings[idx]), best))
}

/// `min_{i'} sum_j max_{i != i'} psi(i, j)`: an upper bound on the revenue of
/// every signaling scheme.
pub fn clustering_bound(inst: &KnownInstance) -> f64 {
    let psi = inst.psi();
    (0..inst.n())
        .map(|skip| {
            (0..inst.m())
                .map(|j| {
                    (0..inst.n())
                        .filter(|&i| i != skip)
                        .map(|i| psi[i][j])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Welfare-maximizing bidders `mu(j)` of every good.
pub fn welfare_bidders(inst: &KnownInstance) -> Vec<usize> {
    (0..inst.m()).map(|j| best_bidder(inst, j)).collect()
}

/// Values each bidder places on `row`; re-exported for diagnostics.
pub fn signal_values(inst: &KnownInstance, row: &[f64]) -> Vec<f64> {
    bids(inst.psi(), row)
}
