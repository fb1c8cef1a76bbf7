//! Auction environments, signaling schemes, and exact revenue/welfare
//! evaluation.
//!
//! Every quantity here is computed from the *normalized valuations*
//! `psi(i, j) = p(j) * V(i, j)`. Under truthful bidding the expected payment
//! collected on a signal equals the second-highest entry of the vector
//! `sum_j phi(signal, j) * psi(., j)`, so revenue is a sum of second maxima of
//! linear forms in the rows of `phi`.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance used for every probability-sum check.
pub const PROB_TOL: f64 = 1e-9;

/// Relative tolerance under which two bids count as tied.
pub const TIE_TOL: f64 = 1e-9;

/// Entries of extracted schemes below this are treated as zero.
pub(crate) const ZERO_ENTRY: f64 = 1e-12;

/// Dense row-major matrix.
pub type Matrix = Vec<Vec<f64>>;

/// Read access to the valuation structure of an instance.
///
/// A known-valuations instance is exposed as a single outcome with weight 1.
pub trait Valuations {
    fn bidders(&self) -> usize;
    fn goods(&self) -> usize;
    fn outcome_count(&self) -> usize;
    /// Weight `q(l)` and normalized valuation matrix of outcome `l`.
    fn outcome(&self, l: usize) -> (f64, &Matrix);
    /// Prior over goods.
    fn good_probabilities(&self) -> &[f64];
    /// Raw (un-normalized) valuations of outcome `l`.
    fn raw_values(&self, l: usize) -> &Matrix;
}

fn check_distribution(name: &str, probs: &[f64], tol: f64) -> Result<Vec<f64>> {
    if probs.is_empty() {
        return Err(Error::InvalidInstance(format!("{name} is empty")));
    }
    for (idx, &x) in probs.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidInstance(format!(
                "{name}[{}] = {x} is not a nonnegative finite probability",
                idx + 1
            )));
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidInstance(format!(
            "{name} sums to {total}, expected 1 within {tol:e}"
        )));
    }
    Ok(probs.iter().map(|x| x / total).collect())
}

fn check_values(values: &Matrix, n: usize, m: usize, what: &str) -> Result<()> {
    if values.len() != n {
        return Err(Error::Dimension(format!(
            "{what} has {} rows, expected {n}",
            values.len()
        )));
    }
    for (i, row) in values.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Dimension(format!(
                "{what} row {} has {} entries, expected {m}",
                i + 1,
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInstance(format!(
                    "{what}({}, {}) = {v} must be finite and nonnegative",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

fn normalize(p: &[f64], values: &Matrix) -> Matrix {
    values
        .iter()
        .map(|row| row.iter().zip(p).map(|(v, pj)| v * pj).collect())
        .collect()
}

/// Known-valuations environment: `n` bidders, `m` goods, prior `p` and the
/// valuation matrix `V` (one row per bidder).
#[derive(Debug, Clone, PartialEq)]
pub struct KnownInstance {
    p: Vec<f64>,
    values: Matrix,
    psi: Matrix,
}

impl KnownInstance {
    pub fn new(p: Vec<f64>, values: Matrix) -> Result<Self> {
        Self::with_tolerance(p, values, PROB_TOL)
    }

    /// Like [`KnownInstance::new`] with a custom probability-sum tolerance.
    /// The prior is renormalized after the check.
    pub fn with_tolerance(p: Vec<f64>, values: Matrix, tol: f64) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidInstance(format!(
                "at least 2 bidders are required, got {n}"
            )));
        }
        let p = check_distribution("p", &p, tol)?;
        check_values(&values, n, p.len(), "V")?;
        let psi = normalize(&p, &values);
        Ok(Self { p, values, psi })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn psi(&self) -> &Matrix {
        &self.psi
    }

    /// Same instance with every valuation multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .map(|row| row.iter().map(|v| v * factor).collect())
            .collect();
        Self::new(self.p.clone(), values)
    }
}

impl Valuations for KnownInstance {
    fn bidders(&self) -> usize {
        self.n()
    }
    fn goods(&self) -> usize {
        self.m()
    }
    fn outcome_count(&self) -> usize {
        1
    }
    fn outcome(&self, _l: usize) -> (f64, &Matrix) {
        (1.0, &self.psi)
    }
    fn good_probabilities(&self) -> &[f64] {
        &self.p
    }
    fn raw_values(&self, _l: usize) -> &Matrix {
        &self.values
    }
}

/// Bayesian environment: the valuation matrix is `Vs[l]` with probability `q[l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesInstance {
    p: Vec<f64>,
    q: Vec<f64>,
    values: Vec<Matrix>,
    psi: Vec<Matrix>,
}

impl BayesInstance {
    pub fn new(p: Vec<f64>, q: Vec<f64>, values: Vec<Matrix>) -> Result<Self> {
        Self::with_tolerance(p, q, values, PROB_TOL)
    }

    pub fn with_tolerance(p: Vec<f64>, q: Vec<f64>, values: Vec<Matrix>, tol: f64) -> Result<Self> {
        let p = check_distribution("p", &p, tol)?;
        let q = check_distribution("q", &q, tol)?;
        if values.len() != q.len() {
            return Err(Error::Dimension(format!(
                "{} valuation matrices for {} outcome probabilities",
                values.len(),
                q.len()
            )));
        }
        let n = values[0].len();
        if n < 2 {
            return Err(Error::InvalidInstance(format!(
                "at least 2 bidders are required, got {n}"
            )));
        }
        for (l, v) in values.iter().enumerate() {
            check_values(v, n, p.len(), &format!("V_{}", l + 1))?;
        }
        let psi = values.iter().map(|v| normalize(&p, v)).collect();
        Ok(Self { p, q, values, psi })
    }

    pub fn n(&self) -> usize {
        self.values[0].len()
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }

    pub fn k(&self) -> usize {
        self.q.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn values(&self) -> &[Matrix] {
        &self.values
    }

    /// Normalized valuations of outcome `l`.
    pub fn psi(&self, l: usize) -> &Matrix {
        &self.psi[l]
    }

    /// Outcome-weighted normalized valuations `q(l) * psi_l(i, j)`.
    pub fn weighted_psi(&self, l: usize) -> Matrix {
        let w = self.q[l];
        self.psi[l]
            .iter()
            .map(|row| row.iter().map(|x| w * x).collect())
            .collect()
    }
}

impl From<KnownInstance> for BayesInstance {
    fn from(inst: KnownInstance) -> Self {
        BayesInstance {
            p: inst.p,
            q: vec![1.0],
            values: vec![inst.values],
            psi: vec![inst.psi],
        }
    }
}

impl Valuations for BayesInstance {
    fn bidders(&self) -> usize {
        self.n()
    }
    fn goods(&self) -> usize {
        self.m()
    }
    fn outcome_count(&self) -> usize {
        self.k()
    }
    fn outcome(&self, l: usize) -> (f64, &Matrix) {
        (self.q[l], &self.psi[l])
    }
    fn good_probabilities(&self) -> &[f64] {
        &self.p
    }
    fn raw_values(&self, l: usize) -> &Matrix {
        &self.values[l]
    }
}

/// Either kind of environment, as read from an instance file.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Known(KnownInstance),
    Bayes(BayesInstance),
}

impl Instance {
    /// View as a Bayesian instance; a known instance becomes the `k = 1` case.
    pub fn to_bayes(&self) -> BayesInstance {
        match self {
            Instance::Known(k) => k.clone().into(),
            Instance::Bayes(b) => b.clone(),
        }
    }
}

macro_rules! delegate {
    ($self:ident, $inner:ident => $e:expr) => {
        match $self {
            Instance::Known($inner) => $e,
            Instance::Bayes($inner) => $e,
        }
    };
}

impl Valuations for Instance {
    fn bidders(&self) -> usize {
        delegate!(self, i => i.bidders())
    }
    fn goods(&self) -> usize {
        delegate!(self, i => i.goods())
    }
    fn outcome_count(&self) -> usize {
        delegate!(self, i => i.outcome_count())
    }
    fn outcome(&self, l: usize) -> (f64, &Matrix) {
        delegate!(self, i => i.outcome(l))
    }
    fn good_probabilities(&self) -> &[f64] {
        delegate!(self, i => i.good_probabilities())
    }
    fn raw_values(&self, l: usize) -> &Matrix {
        delegate!(self, i => i.raw_values(l))
    }
}

/// One way in which a matrix fails to be a signaling scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RowLength {
        signal: usize,
        len: usize,
        expected: usize,
    },
    EntryOutOfRange {
        signal: usize,
        good: usize,
        value: f64,
    },
    ColumnSum {
        good: usize,
        sum: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::RowLength {
                signal,
                len,
                expected,
            } => write!(
                f,
                "signal {} has {len} entries, expected {expected}",
                signal + 1
            ),
            Violation::EntryOutOfRange { signal, good, value } => write!(
                f,
                "entry ({}, {}) = {value} is outside [0, 1]",
                signal + 1,
                good + 1
            ),
            Violation::ColumnSum { good, sum } => {
                write!(f, "column {} sums to {sum}", good + 1)
            }
        }
    }
}

/// `s x m` matrix; row `sigma` is the vector `phi(sigma, .)` of emission
/// probabilities of signal `sigma` for each good.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalingScheme {
    rows: Matrix,
}

impl SignalingScheme {
    /// Wraps the rows without validating them; see [`validate_scheme`].
    pub fn new(rows: Matrix) -> Self {
        Self { rows }
    }

    /// Reveals nothing: a single signal emitted for every good.
    pub fn no_reveal(m: usize) -> Self {
        Self::new(vec![vec![1.0; m]])
    }

    /// Reveals the realized good.
    pub fn full_reveal(m: usize) -> Self {
        Self::new(
            (0..m)
                .map(|s| (0..m).map(|j| if s == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn signals(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn row(&self, sigma: usize) -> &[f64] {
        &self.rows[sigma]
    }

    pub fn into_rows(self) -> Matrix {
        self.rows
    }

    /// Builds a scheme from approximately valid rows (for instance an LP
    /// solution): clamps to `[0, 1]`, zeroes negligible entries, drops
    /// all-zero signals and rescales each column to sum to one.
    pub fn from_approximate(rows: Matrix, m: usize) -> Result<Self> {
        let mut rows: Matrix = rows
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|x| if x < ZERO_ENTRY { 0.0 } else { x.min(1.0) })
                    .collect::<Vec<_>>()
            })
            .filter(|row| row.iter().any(|&x| x > 0.0))
            .collect();
        for j in 0..m {
            let total: f64 = rows.iter().map(|r| r[j]).sum();
            if total <= 0.5 {
                return Err(Error::NumericFailure(format!(
                    "column {} of the extracted scheme has mass {total}",
                    j + 1
                )));
            }
            for r in rows.iter_mut() {
                r[j] /= total;
            }
        }
        Ok(Self { rows })
    }

    /// Drops signals that are never emitted.
    pub fn without_zero_signals(&self) -> Self {
        Self::new(
            self.rows
                .iter()
                .filter(|r| r.iter().any(|&x| x > 0.0))
                .cloned()
                .collect(),
        )
    }
}

/// The two trivial schemes `(no_reveal, full_reveal)` for `m` goods.
pub fn trivial_schemes(m: usize) -> (SignalingScheme, SignalingScheme) {
    (SignalingScheme::no_reveal(m), SignalingScheme::full_reveal(m))
}

/// Checks shape, entry range and column sums. Violations are returned as
/// data; an empty list means the scheme is valid for `m` goods.
pub fn validate_scheme(scheme: &SignalingScheme, m: usize) -> std::result::Result<(), Vec<Violation>> {
    validate_scheme_with_tolerance(scheme, m, PROB_TOL)
}

pub fn validate_scheme_with_tolerance(
    scheme: &SignalingScheme,
    m: usize,
    tol: f64,
) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let mut sums = vec![0.0; m];
    for (s, row) in scheme.rows.iter().enumerate() {
        if row.len() != m {
            violations.push(Violation::RowLength {
                signal: s,
                len: row.len(),
                expected: m,
            });
            continue;
        }
        for (j, &x) in row.iter().enumerate() {
            if !(x >= 0.0 && x <= 1.0) {
                violations.push(Violation::EntryOutOfRange {
                    signal: s,
                    good: j,
                    value: x,
                });
            }
            sums[j] += x;
        }
    }
    if violations.iter().all(|v| !matches!(v, Violation::RowLength { .. })) {
        for (j, &sum) in sums.iter().enumerate() {
            if !((sum - 1.0).abs() <= tol) {
                violations.push(Violation::ColumnSum { good: j, sum });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

fn ensure_valid<I: Valuations + ?Sized>(inst: &I, scheme: &SignalingScheme) -> Result<()> {
    validate_scheme(scheme, inst.goods()).map_err(Error::InvalidScheme)
}

/// Second-largest value counting multiplicity.
pub fn second_max(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Dimension(format!(
            "second maximum needs at least 2 values, got {}",
            values.len()
        )));
    }
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &v in values {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    Ok(second)
}

pub(crate) fn max_and_second(values: &[f64]) -> (f64, f64) {
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &v in values {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    (first, second)
}

/// `sum_j x(j) * psi(i, j)` for every bidder `i`.
pub fn bids(psi: &Matrix, x: &[f64]) -> Vec<f64> {
    psi.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Top and second bidder of a bid vector. Values within a relative `1e-9` of
/// each other are tied and the lower index wins. Requires at least 2 entries.
pub fn top_two(values: &[f64]) -> (usize, usize) {
    debug_assert!(values.len() >= 2);
    let (first, _) = max_and_second(values);
    let tol = TIE_TOL * first.abs().max(1.0);
    let h1 = values
        .iter()
        .position(|&v| v >= first - tol)
        .unwrap_or(0);
    let second = values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != h1)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let h2 = values
        .iter()
        .enumerate()
        .position(|(i, &v)| i != h1 && v >= second - tol)
        .unwrap_or(if h1 == 0 { 1 } else { 0 });
    (h1, h2)
}

/// Per-outcome `(top, second)` bidder pairs of one signal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelTuple(pub Vec<(usize, usize)>);

impl LabelTuple {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.0
    }
}

impl fmt::Display for LabelTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (idx, (a, b)) in self.0.iter().enumerate() {
            if idx > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({}, {})", a + 1, b + 1)?;
        }
        f.write_str(">")
    }
}

/// Revenue collected on a single signal vector, summed over outcomes.
pub fn signal_revenue<I: Valuations + ?Sized>(inst: &I, row: &[f64]) -> f64 {
    (0..inst.outcome_count())
        .map(|l| {
            let (w, psi) = inst.outcome(l);
            w * max_and_second(&bids(psi, row)).1
        })
        .sum()
}

/// Welfare generated on a single signal vector, summed over outcomes.
pub fn signal_welfare<I: Valuations + ?Sized>(inst: &I, row: &[f64]) -> f64 {
    (0..inst.outcome_count())
        .map(|l| {
            let (w, psi) = inst.outcome(l);
            w * max_and_second(&bids(psi, row)).0
        })
        .sum()
}

pub fn signal_labels<I: Valuations + ?Sized>(inst: &I, row: &[f64]) -> LabelTuple {
    LabelTuple(
        (0..inst.outcome_count())
            .map(|l| top_two(&bids(inst.outcome(l).1, row)))
            .collect(),
    )
}

/// Expected second-highest bid under truthful bidding.
pub fn revenue<I: Valuations + ?Sized>(inst: &I, scheme: &SignalingScheme) -> Result<f64> {
    ensure_valid(inst, scheme)?;
    Ok(scheme.rows.iter().map(|r| signal_revenue(inst, r)).sum())
}

/// Expected highest bid; for Bayesian instances the `q`-weighted average of
/// the per-outcome welfare.
pub fn welfare<I: Valuations + ?Sized>(inst: &I, scheme: &SignalingScheme) -> Result<f64> {
    ensure_valid(inst, scheme)?;
    Ok(scheme.rows.iter().map(|r| signal_welfare(inst, r)).sum())
}

/// Bidder with the largest normalized valuation for good `j` (lowest index on ties).
pub fn best_bidder(inst: &KnownInstance, j: usize) -> usize {
    let col: Vec<f64> = inst.psi().iter().map(|row| row[j]).collect();
    top_two(&col).0
}

/// Optimal social welfare `W* = sum_j max_i psi(i, j)`.
pub fn optimal_welfare_star(inst: &KnownInstance) -> f64 {
    (0..inst.m())
        .map(|j| {
            inst.psi()
                .iter()
                .map(|row| row[j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum()
}

/// Label tuple of every signal (length-1 tuples for known instances).
pub fn labels<I: Valuations + ?Sized>(inst: &I, scheme: &SignalingScheme) -> Result<Vec<LabelTuple>> {
    ensure_valid(inst, scheme)?;
    Ok(scheme.rows.iter().map(|r| signal_labels(inst, r)).collect())
}

/// Sums the rows of signals that share a label tuple, keeping first-seen order.
pub fn merge_equal_label_signals<I: Valuations + ?Sized>(
    inst: &I,
    scheme: &SignalingScheme,
) -> Result<SignalingScheme> {
    let tuples = labels(inst, scheme)?;
    let mut slot: HashMap<LabelTuple, usize> = HashMap::new();
    let mut merged: Matrix = Vec::new();
    for (row, tuple) in scheme.rows.iter().zip(tuples) {
        match slot.get(&tuple) {
            Some(&idx) => {
                for (acc, x) in merged[idx].iter_mut().zip(row) {
                    *acc += x;
                }
            }
            None => {
                slot.insert(tuple, merged.len());
                merged.push(row.clone());
            }
        }
    }
    for row in merged.iter_mut() {
        for x in row.iter_mut() {
            *x = x.min(1.0);
        }
    }
    Ok(SignalingScheme::new(merged))
}

/// Contribution and labels of one signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalReport {
    pub signal: usize,
    pub contribution: f64,
    pub labels: LabelTuple,
}

/// Evaluation summary of a scheme on an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeReport {
    pub revenue: f64,
    pub welfare: f64,
    pub per_signal: Vec<SignalReport>,
    /// Number of nonzero signals left after merging equal-label signals.
    pub signal_count_after_merge: usize,
}

pub fn report<I: Valuations + ?Sized>(inst: &I, scheme: &SignalingScheme) -> Result<SchemeReport> {
    ensure_valid(inst, scheme)?;
    let per_signal: Vec<SignalReport> = scheme
        .rows
        .iter()
        .enumerate()
        .map(|(signal, row)| SignalReport {
            signal,
            contribution: signal_revenue(inst, row),
            labels: signal_labels(inst, row),
        })
        .collect();
    let merged = merge_equal_label_signals(inst, scheme)?;
    Ok(SchemeReport {
        revenue: per_signal.iter().map(|s| s.contribution).sum(),
        welfare: welfare(inst, scheme)?,
        per_signal,
        signal_count_after_merge: merged.without_zero_signals().signals(),
    })
}

/// A scheme produced by an optimizer together with its evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub scheme: SignalingScheme,
    pub report: SchemeReport,
    /// Optimal value of the linear program the scheme was extracted from.
    pub objective: f64,
}
