//! Instance generators for the worked examples, the MAX-CUT gadget, and
//! brute-force / randomized oracles used by the test suites.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    revenue, signal_revenue, BayesInstance, Instance, KnownInstance, Matrix, SignalingScheme,
    Valuations,
};

/// `m` bidders and `m` equally likely goods; bidder `i` values only good `i`.
pub fn gen_identity(m: usize) -> Result<KnownInstance> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("identity example needs m >= 2, got {m}")));
    }
    KnownInstance::new(vec![1.0 / m as f64; m], SignalingScheme::full_reveal(m).into_rows())
}

/// One good per ordered bidder pair `(i, i')`, uniformly likely; bidder `i`
/// values it at 1, bidder `i'` at 1/2, everyone else at 0.
///
/// Goods are ordered lexicographically by pair.
pub fn gen_many_signals(n: usize) -> Result<KnownInstance> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("many-signals example needs n >= 2, got {n}")));
    }
    let pairs = ordered_pairs(n);
    let m = pairs.len();
    let mut values = vec![vec![0.0; m]; n];
    for (j, &(a, b)) in pairs.iter().enumerate() {
        values[a][j] = 1.0;
        values[b][j] = 0.5;
    }
    KnownInstance::new(vec![1.0 / m as f64; m], values)
}

/// Goods and bidders `0..=n`, uniform prior, `V(i, i) = 1` for `i >= 1`,
/// `V(0, 0) = n`. Optimal signaling earns twice the best clustering.
pub fn gen_gap(n: usize) -> Result<KnownInstance> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("gap example needs n >= 2, got {n}")));
    }
    let size = n + 1;
    let mut values = vec![vec![0.0; size]; size];
    values[0][0] = n as f64;
    for (i, row) in values.iter_mut().enumerate().skip(1) {
        row[i] = 1.0;
    }
    KnownInstance::new(vec![1.0 / size as f64; size], values)
}

/// The optimal scheme of [`gen_gap`]: signal `i` carries good `i` and a
/// `1/n` share of good 0.
pub fn gap_optimal_scheme(n: usize) -> SignalingScheme {
    let size = n + 1;
    SignalingScheme::new(
        (1..size)
            .map(|i| {
                let mut row = vec![0.0; size];
                row[0] = 1.0 / n as f64;
                row[i] = 1.0;
                row
            })
            .collect(),
    )
}

pub(crate) fn ordered_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect()
}

/// Undirected simple graph with two distinguished vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    vertices: Vec<String>,
    edges: Vec<(usize, usize)>,
    x: usize,
    y: usize,
}

impl GraphSpec {
    pub fn new(vertices: Vec<String>, edges: Vec<(String, String)>, x: &str, y: &str) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.as_str(), i).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate vertex {v:?}")));
            }
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::InvalidGraph(format!("unknown vertex {name:?}")))
        };
        let (xi, yi) = (lookup(x)?, lookup(y)?);
        if xi == yi {
            return Err(Error::InvalidGraph("x and y must be distinct".into()));
        }
        let mut seen = BTreeSet::new();
        let mut idx_edges = Vec::with_capacity(edges.len());
        for (a, b) in &edges {
            let (u, v) = (lookup(a)?, lookup(b)?);
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on {a:?}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("duplicate edge {a:?}-{b:?}")));
            }
            idx_edges.push((u, v));
        }
        Ok(Self {
            vertices,
            edges: idx_edges,
            x: xi,
            y: yi,
        })
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn x(&self) -> usize {
        self.x
    }

    pub fn y(&self) -> usize {
        self.y
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    /// Number of edges with exactly one endpoint in `side`.
    pub fn cut_size(&self, side: &[bool]) -> usize {
        self.edges.iter().filter(|&&(u, v)| side[u] != side[v]).count()
    }

    /// The triangle `a-b-c` with `x = a`, `y = b`.
    pub fn triangle() -> Self {
        Self::from_names(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("a", "c")], "a", "b")
    }

    /// The 4-cycle `a-b-c-d-a` with the adjacent pair `x = a`, `y = b`.
    pub fn four_cycle() -> Self {
        Self::from_names(
            &["a", "b", "c", "d"],
            &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")],
            "a",
            "b",
        )
    }

    fn from_names(vs: &[&str], es: &[(&str, &str)], x: &str, y: &str) -> Self {
        Self::new(
            vs.iter().map(|s| s.to_string()).collect(),
            es.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            x,
            y,
        )
        .expect("built-in graph is valid")
    }
}

/// Role of one Bayesian outcome of the MAX-CUT gadget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GadgetOutcome {
    /// Couples the two distinguished vertices.
    Anchor,
    /// Vertex `u` paired with `x`.
    WithX(usize),
    /// Vertex `u` paired with `y`.
    WithY(usize),
    /// An edge `(u, v)`.
    Edge(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxCutGadget {
    pub instance: BayesInstance,
    pub k1: f64,
    pub k2: f64,
    pub outcomes: Vec<GadgetOutcome>,
    /// Outcome-weighted tables `q(l) * psi_l(i, v)`, one `3 x |V|` table per outcome.
    pub weighted_tables: Vec<Matrix>,
}

impl MaxCutGadget {
    /// Revenue of a cut scheme: `2*K1 + (|V| - 2)*K2 + |E| + cut`.
    pub fn cut_revenue(&self, graph: &GraphSpec, cut: usize) -> f64 {
        2.0 * self.k1
            + (graph.vertices().len() as f64 - 2.0) * self.k2
            + graph.edges().len() as f64
            + cut as f64
    }
}

/// Default gadget weights: `K2 = 100 * max(|E|, 1)`, `K1 = 100 * |V| * K2`.
pub fn default_gadget_weights(graph: &GraphSpec) -> (f64, f64) {
    let k2 = 100.0 * graph.edges().len().max(1) as f64;
    (100.0 * graph.vertices().len() as f64 * k2, k2)
}

/// Three-bidder Bayesian instance whose optimal revenue encodes the maximum
/// `x`-`y` separating cut of `graph`. Goods are the vertices.
///
/// Outcome tables (bidders 1, 2, 3; unlisted entries are zero):
/// * anchor: `K1` on `x` for bidders 1 and 3, `K1` on `y` for bidders 2 and 3;
/// * for each `u` other than `x, y`: `K2` on `x` for bidder 1 and on `u` for
///   bidder 2, then the same with `y` in place of `x`;
/// * for each edge `(u, v)`: 1 on `u` for bidders 1 and 3, 1 on `v` for
///   bidders 2 and 3.
///
/// The tables are factored with uniform `p` and `q`.
pub fn gen_maxcut(graph: &GraphSpec, k1: f64, k2: f64) -> Result<MaxCutGadget> {
    if !(k1 > k2 && k2 > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gadget weights need K1 > K2 > 1, got K1 = {k1}, K2 = {k2}"
        )));
    }
    let nv = graph.vertices().len();
    let (x, y) = (graph.x(), graph.y());
    let mut outcomes = vec![GadgetOutcome::Anchor];
    let others: Vec<usize> = (0..nv).filter(|&u| u != x && u != y).collect();
    outcomes.extend(others.iter().map(|&u| GadgetOutcome::WithX(u)));
    outcomes.extend(others.iter().map(|&u| GadgetOutcome::WithY(u)));
    outcomes.extend(graph.edges().iter().map(|&(u, v)| GadgetOutcome::Edge(u, v)));

    let tables: Vec<Matrix> = outcomes
        .iter()
        .map(|o| {
            let mut t = vec![vec![0.0; nv]; 3];
            match *o {
                GadgetOutcome::Anchor => {
                    t[0][x] = k1;
                    t[1][y] = k1;
                    t[2][x] = k1;
                    t[2][y] = k1;
                }
                GadgetOutcome::WithX(u) => {
                    t[0][x] = k2;
                    t[1][u] = k2;
                }
                GadgetOutcome::WithY(u) => {
                    t[0][y] = k2;
                    t[1][u] = k2;
                }
                GadgetOutcome::Edge(u, v) => {
                    t[0][u] = 1.0;
                    t[1][v] = 1.0;
                    t[2][u] = 1.0;
                    t[2][v] = 1.0;
                }
            }
            t
        })
        .collect();

    let k = outcomes.len();
    let factor = (k * nv) as f64;
    let values: Vec<Matrix> = tables
        .iter()
        .map(|t| t.iter().map(|row| row.iter().map(|v| v * factor).collect()).collect())
        .collect();
    let instance = BayesInstance::new(vec![1.0 / nv as f64; nv], vec![1.0 / k as f64; k], values)?;
    Ok(MaxCutGadget {
        instance,
        k1,
        k2,
        outcomes,
        weighted_tables: tables,
    })
}

/// A scheme in which signal `sigma` emits weight `p_sigma` on every vertex
/// of `U_sigma`, each subset containing exactly one of `x`, `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutScheme {
    pub subsets: Vec<(BTreeSet<usize>, f64)>,
    pub scheme: SignalingScheme,
}

impl CutScheme {
    /// Checks the structural conditions: each subset separates `x` from `y`,
    /// every vertex receives total weight 1, and the weights sum to 2.
    pub fn satisfies_structure(&self, graph: &GraphSpec) -> bool {
        let (x, y) = (graph.x(), graph.y());
        let separating = self
            .subsets
            .iter()
            .all(|(u, p)| (u.contains(&x) != u.contains(&y)) && *p > 0.0 && *p <= 1.0);
        let covered = (0..graph.vertices().len()).all(|v| {
            let w: f64 = self.subsets.iter().filter(|(u, _)| u.contains(&v)).map(|(_, p)| p).sum();
            (w - 1.0).abs() < 1e-12
        });
        let total: f64 = self.subsets.iter().map(|(_, p)| p).sum();
        separating && covered && (total - 2.0).abs() < 1e-12
    }
}

/// Two-signal 0/1 scheme from a vertex set `cut` containing exactly one of
/// `x`, `y`: one signal for `cut`, one for its complement.
pub fn cut_to_scheme(graph: &GraphSpec, cut: &BTreeSet<usize>) -> Result<CutScheme> {
    let nv = graph.vertices().len();
    if let Some(&bad) = cut.iter().find(|&&v| v >= nv) {
        return Err(Error::InvalidArgument(format!("vertex index {bad} out of range")));
    }
    if cut.contains(&graph.x()) == cut.contains(&graph.y()) {
        return Err(Error::InvalidArgument(
            "cut must contain exactly one of x and y".into(),
        ));
    }
    let complement: BTreeSet<usize> = (0..nv).filter(|v| !cut.contains(v)).collect();
    let row = |set: &BTreeSet<usize>| (0..nv).map(|v| if set.contains(&v) { 1.0 } else { 0.0 }).collect();
    let scheme = SignalingScheme::new(vec![row(cut), row(&complement)]);
    Ok(CutScheme {
        subsets: vec![(cut.clone(), 1.0), (complement, 1.0)],
        scheme,
    })
}

/// Every vertex subset that contains `x` and not `y`, as membership masks.
pub fn separating_cuts(graph: &GraphSpec) -> impl Iterator<Item = Vec<bool>> + '_ {
    let nv = graph.vertices().len();
    let free: Vec<usize> = (0..nv).filter(|&v| v != graph.x() && v != graph.y()).collect();
    (0u64..(1u64 << free.len())).map(move |mask| {
        let mut side = vec![false; nv];
        side[graph.x()] = true;
        for (bit, &v) in free.iter().enumerate() {
            side[v] = mask >> bit & 1 == 1;
        }
        side
    })
}

/// Default vertex cap for [`maxcut_bruteforce`].
pub const MAXCUT_GUARD: usize = 20;

/// Largest cut over subsets separating `x` from `y`, with a witness containing `x`.
pub fn maxcut_bruteforce(graph: &GraphSpec, guard: usize) -> Result<(usize, BTreeSet<usize>)> {
    let nv = graph.vertices().len();
    if nv > guard {
        return Err(Error::GuardExceeded {
            what: "max-cut vertex",
            count: nv as u128,
            limit: guard as u128,
            note: String::new(),
        });
    }
    let mut best: Option<(usize, Vec<bool>)> = None;
    for side in separating_cuts(graph) {
        let c = graph.cut_size(&side);
        if best.as_ref().is_none_or(|(b, _)| c > *b) {
            best = Some((c, side));
        }
    }
    let (c, side) = best.expect("at least one separating cut exists");
    Ok((c, (0..nv).filter(|&v| side[v]).collect()))
}

/// Parameters for [`random_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSpec {
    pub n: usize,
    pub m: usize,
    /// `None` produces a known-valuations instance.
    pub k: Option<usize>,
    pub value_range: (f64, f64),
    /// Draw `p` (and `q`) at random instead of uniformly.
    pub random_probabilities: bool,
}

impl RandomSpec {
    pub fn known(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            k: None,
            value_range: (0.0, 1.0),
            random_probabilities: false,
        }
    }

    pub fn bayes(n: usize, m: usize, k: usize) -> Self {
        Self {
            k: Some(k),
            ..Self::known(n, m)
        }
    }
}

fn random_distribution(rng: &mut ChaCha8Rng, len: usize, random: bool) -> Vec<f64> {
    if !random {
        return vec![1.0 / len as f64; len];
    }
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Deterministic random instance for property tests.
pub fn random_instance(seed: u64, spec: &RandomSpec) -> Result<Instance> {
    if spec.n < 2 || spec.m < 1 || spec.k == Some(0) {
        return Err(Error::InvalidArgument(format!(
            "random instance needs n >= 2, m >= 1, k >= 1 (got n = {}, m = {}, k = {:?})",
            spec.n, spec.m, spec.k
        )));
    }
    let (lo, hi) = spec.value_range;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad value range [{lo}, {hi})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_distribution(&mut rng, spec.m, spec.random_probabilities);
    let matrix = |rng: &mut ChaCha8Rng| -> Matrix {
        (0..spec.n)
            .map(|_| (0..spec.m).map(|_| rng.gen_range(lo..hi)).collect())
            .collect()
    };
    match spec.k {
        None => Ok(Instance::Known(KnownInstance::new(p, matrix(&mut rng))?)),
        Some(k) => {
            let q = random_distribution(&mut rng, k, spec.random_probabilities);
            let values = (0..k).map(|_| matrix(&mut rng)).collect();
            Ok(Instance::Bayes(BayesInstance::new(p, q, values)?))
        }
    }
}

fn random_simplex_point(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    // Exponential spacings give a uniform point on the simplex.
    let raw: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random valid scheme with `s` signals and `m` goods.
pub fn random_scheme(rng: &mut ChaCha8Rng, s: usize, m: usize) -> SignalingScheme {
    let cols: Vec<Vec<f64>> = (0..m).map(|_| random_simplex_point(rng, s)).collect();
    SignalingScheme::new((0..s).map(|sig| cols.iter().map(|c| c[sig]).collect()).collect())
}

/// Hill climbing over `s`-signal schemes: each step replaces one good's
/// emission column by a random mix of itself and a fresh simplex point (or
/// a point mass) and keeps the change when revenue improves.
pub fn random_search<I: Valuations + ?Sized>(
    inst: &I,
    s: usize,
    iters: usize,
    seed: u64,
) -> Result<(SignalingScheme, f64)> {
    if s == 0 {
        return Err(Error::InvalidArgument("signal budget must be at least 1".into()));
    }
    let m = inst.goods();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = random_scheme(&mut rng, s, m).into_rows();
    let mut contrib: Vec<f64> = rows.iter().map(|r| signal_revenue(inst, r)).collect();
    let mut best: f64 = contrib.iter().sum();
    for _ in 0..iters {
        let j = rng.gen_range(0..m);
        let target = if rng.gen_bool(0.3) {
            let mut e = vec![0.0; s];
            e[rng.gen_range(0..s)] = 1.0;
            e
        } else {
            random_simplex_point(&mut rng, s)
        };
        let alpha: f64 = if rng.gen_bool(0.5) { 1.0 } else { rng.gen_range(0.0..1.0) };
        let old: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        for (r, t) in rows.iter_mut().zip(&target) {
            r[j] = (1.0 - alpha) * r[j] + alpha * t;
        }
        let fresh: Vec<f64> = rows.iter().map(|r| signal_revenue(inst, r)).collect();
        let total: f64 = fresh.iter().sum();
        if total > best {
            best = total;
            contrib = fresh;
        } else {
            for (r, o) in rows.iter_mut().zip(&old) {
                r[j] = *o;
            }
        }
    }
    debug_assert!((contrib.iter().sum::<f64>() - best).abs() < 1e-9);
    let scheme = SignalingScheme::new(rows);
    let value = revenue(inst, &scheme)?;
    Ok((scheme, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{optimal_welfare_star, welfare};

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    #[test]
    fn identity_example_values() {
        let inst = gen_identity(4).unwrap();
        assert!((revenue(&inst, &SignalingScheme::no_reveal(4)).unwrap() - 0.25).abs() < 1e-12);
        let pairs = SignalingScheme::new(vec![vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 1.0]]);
        assert!((revenue(&inst, &pairs).unwrap() - 0.5).abs() < 1e-12);
        let two = gen_identity(2).unwrap();
        assert_eq!(revenue(&two, &SignalingScheme::full_reveal(2)).unwrap(), 0.0);
        assert!(gen_identity(1).is_err());
    }

    #[test]
    fn many_signals_single_signal() {
        let inst = gen_many_signals(2).unwrap();
        assert_eq!(inst.m(), 2);
        let r = revenue(&inst, &SignalingScheme::no_reveal(2)).unwrap();
        assert!((r - 0.75).abs() < 1e-12);
        assert_eq!(gen_many_signals(4).unwrap().m(), 12);
    }

    #[test]
    fn gap_example_values() {
        for n in 2..=6 {
            let inst = gen_gap(n).unwrap();
            let r = revenue(&inst, &gap_optimal_scheme(n)).unwrap();
            assert!((r - n as f64 / (n as f64 + 1.0)).abs() < 1e-12);
        }
        let inst = gen_gap(2).unwrap();
        let w = welfare(&inst, &gap_optimal_scheme(2)).unwrap();
        assert!((w - 2.0 / 3.0).abs() < 1e-12);
        assert!((optimal_welfare_star(&inst) / 2.0 - w).abs() < 1e-12);
    }

    #[test]
    fn graph_validation() {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let e = |a: &str, b: &str| (a.to_string(), b.to_string());
        assert!(GraphSpec::new(v(&["a", "b"]), vec![e("a", "a")], "a", "b").is_err());
        assert!(GraphSpec::new(v(&["a", "b"]), vec![e("a", "b"), e("b", "a")], "a", "b").is_err());
        assert!(GraphSpec::new(v(&["a", "b"]), vec![], "a", "a").is_err());
        assert!(GraphSpec::new(v(&["a", "b"]), vec![], "a", "z").is_err());
        assert!(GraphSpec::new(v(&["a", "a"]), vec![], "a", "b").is_err());
    }

    #[test]
    fn maxcut_examples() {
        assert_eq!(maxcut_bruteforce(&GraphSpec::triangle(), MAXCUT_GUARD).unwrap().0, 2);
        let (c, w) = maxcut_bruteforce(&GraphSpec::four_cycle(), MAXCUT_GUARD).unwrap();
        assert_eq!(c, 4);
        assert_eq!(w, set(&[0, 2]));
        let edge = GraphSpec::from_names(&["x", "y"], &[("x", "y")], "x", "y");
        assert_eq!(maxcut_bruteforce(&edge, MAXCUT_GUARD).unwrap().0, 1);
        assert!(matches!(
            maxcut_bruteforce(&GraphSpec::triangle(), 2),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn gadget_dimensions() {
        let g = gen_maxcut(&GraphSpec::triangle(), 1e5, 1e2).unwrap();
        assert_eq!(g.instance.k(), 6);
        assert_eq!(g.instance.m(), 3);
        assert_eq!(g.instance.n(), 3);
        for (l, table) in g.weighted_tables.iter().enumerate() {
            let phi = g.instance.weighted_psi(l);
            for (a, b) in table.iter().flatten().zip(phi.iter().flatten()) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
        assert!(gen_maxcut(&GraphSpec::triangle(), 10.0, 20.0).is_err());
    }

    #[test]
    fn cut_scheme_examples() {
        let tri = GraphSpec::triangle();
        let cs = cut_to_scheme(&tri, &set(&[0, 2])).unwrap();
        assert_eq!(cs.scheme.rows(), &vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]);
        assert!(cs.satisfies_structure(&tri));
        let single = cut_to_scheme(&tri, &set(&[0])).unwrap();
        assert_eq!(single.scheme.row(0), &[1.0, 0.0, 0.0]);
        assert!(cut_to_scheme(&tri, &set(&[0, 1])).is_err());
        assert!(cut_to_scheme(&tri, &set(&[2])).is_err());

        let (k1, k2) = (1e5, 1e2);
        let g = gen_maxcut(&tri, k1, k2).unwrap();
        let r = revenue(&g.instance, &cs.scheme).unwrap();
        assert!((r - (2.0 * k1 + k2 + 5.0)).abs() < 1e-9);

        let path = GraphSpec::from_names(&["a", "b", "c"], &[("a", "b"), ("b", "c")], "a", "c");
        let g = gen_maxcut(&path, k1, k2).unwrap();
        let cs = cut_to_scheme(&path, &set(&[0, 1])).unwrap();
        let r = revenue(&g.instance, &cs.scheme).unwrap();
        assert!((r - (2.0 * k1 + k2 + 2.0 + 1.0)).abs() < 1e-9);

        let edge = GraphSpec::from_names(&["x", "y"], &[("x", "y")], "x", "y");
        let g = gen_maxcut(&edge, k1, k2).unwrap();
        assert_eq!(g.instance.k(), 2);
        let cs = cut_to_scheme(&edge, &set(&[0])).unwrap();
        let r = revenue(&g.instance, &cs.scheme).unwrap();
        assert!((r - (2.0 * k1 + 2.0)).abs() < 1e-9);
    }

    #[test]
    fn random_instances_are_deterministic() {
        let spec = RandomSpec::known(2, 2);
        assert_eq!(random_instance(1, &spec).unwrap(), random_instance(1, &spec).unwrap());
        assert_ne!(random_instance(1, &spec).unwrap(), random_instance(2, &spec).unwrap());
        let b = random_instance(7, &RandomSpec::bayes(3, 2, 2)).unwrap();
        assert!(matches!(b, Instance::Bayes(ref i) if i.k() == 2));
        let skew = RandomSpec {
            random_probabilities: true,
            ..RandomSpec::bayes(2, 3, 2)
        };
        assert!(random_instance(3, &skew).is_ok());
        assert!(random_instance(3, &RandomSpec::known(1, 2)).is_err());
    }

    #[test]
    fn random_search_basics() {
        let inst = gen_gap(2).unwrap();
        let (s, r) = random_search(&inst, 1, 500, 3).unwrap();
        assert_eq!(s.signals(), 1);
        assert!(r <= 1.0 / 3.0 + 1e-6);

        let inst = gen_identity(4).unwrap();
        let (_, r) = random_search(&inst, 2, 4000, 11).unwrap();
        assert!(r > 0.45 && r <= 0.5 + 1e-9, "got {r}");

        let (s, r) = random_search(&inst, 3, 0, 5).unwrap();
        assert!(crate::model::validate_scheme(&s, 4).is_ok());
        assert!((revenue(&inst, &s).unwrap() - r).abs() < 1e-15);
        assert!(random_search(&inst, 0, 1, 1).is_err());
    }
}
