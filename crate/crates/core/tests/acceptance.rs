//! End-to-end acceptance run. Each criterion prints one PASS/FAIL line with
//! its runtime; the process fails if any criterion fails.
//!
//! Expected values come from closed forms or from oracles written here
//! against the raw instance data, not from the library's own evaluator.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sigauction::gadgets::{cut_to_scheme, gen_gap, gen_identity, gen_many_signals, gen_maxcut, GraphSpec};
use sigauction::simulate::{default_deviation_grid, simulate_revenue, truthfulness_check};
use sigauction::solver_bayes::{all_label_tuples, reduce_to_m_signals, solve_fixed_k, solve_fixed_m, solve_lp2};
use sigauction::solver_known::{
    clustering_bound, clustering_bruteforce, clustering_revenue, solve_optimal, solve_welfare_constrained,
    welfare_repair, ClusterPartition, PARTITION_GUARD,
};
use sigauction::{BayesInstance, KnownInstance, SignalingScheme};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---- oracles -------------------------------------------------------------

fn second_highest(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v[1]
}

fn highest(xs: &[f64]) -> f64 {
    xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// `sum_sigma sum_l q_l * secondmax_i sum_j p_j phi(sigma, j) V_l(i, j)`
/// straight from the raw tables.
fn oracle_revenue(p: &[f64], q: &[f64], vs: &[Vec<Vec<f64>>], phi: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for row in phi {
        for (ql, v) in q.iter().zip(vs) {
            let bids: Vec<f64> = v
                .iter()
                .map(|vi| (0..p.len()).map(|j| p[j] * row[j] * vi[j]).sum())
                .collect();
            total += ql * second_highest(&bids);
        }
    }
    total
}

fn oracle_welfare(p: &[f64], v: &[Vec<f64>], phi: &[Vec<f64>]) -> f64 {
    phi.iter()
        .map(|row| {
            let bids: Vec<f64> = v.iter().map(|vi| (0..p.len()).map(|j| p[j] * row[j] * vi[j]).sum()).collect();
            highest(&bids)
        })
        .sum()
}

fn known_revenue(inst: &KnownInstance, s: &SignalingScheme) -> f64 {
    oracle_revenue(inst.p(), &[1.0], &[inst.values().clone()], s.rows())
}

fn bayes_revenue(inst: &BayesInstance, s: &SignalingScheme) -> f64 {
    oracle_revenue(inst.p(), inst.q(), inst.values(), s.rows())
}

fn columns_ok(s: &SignalingScheme, m: usize) -> bool {
    s.rows().iter().all(|r| r.len() == m && r.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)))
        && (0..m).all(|j| (s.rows().iter().map(|r| r[j]).sum::<f64>() - 1.0).abs() <= 1e-9)
}

fn welfare_star(inst: &KnownInstance) -> f64 {
    (0..inst.m())
        .map(|j| inst.p()[j] * highest(&inst.values().iter().map(|r| r[j]).collect::<Vec<_>>()))
        .sum()
}

// ---- random data ---------------------------------------------------------

fn distribution(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..m).map(|_| rng.gen_range(0.0..10.0)).collect()).collect()
}

fn random_known(rng: &mut ChaCha8Rng, n: usize, m: usize) -> KnownInstance {
    let p = distribution(rng, m);
    KnownInstance::new(p, matrix(rng, n, m)).unwrap()
}

fn random_bayes(rng: &mut ChaCha8Rng, n: usize, m: usize, k: usize) -> BayesInstance {
    let p = distribution(rng, m);
    let q = distribution(rng, k);
    let vs = (0..k).map(|_| matrix(rng, n, m)).collect();
    BayesInstance::new(p, q, vs).unwrap()
}

fn random_scheme(rng: &mut ChaCha8Rng, s: usize, m: usize) -> SignalingScheme {
    let mut rows = vec![vec![0.0; m]; s];
    for j in 0..m {
        let col = distribution(rng, s);
        for (r, x) in rows.iter_mut().zip(col) {
            r[j] = x;
        }
    }
    SignalingScheme::new(rows)
}

// ---- criteria ------------------------------------------------------------

fn intro_example() -> Outcome {
    for m in [2usize, 4, 10] {
        let inst = gen_identity(m).unwrap();
        let none = known_revenue(&inst, &SignalingScheme::no_reveal(m));
        let full = known_revenue(&inst, &SignalingScheme::full_reveal(m));
        ensure!((none - 1.0 / m as f64).abs() <= 1e-9, "m={m}: no-reveal oracle {none}");
        ensure!(full.abs() <= 1e-9, "m={m}: full-reveal oracle {full}");
        let lib_none = sigauction::revenue(&inst, &SignalingScheme::no_reveal(m)).unwrap();
        let lib_full = sigauction::revenue(&inst, &SignalingScheme::full_reveal(m)).unwrap();
        ensure!((lib_none - 1.0 / m as f64).abs() <= 1e-9, "m={m}: no-reveal {lib_none}");
        ensure!(lib_full.abs() <= 1e-9, "m={m}: full-reveal {lib_full}");
        if m % 2 == 0 {
            let pairs = ClusterPartition::new((0..m / 2).map(|c| vec![2 * c, 2 * c + 1]).collect(), m).unwrap();
            let r = clustering_revenue(&inst, &pairs).unwrap();
            let o = known_revenue(&inst, &pairs.to_scheme(m));
            ensure!((r - 0.5).abs() <= 1e-9 && (o - 0.5).abs() <= 1e-9, "m={m}: pair clustering {r} / {o}");
        }
    }
    Ok("no-reveal 1/m, full-reveal 0, pairs 1/2 for m in {2, 4, 10}".into())
}

fn gap_family() -> Outcome {
    let mut ratios = Vec::new();
    let mut problems = Vec::new();
    for n in 2..=6usize {
        let inst = gen_gap(n).unwrap();
        let opt = solve_optimal(&inst).unwrap();
        let want = n as f64 / (n as f64 + 1.0);
        ensure!((opt.objective - want).abs() <= 1e-6, "n={n}: optimum {}", opt.objective);
        let realized = known_revenue(&inst, &opt.scheme);
        ensure!((realized - want).abs() <= 1e-6, "n={n}: realized {realized}");
        let (part, clus) = clustering_bruteforce(&inst, PARTITION_GUARD).unwrap();
        ensure!(
            (known_revenue(&inst, &part.to_scheme(inst.m())) - clus).abs() <= 1e-9,
            "n={n}: clustering witness disagrees with its value"
        );
        // Every cluster holding two or more goods earns exactly 1/(n+1).
        let counted = ((n + 1) / 2) as f64 / (n as f64 + 1.0);
        ensure!((clus - counted).abs() <= 1e-9, "n={n}: clustering {clus}, counting argument {counted}");
        let stated = n as f64 / (2.0 * (n as f64 + 1.0));
        let ratio = opt.objective / clus;
        if (clus - stated).abs() > 1e-6 || (ratio - 2.0).abs() > 1e-5 {
            problems.push(format!(
                "n={n}: clustering {clus:.6} (expected {stated:.6}), ratio {ratio:.6}; pairing item 0 with the \
                 unpaired item earns another 1/(n+1) when n is odd"
            ));
        }
        ratios.push(ratio);
    }
    if !problems.is_empty() {
        return Err(problems.join("; "));
    }
    Ok(format!("optimum n/(n+1), clustering n/(2(n+1)), ratios {ratios:.6?}"))
}

fn many_signals() -> Outcome {
    let mut counts = Vec::new();
    for n in 2..=4usize {
        let inst = gen_many_signals(n).unwrap();
        let opt = solve_optimal(&inst).unwrap();
        ensure!((opt.objective - 0.75).abs() <= 1e-6, "n={n}: optimum {}", opt.objective);
        ensure!((known_revenue(&inst, &opt.scheme) - 0.75).abs() <= 1e-6, "n={n}: realized revenue");
        let signals = opt.report.signal_count_after_merge;
        if n <= 3 {
            ensure!(signals <= n * (n - 1) / 2, "n={n}: {signals} signals after merging");
        }
        counts.push(signals);
    }
    Ok(format!("optimum 3/4 for n = 2..4, merged signal counts {counts:?}"))
}

fn welfare_guarantee() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_share = f64::INFINITY;
    for t in 0..200 {
        let n = rng.gen_range(2..=5);
        let m = rng.gen_range(1..=5);
        let inst = random_known(&mut rng, n, m);
        let opt = solve_optimal(&inst).unwrap();
        let half = solve_welfare_constrained(&inst, 0.5).unwrap();
        ensure!(
            (half.objective - opt.objective).abs() <= 1e-6,
            "instance {t}: beta=0.5 gives {} vs {}",
            half.objective,
            opt.objective
        );
        let repaired = welfare_repair(&inst, &opt.scheme).unwrap();
        ensure!(columns_ok(&repaired, m), "instance {t}: repaired scheme invalid");
        let w = oracle_welfare(inst.p(), inst.values(), repaired.rows());
        let ws = welfare_star(&inst);
        ensure!(w >= ws / 2.0 - 1e-9, "instance {t}: welfare {w} < W*/2 = {}", ws / 2.0);
        let (r0, r1) = (known_revenue(&inst, &opt.scheme), known_revenue(&inst, &repaired));
        ensure!((r1 - r0).abs() <= 1e-9, "instance {t}: revenue {r0} -> {r1}");
        if ws > 0.0 {
            worst_share = worst_share.min(w / ws);
        }
    }
    Ok(format!("200 instances; smallest repaired welfare share {worst_share:.4}"))
}

fn m_signal_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut reduced = 0;
    for t in 0..200 {
        let n = rng.gen_range(2..=5);
        let m = rng.gen_range(1..=5);
        let s = rng.gen_range(1..=m + 5);
        let scheme = random_scheme(&mut rng, s, m);
        let (before, out, after) = if t % 2 == 0 {
            let inst = random_known(&mut rng, n, m);
            let out = reduce_to_m_signals(&inst, &scheme).unwrap();
            (known_revenue(&inst, &scheme), out.clone(), known_revenue(&inst, &out))
        } else {
            let k = rng.gen_range(1..=5);
            let inst = random_bayes(&mut rng, n, m, k);
            let out = reduce_to_m_signals(&inst, &scheme).unwrap();
            (bayes_revenue(&inst, &scheme), out.clone(), bayes_revenue(&inst, &out))
        };
        ensure!(out.signals() <= m, "case {t}: {} signals for m = {m}", out.signals());
        ensure!(columns_ok(&out, m), "case {t}: invalid columns");
        ensure!(after >= before - 1e-9, "case {t}: revenue {before} -> {after}");
        if s > m {
            reduced += 1;
        }
    }
    Ok(format!("200 cases ({reduced} needed reduction)"))
}

fn counterexample() -> Outcome {
    let v1 = vec![vec![10.0], vec![8.0]];
    let v2 = vec![vec![8.0], vec![10.0]];
    let inst = BayesInstance::new(vec![1.0], vec![0.5, 0.5], vec![v1.clone(), v2.clone()]).unwrap();
    let labels = all_label_tuples(2, 2, 1000).unwrap();
    let off = solve_lp2(&inst, false, &labels).unwrap().objective;
    let on = solve_lp2(&inst, true, &labels).unwrap().objective;
    ensure!((off - 9.0).abs() <= 1e-6, "ordering off: {off}");
    ensure!((on - 8.0).abs() <= 1e-6, "ordering on: {on}");
    // With one good every scheme splits it across signals, and revenue is
    // homogeneous, so every scheme earns the same.
    let brute = 0.5 * second_highest(&[10.0, 8.0]) + 0.5 * second_highest(&[8.0, 10.0]);
    ensure!(brute == 8.0, "brute force {brute}");
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for s in 1..=5 {
        let scheme = random_scheme(&mut rng, s, 1);
        let r = oracle_revenue(&[1.0], &[0.5, 0.5], &[v1.clone(), v2.clone()], scheme.rows());
        ensure!((r - 8.0).abs() <= 1e-12, "{s}-signal scheme earns {r}");
    }
    Ok(format!("ordering off {off:.6}, on {on:.6}, brute force {brute}"))
}

fn cross_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut max_gap: f64 = 0.0;
    for t in 0..50 {
        let inst = random_bayes(&mut rng, 3, 2, 2);
        let a = solve_fixed_k(&inst).unwrap();
        let b = solve_fixed_m(&inst).unwrap();
        ensure!(
            (a.objective - b.objective).abs() <= 1e-6,
            "instance {t}: fixed-k {} vs fixed-m {}",
            a.objective,
            b.objective
        );
        let (ra, rb) = (bayes_revenue(&inst, &a.scheme), bayes_revenue(&inst, &b.scheme));
        ensure!((ra - a.objective).abs() <= 1e-6, "instance {t}: fixed-k realizes {ra} vs {}", a.objective);
        ensure!((rb - b.objective).abs() <= 1e-6, "instance {t}: fixed-m realizes {rb} vs {}", b.objective);
        max_gap = max_gap.max((a.objective - b.objective).abs());
    }
    Ok(format!("50 instances; largest objective gap {max_gap:.2e}"))
}

/// Largest x-y separating cut, by enumerating all vertex subsets.
fn oracle_maxcut(graph: &GraphSpec) -> usize {
    let nv = graph.vertices().len();
    (0u32..1 << nv)
        .filter(|mask| (mask >> graph.x() & 1) != (mask >> graph.y() & 1))
        .map(|mask| {
            graph
                .edges()
                .iter()
                .filter(|&&(u, v)| (mask >> u & 1) != (mask >> v & 1))
                .count()
        })
        .max()
        .unwrap()
}

fn maxcut_gadget() -> Outcome {
    let (k1, k2) = (1e5, 1e2);
    let mut notes = Vec::new();
    for (name, graph, c_star) in [("triangle", GraphSpec::triangle(), 2usize), ("4-cycle", GraphSpec::four_cycle(), 4)] {
        ensure!(oracle_maxcut(&graph) == c_star, "{name}: max cut {}", oracle_maxcut(&graph));
        let gadget = gen_maxcut(&graph, k1, k2).unwrap();
        let nv = graph.vertices().len() as f64;
        let base = 2.0 * k1 + (nv - 2.0) * k2 + graph.edges().len() as f64;
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..1 << graph.vertices().len() {
            if (mask >> graph.x() & 1) == 0 || (mask >> graph.y() & 1) == 1 {
                continue;
            }
            let cut: BTreeSet<usize> = (0..graph.vertices().len()).filter(|&v| mask >> v & 1 == 1).collect();
            let boundary = graph
                .edges()
                .iter()
                .filter(|&&(u, v)| cut.contains(&u) != cut.contains(&v))
                .count();
            let scheme = cut_to_scheme(&graph, &cut).unwrap().scheme;
            let r = bayes_revenue(&gadget.instance, &scheme);
            let want = base + boundary as f64;
            ensure!((r - want).abs() <= 1e-9 * want, "{name}: cut {cut:?} earns {r}, formula {want}");
            best = best.max(r);
        }
        let want = base + c_star as f64;
        ensure!((best - want).abs() <= 1e-9 * want, "{name}: best cut scheme {best} vs {want}");
        notes.push(format!("{name} best cut {best}"));
        if name == "triangle" {
            ensure!(want == 200_105.0, "triangle formula {want}");
            let sol = solve_fixed_m(&gadget.instance).unwrap();
            let realized = bayes_revenue(&gadget.instance, &sol.scheme);
            ensure!((sol.objective - want).abs() <= 1e-6 * want, "fixed-m objective {}", sol.objective);
            ensure!((realized - want).abs() <= 1e-6 * want, "fixed-m realized {realized}");
            notes.push(format!("fixed-m {:.6}", sol.objective));
        }
    }
    Ok(notes.join(", "))
}

fn truthfulness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let grid = default_deviation_grid();
    let mut worst = f64::NEG_INFINITY;
    for t in 0..100 {
        let n = rng.gen_range(2..=4);
        let m = rng.gen_range(1..=4);
        let s = rng.gen_range(1..=4);
        let scheme = random_scheme(&mut rng, s, m);
        let gain = if t % 2 == 0 {
            truthfulness_check(&random_known(&mut rng, n, m), &scheme, &grid).unwrap()
        } else {
            let k = rng.gen_range(1..=3);
            truthfulness_check(&random_bayes(&mut rng, n, m, k), &scheme, &grid).unwrap()
        };
        ensure!(gain <= 1e-9, "pair {t}: deviation gains {gain}");
        worst = worst.max(gain);
    }
    Ok(format!("100 pairs; largest deviation gain {worst:.3e}"))
}

fn monte_carlo() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_z: f64 = 0.0;
    for t in 0..20u64 {
        let n = rng.gen_range(2..=4);
        let m = rng.gen_range(1..=4);
        let s = rng.gen_range(1..=4);
        let scheme = random_scheme(&mut rng, s, m);
        let (exact, rep, again) = if t % 2 == 0 {
            let inst = random_known(&mut rng, n, m);
            (
                known_revenue(&inst, &scheme),
                simulate_revenue(&inst, &scheme, 100_000, t).unwrap(),
                simulate_revenue(&inst, &scheme, 100_000, t).unwrap(),
            )
        } else {
            let k = rng.gen_range(1..=3);
            let inst = random_bayes(&mut rng, n, m, k);
            (
                bayes_revenue(&inst, &scheme),
                simulate_revenue(&inst, &scheme, 100_000, t).unwrap(),
                simulate_revenue(&inst, &scheme, 100_000, t).unwrap(),
            )
        };
        let err = (rep.estimate - exact).abs();
        // The allowance covers evaluation-order rounding when every sample
        // has the same price and the standard error is exactly zero.
        let rounding = 1e-12 * exact.abs().max(1.0);
        ensure!(err <= 4.0 * rep.stderr + rounding, "instance {t}: |{} - {exact}| > 4 * {}", rep.estimate, rep.stderr);
        let a = serde_json::to_string(&rep).unwrap();
        let b = serde_json::to_string(&again).unwrap();
        ensure!(a == b, "instance {t}: reports differ under the same seed");
        if rep.stderr > 0.0 {
            worst_z = worst_z.max(err / rep.stderr);
        }
    }
    Ok(format!("20 instances x 1e5 samples; largest |z| {worst_z:.2}"))
}

fn sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_ratio: f64 = 1.0;
    for t in 0..100 {
        let n = rng.gen_range(2..=5);
        let m = rng.gen_range(1..=8);
        let inst = random_known(&mut rng, n, m);
        let (part, clus) = clustering_bruteforce(&inst, PARTITION_GUARD).unwrap();
        let opt = solve_optimal(&inst).unwrap().objective;
        let bound = clustering_bound(&inst);
        ensure!(
            (known_revenue(&inst, &part.to_scheme(m)) - clus).abs() <= 1e-9,
            "instance {t}: clustering witness disagrees"
        );
        ensure!(clus <= opt + 1e-6, "instance {t}: clustering {clus} > optimum {opt}");
        ensure!(opt <= 2.0 * clus + 1e-6, "instance {t}: optimum {opt} > 2 * clustering {clus}");
        ensure!(opt <= bound + 1e-6, "instance {t}: optimum {opt} > bound {bound}");
        if clus > 0.0 {
            worst_ratio = worst_ratio.max(opt / clus);
        }
    }
    Ok(format!("100 instances; largest optimum/clustering ratio {worst_ratio:.4}"))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 11] = [
        ("intro example", 1, intro_example),
        ("gap family", 10, gap_family),
        ("many-signals family", 10, many_signals),
        ("welfare-constrained revenue", 60, welfare_guarantee),
        ("m-signal reduction", 30, m_signal_reduction),
        ("ordering counterexample", 1, counterexample),
        ("fixed-k vs fixed-m", 120, cross_oracle),
        ("MAX-CUT gadget", 300, maxcut_gadget),
        ("truthfulness", 30, truthfulness),
        ("Monte Carlo", 60, monte_carlo),
        ("approximation sandwich", 120, sandwich),
    ];
    let mut failed = 0;
    for (idx, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > Duration::from_secs(*limit) => {
                Err(format!("took {elapsed:.2?}, limit {limit} s"))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} [{elapsed:.2?} / {limit} s]: {detail}", idx + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{elapsed:.2?} / {limit} s]: {why}", idx + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
