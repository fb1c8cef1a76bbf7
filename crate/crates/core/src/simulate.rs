//! Monte Carlo auctions under a signaling scheme, and an exact check that
//! bidding the posterior expected value is a dominant strategy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{max_and_second, SignalingScheme, Valuations};

/// Samples per independently seeded batch. Fixed so that results do not
/// depend on how batches are spread over threads.
pub const BATCH: u64 = 8192;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Moments {
            count,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * w,
        }
    }
}

/// Inverse-CDF sampling; entries with zero weight are never returned.
fn sample_index(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().expect("nonempty distribution");
    let target = u * total;
    match cdf.iter().position(|&c| target < c) {
        Some(i) => i,
        // Rounding pushed `target` to the total: take the last positive weight.
        None => (0..cdf.len())
            .rev()
            .find(|&i| cdf[i] > if i == 0 { 0.0 } else { cdf[i - 1] })
            .unwrap_or(0),
    }
}

fn cumulative(weights: impl IntoIterator<Item = f64>) -> Vec<f64> {
    weights
        .into_iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

/// Posterior expected value of every bidder, per signal, in outcome `l`.
/// Signals never emitted get `None`.
fn posterior_bids<I: Valuations + ?Sized>(inst: &I, scheme: &SignalingScheme, l: usize) -> Vec<Option<Vec<f64>>> {
    let p = inst.good_probabilities();
    let values = inst.raw_values(l);
    scheme
        .rows()
        .iter()
        .map(|row| {
            let mass: f64 = row.iter().zip(p).map(|(x, pj)| x * pj).sum();
            (mass > 0.0).then(|| {
                values
                    .iter()
                    .map(|vi| row.iter().zip(p).zip(vi).map(|((x, pj), v)| x * pj * v).sum::<f64>() / mass)
                    .collect()
            })
        })
        .collect()
}

/// Estimates expected revenue by simulating `samples` auctions: draw the
/// outcome, the good, then the signal; every bidder bids its posterior
/// expected value and the second-highest bid is paid.
pub fn simulate_revenue<I: Valuations + ?Sized + Sync>(
    inst: &I,
    scheme: &SignalingScheme,
    samples: u64,
    seed: u64,
) -> Result<SimReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    crate::model::validate_scheme(scheme, inst.goods()).map_err(Error::InvalidScheme)?;
    let k = inst.outcome_count();
    let outcome_cdf = cumulative((0..k).map(|l| inst.outcome(l).0));
    let good_cdf = cumulative(inst.good_probabilities().iter().copied());
    let signal_cdf: Vec<Vec<f64>> = (0..inst.goods())
        .map(|j| cumulative(scheme.rows().iter().map(|r| r[j])))
        .collect();
    let price: Vec<Vec<f64>> = (0..k)
        .map(|l| {
            posterior_bids(inst, scheme, l)
                .into_iter()
                .map(|b| b.map_or(0.0, |b| max_and_second(&b).1))
                .collect()
        })
        .collect();

    let batches = samples.div_ceil(BATCH);
    let moments = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = BATCH.min(samples - b * BATCH);
            let mut acc = Moments::default();
            for _ in 0..count {
                let l = sample_index(&outcome_cdf, rng.gen());
                let j = sample_index(&good_cdf, rng.gen());
                let sigma = sample_index(&signal_cdf[j], rng.gen());
                acc.push(price[l][sigma]);
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Moments::default(), Moments::merge);

    let variance = if moments.count > 1 {
        moments.m2 / (moments.count - 1) as f64
    } else {
        0.0
    };
    Ok(SimReport {
        estimate: moments.mean,
        stderr: (variance / samples as f64).sqrt(),
        samples,
        seed,
    })
}

/// A unilateral change to a truthful bid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Deviation {
    Scale(f64),
    Shift(f64),
}

impl Deviation {
    pub fn apply(self, bid: f64) -> f64 {
        match self {
            Deviation::Scale(f) => (bid * f).max(0.0),
            Deviation::Shift(d) => (bid + d).max(0.0),
        }
    }
}

/// The multiplicative grid `x{0.5, 0.9, 1.1, 2.0}`.
pub fn default_deviation_grid() -> Vec<Deviation> {
    [0.5, 0.9, 1.1, 2.0].into_iter().map(Deviation::Scale).collect()
}

/// Utility of bidder `i` bidding `bid` against truthful opponents.
/// Wins outright above the best opposing bid, or on a tie when `i` has the
/// lowest index among the tied bidders.
fn utility(bids: &[f64], i: usize, value: f64, bid: f64) -> f64 {
    let (best_other, best_idx) = bids
        .iter()
        .enumerate()
        .filter(|&(o, _)| o != i)
        .fold((f64::NEG_INFINITY, usize::MAX), |acc, (o, &b)| if b > acc.0 { (b, o) } else { acc });
    let wins = bid > best_other || (bid == best_other && i < best_idx);
    if wins {
        value - best_other
    } else {
        0.0
    }
}

/// Largest expected utility gain any bidder obtains from any deviation in
/// `grid`, over all outcomes and emitted signals. Evaluated exactly per
/// signal; truthful bidding is dominant, so the result should be `<= 0`.
pub fn truthfulness_check<I: Valuations + ?Sized>(
    inst: &I,
    scheme: &SignalingScheme,
    grid: &[Deviation],
) -> Result<f64> {
    crate::model::validate_scheme(scheme, inst.goods()).map_err(Error::InvalidScheme)?;
    let mut worst = f64::NEG_INFINITY;
    for l in 0..inst.outcome_count() {
        for bids in posterior_bids(inst, scheme, l).into_iter().flatten() {
            for (i, &value) in bids.iter().enumerate() {
                let honest = utility(&bids, i, value, value);
                for dev in grid {
                    worst = worst.max(utility(&bids, i, value, dev.apply(value)) - honest);
                }
            }
        }
    }
    Ok(if worst.is_finite() { worst } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::{gap_optimal_scheme, gen_gap, gen_identity, random_instance, random_scheme, RandomSpec};
    use crate::model::{revenue, BayesInstance, Instance};

    #[test]
    fn identity_no_reveal() {
        let inst = gen_identity(2).unwrap();
        let r = simulate_revenue(&inst, &SignalingScheme::no_reveal(2), 100_000, 1).unwrap();
        assert!((r.estimate - 0.5).abs() <= 4.0 * r.stderr.max(1e-12));
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn gap_optimal() {
        let inst = gen_gap(2).unwrap();
        let s = gap_optimal_scheme(2);
        let exact = revenue(&inst, &s).unwrap();
        assert!((exact - 2.0 / 3.0).abs() < 1e-12);
        // Every signal sells at the same price, so the estimate has no spread.
        let r = simulate_revenue(&inst, &s, 100_000, 9).unwrap();
        assert!((r.estimate - exact).abs() <= 4.0 * r.stderr + 1e-12, "{r:?}");
    }

    #[test]
    fn full_reveal_identity_is_zero() {
        let inst = gen_identity(3).unwrap();
        let r = simulate_revenue(&inst, &SignalingScheme::full_reveal(3), 5_000, 3).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn deterministic_and_batch_independent() {
        let inst = gen_gap(3).unwrap();
        let s = gap_optimal_scheme(3);
        let a = simulate_revenue(&inst, &s, 20_000, 42).unwrap();
        let b = simulate_revenue(&inst, &s, 20_000, 42).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| simulate_revenue(&inst, &s, 20_000, 42).unwrap());
        assert_eq!(a, c);
        assert!(simulate_revenue(&inst, &s, 0, 1).is_err());
    }

    #[test]
    fn bayesian_sampling() {
        let inst = BayesInstance::new(
            vec![0.3, 0.7],
            vec![0.25, 0.75],
            vec![
                vec![vec![1.0, 2.0], vec![3.0, 0.5], vec![0.0, 1.0]],
                vec![vec![2.0, 2.0], vec![1.0, 4.0], vec![2.5, 0.0]],
            ],
        )
        .unwrap();
        let s = SignalingScheme::new(vec![vec![0.6, 0.2], vec![0.4, 0.8]]);
        let exact = revenue(&inst, &s).unwrap();
        let r = simulate_revenue(&inst, &s, 100_000, 5).unwrap();
        assert!((r.estimate - exact).abs() <= 4.0 * r.stderr, "{r:?} vs {exact}");
    }

    #[test]
    fn inverse_cdf_skips_zero_weights() {
        let cdf = cumulative([0.0, 0.5, 0.0, 0.5]);
        assert_eq!(sample_index(&cdf, 0.0), 1);
        assert_eq!(sample_index(&cdf, 0.49), 1);
        assert_eq!(sample_index(&cdf, 0.5), 3);
        assert_eq!(sample_index(&cdf, 1.0), 3);
    }

    #[test]
    fn truthful_examples() {
        let grid = default_deviation_grid();
        let inst = gen_identity(2).unwrap();
        assert!(truthfulness_check(&inst, &SignalingScheme::no_reveal(2), &grid).unwrap() <= 1e-9);
        let inst = gen_gap(2).unwrap();
        assert!(truthfulness_check(&inst, &gap_optimal_scheme(2), &grid).unwrap() <= 1e-9);
    }

    #[test]
    fn overbidding_a_loss_does_not_pay() {
        // Bidder 2 values 1 against an opponent at 3; a large overbid wins at a loss.
        assert_eq!(utility(&[3.0, 1.0], 1, 1.0, 1.0), 0.0);
        assert_eq!(utility(&[3.0, 1.0], 1, 1.0, 5.0), -2.0);
        let grid = [Deviation::Scale(10.0), Deviation::Shift(2.5)];
        let inst = crate::model::KnownInstance::new(vec![1.0], vec![vec![3.0], vec![1.0]]).unwrap();
        assert!(truthfulness_check(&inst, &SignalingScheme::no_reveal(1), &grid).unwrap() <= 0.0);
    }

    #[test]
    fn random_pairs_are_truthful() {
        let grid = [
            Deviation::Scale(0.5),
            Deviation::Scale(1.5),
            Deviation::Shift(-0.1),
            Deviation::Shift(0.1),
        ];
        for seed in 0..30 {
            let inst = random_instance(seed, &RandomSpec::bayes(3, 3, 2)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_scheme(&mut rng, 3, 3);
            let gain = match &inst {
                Instance::Bayes(b) => truthfulness_check(b, &s, &grid).unwrap(),
                Instance::Known(k) => truthfulness_check(k, &s, &grid).unwrap(),
            };
            assert!(gain <= 1e-9);
        }
    }
}
