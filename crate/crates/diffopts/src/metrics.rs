// SPDX-License-Identifier: Apache-2.0

//! Evaluation measures: pair-steps statistics under an uninformed behavior
//! policy, learning curves over run logs, and the domain-difficulty index.
//!
//! The pair-steps protocol simulates, for every ordered pair of distinct
//! states, a behavior policy that picks uniformly among the primitive moves
//! that change state and the options eligible at the current state. Options
//! run their own policies; every intra-option step counts, and the walk
//! stops the moment the target state is occupied, even mid-option.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::agent::{execute_option, RunLog};
use crate::env::{Domain, ACTIONS};
use crate::graph::StateGraph;
use crate::options::{Method, OptionSet};
use crate::spectral::WalkSpectrum;
use crate::{Error, Result};

/// Linear-interpolation quantile at probability `p` of `xs`.
///
/// The quantile sits at fractional rank `(n - 1) p` of the sorted sample;
/// non-integer ranks interpolate linearly between neighbors.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    assert!(!xs.is_empty(), "quantile of an empty sample");
    assert!((0.0..=1.0).contains(&p), "probability out of range");
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Five-number-style summary of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// 50th percentile.
    pub median: f64,
    /// 25th percentile.
    pub q1: f64,
    /// 75th percentile.
    pub q3: f64,
    /// Interquartile range `q3 - q1`.
    pub iqr: f64,
    /// Arithmetic mean.
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Summarize a sample with interpolated quartiles and population moments.
pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let q1 = quantile(xs, 0.25);
    let q3 = quantile(xs, 0.75);
    Summary {
        median: quantile(xs, 0.5),
        q1,
        q3,
        iqr: q3 - q1,
        mean,
        std: var.sqrt(),
    }
}

/// Steps-between-states statistics for one option set.
#[derive(Debug, Clone)]
pub struct PairStepsReport {
    /// Discovery method of the option set measured.
    pub method: Method,
    /// Diffusion scale of the option set, when it has one.
    pub t: Option<u32>,
    /// Number of options in the set.
    pub num_options: usize,
    /// Trials simulated per ordered pair.
    pub trials_per_pair: usize,
    /// Per-trial step cap, `50 |S|`.
    pub cap: u64,
    /// Fraction of trials that hit the cap.
    pub capped_fraction: f64,
    /// Summary over ordered pairs (s, s'), s != s'.
    pub ordered: Summary,
    /// Summary over unordered pairs, averaging both directions.
    pub unordered: Summary,
    /// Mean steps per ordered pair, in (source-major, target-minor) order.
    pub pair_means: Vec<f64>,
}

/// Simulate the uninformed behavior policy between every ordered pair of
/// distinct states.
///
/// Per trial the walk starts at the source and repeats: choose uniformly
/// among the primitive moves that change state and the eligible options;
/// follow the choice, counting every environment step; stop when the target
/// is occupied or the step cap is reached (capped trials contribute the cap).
/// Pair `p` uses the random stream seeded `seed + p`, making the report
/// deterministic regardless of scheduling.
pub fn steps_between_states(
    domain: &Domain,
    opts: &OptionSet,
    seed: u64,
    trials_per_pair: usize,
) -> Result<PairStepsReport> {
    let n = domain.num_states();
    if n < 2 {
        return Err(Error::InvalidConfig(
            "pair-steps needs at least two states".into(),
        ));
    }
    if trials_per_pair == 0 {
        return Err(Error::InvalidConfig(
            "trials per pair must be positive".into(),
        ));
    }
    let cap = 50 * n as u64;

    // Free primitive moves and eligible options per state.
    let moves: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            let mut choices: Vec<usize> = ACTIONS
                .into_iter()
                .filter(|&a| domain.deterministic_successor(s, a) != s)
                .map(|a| a.index())
                .collect();
            for (j, opt) in opts.options.iter().enumerate() {
                if opt.eligible(s) {
                    choices.push(4 + j);
                }
            }
            choices
        })
        .collect();

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|s| (0..n).filter(move |&s2| s2 != s).map(move |s2| (s, s2)))
        .collect();

    let results: Vec<(f64, usize)> = pairs
        .par_iter()
        .enumerate()
        .map(|(p, &(src, dst))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(p as u64));
            let mut total = 0u64;
            let mut capped = 0usize;
            for _ in 0..trials_per_pair {
                let mut cur = src;
                let mut count = 0u64;
                while cur != dst && count < cap {
                    let &choice = moves[cur].choose(&mut rng).unwrap();
                    if choice < 4 {
                        cur = domain.step(cur, ACTIONS[choice], &mut rng);
                        count += 1;
                    } else {
                        let opt = &opts.options[choice - 4];
                        let budget = (cap - count).min(u32::MAX as u64) as u32;
                        let out = execute_option(domain, opt, cur, budget, &mut rng)
                            .expect("eligibility was checked");
                        if let Some(j) = out.path[1..].iter().position(|&s| s == dst) {
                            count += j as u64 + 1;
                            cur = dst;
                        } else {
                            count += u64::from(out.steps_used);
                            cur = out.end_state;
                        }
                    }
                }
                if cur != dst {
                    capped += 1;
                }
                total += count.min(cap);
            }
            (total as f64 / trials_per_pair as f64, capped)
        })
        .collect();

    let pair_means: Vec<f64> = results.iter().map(|r| r.0).collect();
    let capped: usize = results.iter().map(|r| r.1).sum();
    let capped_fraction = capped as f64 / (pairs.len() * trials_per_pair) as f64;

    // Average the two directions of each unordered pair. Ordered pairs are
    // source-major, so (s, s2) with s < s2 sits at s*(n-1) + s2 - 1 and the
    // reverse at s2*(n-1) + s.
    let mut unordered_means = Vec::with_capacity(n * (n - 1) / 2);
    for s in 0..n {
        for s2 in (s + 1)..n {
            let fwd = pair_means[s * (n - 1) + s2 - 1];
            let rev = pair_means[s2 * (n - 1) + s];
            unordered_means.push(0.5 * (fwd + rev));
        }
    }

    Ok(PairStepsReport {
        method: opts.method,
        t: opts.t,
        num_options: opts.len(),
        trials_per_pair,
        cap,
        capped_fraction,
        ordered: summarize(&pair_means),
        unordered: summarize(&unordered_means),
        pair_means,
    })
}

/// Pointwise mean and population standard deviation of episode lengths
/// across runs.
pub fn learning_curve(logs: &[RunLog]) -> Result<Vec<(f64, f64)>> {
    let Some(first) = logs.first() else {
        return Err(Error::InvalidConfig("no runs to average".into()));
    };
    let episodes = first.steps_per_episode.len();
    for log in logs {
        if log.steps_per_episode.len() != episodes {
            return Err(Error::LengthMismatch(episodes, log.steps_per_episode.len()));
        }
        for &steps in &log.steps_per_episode {
            if !(1..=101).contains(&steps) {
                return Err(Error::StepsOutOfRange(steps));
            }
        }
    }
    let m = logs.len() as f64;
    Ok((0..episodes)
        .map(|e| {
            let mean = logs
                .iter()
                .map(|l| f64::from(l.steps_per_episode[e]))
                .sum::<f64>()
                / m;
            let var = logs
                .iter()
                .map(|l| (f64::from(l.steps_per_episode[e]) - mean).powi(2))
                .sum::<f64>()
                / m;
            (mean, var.sqrt())
        })
        .collect())
}

/// Domain-difficulty index: the number of states times the mean pairwise
/// diffusion distance, averaged over 100 scales spaced evenly on [1, 1000].
pub fn domain_difficulty(sp: &WalkSpectrum, g: &StateGraph) -> f64 {
    let n = g.num_states();
    if n < 2 {
        return 0.0;
    }
    // Gram trick: with E_t = right diag(omega^t) left^T = W^t, the squared
    // distances come from G = E_t^T E_t = (left diag) H (left diag)^T where
    // H = right^T right is scale-independent.
    let h = sp.right().transpose() * sp.right();
    let mut sum_over_scales = 0.0;
    let scales: Vec<u32> = (0..100)
        .map(|i| (1.0 + i as f64 * (999.0 / 99.0)).round() as u32)
        .collect();
    for &t in &scales {
        let mut a = sp.left().clone();
        for i in 0..n {
            let w = sp.omegas()[i].powi(t as i32);
            for s in 0..n {
                a[(s, i)] *= w;
            }
        }
        let gram = &a * &h * a.transpose();
        let mut pair_sum = 0.0;
        for s in 0..n {
            for s2 in (s + 1)..n {
                let sq = gram[(s, s)] + gram[(s2, s2)] - 2.0 * gram[(s, s2)];
                pair_sum += sq.max(0.0).sqrt();
            }
        }
        sum_over_scales += pair_sum / (n * (n - 1) / 2) as f64;
    }
    n as f64 * sum_over_scales / scales.len() as f64
}
