//! Independent checks: Monte-Carlo hitting estimates for a fixed matrix and
//! exhaustive enumeration of vertex matrices for small credal sets.
//!
//! Simulation uses ChaCha8 with one stream per trial index, so estimates do not
//! depend on how trials are scheduled across threads.

use rand::distr::weighted::WeightedIndex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::credal::{CredalSet, ExtremeSelection};
use crate::error::{domain, Error, Result};
use crate::markov::{cannot_reach_set, TargetSet, TransitionMatrix};
use crate::precise::{hitting_probabilities, HittingVector};

pub use crate::reachability::DEFAULT_COMBO_LIMIT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub trials: u64,
    pub horizon: usize,
    pub seed: u64,
}

impl McConfig {
    /// `trials` trials with the default horizon `50 N`.
    pub fn new(trials: u64, n: usize, seed: u64) -> Self {
        Self {
            trials,
            horizon: 50 * n,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Fraction of trials still outside `A ∪ C_T` at the horizon.
    pub survival: f64,
}

/// Estimates `p^T(x)` by simulating trajectories until they enter `A`, enter
/// `C_T`, or run out of horizon.
pub fn simulate_hitting(
    t: &TransitionMatrix,
    target: &TargetSet,
    x: usize,
    cfg: &McConfig,
) -> Result<McEstimate> {
    let n = t.size();
    if x >= n {
        return domain(format!("state {x} out of range for {n} states"));
    }
    if cfg.trials == 0 || cfg.horizon == 0 {
        return domain("trials and horizon must be positive");
    }
    let dead = cannot_reach_set(t, target)?;
    let samplers = (0..n)
        .map(|y| {
            WeightedIndex::new(t.row(y))
                .map_err(|e| Error::Diagnostics(format!("row {y} cannot be sampled: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let (hits, alive) = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(trial);
            let mut state = x;
            for _ in 0..=cfg.horizon {
                if target.contains(state) {
                    return (1u64, 0u64);
                }
                if dead.contains(state) {
                    return (0, 0);
                }
                state = samplers[state].sample(&mut rng);
            }
            (0, 1)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let trials = cfg.trials as f64;
    let estimate = hits as f64 / trials;
    Ok(McEstimate {
        estimate,
        stderr: (estimate * (1.0 - estimate) / trials).sqrt(),
        survival: alive as f64 / trials,
    })
}

fn decode(mut index: u128, counts: &[usize]) -> ExtremeSelection {
    let choice = counts
        .iter()
        .map(|&m| {
            let i = (index % m as u128) as usize;
            index /= m as u128;
            i
        })
        .collect();
    ExtremeSelection::new(choice)
}

/// Componentwise min and max of `p^T` over every vertex matrix of the set.
pub fn brute_force_bounds(
    c: &CredalSet,
    target: &TargetSet,
    combo_limit: u128,
) -> Result<(HittingVector, HittingVector)> {
    let count = c.extreme_product();
    if count > combo_limit {
        return Err(Error::Capacity {
            count,
            limit: combo_limit,
        });
    }
    let n = c.size();
    let counts = c.extreme_counts();
    let (lower, upper) = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let t = c.materialize(&decode(i as u128, &counts))?;
            let p = hitting_probabilities(&t, target)?.into_values();
            Ok((p.clone(), p))
        })
        .try_reduce(
            || (vec![f64::INFINITY; n], vec![f64::NEG_INFINITY; n]),
            |(mut lo, mut hi), (lo2, hi2)| {
                for x in 0..n {
                    lo[x] = lo[x].min(lo2[x]);
                    hi[x] = hi[x].max(hi2[x]);
                }
                Ok::<_, Error>((lo, hi))
            },
        )?;
    Ok((HittingVector::new(lower), HittingVector::new(upper)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::credal::CredalRow;

    fn t2() -> TransitionMatrix {
        TransitionMatrix::from_rows(vec![
            vec![0.25, 0.5, 0.25],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn trivial_starts() {
        let a = TargetSet::new(3, [1]).unwrap();
        let cfg = McConfig::new(1000, 3, 1);
        let e = simulate_hitting(&t2(), &a, 1, &cfg).unwrap();
        assert_eq!((e.estimate, e.survival), (1.0, 0.0));
        let e = simulate_hitting(&t2(), &a, 2, &cfg).unwrap();
        assert_eq!(e.estimate, 0.0);
    }

    #[test]
    fn estimate_matches_two_thirds() {
        let a = TargetSet::new(3, [1]).unwrap();
        let cfg = McConfig {
            trials: 100_000,
            horizon: 200,
            seed: 42,
        };
        let e = simulate_hitting(&t2(), &a, 0, &cfg).unwrap();
        assert!((e.estimate - 2.0 / 3.0).abs() <= 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn simulation_is_reproducible() {
        let a = TargetSet::new(3, [1]).unwrap();
        let cfg = McConfig::new(5000, 3, 9);
        let e1 = simulate_hitting(&t2(), &a, 0, &cfg).unwrap();
        let e2 = simulate_hitting(&t2(), &a, 0, &cfg).unwrap();
        assert_eq!(e1.estimate.to_bits(), e2.estimate.to_bits());
    }

    #[test]
    fn brute_force_on_worst_case_m3() {
        let vertices = [2.0f64, 4.0, 8.0]
            .iter()
            .map(|&n| vec![1.0 - 1.0 / n - 1.0 / (n * n), 1.0 / n, 1.0 / (n * n)])
            .collect();
        let c = CredalSet::new(vec![
            CredalRow::vertices(vertices).unwrap(),
            CredalRow::singleton(vec![0.0, 1.0, 0.0]).unwrap(),
            CredalRow::singleton(vec![0.0, 0.0, 1.0]).unwrap(),
        ])
        .unwrap();
        let a = TargetSet::new(3, [1]).unwrap();
        let (lo, hi) = brute_force_bounds(&c, &a, DEFAULT_COMBO_LIMIT).unwrap();
        assert!((hi.get(0) - 8.0 / 9.0).abs() < 1e-12);
        assert!((lo.get(0) - 2.0 / 3.0).abs() < 1e-12);
        assert!(matches!(
            brute_force_bounds(&c, &a, 2),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn brute_force_singleton() {
        let c = CredalSet::singleton(&t2());
        let a = TargetSet::new(3, [1]).unwrap();
        let (lo, hi) = brute_force_bounds(&c, &a, 10).unwrap();
        assert_eq!(lo, hi);
        assert_eq!(lo, hitting_probabilities(&t2(), &a).unwrap());
    }
}
