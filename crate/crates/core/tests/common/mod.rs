//! Random instance builders and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

pub mod props;

use imc_hit::credal::{CredalRow, CredalSet, ExtremeSelection};
use imc_hit::markov::{StateSet, TargetSet, TransitionMatrix};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform weights on a random subset of `0..n` of size `1..=max_support`.
pub fn random_row<R: Rng>(rng: &mut R, n: usize, max_support: usize) -> Vec<f64> {
    let k = rng.random_range(1..=max_support.min(n));
    let support = sample(rng, n, k).into_vec();
    let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    let mut row = vec![0.0; n];
    for (y, w) in support.into_iter().zip(raw) {
        row[y] = w / total;
    }
    row
}

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, max_support: usize) -> TransitionMatrix {
    TransitionMatrix::from_rows((0..n).map(|_| random_row(rng, n, max_support)).collect()).unwrap()
}

/// Random nonempty subset of size at most `max`.
pub fn random_target<R: Rng>(rng: &mut R, n: usize, max: usize) -> TargetSet {
    let k = rng.random_range(1..=max.min(n));
    TargetSet::new(n, sample(rng, n, k).into_vec()).unwrap()
}

/// Rows with `1..=max_vertices` sparse vertices each.
pub fn random_vertex_set<R: Rng>(rng: &mut R, n: usize, max_vertices: usize) -> CredalSet {
    let rows = (0..n)
        .map(|_| {
            let m = rng.random_range(1..=max_vertices);
            let support = rng.random_range(1..=n);
            CredalRow::vertices((0..m).map(|_| random_row(rng, n, support)).collect()).unwrap()
        })
        .collect();
    CredalSet::new(rows).unwrap()
}

/// Mix of vertex rows and ε-contamination rows with random supports.
pub fn random_mixed_set<R: Rng>(rng: &mut R, n: usize, max_vertices: usize) -> CredalSet {
    let rows = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                let m = rng.random_range(1..=max_vertices);
                let support = rng.random_range(1..=n);
                CredalRow::vertices((0..m).map(|_| random_row(rng, n, support)).collect()).unwrap()
            } else {
                let k = rng.random_range(1..=n);
                let support = sample(rng, n, k).into_vec();
                let weights = random_row(rng, k, k);
                let mut base = vec![0.0; n];
                for (&y, w) in support.iter().zip(weights) {
                    base[y] = w;
                }
                let eps = rng.random_range(0.01..0.99);
                CredalRow::eps_contamination(base, eps, support).unwrap()
            }
        })
        .collect();
    CredalSet::new(rows).unwrap()
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Every selection of one extreme point per row.
pub fn all_selections(c: &CredalSet) -> Vec<ExtremeSelection> {
    let counts = c.extreme_counts();
    let total: usize = counts.iter().product();
    (0..total)
        .map(|mut i| {
            ExtremeSelection::new(
                counts
                    .iter()
                    .map(|&m| {
                        let k = i % m;
                        i /= m;
                        k
                    })
                    .collect(),
            )
        })
        .collect()
}

pub fn vertex_matrices(c: &CredalSet) -> Vec<TransitionMatrix> {
    all_selections(c)
        .iter()
        .map(|s| c.materialize(s).unwrap())
        .collect()
}

/// Reachability by repeated boolean squaring of `I + adjacency`.
pub fn reach_closure(t: &TransitionMatrix) -> Vec<Vec<bool>> {
    let n = t.size();
    let mut r: Vec<Vec<bool>> = (0..n)
        .map(|x| (0..n).map(|y| x == y || t.get(x, y) > 1e-12).collect())
        .collect();
    let mut len = 1;
    while len < n {
        let prev = r.clone();
        for x in 0..n {
            for y in 0..n {
                r[x][y] = (0..n).any(|z| prev[x][z] && prev[z][y]);
            }
        }
        len *= 2;
    }
    r
}

/// States outside `A` that reach no state of `A`, by the closure oracle.
pub fn cannot_reach_oracle(t: &TransitionMatrix, target: &TargetSet) -> StateSet {
    let n = t.size();
    let r = reach_closure(t);
    StateSet::from_mask(
        (0..n)
            .map(|x| !target.contains(x) && !target.set().iter().any(|a| r[x][a]))
            .collect(),
    )
}

pub fn union_of_cannot_reach(c: &CredalSet, target: &TargetSet) -> StateSet {
    vertex_matrices(c)
        .iter()
        .map(|t| cannot_reach_oracle(t, target))
        .fold(StateSet::empty(c.size()), |acc, s| acc.union(&s))
}

pub fn intersection_of_cannot_reach(c: &CredalSet, target: &TargetSet) -> StateSet {
    vertex_matrices(c)
        .iter()
        .map(|t| cannot_reach_oracle(t, target))
        .fold(StateSet::full(c.size()), |acc, s| acc.intersection(&s))
}

/// `min_i v_i · f` over the listed extreme points of each row.
pub fn enumerated_lower(c: &CredalSet, f: &[f64]) -> Vec<f64> {
    c.rows()
        .iter()
        .map(|row| {
            (0..row.extreme_count())
                .map(|i| dot(&row.extreme_point(i), f))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn enumerated_upper(c: &CredalSet, f: &[f64]) -> Vec<f64> {
    c.rows()
        .iter()
        .map(|row| {
            (0..row.extreme_count())
                .map(|i| dot(&row.extreme_point(i), f))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn zero_set(values: &[f64], tol: f64) -> StateSet {
    StateSet::from_mask(values.iter().map(|&v| v.abs() <= tol).collect())
}
