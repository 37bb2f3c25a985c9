//! Lower and upper reachability of a target set under a credal set.
//!
//! Lower reachability is computed through the nondecreasing chain
//! `D_{k+1} = D_k ∪ {z : [T̲ 1_{D_k}](z) > 0}`; upper reachability through the
//! analogous chain with `T̄`. Positivity of `[T̲ 1_D](z)` depends only on row
//! supports: it holds iff every extreme point of row `z` puts mass on `D`.
//! The stronger notions (a single uniform horizon, or positivity of iterated
//! lower operators) are decided by support combinatorics as well.

use std::collections::HashSet;

use serde::Serialize;

use crate::credal::CredalSet;
use crate::error::{domain, Error, Result};
use crate::markov::{StateSet, TargetSet, TransitionMatrix};

/// Default cap on the number of vertex-support assignments enumerated.
pub const DEFAULT_COMBO_LIMIT: u128 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Lower,
    Upper,
}

/// Outcome of a reachability analysis.
#[derive(Debug, Clone, Serialize)]
pub struct ReachabilityReport {
    pub mode: Mode,
    pub target: TargetSet,
    /// `D_0 = A ⊊ D_1 ⊊ … ⊊ D_{k*}`.
    pub chain: Vec<StateSet>,
    /// States with zero hitting probability in this mode.
    pub trivial_zero: StateSet,
    pub nontrivial: StateSet,
    /// A matrix of the credal set whose cannot-reach set equals `trivial_zero`.
    #[serde(serialize_with = "serialize_matrix")]
    pub witness: TransitionMatrix,
}

fn serialize_matrix<S: serde::Serializer>(t: &TransitionMatrix, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(t.rows())
}

impl ReachabilityReport {
    pub fn fixpoint(&self) -> &StateSet {
        self.chain
            .last()
            .expect("chain contains at least the target")
    }
}

/// Whether extreme point `i` of row `z` puts positive mass on `set`.
fn extreme_hits(c: &CredalSet, z: usize, i: usize, set: &StateSet) -> bool {
    set.iter().any(|y| c.row(z).extreme_has_edge(i, y))
}

/// `[T̲ 1_D](z) > 0`.
fn lower_positive(c: &CredalSet, z: usize, set: &StateSet) -> bool {
    (0..c.row(z).extreme_count()).all(|i| extreme_hits(c, z, i, set))
}

/// `[T̄ 1_D](z) > 0`.
fn upper_positive(c: &CredalSet, z: usize, set: &StateSet) -> bool {
    set.iter().any(|y| c.possible_edge(z, y))
}

fn grow_chain(
    c: &CredalSet,
    target: &TargetSet,
    positive: impl Fn(&CredalSet, usize, &StateSet) -> bool,
) -> Vec<StateSet> {
    let n = c.size();
    let mut chain = vec![target.set().clone()];
    loop {
        let current = chain.last().unwrap();
        let mut next = current.clone();
        for z in (0..n).filter(|&z| !current.contains(z)) {
            if positive(c, z, current) {
                next.insert(z);
            }
        }
        if &next == current {
            return chain;
        }
        chain.push(next);
    }
}

fn check_space(c: &CredalSet, target: &TargetSet) -> Result<()> {
    if c.size() != target.universe() {
        return domain("target set and credal set have different state spaces");
    }
    Ok(())
}

/// Upper reachability report: `𝒲_𝒯` and the center matrix as witness.
pub fn upper_reach_report(c: &CredalSet, target: &TargetSet) -> Result<ReachabilityReport> {
    check_space(c, target)?;
    let chain = grow_chain(c, target, upper_positive);
    let trivial_zero = chain.last().unwrap().complement();
    let nontrivial = target.complement().difference(&trivial_zero);
    Ok(ReachabilityReport {
        mode: Mode::Upper,
        target: target.clone(),
        chain,
        trivial_zero,
        nontrivial,
        witness: c.center_matrix(),
    })
}

/// Lower reachability report: `𝒜_𝒯` from the chain fixpoint.
///
/// Witness rows on `𝒜_𝒯` are extreme points putting no mass on `D_{k*}`; all
/// other rows are center rows.
pub fn lower_reach_report(c: &CredalSet, target: &TargetSet) -> Result<ReachabilityReport> {
    check_space(c, target)?;
    let chain = grow_chain(c, target, lower_positive);
    let fix = chain.last().unwrap();
    let trivial_zero = fix.complement();
    let nontrivial = target.complement().difference(&trivial_zero);
    let rows = (0..c.size())
        .map(|z| {
            if trivial_zero.contains(z) {
                let row = c.row(z);
                let i = (0..row.extreme_count())
                    .find(|&i| !extreme_hits(c, z, i, fix))
                    .ok_or_else(|| {
                        Error::Diagnostics(format!("no disconnecting extreme point for state {z}"))
                    })?;
                Ok(row.extreme_point(i))
            } else {
                Ok(c.row(z).center())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReachabilityReport {
        mode: Mode::Lower,
        target: target.clone(),
        chain,
        trivial_zero,
        nontrivial,
        witness: TransitionMatrix::from_rows(rows)?,
    })
}

fn check_subset(c: &CredalSet, d: &StateSet, x: usize) -> Result<()> {
    if d.universe() != c.size() {
        return domain("set and credal set have different state spaces");
    }
    if d.is_empty() {
        return domain("set must be nonempty");
    }
    if x >= c.size() {
        return domain(format!("state {x} out of range for {} states", c.size()));
    }
    Ok(())
}

/// Whether `[T̲^n 1_D](x) > 0` for some `n ≥ 0`.
///
/// Iterates the support sets `S_{n+1} = {z : every extreme point of row z hits S_n}`
/// until `x` appears or a set repeats.
pub fn lr3_holds(c: &CredalSet, d: &StateSet, x: usize) -> Result<bool> {
    check_subset(c, d, x)?;
    let n = c.size();
    let mut seen = HashSet::new();
    let mut current = d.clone();
    loop {
        if current.contains(x) {
            return Ok(true);
        }
        if !seen.insert(current.clone()) {
            return Ok(false);
        }
        current = StateSet::from_mask((0..n).map(|z| lower_positive(c, z, &current)).collect());
    }
}

/// Default horizon cap for [`lr2_minimal_n`]: `4 N²`.
pub fn default_n_cap(n: usize) -> usize {
    4 * n * n
}

/// Least `n ≤ n_cap` such that every matrix of the credal set has `[T^n 1_D](x) > 0`.
///
/// Enumerates one vertex support per row; the support of any matrix in the set
/// contains the support of some such assignment, and path existence is monotone
/// in the edge set, so the vertex assignments decide the question exactly.
pub fn lr2_minimal_n(
    c: &CredalSet,
    d: &StateSet,
    x: usize,
    n_cap: usize,
    combo_limit: u128,
) -> Result<Option<usize>> {
    check_subset(c, d, x)?;
    if n_cap == 0 {
        return domain("n_cap must be at least 1");
    }
    if d.contains(x) {
        return Ok(Some(0));
    }
    let count = c.extreme_product();
    if count > combo_limit {
        return Err(Error::Capacity {
            count,
            limit: combo_limit,
        });
    }
    let n = c.size();
    let counts = c.extreme_counts();
    // successor lists per (row, extreme point)
    let successors: Vec<Vec<Vec<usize>>> = (0..n)
        .map(|z| {
            (0..counts[z])
                .map(|i| {
                    (0..n)
                        .filter(|&y| c.row(z).extreme_has_edge(i, y))
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut alive = vec![true; n_cap + 1];
    alive[0] = false;
    let mut assignment = vec![0usize; n];
    loop {
        let mut frontier = vec![false; n];
        frontier[x] = true;
        for slot in alive.iter_mut().skip(1) {
            let mut next = vec![false; n];
            for u in (0..n).filter(|&u| frontier[u]) {
                for &v in &successors[u][assignment[u]] {
                    next[v] = true;
                }
            }
            frontier = next;
            if *slot && !d.iter().any(|y| frontier[y]) {
                *slot = false;
            }
        }
        if !alive.iter().any(|&a| a) {
            return Ok(None);
        }
        // odometer
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(alive.iter().position(|&a| a));
            }
            assignment[pos] += 1;
            if assignment[pos] < counts[pos] {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

/// Whether no transition can leave `D` under any matrix of the set.
pub fn closed_set_check(c: &CredalSet, d: &StateSet) -> bool {
    d.iter()
        .all(|x| (0..c.size()).all(|y| d.contains(y) || !c.possible_edge(x, y)))
}
