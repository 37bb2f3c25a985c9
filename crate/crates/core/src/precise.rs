//! Hitting probabilities for a single transition matrix.
//!
//! The hitting vector is `1` on the target, `0` on `C_T`, and on the remaining
//! states the unique solution of `(I - T|_R) x = (T 1_A)|_R` where
//! `R = A^c \ C_T`. The restricted block is substochastic with spectral radius
//! below one, so the system is nonsingular.

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Error, Result};
use crate::markov::{cannot_reach_set, StateSet, TargetSet, TransitionMatrix, ValueFunction};

/// Smallest admissible LU pivot magnitude.
pub const PIVOT_EPS: f64 = 1e-12;

/// Default tolerance for the post-solve residual check.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Slack used when comparing hitting values along a path.
pub const MONOTONE_TOL: f64 = 1e-10;

/// Hitting probabilities over the full state space.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingVector {
    values: Vec<f64>,
}

impl HittingVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// States whose value is zero up to `tol`.
    pub fn zero_set(&self, tol: f64) -> StateSet {
        StateSet::from_mask(self.values.iter().map(|v| v.abs() <= tol).collect())
    }

    /// `‖p - (1_A + 1_{A^c} T p)‖_∞`.
    pub fn residual(&self, t: &TransitionMatrix, target: &TargetSet) -> f64 {
        fixed_point_residual(&self.values, &t.apply(&self.values), target)
    }
}

/// `‖p - (1_A + 1_{A^c} q)‖_∞` where `q` is an operator applied to `p`.
pub fn fixed_point_residual(p: &[f64], applied: &[f64], target: &TargetSet) -> f64 {
    p.iter()
        .zip(applied)
        .enumerate()
        .map(|(x, (&v, &q))| {
            let rhs = if target.contains(x) { 1.0 } else { q };
            (v - rhs).abs()
        })
        .fold(0.0, f64::max)
}

/// Solves `(I - T|_R) x = rhs` over the states `carrier` by LU with partial pivoting.
fn solve_restricted(t: &TransitionMatrix, carrier: &[usize], rhs: &[f64]) -> Result<Vec<f64>> {
    let k = carrier.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let system = DMatrix::from_fn(k, k, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - t.get(carrier[i], carrier[j])
    });
    let lu = system.lu();
    let pivot = lu
        .u()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(pivot >= PIVOT_EPS) {
        return Err(Error::Singular {
            pivot,
            threshold: PIVOT_EPS,
        });
    }
    let b = DVector::from_column_slice(rhs);
    let x = lu.solve(&b).ok_or(Error::Singular {
        pivot,
        threshold: PIVOT_EPS,
    })?;
    Ok(x.iter().copied().collect())
}

/// Solves `(I - T|_{A^c \ S}) x = rhs` for a set `S` with `C_T ⊆ S ⊆ A^c`.
pub fn fundamental_solve(
    t: &TransitionMatrix,
    target: &TargetSet,
    excluded: &StateSet,
    rhs: &ValueFunction,
) -> Result<ValueFunction> {
    let n = t.size();
    if excluded.universe() != n || target.universe() != n {
        return domain("sets and matrix have different state spaces");
    }
    let complement = target.complement();
    if !excluded.is_subset(&complement) {
        return domain("excluded set must lie outside the target");
    }
    let c_t = cannot_reach_set(t, target)?;
    if !c_t.is_subset(excluded) {
        return domain("excluded set must contain every state that cannot reach the target");
    }
    let carrier = complement.difference(excluded).to_vec();
    if rhs.carrier() != carrier.as_slice() {
        return domain("right-hand side must be defined exactly on A^c minus the excluded set");
    }
    let x = solve_restricted(t, &carrier, rhs.values())?;
    ValueFunction::new(carrier, x)
}

/// Hitting probabilities with a prescribed zero set, checked against `tol`.
///
/// The zero set must equal `C_T`; a mismatch shows up as a singular system or a
/// failed residual check.
pub(crate) fn hitting_with_zero_set(
    t: &TransitionMatrix,
    target: &TargetSet,
    zero: &StateSet,
    tol: f64,
) -> Result<HittingVector> {
    let n = t.size();
    let carrier = target.complement().difference(zero).to_vec();
    let to_target = t.apply(&target.indicator());
    let rhs: Vec<f64> = carrier.iter().map(|&x| to_target[x]).collect();
    let x = solve_restricted(t, &carrier, &rhs)?;

    let mut values = vec![0.0; n];
    for y in target.set().iter() {
        values[y] = 1.0;
    }
    for (&y, v) in carrier.iter().zip(x) {
        values[y] = v.clamp(0.0, 1.0);
    }
    let p = HittingVector::new(values);
    let residual = p.residual(t, target);
    if !(residual <= tol) {
        return Err(Error::Residual {
            residual,
            tolerance: tol,
            context: "hitting probabilities of a fixed matrix".into(),
        });
    }
    Ok(p)
}

/// `p^T`: the minimal nonnegative solution of `p = 1_A + 1_{A^c} T p`.
pub fn hitting_probabilities(t: &TransitionMatrix, target: &TargetSet) -> Result<HittingVector> {
    let zero = cannot_reach_set(t, target)?;
    hitting_with_zero_set(t, target, &zero, RESIDUAL_TOL)
}

/// A simple path into the target along which hitting probabilities never decrease.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCertificate {
    pub states: Vec<usize>,
    pub values: Vec<f64>,
}

impl PathCertificate {
    /// Checks positivity of every step, monotone values, simplicity, and termination in `A`.
    pub fn validate(&self, t: &TransitionMatrix, target: &TargetSet) -> Result<()> {
        let fail = |msg: String| Err(Error::Diagnostics(msg));
        if self.states.is_empty() || self.states.len() != self.values.len() {
            return fail("malformed certificate".into());
        }
        let mut seen = StateSet::empty(t.size());
        for &s in &self.states {
            if seen.contains(s) {
                return fail(format!("state {s} repeated"));
            }
            seen.insert(s);
        }
        for w in self.states.windows(2) {
            if !t.is_edge(w[0], w[1]) {
                return fail(format!("no positive transition {} -> {}", w[0], w[1]));
            }
        }
        for w in self.values.windows(2) {
            if w[1] < w[0] - MONOTONE_TOL {
                return fail(format!("values decrease: {} -> {}", w[0], w[1]));
            }
        }
        let last = *self.states.last().unwrap();
        if !target.contains(last) {
            return fail(format!("path ends at {last}, outside the target"));
        }
        Ok(())
    }
}

/// Finds a simple path from `x` to `A` with nondecreasing hitting probabilities.
///
/// Depth-first search over edges that do not decrease `p^T`, exploring
/// neighbours by largest value first and then lowest index.
pub fn monotone_path(
    t: &TransitionMatrix,
    target: &TargetSet,
    x: usize,
) -> Result<PathCertificate> {
    let n = t.size();
    if x >= n {
        return domain(format!("state {x} out of range for {n} states"));
    }
    if target.contains(x) {
        return domain(format!("state {x} is already in the target"));
    }
    let p = hitting_probabilities(t, target)?;
    if cannot_reach_set(t, target)?.contains(x) {
        return domain(format!("state {x} cannot reach the target"));
    }

    let ordered_successors = |u: usize| {
        let mut next: Vec<usize> = (0..n)
            .filter(|&v| v != u && t.is_edge(u, v) && p.get(v) >= p.get(u) - MONOTONE_TOL)
            .collect();
        next.sort_by(|&a, &b| p.get(b).total_cmp(&p.get(a)).then(a.cmp(&b)));
        next
    };

    let mut visited = vec![false; n];
    visited[x] = true;
    let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(x, ordered_successors(x), 0)];
    while let Some((u, succ, cursor)) = stack.last_mut() {
        if target.contains(*u) {
            let states: Vec<usize> = stack.iter().map(|f| f.0).collect();
            let values = states.iter().map(|&s| p.get(s)).collect();
            return Ok(PathCertificate { states, values });
        }
        let step = succ.get(*cursor).copied();
        *cursor += 1;
        match step {
            Some(v) if !visited[v] => {
                visited[v] = true;
                stack.push((v, ordered_successors(v), 0));
            }
            Some(_) => {}
            None => {
                stack.pop();
            }
        }
    }
    Err(Error::Diagnostics(format!(
        "no monotone path found from state {x}"
    )))
}
