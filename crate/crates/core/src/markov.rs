//! Finite state spaces, row-stochastic matrices, and the restriction/extension
//! calculus for functions and matrices over subsets of states.
//!
//! States are the indices `0..N` in construction order. Subsets are stored as
//! boolean masks over the full state space so that complements and
//! intersections never drift out of sync with `N`.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Entries at or below this value are not treated as support edges.
pub const POSITIVE_EPS: f64 = 1e-12;

/// Row sums closer to 1 than this are left untouched.
pub const RENORMALIZE_TOL: f64 = 1e-12;

/// Rows off by more than this from summing to one are rejected; smaller drift is renormalized.
pub const ROW_SUM_REJECT: f64 = 1e-6;

/// Ordered finite state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl StateSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return domain("state space must contain at least one state");
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut space = Self::new(labels.len())?;
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return domain("state labels must be distinct");
        }
        space.labels = Some(labels);
        Ok(space)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn label(&self, x: usize) -> String {
        match &self.labels {
            Some(labels) => labels[x].clone(),
            None => x.to_string(),
        }
    }
}

/// A subset of `0..n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    mask: Vec<bool>,
}

impl StateSet {
    pub fn empty(n: usize) -> Self {
        Self {
            mask: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            mask: vec![true; n],
        }
    }

    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut set = Self::empty(n);
        for i in indices {
            if i >= n {
                return domain(format!("state {i} out of range for {n} states"));
            }
            set.mask[i] = true;
        }
        Ok(set)
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        Self { mask }
    }

    /// Size of the ambient state space.
    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.mask.get(x).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, x: usize) {
        self.mask[x] = true;
    }

    pub fn remove(&mut self, x: usize) {
        self.mask[x] = false;
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn complement(&self) -> Self {
        Self {
            mask: self.mask.iter().map(|&b| !b).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersection(other).is_empty()
    }

    /// Indicator function `1_S` as a dense vector.
    pub fn indicator(&self) -> Vec<f64> {
        self.mask
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect()
    }

    fn zip_with(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Self {
        assert_eq!(
            self.universe(),
            other.universe(),
            "state sets over different spaces"
        );
        Self {
            mask: self
                .mask
                .iter()
                .zip(&other.mask)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for StateSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

/// Nonempty set of target states `A`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct TargetSet(StateSet);

impl TargetSet {
    pub fn new(n: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::from_set(StateSet::from_indices(n, members)?)
    }

    pub fn from_set(set: StateSet) -> Result<Self> {
        if set.is_empty() {
            return domain("target set must be nonempty");
        }
        Ok(Self(set))
    }

    pub fn set(&self) -> &StateSet {
        &self.0
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.contains(x)
    }

    /// `A^c`, derived on demand.
    pub fn complement(&self) -> StateSet {
        self.0.complement()
    }

    pub fn universe(&self) -> usize {
        self.0.universe()
    }

    pub fn indicator(&self) -> Vec<f64> {
        self.0.indicator()
    }
}

/// A probability mass function over `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityRow {
    weights: Vec<f64>,
}

impl ProbabilityRow {
    /// Validates nonnegativity and the row sum, renormalizing small drift.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return domain("probability row must be nonempty");
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return domain(format!("probability row has invalid weight {w}"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_REJECT {
            return domain(format!("probability row sums to {sum}, expected 1"));
        }
        let weights = if (sum - 1.0).abs() > RENORMALIZE_TOL {
            weights.into_iter().map(|w| w / sum).collect()
        } else {
            weights
        };
        Ok(Self { weights })
    }

    /// Point mass on `y`.
    pub fn dirac(n: usize, y: usize) -> Result<Self> {
        if y >= n {
            return domain(format!("state {y} out of range for {n} states"));
        }
        let mut weights = vec![0.0; n];
        weights[y] = 1.0;
        Ok(Self { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn dot(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// States receiving mass above [`POSITIVE_EPS`].
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter_map(|(y, &w)| (w > POSITIVE_EPS).then_some(y))
    }
}

/// Row-stochastic `N x N` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return domain("transition matrix must have at least one row");
        }
        let mut data = Vec::with_capacity(n * n);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return domain(format!("row {x} has length {}, expected {n}", row.len()));
            }
            let row =
                ProbabilityRow::new(row).map_err(|e| Error::Domain(format!("row {x}: {e}")))?;
            data.extend(row.into_weights());
        }
        Ok(Self { n, data })
    }

    pub fn from_probability_rows(rows: Vec<ProbabilityRow>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return domain("transition matrix must have at least one row");
        }
        let mut data = Vec::with_capacity(n * n);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return domain(format!("row {x} has length {}, expected {n}", row.len()));
            }
            data.extend(row.into_weights());
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for x in 0..n {
            data[x * n + x] = 1.0;
        }
        Self { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.n..(x + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn is_edge(&self, x: usize, y: usize) -> bool {
        self.get(x, y) > POSITIVE_EPS
    }

    /// `T f`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.n);
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(f).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for x in 0..n {
            for k in 0..n {
                let a = self.get(x, k);
                if a == 0.0 {
                    continue;
                }
                for y in 0..n {
                    data[x * n + y] += a * other.get(k, y);
                }
            }
        }
        Self { n, data }
    }

    fn check_state(&self, x: usize) -> Result<()> {
        if x >= self.n {
            return domain(format!("state {x} out of range for {} states", self.n));
        }
        Ok(())
    }
}

/// A real-valued function on an explicit set of states (its carrier).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    carrier: Vec<usize>,
    values: Vec<f64>,
}

impl ValueFunction {
    /// `carrier` must be strictly increasing and match `values` in length.
    pub fn new(carrier: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if carrier.len() != values.len() {
            return domain("carrier and values differ in length");
        }
        if carrier.windows(2).any(|w| w[0] >= w[1]) {
            return domain("carrier must be strictly increasing");
        }
        Ok(Self { carrier, values })
    }

    /// A function over the whole space `0..values.len()`.
    pub fn total(values: Vec<f64>) -> Self {
        Self {
            carrier: (0..values.len()).collect(),
            values,
        }
    }

    pub fn carrier(&self) -> &[usize] {
        &self.carrier
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, x: usize) -> Option<f64> {
        self.carrier.binary_search(&x).ok().map(|i| self.values[i])
    }

    /// Pointwise sum; carriers must match.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_checked(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_checked(other, |a, b| a - b)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn zip_checked(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.carrier != other.carrier {
            return domain("value functions have different carriers");
        }
        Ok(Self {
            carrier: self.carrier.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }
}

/// `f|_S`.
pub fn restrict_function(f: &ValueFunction, subset: &[usize]) -> Result<ValueFunction> {
    if subset.is_empty() {
        return domain("restriction to an empty set");
    }
    let values = subset
        .iter()
        .map(|&x| {
            f.get(x)
                .ok_or_else(|| Error::Domain(format!("state {x} not in carrier")))
        })
        .collect::<Result<Vec<_>>>()?;
    ValueFunction::new(subset.to_vec(), values)
}

/// `g^{↑Y}`: `g` on its carrier, zero elsewhere in `superset`.
pub fn extend_function(g: &ValueFunction, superset: &[usize]) -> Result<ValueFunction> {
    if let Some(x) = g
        .carrier
        .iter()
        .find(|x| superset.binary_search(x).is_err())
    {
        return domain(format!("state {x} of the carrier is not in the superset"));
    }
    let values = superset.iter().map(|&x| g.get(x).unwrap_or(0.0)).collect();
    ValueFunction::new(superset.to_vec(), values)
}

/// Square block of a transition matrix indexed by a subset of states.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedMatrix {
    carrier: Vec<usize>,
    data: Vec<f64>,
}

impl RestrictedMatrix {
    pub fn carrier(&self) -> &[usize] {
        &self.carrier
    }

    pub fn dim(&self) -> usize {
        self.carrier.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.carrier.len() + j]
    }

    pub fn apply(&self, g: &ValueFunction) -> Result<ValueFunction> {
        if g.carrier != self.carrier {
            return domain("function carrier differs from matrix carrier");
        }
        let k = self.carrier.len();
        let values = self
            .data
            .chunks(k)
            .map(|row| row.iter().zip(&g.values).map(|(a, b)| a * b).sum())
            .collect();
        ValueFunction::new(self.carrier.clone(), values)
    }
}

/// `T|_S`.
pub fn restrict_matrix(t: &TransitionMatrix, subset: &StateSet) -> Result<RestrictedMatrix> {
    if subset.universe() != t.size() {
        return domain("subset and matrix have different state spaces");
    }
    if subset.is_empty() {
        return domain("restriction to an empty set");
    }
    let carrier = subset.to_vec();
    let data = carrier
        .iter()
        .flat_map(|&x| carrier.iter().map(move |&y| t.get(x, y)))
        .collect();
    Ok(RestrictedMatrix { carrier, data })
}

/// Whether `y` is reachable from `x` along positive entries. Reflexive: `x` always reaches itself.
pub fn reaches(t: &TransitionMatrix, x: usize, y: usize) -> Result<bool> {
    t.check_state(x)?;
    t.check_state(y)?;
    if x == y {
        return Ok(true);
    }
    let n = t.size();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([x]);
    seen[x] = true;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if !seen[v] && t.is_edge(u, v) {
                if v == y {
                    return Ok(true);
                }
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    Ok(false)
}

/// States that can reach `targets` along positive entries (including `targets` itself).
pub(crate) fn backward_closure(
    n: usize,
    targets: &StateSet,
    edge: impl Fn(usize, usize) -> bool,
) -> StateSet {
    let mut reached = targets.clone();
    let mut queue: VecDeque<usize> = targets.iter().collect();
    while let Some(v) = queue.pop_front() {
        for u in 0..n {
            if !reached.contains(u) && edge(u, v) {
                reached.insert(u);
                queue.push_back(u);
            }
        }
    }
    reached
}

/// `C_T`: states outside `A` from which `A` is unreachable.
pub fn cannot_reach_set(t: &TransitionMatrix, target: &TargetSet) -> Result<StateSet> {
    if target.universe() != t.size() {
        return domain("target set and matrix have different state spaces");
    }
    let can = backward_closure(t.size(), target.set(), |u, v| t.is_edge(u, v));
    Ok(can.complement())
}
