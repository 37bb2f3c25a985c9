//! Credal transition models with separately specified rows.
//!
//! Each state carries a finitely generated convex set of distributions: either
//! an explicit list of vertices or an ε-contamination of a base distribution
//! over a support set. The set of transition matrices is the Cartesian product
//! of the rows, so envelopes are computed row by row and always attained at an
//! extreme point.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::markov::{ProbabilityRow, TransitionMatrix, POSITIVE_EPS};

/// Two envelope candidates closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Credal set of distributions for one state.
#[derive(Debug, Clone, PartialEq)]
pub enum CredalRow {
    /// Convex hull of the listed distributions.
    Vertices { vertices: Vec<ProbabilityRow> },
    /// `{(1-ε) base + ε s : s a distribution on support}`.
    EpsContamination {
        base: ProbabilityRow,
        epsilon: f64,
        support: Vec<usize>,
    },
}

impl CredalRow {
    /// Builds a vertex row; exact duplicates are dropped.
    pub fn vertices(vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.is_empty() {
            return domain("vertex row needs at least one vertex");
        }
        let n = vertices[0].len();
        let mut unique: Vec<ProbabilityRow> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if v.len() != n {
                return domain("vertices of a row differ in length");
            }
            let row = ProbabilityRow::new(v)?;
            let duplicate = unique.iter().any(|u| {
                u.weights()
                    .iter()
                    .zip(row.weights())
                    .all(|(a, b)| a.to_bits() == b.to_bits())
            });
            if !duplicate {
                unique.push(row);
            }
        }
        Ok(Self::Vertices { vertices: unique })
    }

    /// Single-distribution row.
    pub fn singleton(weights: Vec<f64>) -> Result<Self> {
        Self::vertices(vec![weights])
    }

    pub fn eps_contamination(base: Vec<f64>, epsilon: f64, support: Vec<usize>) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return domain(format!("epsilon must lie in (0, 1), got {epsilon}"));
        }
        let base = ProbabilityRow::new(base)?;
        let n = base.len();
        let mut support = support;
        support.sort_unstable();
        support.dedup();
        if support.is_empty() {
            return domain("contamination support must be nonempty");
        }
        if let Some(&y) = support.iter().find(|&&y| y >= n) {
            return domain(format!("support state {y} out of range for {n} states"));
        }
        if let Some(y) = base.support().find(|y| support.binary_search(y).is_err()) {
            return domain(format!("base puts mass on state {y} outside the support"));
        }
        Ok(Self::EpsContamination {
            base,
            epsilon,
            support,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Vertices { vertices } => vertices[0].len(),
            Self::EpsContamination { base, .. } => base.len(),
        }
    }

    /// Number of extreme points.
    pub fn extreme_count(&self) -> usize {
        match self {
            Self::Vertices { vertices } => vertices.len(),
            Self::EpsContamination { support, .. } => support.len(),
        }
    }

    pub fn extreme_point(&self, i: usize) -> Vec<f64> {
        match self {
            Self::Vertices { vertices } => vertices[i].weights().to_vec(),
            Self::EpsContamination {
                base,
                epsilon,
                support,
            } => {
                let mut w: Vec<f64> = base.weights().iter().map(|b| (1.0 - epsilon) * b).collect();
                w[support[i]] += epsilon;
                w
            }
        }
    }

    /// `v_i · f` for every extreme point `v_i`, in index order.
    pub fn extreme_values(&self, f: &[f64]) -> Vec<f64> {
        match self {
            Self::Vertices { vertices } => vertices.iter().map(|v| v.dot(f)).collect(),
            Self::EpsContamination {
                base,
                epsilon,
                support,
            } => {
                let shared = (1.0 - epsilon) * base.dot(f);
                support.iter().map(|&y| shared + epsilon * f[y]).collect()
            }
        }
    }

    /// Whether extreme point `i` puts mass above [`POSITIVE_EPS`] on `y`.
    pub fn extreme_has_edge(&self, i: usize, y: usize) -> bool {
        match self {
            Self::Vertices { vertices } => vertices[i].weights()[y] > POSITIVE_EPS,
            Self::EpsContamination {
                base,
                epsilon,
                support,
            } => {
                (1.0 - epsilon) * base.weights()[y] + if support[i] == y { *epsilon } else { 0.0 }
                    > POSITIVE_EPS
            }
        }
    }

    /// Uniform average of the extreme points: a point of the relative interior.
    pub fn center(&self) -> Vec<f64> {
        match self {
            Self::Vertices { vertices } => {
                let m = vertices.len() as f64;
                let mut c = vec![0.0; self.dim()];
                for v in vertices {
                    for (ci, w) in c.iter_mut().zip(v.weights()) {
                        *ci += w / m;
                    }
                }
                c
            }
            Self::EpsContamination {
                base,
                epsilon,
                support,
            } => {
                let share = epsilon / support.len() as f64;
                let mut c: Vec<f64> = base.weights().iter().map(|b| (1.0 - epsilon) * b).collect();
                for &y in support {
                    c[y] += share;
                }
                c
            }
        }
    }

    /// Whether some distribution in the row gives `y` positive mass.
    pub fn possible(&self, y: usize) -> bool {
        (0..self.extreme_count()).any(|i| self.extreme_has_edge(i, y))
    }

    fn select(values: &[f64], best: impl Fn(f64, f64) -> bool) -> (f64, usize) {
        let mut best_value = values[0];
        for &v in &values[1..] {
            if best(v, best_value) {
                best_value = v;
            }
        }
        // lowest index within the tie tolerance of the optimum
        let idx = values
            .iter()
            .position(|&v| (v - best_value).abs() <= TIE_TOL)
            .unwrap_or(0);
        (best_value, idx)
    }
}

/// Per-state indices of selected extreme points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExtremeSelection {
    pub choice: Vec<usize>,
}

impl ExtremeSelection {
    pub fn new(choice: Vec<usize>) -> Self {
        Self { choice }
    }

    /// Whether the two selections agree on every state in `states`.
    pub fn agrees_on(&self, other: &Self, states: impl IntoIterator<Item = usize>) -> bool {
        states
            .into_iter()
            .all(|x| self.choice[x] == other.choice[x])
    }
}

/// Envelope values together with an extreme point attaining them in each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub values: Vec<f64>,
    pub witness: ExtremeSelection,
}

/// Product of per-state credal rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CredalJson", into = "CredalJson")]
pub struct CredalSet {
    rows: Vec<CredalRow>,
}

impl CredalSet {
    pub fn new(rows: Vec<CredalRow>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return domain("credal set needs at least one row");
        }
        if let Some((x, r)) = rows.iter().enumerate().find(|(_, r)| r.dim() != n) {
            return domain(format!("row {x} has dimension {}, expected {n}", r.dim()));
        }
        Ok(Self { rows })
    }

    /// The singleton set `{T}`.
    pub fn singleton(t: &TransitionMatrix) -> Self {
        Self {
            rows: t
                .rows()
                .into_iter()
                .map(|r| CredalRow::singleton(r).expect("rows of a transition matrix are valid"))
                .collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[CredalRow] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &CredalRow {
        &self.rows[x]
    }

    pub fn extreme_counts(&self) -> Vec<usize> {
        self.rows.iter().map(CredalRow::extreme_count).collect()
    }

    /// `∏_x m_x`, saturating.
    pub fn extreme_product(&self) -> u128 {
        self.rows.iter().fold(1u128, |acc, r| {
            acc.saturating_mul(r.extreme_count() as u128)
        })
    }

    /// `T̲ f` with a minimizing extreme point per row (lowest index on ties).
    pub fn lower_envelope(&self, f: &[f64]) -> Envelope {
        assert_eq!(
            f.len(),
            self.size(),
            "function length differs from state count"
        );
        let (values, choice) = self
            .rows
            .iter()
            .map(|row| CredalRow::select(&row.extreme_values(f), |a, b| a < b))
            .unzip();
        Envelope {
            values,
            witness: ExtremeSelection { choice },
        }
    }

    /// `T̄ f` with a maximizing extreme point per row.
    ///
    /// When `keep` is given and its row already attains the maximum, that row is
    /// retained; otherwise the lowest-index maximizer wins.
    pub fn upper_envelope(&self, f: &[f64], keep: Option<&ExtremeSelection>) -> Envelope {
        assert_eq!(
            f.len(),
            self.size(),
            "function length differs from state count"
        );
        let (values, choice) = self
            .rows
            .iter()
            .enumerate()
            .map(|(x, row)| {
                let candidates = row.extreme_values(f);
                let (best, idx) = CredalRow::select(&candidates, |a, b| a > b);
                match keep.map(|k| k.choice[x]) {
                    Some(k) if k < candidates.len() && candidates[k] >= best - TIE_TOL => (best, k),
                    _ => (best, idx),
                }
            })
            .unzip();
        Envelope {
            values,
            witness: ExtremeSelection { choice },
        }
    }

    pub fn check_selection(&self, sel: &ExtremeSelection) -> Result<()> {
        if sel.choice.len() != self.size() {
            return domain("selection length differs from state count");
        }
        for (x, (&i, row)) in sel.choice.iter().zip(&self.rows).enumerate() {
            if i >= row.extreme_count() {
                return domain(format!(
                    "selection {i} out of range for row {x} with {} extreme points",
                    row.extreme_count()
                ));
            }
        }
        Ok(())
    }

    /// The transition matrix whose row `x` is extreme point `sel(x)` of row `x`.
    pub fn materialize(&self, sel: &ExtremeSelection) -> Result<TransitionMatrix> {
        self.check_selection(sel)?;
        let rows = self
            .rows
            .iter()
            .zip(&sel.choice)
            .map(|(row, &i)| row.extreme_point(i))
            .collect();
        TransitionMatrix::from_rows(rows)
            .map_err(|e| Error::Diagnostics(format!("materialized matrix invalid: {e}")))
    }

    /// Row-wise uniform average of extreme points.
    pub fn center_matrix(&self) -> TransitionMatrix {
        TransitionMatrix::from_rows(self.rows.iter().map(CredalRow::center).collect())
            .expect("averages of distributions are distributions")
    }

    pub fn possible_edge(&self, x: usize, y: usize) -> bool {
        self.rows[x].possible(y)
    }
}

/// Wire format of a credal set.
///
/// A set whose rows are all ε-contaminations with one shared ε serializes in
/// the compact contamination form; anything else as explicit vertex lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CredalJson {
    VertexRows {
        rows: Vec<Vec<Vec<f64>>>,
    },
    EpsContamination {
        epsilon: f64,
        base: Vec<Vec<f64>>,
        /// Omitted means every row may be contaminated towards any state.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<Vec<Vec<usize>>>,
    },
}

impl TryFrom<CredalJson> for CredalSet {
    type Error = Error;

    fn try_from(json: CredalJson) -> Result<Self> {
        let rows = match json {
            CredalJson::VertexRows { rows } => rows
                .into_iter()
                .map(CredalRow::vertices)
                .collect::<Result<Vec<_>>>()?,
            CredalJson::EpsContamination {
                epsilon,
                base,
                support,
            } => {
                let n = base.len();
                if let Some(s) = &support {
                    if s.len() != n {
                        return domain("support list length differs from the number of rows");
                    }
                }
                base.into_iter()
                    .enumerate()
                    .map(|(x, b)| {
                        let sup = match &support {
                            Some(s) => s[x].clone(),
                            None => (0..n).collect(),
                        };
                        CredalRow::eps_contamination(b, epsilon, sup)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        CredalSet::new(rows)
    }
}

impl From<CredalSet> for CredalJson {
    fn from(c: CredalSet) -> Self {
        let shared_eps = match c.rows.first() {
            Some(CredalRow::EpsContamination { epsilon, .. }) => Some(*epsilon),
            _ => None,
        };
        let uniform = shared_eps.filter(|e| {
            c.rows.iter().all(|r| {
                matches!(r, CredalRow::EpsContamination { epsilon, .. } if epsilon.to_bits() == e.to_bits())
            })
        });
        match uniform {
            Some(epsilon) => {
                let (base, support) = c
                    .rows
                    .into_iter()
                    .map(|r| match r {
                        CredalRow::EpsContamination { base, support, .. } => {
                            (base.into_weights(), support)
                        }
                        CredalRow::Vertices { .. } => unreachable!(),
                    })
                    .unzip();
                CredalJson::EpsContamination {
                    epsilon,
                    base,
                    support: Some(support),
                }
            }
            None => CredalJson::VertexRows {
                rows: c
                    .rows
                    .iter()
                    .map(|r| (0..r.extreme_count()).map(|i| r.extreme_point(i)).collect())
                    .collect(),
            },
        }
    }
}
