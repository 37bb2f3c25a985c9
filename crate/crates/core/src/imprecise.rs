//! Lower and upper hitting probabilities by alternating linear solves and
//! extreme-point selection.
//!
//! Starting from a matrix whose cannot-reach set equals the trivial-zero set of
//! the mode, each iteration solves for the hitting vector of the current matrix
//! and then selects, row by row, an extreme point attaining the lower (upper)
//! envelope of that vector. The iterates are monotone and the selection
//! stabilises after finitely many steps; the run stops at the first repeated
//! selection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::credal::{CredalSet, ExtremeSelection, TIE_TOL};
use crate::error::{domain, Error, Result};
use crate::markov::{cannot_reach_set, StateSet, TargetSet, TransitionMatrix};
use crate::precise::{
    fixed_point_residual, hitting_probabilities, hitting_with_zero_set, HittingVector,
};
use crate::reachability::{lower_reach_report, upper_reach_report, Mode};

/// Values at or below this are treated as zero when comparing zero sets.
pub const ZERO_TOL: f64 = 1e-12;

/// Slack allowed in the sandwich and monotonicity checks.
pub const SANDWICH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub residual_tol: f64,
    /// `None` means `10 N + 100`.
    pub max_iterations: Option<usize>,
    pub record_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-9,
            max_iterations: None,
            record_trace: false,
        }
    }
}

impl SolveOptions {
    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return domain("residual_tol must be positive");
        }
        if self.max_iterations == Some(0) {
            return domain("max_iterations must be at least 1");
        }
        Ok(())
    }

    fn iteration_cap(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(10 * n + 100)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub mode: Mode,
    #[serde(serialize_with = "serialize_hitting")]
    pub probabilities: HittingVector,
    /// Number of linear solves performed.
    pub iterations: usize,
    pub final_selection: ExtremeSelection,
    #[serde(serialize_with = "serialize_matrix")]
    pub witness: TransitionMatrix,
    /// `‖p - (1_A + 1_{A^c} · envelope(p))‖_∞` at the returned vector.
    pub residual: f64,
    pub trivial_zero: StateSet,
    #[serde(
        skip_serializing_if = "Option::is_none",
        serialize_with = "serialize_trace"
    )]
    pub trace: Option<Vec<HittingVector>>,
}

fn serialize_hitting<S: serde::Serializer>(p: &HittingVector, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(p.values())
}

fn serialize_matrix<S: serde::Serializer>(t: &TransitionMatrix, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(t.rows())
}

fn serialize_trace<S: serde::Serializer>(
    trace: &Option<Vec<HittingVector>>,
    s: S,
) -> Result<S::Ok, S::Error> {
    match trace {
        Some(t) => s.collect_seq(t.iter().map(HittingVector::values)),
        None => s.serialize_none(),
    }
}

/// Row used by the current iterate: an extreme point, or a center row of the
/// starting matrix. A center row is kept for as long as it attains the
/// envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowChoice {
    Center,
    Extreme(usize),
}

fn extreme_rows(sel: &ExtremeSelection) -> Vec<RowChoice> {
    sel.choice.iter().map(|&i| RowChoice::Extreme(i)).collect()
}

/// Envelope values at `p` and the rows of the next iterate.
fn step(c: &CredalSet, mode: Mode, p: &[f64], current: &[RowChoice]) -> (Vec<f64>, Vec<RowChoice>) {
    match mode {
        Mode::Lower => {
            let env = c.lower_envelope(p);
            let rows = (0..c.size())
                .map(|x| {
                    let center_kept = current[x] == RowChoice::Center
                        && dot(&c.row(x).center(), p) <= env.values[x] + TIE_TOL;
                    if center_kept {
                        RowChoice::Center
                    } else {
                        RowChoice::Extreme(env.witness.choice[x])
                    }
                })
                .collect();
            (env.values, rows)
        }
        Mode::Upper => {
            let keep = ExtremeSelection::new(
                current
                    .iter()
                    .map(|r| match r {
                        RowChoice::Extreme(i) => *i,
                        RowChoice::Center => usize::MAX,
                    })
                    .collect(),
            );
            let env = c.upper_envelope(p, Some(&keep));
            let rows = (0..c.size())
                .map(|x| {
                    let center_kept = current[x] == RowChoice::Center
                        && dot(&c.row(x).center(), p) >= env.values[x] - TIE_TOL;
                    if center_kept {
                        RowChoice::Center
                    } else {
                        RowChoice::Extreme(env.witness.choice[x])
                    }
                })
                .collect();
            (env.values, rows)
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Replaces center rows by extreme points without losing reachability of `A`.
///
/// Every extreme point of a kept center row attains the envelope at `p`, so any
/// of them leaves `p` a fixed point. Walking backwards from `A` along edges of
/// `matrix`, each center row takes an extreme point with an edge to a state
/// discovered earlier, which keeps every state outside `zero` connected to `A`.
fn resolve_center_rows(
    c: &CredalSet,
    target: &TargetSet,
    matrix: &TransitionMatrix,
    rows: &[RowChoice],
    fallback: &ExtremeSelection,
) -> ExtremeSelection {
    let n = c.size();
    let mut choice: Vec<Option<usize>> = rows
        .iter()
        .map(|r| match r {
            RowChoice::Extreme(i) => Some(*i),
            RowChoice::Center => None,
        })
        .collect();
    let mut seen = target.set().mask().to_vec();
    let mut queue: std::collections::VecDeque<usize> = target.set().iter().collect();
    while let Some(y) = queue.pop_front() {
        for x in 0..n {
            if seen[x] || !matrix.is_edge(x, y) {
                continue;
            }
            seen[x] = true;
            queue.push_back(x);
            if choice[x].is_none() {
                let row = c.row(x);
                choice[x] = (0..row.extreme_count()).find(|&i| row.extreme_has_edge(i, y));
            }
        }
    }
    ExtremeSelection::new(
        choice
            .into_iter()
            .enumerate()
            .map(|(x, i)| i.unwrap_or(fallback.choice[x]))
            .collect(),
    )
}

fn check_inputs(c: &CredalSet, target: &TargetSet) -> Result<()> {
    if c.size() != target.universe() {
        return domain("target set and credal set have different state spaces");
    }
    Ok(())
}

fn iterate(
    c: &CredalSet,
    target: &TargetSet,
    mode: Mode,
    zero: StateSet,
    start: TransitionMatrix,
    mut current: Vec<RowChoice>,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    let n = c.size();
    let cap = opts.iteration_cap(n);
    let free: Vec<usize> = target.complement().to_vec();
    let mut matrix = start;
    let mut trace = Vec::new();

    for iteration in 1..=cap {
        if opts.record_trace {
            let c_t = cannot_reach_set(&matrix, target)?;
            if c_t != zero {
                return Err(Error::Diagnostics(format!(
                    "iteration {iteration}: cannot-reach set {c_t:?} differs from trivial set {zero:?}"
                )));
            }
        }
        let p = hitting_with_zero_set(&matrix, target, &zero, opts.residual_tol)?;
        if opts.record_trace {
            trace.push(p.clone());
        }

        let (values, next) = step(c, mode, p.values(), &current);
        let residual = fixed_point_residual(p.values(), &values, target);
        let repeated = free.iter().all(|&x| current[x] == next[x]);
        if repeated || iteration == cap {
            if !repeated && !(residual <= opts.residual_tol) {
                return Err(Error::NonConvergence {
                    iterations: iteration,
                    residual,
                    trace: trace.into_iter().map(HittingVector::into_values).collect(),
                });
            }
            if !(residual <= opts.residual_tol) {
                return Err(Error::Residual {
                    residual,
                    tolerance: opts.residual_tol,
                    context: format!("{mode:?} fixed point after {iteration} iterations"),
                });
            }
            let rows = current;
            let (final_selection, witness) = if rows.contains(&RowChoice::Center) {
                let fallback = match mode {
                    Mode::Lower => c.lower_envelope(p.values()).witness,
                    Mode::Upper => c.upper_envelope(p.values(), None).witness,
                };
                let sel = resolve_center_rows(c, target, &matrix, &rows, &fallback);
                let t = c.materialize(&sel)?;
                let c_t = cannot_reach_set(&t, target)?;
                if c_t != zero {
                    return Err(Error::Diagnostics(format!(
                        "extreme witness cannot-reach set {c_t:?} differs from trivial set {zero:?}"
                    )));
                }
                (sel, t)
            } else {
                let sel = ExtremeSelection::new(
                    rows.iter()
                        .map(|r| match r {
                            RowChoice::Extreme(i) => *i,
                            RowChoice::Center => unreachable!("no center rows"),
                        })
                        .collect(),
                );
                (sel, matrix)
            };
            return Ok(SolveResult {
                mode,
                probabilities: p,
                iterations: iteration,
                final_selection,
                witness,
                residual,
                trivial_zero: zero,
                trace: opts.record_trace.then_some(trace),
            });
        }
        matrix = materialize_rows(c, &next)?;
        current = next;
    }
    unreachable!("loop returns on its last iteration")
}

fn materialize_rows(c: &CredalSet, rows: &[RowChoice]) -> Result<TransitionMatrix> {
    let rows = c
        .rows()
        .iter()
        .zip(rows)
        .map(|(row, choice)| match choice {
            RowChoice::Center => row.center(),
            RowChoice::Extreme(i) => row.extreme_point(*i),
        })
        .collect();
    TransitionMatrix::from_rows(rows)
        .map_err(|e| Error::Diagnostics(format!("iterate matrix invalid: {e}")))
}

/// Lower hitting probabilities `p̲`, started from the lower-reachability witness.
pub fn lower_hitting(
    c: &CredalSet,
    target: &TargetSet,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    check_inputs(c, target)?;
    let report = lower_reach_report(c, target)?;
    // Trivial rows take their first extreme point with no edge into the
    // fixpoint, all other rows the center.
    let fixpoint = report.fixpoint();
    let rows: Vec<RowChoice> = (0..c.size())
        .map(|x| {
            let row = c.row(x);
            if report.trivial_zero.contains(x) {
                let i = (0..row.extreme_count())
                    .find(|&i| !fixpoint.iter().any(|y| row.extreme_has_edge(i, y)))
                    .expect("trivial rows have an extreme point avoiding the fixpoint");
                RowChoice::Extreme(i)
            } else {
                RowChoice::Center
            }
        })
        .collect();
    let start = materialize_rows(c, &rows)?;
    iterate(
        c,
        target,
        Mode::Lower,
        report.trivial_zero,
        start,
        rows,
        opts,
    )
}

/// Upper hitting probabilities `p̄`, started from the center matrix.
pub fn upper_hitting(
    c: &CredalSet,
    target: &TargetSet,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    check_inputs(c, target)?;
    let report = upper_reach_report(c, target)?;
    let rows = vec![RowChoice::Center; c.size()];
    iterate(
        c,
        target,
        Mode::Upper,
        report.trivial_zero,
        c.center_matrix(),
        rows,
        opts,
    )
}

fn start_from(
    c: &CredalSet,
    target: &TargetSet,
    mode: Mode,
    zero: StateSet,
    start: &ExtremeSelection,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    let matrix = c.materialize(start)?;
    let c_t = cannot_reach_set(&matrix, target)?;
    if c_t != zero {
        return domain(format!(
            "start matrix cannot-reach set {c_t:?} differs from trivial set {zero:?}"
        ));
    }
    iterate(c, target, mode, zero, matrix, extreme_rows(start), opts)
}

/// Lower hitting probabilities from a given extreme-point start.
pub fn lower_hitting_from(
    c: &CredalSet,
    target: &TargetSet,
    start: &ExtremeSelection,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    check_inputs(c, target)?;
    let zero = lower_reach_report(c, target)?.trivial_zero;
    start_from(c, target, Mode::Lower, zero, start, opts)
}

/// Upper hitting probabilities from a given extreme-point start.
pub fn upper_hitting_from(
    c: &CredalSet,
    target: &TargetSet,
    start: &ExtremeSelection,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    check_inputs(c, target)?;
    let zero = upper_reach_report(c, target)?.trivial_zero;
    start_from(c, target, Mode::Upper, zero, start, opts)
}

/// A random matrix of the credal set: each row a Dirichlet(1)-weighted mix of its extreme points.
pub fn sample_matrix(c: &CredalSet, rng: &mut ChaCha8Rng) -> TransitionMatrix {
    let rows = c
        .rows()
        .iter()
        .map(|row| {
            let m = row.extreme_count();
            let weights: Vec<f64> = (0..m).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = weights.iter().sum();
            let mut out = vec![0.0; row.dim()];
            for (i, w) in weights.iter().enumerate() {
                for (o, v) in out.iter_mut().zip(row.extreme_point(i)) {
                    *o += w / total * v;
                }
            }
            out
        })
        .collect();
    TransitionMatrix::from_rows(rows).expect("mixtures of distributions are distributions")
}

/// Checks `p̲ ≤ p^T ≤ p̄` on `samples` random interior matrices.
pub fn sandwich_check(c: &CredalSet, target: &TargetSet, samples: usize, seed: u64) -> Result<()> {
    if samples == 0 {
        return domain("samples must be at least 1");
    }
    let opts = SolveOptions::default();
    let lower = lower_hitting(c, target, &opts)?.probabilities;
    let upper = upper_hitting(c, target, &opts)?.probabilities;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for sample in 0..samples {
        let t = sample_matrix(c, &mut rng);
        let p = hitting_probabilities(&t, target)?;
        for x in 0..c.size() {
            let (lo, hi, v) = (lower.get(x), upper.get(x), p.get(x));
            if v < lo - SANDWICH_TOL || v > hi + SANDWICH_TOL {
                return Err(Error::Sandwich {
                    state: x,
                    sample,
                    value: v,
                    lower: lo,
                    upper: hi,
                    matrix: t.rows(),
                });
            }
        }
    }
    Ok(())
}
