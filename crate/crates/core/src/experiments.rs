//! Instance generators and batch iteration-count studies.
//!
//! Random instances use target `{0}` and an absorbing trap at `N-1`. The
//! remaining states are first wired into a random tree rooted at the target
//! (so every one of them can possibly reach it), then receive an extra edge
//! towards each of the other `N-1` states (target and trap included)
//! independently with probability `(λ-1)/(N-1)`, for an expected out-degree
//! close to `λ`. A credal row is then attached to each state's out-edges.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::credal::{CredalRow, CredalSet, ExtremeSelection};
use crate::error::{domain, Error, Result};
use crate::imprecise::{lower_hitting, upper_hitting, SolveOptions};
use crate::instance::{CredalModel, Family, GeneratorMeta, InstanceSpec};
use crate::reachability::Mode;

/// Parameters of the random graph family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomParams {
    pub n: usize,
    pub lambda: f64,
    pub model: CredalModel,
    pub epsilon: f64,
}

/// `k`-th 64-bit seed split from `base`: one ChaCha8 stream per index.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index);
    rng.next_u64()
}

/// Uniform point on the probability simplex of dimension `k - 1`.
fn uniform_simplex<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Spreads `weights` over `edges` into a length-`n` row.
fn scatter(n: usize, edges: &[usize], weights: &[f64]) -> Vec<f64> {
    let mut row = vec![0.0; n];
    for (&y, &w) in edges.iter().zip(weights) {
        row[y] = w;
    }
    row
}

fn dirac(n: usize, y: usize) -> Vec<f64> {
    scatter(n, &[y], &[1.0])
}

/// Directed support graph of a random instance, as sorted out-edge lists.
pub fn random_support_graph<R: Rng>(rng: &mut R, n: usize, lambda: f64) -> Vec<Vec<usize>> {
    let trap = n - 1;
    let mut edges = vec![Vec::new(); n];
    edges[0].push(0);
    edges[trap].push(trap);

    let mut order: Vec<usize> = (1..trap).collect();
    order.shuffle(rng);
    let mut connected = vec![0usize];
    for &x in &order {
        let parent = connected[rng.random_range(0..connected.len())];
        edges[x].push(parent);
        connected.push(x);
    }

    let prob = (lambda - 1.0) / (n as f64 - 1.0);
    for x in 1..trap {
        for y in 0..n {
            let draw: f64 = rng.random();
            if x != y && draw < prob && !edges[x].contains(&y) {
                edges[x].push(y);
            }
        }
    }
    for e in &mut edges {
        e.sort_unstable();
    }
    edges
}

/// Random instance over a tree-plus-Erdős–Rényi support graph.
pub fn gen_random_instance(params: &RandomParams, seed: u64) -> Result<InstanceSpec> {
    let RandomParams {
        n,
        lambda,
        model,
        epsilon,
    } = *params;
    if n < 3 {
        return domain(format!("random instances need at least 3 states, got {n}"));
    }
    if !(1.0..=n as f64).contains(&lambda) {
        return domain(format!("lambda must lie in [1, {n}], got {lambda}"));
    }
    if model.uses_epsilon() && !(epsilon > 0.0 && epsilon < 1.0) {
        return domain(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_support_graph(&mut rng, n, lambda);
    let trap = n - 1;

    let rows = graph
        .iter()
        .enumerate()
        .map(|(x, out)| {
            let special = x == 0 || x == trap;
            match model {
                CredalModel::EpsContam | CredalModel::EpsFull if special => {
                    CredalRow::eps_contamination(dirac(n, x), epsilon, vec![x])
                }
                CredalModel::VertexHull if special => CredalRow::singleton(dirac(n, x)),
                CredalModel::EpsContam => {
                    let base = scatter(n, out, &uniform_simplex(&mut rng, out.len()));
                    CredalRow::eps_contamination(base, epsilon, out.clone())
                }
                CredalModel::EpsFull => {
                    let base = scatter(n, out, &uniform_simplex(&mut rng, out.len()));
                    CredalRow::eps_contamination(base, epsilon, (0..n).collect())
                }
                CredalModel::VertexHull => {
                    let vertices = (0..out.len())
                        .map(|_| scatter(n, out, &uniform_simplex(&mut rng, out.len())))
                        .collect();
                    CredalRow::vertices(vertices)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let meta = GeneratorMeta {
        lambda: Some(lambda),
        model: Some(model),
        epsilon: model.uses_epsilon().then_some(epsilon),
        seed: Some(seed),
        ..GeneratorMeta::new(Family::Random)
    };
    Ok(InstanceSpec::new(CredalSet::new(rows)?, vec![0])?.with_generator(meta))
}

/// Three states, target `{1}`, row 0 the hull of `(1-1/n-1/n², 1/n, 1/n²)` for `n = 2, 4, …, 2^m`.
pub fn worst_case_instance(m: usize) -> Result<InstanceSpec> {
    if m < 2 {
        return domain(format!("worst-case family needs m >= 2, got {m}"));
    }
    let vertices = (1..=m)
        .map(|k| {
            let n = 2f64.powi(k as i32);
            vec![1.0 - 1.0 / n - 1.0 / (n * n), 1.0 / n, 1.0 / (n * n)]
        })
        .collect();
    let credal = CredalSet::new(vec![
        CredalRow::vertices(vertices)?,
        CredalRow::singleton(dirac(3, 1))?,
        CredalRow::singleton(dirac(3, 2))?,
    ])?;
    let meta = GeneratorMeta {
        m: Some(m),
        ..GeneratorMeta::new(Family::WorstCase)
    };
    Ok(InstanceSpec::new(credal, vec![1])?.with_generator(meta))
}

/// The selection starting the worst-case family at its first vertex (`n = 2`).
pub fn worst_case_start() -> ExtremeSelection {
    ExtremeSelection::new(vec![0, 0, 0])
}

/// Chain of `N + 2` states along which the benefit of moving towards the
/// target is discovered one state per iteration.
///
/// State 0 is the target, `N` splits evenly between target and trap, `N + 1`
/// is the trap. State 1 moves to the target with probability `q ∈ [0, b]`
/// (else the trap); states `2..N` move one step down with probability `q`
/// (else to the splitter).
pub fn propagation_chain_instance(n: usize, b: f64) -> Result<InstanceSpec> {
    if n < 3 {
        return domain(format!("propagation chain needs N >= 3, got {n}"));
    }
    let lo = 0.5f64.powf(1.0 / n as f64);
    if !(b > lo && b < 1.0) {
        return domain(format!("b must lie in ({lo}, 1), got {b}"));
    }
    let size = n + 2;
    let (splitter, trap) = (n, n + 1);
    let mut rows = Vec::with_capacity(size);
    rows.push(CredalRow::singleton(dirac(size, 0))?);
    rows.push(CredalRow::vertices(vec![
        dirac(size, trap),
        scatter(size, &[0, trap], &[b, 1.0 - b]),
    ])?);
    for x in 2..n {
        rows.push(CredalRow::vertices(vec![
            dirac(size, splitter),
            scatter(size, &[x - 1, splitter], &[b, 1.0 - b]),
        ])?);
    }
    rows.push(CredalRow::singleton(scatter(
        size,
        &[0, trap],
        &[0.5, 0.5],
    ))?);
    rows.push(CredalRow::singleton(dirac(size, trap))?);
    let meta = GeneratorMeta {
        b: Some(b),
        ..GeneratorMeta::new(Family::PropagationChain)
    };
    Ok(InstanceSpec::new(CredalSet::new(rows)?, vec![0])?.with_generator(meta))
}

/// Small named instances.
///
/// * `example1`: 4 states, target `{2}`; state 0 moves to 1 with probability
///   `p ∈ [0, 1]` and to 2 otherwise; `1 → 2 → 3`, 3 absorbing.
/// * `example2`: 3 states, target `{2}`; state 0 moves to 1 with probability
///   `1 - q` and to 2 with `q ∈ [0, 1]`; `1 → 2 → 0`.
/// * `tiebreak`: 3 states, target `{2}`; states 0 and 2 absorbing, state 1
///   anywhere on the simplex.
pub fn fixture(name: &str) -> Result<InstanceSpec> {
    let family: Family = name.parse()?;
    let (credal, target) = match family {
        Family::Example1 => (
            CredalSet::new(vec![
                CredalRow::vertices(vec![dirac(4, 1), dirac(4, 2)])?,
                CredalRow::singleton(dirac(4, 2))?,
                CredalRow::singleton(dirac(4, 3))?,
                CredalRow::singleton(dirac(4, 3))?,
            ])?,
            vec![2],
        ),
        Family::Example2 => (
            CredalSet::new(vec![
                CredalRow::vertices(vec![dirac(3, 1), dirac(3, 2)])?,
                CredalRow::singleton(dirac(3, 2))?,
                CredalRow::singleton(dirac(3, 0))?,
            ])?,
            vec![2],
        ),
        Family::Tiebreak => (
            CredalSet::new(vec![
                CredalRow::singleton(dirac(3, 0))?,
                CredalRow::vertices(vec![dirac(3, 0), dirac(3, 1), dirac(3, 2)])?,
                CredalRow::singleton(dirac(3, 2))?,
            ])?,
            vec![2],
        ),
        other => return domain(format!("{other:?} is not a fixture")),
    };
    Ok(InstanceSpec::new(credal, target)?.with_generator(GeneratorMeta::new(family)))
}

/// One solved random instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub family: &'static str,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    pub model: &'static str,
    pub epsilon: f64,
    pub seed: u64,
    pub run: usize,
    pub iters_lower: usize,
    pub iters_upper: usize,
    pub residual_lower: f64,
    pub residual_upper: f64,
}

/// Iteration statistics for one `λ` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchStats {
    pub lambda: f64,
    pub runs: usize,
    pub mean_iters_lower: f64,
    pub mean_iters_upper: f64,
    pub std_lower: f64,
    pub std_upper: f64,
    pub max_iters: usize,
    pub per_run: Vec<RunRecord>,
}

impl BatchStats {
    fn from_runs(lambda: f64, per_run: Vec<RunRecord>) -> Self {
        let lower: Vec<f64> = per_run.iter().map(|r| r.iters_lower as f64).collect();
        let upper: Vec<f64> = per_run.iter().map(|r| r.iters_upper as f64).collect();
        let (mean_iters_lower, std_lower) = mean_std(&lower);
        let (mean_iters_upper, std_upper) = mean_std(&upper);
        let max_iters = per_run
            .iter()
            .map(|r| r.iters_lower.max(r.iters_upper))
            .max()
            .unwrap_or(0);
        Self {
            lambda,
            runs: per_run.len(),
            mean_iters_lower,
            mean_iters_upper,
            std_lower,
            std_upper,
            max_iters,
            per_run,
        }
    }

    pub fn mean(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Lower => self.mean_iters_lower,
            Mode::Upper => self.mean_iters_upper,
        }
    }

    pub fn std(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Lower => self.std_lower,
            Mode::Upper => self.std_upper,
        }
    }

    fn iterations(&self, mode: Mode) -> impl Iterator<Item = usize> + '_ {
        self.per_run.iter().map(move |r| match mode {
            Mode::Lower => r.iters_lower,
            Mode::Upper => r.iters_upper,
        })
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub model: CredalModel,
    pub runs_per_cell: usize,
    pub epsilon: f64,
    pub seed: u64,
}

/// Generates and solves `runs_per_cell` instances per `λ`, in parallel, with
/// results in run order.
pub fn run_batch(cfg: &BatchConfig) -> Result<Vec<BatchStats>> {
    if cfg.runs_per_cell == 0 {
        return domain("runs_per_cell must be at least 1");
    }
    if cfg.lambdas.is_empty() {
        return domain("lambda grid must be nonempty");
    }
    cfg.lambdas
        .iter()
        .enumerate()
        .map(|(cell, &lambda)| {
            let cell_seed = derive_seed(cfg.seed, cell as u64);
            let params = RandomParams {
                n: cfg.n,
                lambda,
                model: cfg.model,
                epsilon: cfg.epsilon,
            };
            let runs = (0..cfg.runs_per_cell)
                .into_par_iter()
                .map(|run| {
                    let seed = derive_seed(cell_seed, run as u64);
                    solve_run(&params, seed, run).map_err(|e| {
                        Error::Diagnostics(format!(
                            "cell lambda={lambda}, run {run}, seed {seed}: {e}"
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BatchStats::from_runs(lambda, runs))
        })
        .collect()
}

fn solve_run(params: &RandomParams, seed: u64, run: usize) -> Result<RunRecord> {
    let spec = gen_random_instance(params, seed)?;
    let target = spec.target_set()?;
    let opts = SolveOptions::default();
    let lower = lower_hitting(&spec.credal, &target, &opts)?;
    let upper = upper_hitting(&spec.credal, &target, &opts)?;
    Ok(RunRecord {
        family: "random",
        n: params.n,
        lambda: params.lambda,
        model: params.model.name(),
        epsilon: if params.model.uses_epsilon() {
            params.epsilon
        } else {
            0.0
        },
        seed,
        run,
        iters_lower: lower.iterations,
        iters_upper: upper.iterations,
        residual_lower: lower.residual,
        residual_upper: upper.residual,
    })
}

/// One row of the per-bound aggregate file: mean with ±1σ and ±1.96σ bands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub lambda: f64,
    pub mean: f64,
    pub std: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
}

pub fn aggregate(stats: &[BatchStats], mode: Mode) -> Vec<AggregateRow> {
    stats
        .iter()
        .map(|s| {
            let (mean, std) = (s.mean(mode), s.std(mode));
            AggregateRow {
                lambda: s.lambda,
                mean,
                std,
                ci95_lo: mean - 1.96 * std,
                ci95_hi: mean + 1.96 * std,
            }
        })
        .collect()
}

/// Count of runs converging in a given number of iterations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub bound: Mode,
    pub lambda: f64,
    pub iterations: usize,
    pub count: usize,
    pub runs: usize,
}

pub fn histogram(stats: &[BatchStats], mode: Mode) -> Vec<HistogramRow> {
    let mut rows = Vec::new();
    for s in stats {
        let max = s.iterations(mode).max().unwrap_or(0);
        let mut counts = vec![0usize; max + 1];
        for it in s.iterations(mode) {
            counts[it] += 1;
        }
        rows.extend(counts.into_iter().enumerate().filter(|&(_, c)| c > 0).map(
            |(iterations, count)| HistogramRow {
                bound: mode,
                lambda: s.lambda,
                iterations,
                count,
                runs: s.runs,
            },
        ));
    }
    rows
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per run: `family,N,lambda,model,epsilon,seed,run,iters_lower,iters_upper,residual_lower,residual_upper`.
pub fn write_runs_csv(path: impl AsRef<Path>, stats: &[BatchStats]) -> Result<()> {
    write_csv(path.as_ref(), stats.iter().flat_map(|s| s.per_run.iter()))
}

/// `lambda,mean,std,ci95_lo,ci95_hi` for one bound.
pub fn write_aggregate_csv(path: impl AsRef<Path>, stats: &[BatchStats], mode: Mode) -> Result<()> {
    write_csv(path.as_ref(), aggregate(stats, mode))
}

pub fn write_histogram_csv(path: impl AsRef<Path>, stats: &[BatchStats]) -> Result<()> {
    let mut rows = histogram(stats, Mode::Lower);
    rows.extend(histogram(stats, Mode::Upper));
    write_csv(path.as_ref(), rows)
}

/// Per state count, the average degree with the largest mean iteration count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda_star: f64,
    pub peak_mean: f64,
}

/// Scans `λ` for each `N`; the score of a cell is the mean of the lower and
/// upper mean iteration counts. Grid values above `N` are skipped.
pub fn lambda_peak_scan(
    n_grid: &[usize],
    lambda_grid: &[f64],
    model: CredalModel,
    runs: usize,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<PeakRow>> {
    if n_grid.is_empty() || lambda_grid.is_empty() {
        return domain("grids must be nonempty");
    }
    n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let lambdas: Vec<f64> = lambda_grid
                .iter()
                .copied()
                .filter(|&l| l <= n as f64)
                .collect();
            if lambdas.is_empty() {
                return domain(format!("no lambda in the grid is admissible for N = {n}"));
            }
            let stats = run_batch(&BatchConfig {
                n,
                lambdas,
                model,
                runs_per_cell: runs,
                epsilon,
                seed: derive_seed(seed, i as u64),
            })?;
            let best = stats
                .iter()
                .map(|s| (s.lambda, (s.mean_iters_lower + s.mean_iters_upper) / 2.0))
                .fold(None::<(f64, f64)>, |acc, cur| match acc {
                    Some(a) if a.1 >= cur.1 => Some(a),
                    _ => Some(cur),
                })
                .expect("nonempty grid");
            Ok(PeakRow {
                n,
                lambda_star: best.0,
                peak_mean: best.1,
            })
        })
        .collect()
}

pub fn write_peak_csv(path: impl AsRef<Path>, rows: &[PeakRow]) -> Result<()> {
    write_csv(path.as_ref(), rows)
}
