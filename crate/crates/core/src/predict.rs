//! Learned and baseline predictors plus the two selection experiments:
//! portfolio (pick the planner for a problem) and fastest-problem (pick the
//! problem for a planner).
//!
//! Class index <-> planner mapping is [`PlannerId::ALL`] order everywhere a
//! classifier output or one-hot label is involved.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{boxes_intersect, OrientedBox};
use crate::gnn::{train::Example, Dataset, Model, Targets, TrunkDesc};
use crate::graph_encode::encode;
use crate::planners::{PlannerId, RecordSet};
use crate::problem::{Problem, Vec2};
use crate::rng::{derive_seed, Stream};

/// Default occupancy raster resolution (cells per axis).
pub const OCCUPANCY_RESOLUTION: usize = 64;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub resolution: usize,
    /// Row-major cells, 1 where the cell rectangle touches any obstacle.
    pub cells: Vec<u8>,
    /// Flat start ++ goal configuration.
    pub start_goal: Vec<f64>,
}

/// Conservative rasterization of a navigation problem's workspace: a cell is
/// marked iff its rectangle intersects any obstacle (closed sets).
pub fn rasterize(problem: &Problem, resolution: usize) -> Result<OccupancyGrid> {
    if problem.is_arm() {
        return Err(Error::InvalidArgument(
            "occupancy rasterization is defined for navigation problems".into(),
        ));
    }
    let ws = problem.workspace;
    let dx = (ws.max.x - ws.min.x) / resolution as f64;
    let dy = (ws.max.y - ws.min.y) / resolution as f64;
    let mut cells = vec![0u8; resolution * resolution];
    for row in 0..resolution {
        for col in 0..resolution {
            let center = Vec2::new(
                ws.min.x + (col as f64 + 0.5) * dx,
                ws.min.y + (row as f64 + 0.5) * dy,
            );
            let cell = OrientedBox::new(center, Vec2::new(dx / 2.0, dy / 2.0), 0.0);
            if problem.obstacles.iter().any(|o| boxes_intersect(&cell, o)) {
                cells[row * resolution + col] = 1;
            }
        }
    }
    let mut start_goal = problem.start.clone();
    start_goal.extend_from_slice(&problem.goal);
    Ok(OccupancyGrid {
        resolution,
        cells,
        start_goal,
    })
}

/// Builds the model input example for one problem, following the model's
/// trunk kind (graph encoding or occupancy raster).
pub fn example_for(model: &Model, problem: &Problem) -> Result<Example> {
    match &model.desc.trunk {
        TrunkDesc::EdgeConv { .. } => Ok(Example::Graph(encode(problem)?)),
        TrunkDesc::Dense { input_dim, .. } => {
            let resolution = (*input_dim as f64).sqrt().round() as usize;
            if resolution * resolution != *input_dim {
                return Err(Error::Model(format!(
                    "dense trunk input {input_dim} is not a square grid"
                )));
            }
            let grid = rasterize(problem, resolution)?;
            Ok(Example::Dense {
                x: grid.cells.iter().map(|&c| c as f64).collect(),
                config: Some(grid.start_goal),
            })
        }
    }
}

fn forward_over(model: &Model, problems: &[&Problem]) -> Result<crate::gnn::Tensor2> {
    let examples: Result<Vec<Example>> =
        problems.iter().map(|p| example_for(model, p)).collect();
    let data = Dataset {
        examples: examples?,
        targets: Targets::Values(vec![0.0; problems.len()]),
    };
    let idx: Vec<usize> = (0..problems.len()).collect();
    model.forward(&data.input_for(&idx))
}

/// Predicted runtimes (seconds, clamped at zero) for a batch of problems.
pub fn predict_runtimes(model: &Model, problems: &[&Problem]) -> Result<Vec<f64>> {
    if model.task() != crate::gnn::Task::Regress1 {
        return Err(Error::Model("runtime prediction needs a regressor".into()));
    }
    let mut out = Vec::with_capacity(problems.len());
    for chunk in problems.chunks(256) {
        let preds = forward_over(model, chunk)?;
        out.extend((0..preds.rows).map(|i| preds.row(i)[0].max(0.0)));
    }
    Ok(out)
}

/// Predicted runtime for a single problem (nonnegative clamp).
pub fn predict_runtime(model: &Model, problem: &Problem) -> Result<f64> {
    Ok(predict_runtimes(model, &[problem])?[0])
}

/// Classifier argmax per problem, under the [`PlannerId::ALL`] class order.
pub fn select_planners(model: &Model, problems: &[&Problem]) -> Result<Vec<PlannerId>> {
    if model.task() != crate::gnn::Task::Classify4 {
        return Err(Error::Model("planner selection needs a classifier".into()));
    }
    let mut out = Vec::with_capacity(problems.len());
    for chunk in problems.chunks(256) {
        let preds = forward_over(model, chunk)?;
        for i in 0..preds.rows {
            let row = preds.row(i);
            let arg = (0..row.len())
                .max_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap())
                .unwrap();
            out.push(PlannerId::ALL[arg]);
        }
    }
    Ok(out)
}

/// One report row: a predictor's cumulative seconds per column.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportRow {
    pub predictor: String,
    pub cumulative_s: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PredictorReport {
    pub experiment: String,
    pub seed: u64,
    pub iterations: usize,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
}

impl PredictorReport {
    pub fn cumulative(&self, predictor: &str, column: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.predictor == predictor)
            .map(|r| r.cumulative_s[column])
    }

    /// Aligned text table; `decimals` matches the target table's precision.
    pub fn to_text_table(&self, decimals: usize) -> String {
        let mut width = "Predictor".len();
        for r in &self.rows {
            width = width.max(r.predictor.len());
        }
        let mut cols: Vec<usize> = self.columns.iter().map(|c| c.len().max(8)).collect();
        let fmt = |v: f64| format!("{v:.decimals$}");
        for r in &self.rows {
            for (ci, v) in r.cumulative_s.iter().enumerate() {
                cols[ci] = cols[ci].max(fmt(*v).len());
            }
        }
        let mut out = String::new();
        out.push_str(&format!("{:<width$}", "Predictor"));
        for (c, w) in self.columns.iter().zip(&cols) {
            out.push_str(&format!("  {c:>w$}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{:<width$}", r.predictor));
            for (v, w) in r.cumulative_s.iter().zip(&cols) {
                out.push_str(&format!("  {:>w$}", fmt(*v)));
            }
            out.push('\n');
        }
        out
    }

    /// Merges single-column reports into a multi-column table.
    pub fn merge_columns(reports: Vec<PredictorReport>) -> PredictorReport {
        assert!(!reports.is_empty());
        let mut merged = reports[0].clone();
        for r in &reports[1..] {
            merged.columns.extend(r.columns.iter().cloned());
            for row in &mut merged.rows {
                let other = r
                    .rows
                    .iter()
                    .find(|o| o.predictor == row.predictor)
                    .expect("same predictor set");
                row.cumulative_s.extend(other.cumulative_s.iter().copied());
            }
        }
        merged
    }
}

/// How a portfolio predictor picks a planner for a problem.
pub enum PlannerSelector<'a> {
    /// Reads the true fastest label from the records.
    Perfect,
    /// Classifier argmax (GNN or occupancy baseline).
    Classifier(&'a Model),
    /// Always the same planner.
    Fixed(PlannerId),
}

impl PlannerSelector<'_> {
    pub fn name(&self) -> String {
        match self {
            PlannerSelector::Perfect => "Perfect".into(),
            PlannerSelector::Classifier(m) => match m.desc.trunk {
                TrunkDesc::EdgeConv { .. } => "GNN".into(),
                TrunkDesc::Dense { .. } => "Fully-connected".into(),
            },
            PlannerSelector::Fixed(p) => p.to_string(),
        }
    }
}

/// Sums, per selector, the recorded expected time of the planner it picks on
/// each test problem (the portfolio experiment).
pub fn portfolio_experiment(
    problems: &[&Problem],
    selectors: &[PlannerSelector],
    records: &RecordSet,
) -> Result<PredictorReport> {
    let mut rows = Vec::new();
    for sel in selectors {
        let picks: Vec<PlannerId> = match sel {
            PlannerSelector::Perfect => problems
                .iter()
                .map(|p| records.fastest(&p.id))
                .collect::<Result<_>>()?,
            PlannerSelector::Classifier(model) => select_planners(model, problems)?,
            PlannerSelector::Fixed(planner) => vec![*planner; problems.len()],
        };
        let mut total = 0.0;
        for (p, pick) in problems.iter().zip(&picks) {
            total += records.expected_time(&p.id, *pick)?;
        }
        rows.push(ReportRow {
            predictor: sel.name(),
            cumulative_s: vec![total],
        });
    }
    Ok(PredictorReport {
        experiment: "portfolio".into(),
        seed: 0,
        iterations: problems.len(),
        columns: vec!["Expected Total Runtime".into()],
        rows,
    })
}

/// How a fastest-problem predictor scores candidate problems (lower wins).
pub enum ProblemScorer<'a> {
    /// Recorded expected time: always picks the true minimum.
    Perfect,
    /// Learned regressor (GNN or occupancy baseline).
    Regressor(&'a Model),
    /// Fewest obstacles; ties resolve with the experiment's seeded RNG.
    LeastObstacles,
    /// Uniformly random pick.
    Random,
}

impl ProblemScorer<'_> {
    pub fn name(&self) -> String {
        match self {
            ProblemScorer::Perfect => "Perfect".into(),
            ProblemScorer::Regressor(m) => match m.desc.trunk {
                TrunkDesc::EdgeConv { .. } => "GNN".into(),
                TrunkDesc::Dense { .. } => "Fully-connected".into(),
            },
            ProblemScorer::LeastObstacles => "Least obstacles".into(),
            ProblemScorer::Random => "Random".into(),
        }
    }
}

/// Precomputed per-problem scores; `Random` means a pure random pick.
pub(crate) enum Scores {
    /// `(values, random tie-break)`
    Value(Vec<f64>, bool),
    Random,
}

pub(crate) fn precompute_scores(
    scorers: &[ProblemScorer],
    problems: &[&Problem],
    records: &RecordSet,
    planner: PlannerId,
) -> Result<Vec<Scores>> {
    scorers
        .iter()
        .map(|s| {
            Ok(match s {
                ProblemScorer::Perfect => Scores::Value(
                    problems
                        .iter()
                        .map(|p| records.expected_time(&p.id, planner))
                        .collect::<Result<_>>()?,
                    false,
                ),
                ProblemScorer::Regressor(model) => {
                    Scores::Value(predict_runtimes(model, problems)?, false)
                }
                ProblemScorer::LeastObstacles => Scores::Value(
                    problems.iter().map(|p| p.obstacles.len() as f64).collect(),
                    true,
                ),
                ProblemScorer::Random => Scores::Random,
            })
        })
        .collect()
}

/// Argmin of `values` over `candidates`; equal minima resolve uniformly at
/// random when `random_ties` is set, otherwise toward the earliest candidate.
pub(crate) fn pick_min(
    candidates: &[usize],
    values: &[f64],
    random_ties: bool,
    rng: &mut Stream,
) -> usize {
    let mut best = f64::INFINITY;
    for &c in candidates {
        if values[c] < best {
            best = values[c];
        }
    }
    if !random_ties {
        return *candidates.iter().find(|&&c| values[c] == best).unwrap();
    }
    let tied: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&c| values[c] == best)
        .collect();
    tied[rng.below(tied.len())]
}

#[derive(Clone, Copy, Debug)]
pub struct FastestConfig {
    pub iterations: usize,
    pub set_min: usize,
    pub set_max: usize,
    pub seed: u64,
}

impl Default for FastestConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            set_min: 2,
            set_max: 10,
            seed: 0,
        }
    }
}

/// The fastest-problem experiment: per iteration, sample a problem set
/// (shared across predictors), let each predictor pick one, and accumulate
/// the recorded expected time of the picks.
pub fn fastest_problem_experiment(
    problems: &[&Problem],
    scorers: &[ProblemScorer],
    records: &RecordSet,
    planner: PlannerId,
    cfg: &FastestConfig,
) -> Result<PredictorReport> {
    if cfg.set_max > problems.len() {
        return Err(Error::Experiment(format!(
            "set size {} exceeds pool of {}",
            cfg.set_max,
            problems.len()
        )));
    }
    if cfg.set_min < 1 || cfg.set_min > cfg.set_max {
        return Err(Error::Experiment("bad set size range".into()));
    }
    let scores = precompute_scores(scorers, problems, records, planner)?;
    let recorded: Vec<f64> = problems
        .iter()
        .map(|p| records.expected_time(&p.id, planner))
        .collect::<Result<_>>()?;

    // Per-iteration contributions keyed by iteration index, reduced in
    // order, so results match for any worker count.
    let contributions: Vec<Vec<f64>> = (0..cfg.iterations)
        .into_par_iter()
        .map(|iter| {
            let iter_seed = derive_seed(cfg.seed, iter as u64);
            let mut rng = Stream::new(iter_seed);
            let size = cfg.set_min + rng.below(cfg.set_max - cfg.set_min + 1);
            let candidates = rng.sample_distinct(problems.len(), size);
            scores
                .iter()
                .enumerate()
                .map(|(si, score)| {
                    let mut pred_rng = Stream::new(derive_seed(iter_seed, 1 + si as u64));
                    let pick = match score {
                        Scores::Value(values, random_ties) => {
                            pick_min(&candidates, values, *random_ties, &mut pred_rng)
                        }
                        Scores::Random => candidates[pred_rng.below(candidates.len())],
                    };
                    recorded[pick]
                })
                .collect()
        })
        .collect();

    let mut totals = vec![0.0; scorers.len()];
    for c in &contributions {
        for (t, v) in totals.iter_mut().zip(c) {
            *t += v;
        }
    }
    Ok(PredictorReport {
        experiment: "fastest".into(),
        seed: cfg.seed,
        iterations: cfg.iterations,
        columns: vec![planner.to_string()],
        rows: scorers
            .iter()
            .zip(totals)
            .map(|(s, t)| ReportRow {
                predictor: s.name(),
                cumulative_s: vec![t],
            })
            .collect(),
    })
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

/// One-sided permutation p-value for `spearman(xs, ys) > 0`.
pub fn spearman_permutation_pvalue(xs: &[f64], ys: &[f64], permutations: usize, seed: u64) -> f64 {
    let observed = spearman(xs, ys);
    let mut rng = Stream::new(seed);
    let mut shuffled = ys.to_vec();
    let mut at_least = 1usize; // include the identity permutation
    for _ in 0..permutations {
        rng.shuffle(&mut shuffled);
        if spearman(xs, &shuffled) >= observed {
            at_least += 1;
        }
    }
    at_least as f64 / (permutations + 1) as f64
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap().then(a.cmp(&b)));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

/// The most common fastest-planner label and its frequency.
pub fn majority_label(problems: &[&Problem], records: &RecordSet) -> Result<(PlannerId, f64)> {
    let mut counts: HashMap<PlannerId, usize> = HashMap::new();
    for p in problems {
        *counts.entry(records.fastest(&p.id)?).or_default() += 1;
    }
    let (planner, count) = PlannerId::TIE_ORDER
        .iter()
        .map(|&pl| (pl, counts.get(&pl).copied().unwrap_or(0)))
        .max_by_key(|&(_, c)| c)
        .unwrap();
    Ok((planner, count as f64 / problems.len() as f64))
}
