//! Task-sequencing proof of concept: chain three navigation elements whose
//! endpoint (x-segment, orientation-quadrant) classes match, and compare
//! predictor-selected triples against the true optimum.
//!
//! The x interval [0, 0.9] splits into 9 equal segments (the last one
//! right-closed) and the angle range into 4 quadrants, with theta = pi
//! assigned to the top quadrant.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predict::{
    pick_min, precompute_scores, PredictorReport, ProblemScorer, ReportRow, Scores,
};
use crate::planners::{PlannerId, RecordSet};
use crate::problem::Problem;
use crate::rng::{derive_seed, Stream};

pub const X_SEGMENTS: usize = 9;
pub const QUADRANTS: usize = 4;
const X_MAX: f64 = 0.9;

/// Discrete endpoint class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentQuadrant {
    pub x_segment: usize,
    pub quadrant: usize,
}

/// Floor-partition of an SE(2) endpoint; errors when x is outside [0, 0.9].
pub fn classify_endpoint(x: f64, theta: f64) -> Result<SegmentQuadrant> {
    use std::f64::consts::{FRAC_PI_2, PI};
    if !(0.0..=X_MAX).contains(&x) {
        return Err(Error::InvalidArgument(format!(
            "x = {x} outside [0, {X_MAX}]"
        )));
    }
    let x_segment = ((x / 0.1).floor() as usize).min(X_SEGMENTS - 1);
    let quadrant = (((theta + PI) / FRAC_PI_2).floor() as usize).min(QUADRANTS - 1);
    Ok(SegmentQuadrant {
        x_segment,
        quadrant,
    })
}

/// Start and goal classes of one pool element.
#[derive(Clone, Copy, Debug)]
pub struct ElementClasses {
    pub start: SegmentQuadrant,
    pub goal: SegmentQuadrant,
}

pub fn classify_problem(problem: &Problem) -> Result<ElementClasses> {
    Ok(ElementClasses {
        start: classify_endpoint(problem.start[0], problem.start[2])?,
        goal: classify_endpoint(problem.goal[0], problem.goal[2])?,
    })
}

/// Sequencing instance: required start class for element 1 and goal class
/// for element 3.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TampInstance {
    pub initial: SegmentQuadrant,
    pub terminal: SegmentQuadrant,
}

/// Ordered triple of pool indices.
pub type Triple = [usize; 3];

/// Pool elements indexed by their endpoint classes, for triple enumeration.
pub struct TriplePool {
    pub classes: Vec<ElementClasses>,
    by_start: HashMap<SegmentQuadrant, Vec<usize>>,
}

impl TriplePool {
    pub fn new(problems: &[&Problem]) -> Result<TriplePool> {
        let classes: Vec<ElementClasses> = problems
            .iter()
            .map(|p| classify_problem(p))
            .collect::<Result<_>>()?;
        let mut by_start: HashMap<SegmentQuadrant, Vec<usize>> = HashMap::new();
        for (i, c) in classes.iter().enumerate() {
            by_start.entry(c.start).or_default().push(i);
        }
        Ok(TriplePool { classes, by_start })
    }

    /// All ordered triples satisfying the chaining constraints, in
    /// lexicographic index order.
    pub fn enumerate_triples(&self, instance: &TampInstance) -> Vec<Triple> {
        let mut out = Vec::new();
        let Some(firsts) = self.by_start.get(&instance.initial) else {
            return out;
        };
        for &a in firsts {
            let Some(seconds) = self.by_start.get(&self.classes[a].goal) else {
                continue;
            };
            for &b in seconds {
                let Some(thirds) = self.by_start.get(&self.classes[b].goal) else {
                    continue;
                };
                for &c in thirds {
                    if self.classes[c].goal == instance.terminal {
                        out.push([a, b, c]);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Draws an instance whose initial/terminal classes are realized in the
    /// pool; classes are sampled uniformly from the realized sets.
    fn draw_instance(&self, rng: &mut Stream) -> TampInstance {
        let mut starts: Vec<SegmentQuadrant> = self.by_start.keys().copied().collect();
        starts.sort_unstable_by_key(|c| (c.x_segment, c.quadrant));
        let mut goals: Vec<SegmentQuadrant> =
            self.classes.iter().map(|c| c.goal).collect();
        goals.sort_unstable_by_key(|c| (c.x_segment, c.quadrant));
        goals.dedup();
        TampInstance {
            initial: starts[rng.below(starts.len())],
            terminal: goals[rng.below(goals.len())],
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TampConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Instance redraws allowed before the experiment errors out.
    pub max_redraws: usize,
}

impl Default for TampConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            seed: 0,
            max_redraws: 1000,
        }
    }
}

/// The sequencing experiment: per iteration, draw an instance with at least
/// one valid triple, score every triple by each predictor's summed estimate,
/// and accumulate the recorded time of the chosen triples.
pub fn tamp_experiment(
    problems: &[&Problem],
    scorers: &[ProblemScorer],
    records: &RecordSet,
    cfg: &TampConfig,
) -> Result<PredictorReport> {
    if problems.is_empty() {
        return Err(Error::Experiment("empty TAMP pool".into()));
    }
    let pool = TriplePool::new(problems)?;
    let planner = PlannerId::RrtConnect;
    let scores = precompute_scores(scorers, problems, records, planner)?;
    let recorded: Vec<f64> = problems
        .iter()
        .map(|p| records.expected_time(&p.id, planner))
        .collect::<Result<_>>()?;

    let contributions: Vec<Result<Vec<f64>>> = (0..cfg.iterations)
        .into_par_iter()
        .map(|iter| {
            let iter_seed = derive_seed(cfg.seed, iter as u64);
            let mut rng = Stream::new(iter_seed);
            let mut triples = Vec::new();
            let mut found = false;
            for _ in 0..cfg.max_redraws {
                let instance = pool.draw_instance(&mut rng);
                triples = pool.enumerate_triples(&instance);
                if !triples.is_empty() {
                    found = true;
                    break;
                }
            }
            if !found {
                return Err(Error::Experiment(format!(
                    "no instance with a valid triple after {} redraws (iteration {iter})",
                    cfg.max_redraws
                )));
            }
            // Score triples by summed per-element estimates.
            let candidates: Vec<usize> = (0..triples.len()).collect();
            Ok(scores
                .iter()
                .enumerate()
                .map(|(si, score)| {
                    let mut pred_rng = Stream::new(derive_seed(iter_seed, 1 + si as u64));
                    let pick = match score {
                        Scores::Value(values, random_ties) => {
                            let sums: Vec<f64> = triples
                                .iter()
                                .map(|t| t.iter().map(|&i| values[i]).sum())
                                .collect();
                            pick_min(&candidates, &sums, *random_ties, &mut pred_rng)
                        }
                        Scores::Random => pred_rng.below(triples.len()),
                    };
                    triples[pick].iter().map(|&i| recorded[i]).sum()
                })
                .collect())
        })
        .collect();

    let mut totals = vec![0.0; scorers.len()];
    for c in contributions {
        for (t, v) in totals.iter_mut().zip(c?) {
            *t += v;
        }
    }
    Ok(PredictorReport {
        experiment: "tamp".into(),
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
