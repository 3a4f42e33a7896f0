//! The four sampling-based planners over a shared state-space abstraction,
//! plus the repeated-trial runtime measurement harness.
//!
//! # Timeouts and determinism
//!
//! A trial's outcome must be reproducible byte-for-byte across reruns and
//! worker counts (including oversubscribed pools), so `Timeout` is decided by
//! a deterministic iteration budget: the configured timeout converted at
//! [`ITERATIONS_PER_SECOND`], a rate calibrated once on the reference machine
//! in the near-timeout regime with a safety margin. Every per-iteration code
//! path performs a bounded amount of work, so the budget alone guarantees
//! termination. `wall_time` is always measured, never derived; on the
//! reference machine the budget consistently fires inside the nominal
//! timeout.

mod lazy_rrt;
mod nn;
mod records;
mod rrt;
mod rrt_connect;
mod space;
mod trrt;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CollisionModel, CSpace, DEFAULT_RESOLUTION};
use crate::problem::Problem;
use crate::rng::{derive_seed, Stream};

pub use nn::NnIndex;
pub use records::{
    append_records, load_records, label_fastest, read_record_keys, RecordSet, RuntimeRecord,
    TrialResult,
};
pub use space::{sample_uniform, steer, Metric};

/// Planner iterations per second of planning budget.
///
/// Calibrated on the reference machine (opt-level 3) against hard
/// (near-timeout) navigation and arm instances, which cluster at
/// 1.4e4-2.7e4 iterations/s; the margin keeps budget-equivalent wall time
/// inside the nominal timeout.
pub const ITERATIONS_PER_SECOND: f64 = 1.0e4;

pub const DEFAULT_TRIALS: usize = 40;
pub const DEFAULT_TIMEOUT_NAV_S: f64 = 3.0;
pub const DEFAULT_TIMEOUT_ARM_S: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerId {
    Rrt,
    RrtConnect,
    Trrt,
    LazyRrt,
}

impl PlannerId {
    pub const ALL: [PlannerId; 4] = [
        PlannerId::Rrt,
        PlannerId::RrtConnect,
        PlannerId::Trrt,
        PlannerId::LazyRrt,
    ];

    /// Tie-break order used by [`label_fastest`].
    pub const TIE_ORDER: [PlannerId; 4] = [
        PlannerId::RrtConnect,
        PlannerId::Rrt,
        PlannerId::Trrt,
        PlannerId::LazyRrt,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&p| p == self).unwrap()
    }
}

impl std::fmt::Display for PlannerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PlannerId::Rrt => "rrt",
            PlannerId::RrtConnect => "rrtconnect",
            PlannerId::Trrt => "trrt",
            PlannerId::LazyRrt => "lazyrrt",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for PlannerId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rrt" => Ok(PlannerId::Rrt),
            "rrtconnect" => Ok(PlannerId::RrtConnect),
            "trrt" => Ok(PlannerId::Trrt),
            "lazyrrt" => Ok(PlannerId::LazyRrt),
            other => Err(Error::InvalidArgument(format!(
                "unknown planner `{other}` (expected rrt, rrtconnect, trrt, lazyrrt)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Steer step as a fraction of the weighted state-space diagonal.
    pub step_size: f64,
    /// Probability of sampling the goal directly.
    pub goal_bias: f64,
    pub timeout_s: f64,
    /// Edge-validation resolution (fraction of per-axis range).
    pub resolution: f64,
    pub trrt_temp_init: f64,
    pub trrt_temp_rate: f64,
    pub rng_seed: u64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            step_size: 0.05,
            goal_bias: 0.05,
            timeout_s: DEFAULT_TIMEOUT_NAV_S,
            resolution: DEFAULT_RESOLUTION,
            trrt_temp_init: 10.0,
            trrt_temp_rate: 2.0,
            rng_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Solved,
    Timeout,
}

#[derive(Clone, Debug)]
pub struct PlanResult {
    pub outcome: Outcome,
    /// Measured wall time of the search, seconds.
    pub wall_time_s: f64,
    pub path: Option<Vec<Vec<f64>>>,
    pub iterations: u64,
    /// Box-pair collision tests performed (deterministic work measure).
    pub checks: u64,
}

/// Deterministic iteration budget.
pub(crate) struct Budget {
    max_iterations: u64,
}

impl Budget {
    fn new(timeout_s: f64) -> Self {
        Self {
            max_iterations: (timeout_s * ITERATIONS_PER_SECOND).ceil() as u64,
        }
    }

    fn exhausted(&self, iterations: u64) -> bool {
        iterations >= self.max_iterations
    }
}

/// Shared per-plan state handed to the individual planners.
pub(crate) struct Ctx<'a> {
    pub model: CollisionModel<'a>,
    pub space: CSpace,
    pub metric: Metric,
    pub step: f64,
    pub resolution: f64,
    pub goal_bias: f64,
    pub rng: Stream,
    budget: Budget,
    pub iterations: u64,
}

impl<'a> Ctx<'a> {
    fn new(problem: &'a Problem, params: &PlannerParams) -> Self {
        let model = CollisionModel::new(problem);
        let space = model.space().clone();
        let metric = Metric::for_space(&space);
        let step = params.step_size * metric.extent;
        Self {
            model,
            space,
            metric,
            step,
            resolution: params.resolution,
            goal_bias: params.goal_bias,
            rng: Stream::new(params.rng_seed),
            budget: Budget::new(params.timeout_s),
            iterations: 0,
        }
    }

    pub fn exhausted(&self) -> bool {
        self.budget.exhausted(self.iterations)
    }

    pub fn sample(&mut self) -> Vec<f64> {
        sample_uniform(&self.space, &mut self.rng)
    }

    pub fn sample_or_goal(&mut self, goal: &[f64]) -> Vec<f64> {
        if self.rng.chance(self.goal_bias) {
            goal.to_vec()
        } else {
            self.sample()
        }
    }

    pub fn steer(&self, from: &[f64], to: &[f64]) -> Vec<f64> {
        steer(&self.space, &self.metric, from, to, self.step)
    }

    pub fn free(&mut self, q: &[f64]) -> bool {
        !self.model.collides(q).expect("dimensions validated")
    }

    pub fn edge_valid(&mut self, a: &[f64], b: &[f64]) -> bool {
        self.model
            .motion_valid(a, b, self.resolution)
            .expect("dimensions validated")
    }
}

/// Growing tree of configurations with parent links and an NN index.
pub(crate) struct Tree {
    pub configs: Vec<Vec<f64>>,
    pub parents: Vec<Option<usize>>,
    pub index: NnIndex,
}

impl Tree {
    pub fn new(metric: Metric, root: Vec<f64>) -> Self {
        let dim = root.len();
        let mut index = NnIndex::new(metric, dim);
        index.insert(&root);
        Self {
            configs: vec![root],
            parents: vec![None],
            index,
        }
    }

    pub fn add(&mut self, q: Vec<f64>, parent: usize) -> usize {
        let id = self.index.insert(&q);
        debug_assert_eq!(id, self.configs.len());
        self.configs.push(q);
        self.parents.push(Some(parent));
        id
    }

    pub fn nearest(&self, q: &[f64]) -> usize {
        self.index.nearest(q).expect("tree is never empty")
    }

    /// Configurations from `id` back to the root (inclusive).
    pub fn chain_to_root(&self, mut id: usize) -> Vec<Vec<f64>> {
        let mut out = vec![self.configs[id].clone()];
        while let Some(p) = self.parents[id] {
            out.push(self.configs[p].clone());
            id = p;
        }
        out
    }
}

/// Runs one planner on one problem.
///
/// Deterministic given `params.rng_seed` (`wall_time_s` excluded: it is
/// measured). Invalid start or goal configurations are an error, distinct
/// from `Timeout`.
pub fn plan(problem: &Problem, planner: PlannerId, params: &PlannerParams) -> Result<PlanResult> {
    let mut pre = CollisionModel::new(problem);
    if pre.collides(&problem.start)? {
        return Err(Error::InvalidConfiguration(format!(
            "start configuration of `{}` is in collision or out of bounds",
            problem.id
        )));
    }
    if pre.collides(&problem.goal)? {
        return Err(Error::InvalidConfiguration(format!(
            "goal configuration of `{}` is in collision or out of bounds",
            problem.id
        )));
    }

    let mut ctx = Ctx::new(problem, params);
    let t0 = Instant::now();
    let (outcome, path) = match planner {
        PlannerId::Rrt => rrt::plan(&mut ctx, &problem.start, &problem.goal),
        PlannerId::RrtConnect => rrt_connect::plan(&mut ctx, &problem.start, &problem.goal),
        PlannerId::Trrt => trrt::plan(&mut ctx, params, &problem.start, &problem.goal),
        PlannerId::LazyRrt => lazy_rrt::plan(&mut ctx, &problem.start, &problem.goal),
    };
    Ok(PlanResult {
        outcome,
        wall_time_s: t0.elapsed().as_secs_f64(),
        path,
        iterations: ctx.iterations,
        checks: ctx.model.checks(),
    })
}

/// Runs `trials` seeded trials and aggregates the expected completion time.
///
/// Trial i uses `derive_seed(params.rng_seed, i)`; trials fan out across the
/// current rayon pool and are reassembled in trial order, so the record is
/// identical for any worker count.
pub fn measure(
    problem: &Problem,
    planner: PlannerId,
    trials: usize,
    params: &PlannerParams,
) -> Result<RuntimeRecord> {
    use rayon::prelude::*;
    assert!(trials >= 1, "measure needs at least one trial");

    // Surface precondition errors once instead of per trial.
    let mut pre = CollisionModel::new(problem);
    if pre.collides(&problem.start)? || pre.collides(&problem.goal)? {
        return Err(Error::InvalidConfiguration(format!(
            "problem `{}` has an invalid start or goal",
            problem.id
        )));
    }

    let results: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let trial_params = PlannerParams {
                rng_seed: derive_seed(params.rng_seed, i as u64),
                ..params.clone()
            };
            let r = plan(problem, planner, &trial_params).expect("preconditions checked");
            TrialResult {
                outcome: r.outcome,
                wall_time_s: r.wall_time_s,
                iterations: r.iterations,
                checks: r.checks,
            }
        })
        .collect();

    Ok(RuntimeRecord::from_trials(
        problem.id.clone(),
        planner,
        params.timeout_s,
        results,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_gen::generate_nav_problem;
    use crate::problem::{Aabb, Robot, Vec2};

    fn empty_nav() -> Problem {
        Problem {
            id: "empty".into(),
            seed: 0,
            robot: Robot::Block {
                half_extents: Vec2::new(0.025, 0.025),
            },
            obstacles: vec![],
            start: vec![0.1, 0.0, 0.0],
            goal: vec![0.8, 0.9, 1.0],
            workspace: Aabb::new(Vec2::new(-0.1, -0.1), Vec2::new(1.0, 1.0)),
            pos_bounds: Some(Aabb::new(Vec2::new(0.0, 0.0), Vec2::new(0.9, 0.9))),
            possibly_infeasible: false,
            barrier_count: 0,
        }
    }

    #[test]
    fn all_planners_solve_empty_workspace() {
        let p = empty_nav();
        for planner in PlannerId::ALL {
            let r = plan(&p, planner, &PlannerParams::default()).unwrap();
            assert_eq!(r.outcome, Outcome::Solved, "{planner}");
            let path = r.path.expect("solved implies path");
            assert!(path.len() >= 2, "{planner}");
            assert_eq!(path[0], p.start, "{planner}");
            assert_eq!(*path.last().unwrap(), p.goal, "{planner}");
        }
    }

    #[test]
    fn solved_paths_validate_at_half_resolution() {
        let p = generate_nav_problem(5);
        let params = PlannerParams::default();
        for planner in PlannerId::ALL {
            let r = plan(&p, planner, &params).unwrap();
            if r.outcome != Outcome::Solved {
                continue;
            }
            let path = r.path.unwrap();
            let mut model = CollisionModel::new(&p);
            for pair in path.windows(2) {
                assert!(
                    model
                        .motion_valid(&pair[0], &pair[1], params.resolution / 2.0)
                        .unwrap(),
                    "{planner} produced an edge failing re-validation"
                );
            }
        }
    }

    #[test]
    fn infeasible_problem_times_out() {
        // A barrier with no gap.
        let mut p = empty_nav();
        p.obstacles.push(crate::geometry::OrientedBox::new(
            Vec2::new(0.45, 0.45),
            Vec2::new(0.025, 0.55),
            0.0,
        ));
        let params = PlannerParams {
            timeout_s: 0.2,
            ..Default::default()
        };
        for planner in PlannerId::ALL {
            let r = plan(&p, planner, &params).unwrap();
            assert_eq!(r.outcome, Outcome::Timeout, "{planner}");
            assert!(r.wall_time_s < 0.2 + 0.1, "{planner} overshot the cap");
        }
    }

    #[test]
    fn plan_is_deterministic() {
        let p = generate_nav_problem(17);
        for planner in PlannerId::ALL {
            let params = PlannerParams {
                rng_seed: 99,
                ..Default::default()
            };
            let a = plan(&p, planner, &params).unwrap();
            let b = plan(&p, planner, &params).unwrap();
            assert_eq!(a.outcome, b.outcome, "{planner}");
            assert_eq!(a.iterations, b.iterations, "{planner}");
            assert_eq!(a.path, b.path, "{planner}");
        }
    }

    #[test]
    fn invalid_start_is_an_error_not_a_timeout() {
        let mut p = empty_nav();
        p.start = vec![2.0, 0.0, 0.0]; // out of bounds
        let r = plan(&p, PlannerId::Rrt, &PlannerParams::default());
        assert!(matches!(r, Err(Error::InvalidConfiguration(_))));
    }

    #[test]
    fn measure_expected_time_arithmetic() {
        let r = RuntimeRecord::from_trials(
            "p".into(),
            PlannerId::Rrt,
            3.0,
            vec![
                TrialResult {
                    outcome: Outcome::Solved,
                    wall_time_s: 1.0,
                    iterations: 10,
                    checks: 100,
                },
                TrialResult {
                    outcome: Outcome::Timeout,
                    wall_time_s: 2.4,
                    iterations: 999,
                    checks: 9999,
                },
            ],
        );
        assert_eq!(r.expected_time_s, 2.0);
        assert_eq!(r.timeout_count, 1);
    }

    #[test]
    fn measure_all_timeouts_yields_timeout_value() {
        let trials: Vec<TrialResult> = (0..40)
            .map(|i| TrialResult {
                outcome: Outcome::Timeout,
                wall_time_s: 2.0 + (i as f64) * 0.001,
                iterations: 1,
                checks: 1,
            })
            .collect();
        let r = RuntimeRecord::from_trials("p".into(), PlannerId::Trrt, 3.0, trials);
        assert_eq!(r.expected_time_s, 3.0);
        assert_eq!(r.timeout_count, 40);
    }

    #[test]
    fn measure_is_deterministic_modulo_wall_time() {
        let p = generate_nav_problem(3);
        let params = PlannerParams {
            rng_seed: 7,
            timeout_s: 1.0,
            ..Default::default()
        };
        let a = measure(&p, PlannerId::RrtConnect, 4, &params).unwrap();
        let b = measure(&p, PlannerId::RrtConnect, 4, &params).unwrap();
        let key = |r: &RuntimeRecord| {
            r.trials
                .iter()
                .map(|t| (t.outcome, t.iterations, t.checks))
                .collect::<Vec<_>>()
        };
        assert_eq!(key(&a), key(&b));
        assert_eq!(a.timeout_count, b.timeout_count);
    }
}
