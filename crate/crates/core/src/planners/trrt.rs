//! Transition-based RRT: expansions pass a temperature-controlled transition
//! test against a state cost before edges are validated.
//!
//! The cost function is 1/(clearance + 0.01); under a uniform cost TRRT
//! degenerates to plain RRT, so low-clearance states near obstacles are what
//! the transition test penalizes. Uphill moves are accepted with probability
//! exp(-dc/T); acceptance cools the temperature by the configured rate,
//! rejection heats it.

use super::{Ctx, Outcome, PlannerParams, Tree};

const COST_EPSILON: f64 = 0.01;

fn state_cost(ctx: &mut Ctx, q: &[f64]) -> f64 {
    let clearance = ctx
        .model
        .clearance_estimate(q)
        .expect("dimensions validated");
    1.0 / (clearance + COST_EPSILON)
}

struct Transition {
    temp: f64,
    rate: f64,
}

impl Transition {
    fn test(&mut self, ctx: &mut Ctx, c_from: f64, c_to: f64) -> bool {
        if c_to <= c_from {
            return true;
        }
        let p = (-(c_to - c_from) / self.temp).exp();
        if ctx.rng.unit() < p {
            self.temp /= self.rate;
            true
        } else {
            self.temp *= self.rate;
            false
        }
    }
}

pub(crate) fn plan(
    ctx: &mut Ctx,
    params: &PlannerParams,
    start: &[f64],
    goal: &[f64],
) -> (Outcome, Option<Vec<Vec<f64>>>) {
    let mut tree = Tree::new(ctx.metric.clone(), start.to_vec());
    let mut costs = vec![state_cost(ctx, start)];
    let goal_cost = state_cost(ctx, goal);
    let mut transition = Transition {
        temp: params.trrt_temp_init,
        rate: params.trrt_temp_rate,
    };

    loop {
        if ctx.exhausted() {
            return (Outcome::Timeout, None);
        }
        ctx.iterations += 1;

        let target = ctx.sample_or_goal(goal);
        let near = tree.nearest(&target);
        let qnew = ctx.steer(&tree.configs[near], &target);
        if !ctx.free(&qnew) {
            continue;
        }
        let c_new = state_cost(ctx, &qnew);
        if !transition.test(ctx, costs[near], c_new) {
            continue;
        }
        if !ctx.edge_valid(&tree.configs[near], &qnew) {
            continue;
        }
        let id = tree.add(qnew, near);
        costs.push(c_new);

        let d_goal = ctx.metric.dist(&tree.configs[id], goal);
        if d_goal == 0.0 {
            let mut path = tree.chain_to_root(id);
            path.reverse();
            return (Outcome::Solved, Some(path));
        }
        if d_goal <= ctx.step
            && transition.test(ctx, costs[id], goal_cost)
            && ctx.edge_valid(&tree.configs[id], goal)
        {
            let gid = tree.add(goal.to_vec(), id);
            let mut path = tree.chain_to_root(gid);
            path.reverse();
            return (Outcome::Solved, Some(path));
        }
    }
}
