//! RRTConnect: trees from both endpoints, alternating extend steps with a
//! greedy connect phase toward each newly added state.

use super::{Ctx, Outcome, Tree};

const START: usize = 0;
const GOAL: usize = 1;

pub(crate) fn plan(
    ctx: &mut Ctx,
    start: &[f64],
    goal: &[f64],
) -> (Outcome, Option<Vec<Vec<f64>>>) {
    let mut trees = [
        Tree::new(ctx.metric.clone(), start.to_vec()),
        Tree::new(ctx.metric.clone(), goal.to_vec()),
    ];
    let mut active = START;

    loop {
        if ctx.exhausted() {
            return (Outcome::Timeout, None);
        }
        ctx.iterations += 1;

        let target = ctx.sample();
        // Extend the active tree one step toward the sample.
        let near = trees[active].nearest(&target);
        let qnew = ctx.steer(&trees[active].configs[near], &target);
        if ctx.free(&qnew) && ctx.edge_valid(&trees[active].configs[near], &qnew) {
            let new_id = trees[active].add(qnew, near);
            let anchor = trees[active].configs[new_id].clone();

            // Greedy connect: march the other tree toward the anchor until it
            // reaches it or an edge fails.
            let other = 1 - active;
            let mut cur = trees[other].nearest(&anchor);
            let reached = loop {
                if ctx.exhausted() {
                    return (Outcome::Timeout, None);
                }
                let qstep = ctx.steer(&trees[other].configs[cur], &anchor);
                if !ctx.free(&qstep) || !ctx.edge_valid(&trees[other].configs[cur], &qstep) {
                    break false;
                }
                let arrived = ctx.metric.dist(&qstep, &anchor) == 0.0;
                cur = trees[other].add(qstep, cur);
                if arrived {
                    break true;
                }
            };

            if reached {
                // `new_id` in the active tree and `cur` in the other tree hold
                // the same configuration; stitch the two root paths together.
                let (start_side, goal_side) = if active == START {
                    (
                        trees[START].chain_to_root(new_id),
                        trees[GOAL].chain_to_root(cur),
                    )
                } else {
                    (
                        trees[START].chain_to_root(cur),
                        trees[GOAL].chain_to_root(new_id),
                    )
                };
                let mut path: Vec<Vec<f64>> = start_side.into_iter().rev().collect();
                path.extend(goal_side.into_iter().skip(1));
                return (Outcome::Solved, Some(path));
            }
        }
        active = 1 - active;
    }
}
