//! Basic RRT: grow a tree from the start with goal-biased uniform sampling
//! until the goal can be connected.

use super::{Ctx, Outcome, Tree};

pub(crate) fn plan(
    ctx: &mut Ctx,
    start: &[f64],
    goal: &[f64],
) -> (Outcome, Option<Vec<Vec<f64>>>) {
    let mut tree = Tree::new(ctx.metric.clone(), start.to_vec());
    loop {
        if ctx.exhausted() {
            return (Outcome::Timeout, None);
        }
        ctx.iterations += 1;

        let target = ctx.sample_or_goal(goal);
        let near = tree.nearest(&target);
        let qnew = ctx.steer(&tree.configs[near], &target);
        if !ctx.free(&qnew) || !ctx.edge_valid(&tree.configs[near], &qnew) {
            continue;
        }
        let id = tree.add(qnew, near);

        let d_goal = ctx.metric.dist(&tree.configs[id], goal);
        if d_goal == 0.0 {
            let mut path = tree.chain_to_root(id);
            path.reverse();
            return (Outcome::Solved, Some(path));
        }
        if d_goal <= ctx.step && ctx.edge_valid(&tree.configs[id], goal) {
            let gid = tree.add(goal.to_vec(), id);
            let mut path = tree.chain_to_root(gid);
            path.reverse();
            return (Outcome::Solved, Some(path));
        }
    }
}
