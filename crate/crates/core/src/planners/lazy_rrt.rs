//! LazyRRT: the tree grows without edge collision checks; when a candidate
//! start-goal path appears it is validated edge by edge, and the first
//! invalid edge is removed together with its orphaned subtree.

use super::{Ctx, Outcome, Tree};

struct LazyState {
    tree: Tree,
    children: Vec<Vec<usize>>,
    alive: Vec<bool>,
    /// Edge from parent has passed motion validation.
    validated: Vec<bool>,
}

impl LazyState {
    fn add(&mut self, q: Vec<f64>, parent: usize) -> usize {
        let id = self.tree.add(q, parent);
        self.children.push(Vec::new());
        self.children[parent].push(id);
        self.alive.push(true);
        self.validated.push(false);
        id
    }

    fn remove_subtree(&mut self, root: usize) {
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            self.alive[id] = false;
            self.tree.index.remove(id);
            stack.extend(self.children[id].iter().copied());
            self.children[id].clear();
        }
        if let Some(parent) = self.tree.parents[root] {
            self.children[parent].retain(|&c| c != root);
        }
    }

    /// Node ids from the root to `id`.
    fn ids_from_root(&self, mut id: usize) -> Vec<usize> {
        let mut ids = vec![id];
        while let Some(p) = self.tree.parents[id] {
            ids.push(p);
            id = p;
        }
        ids.reverse();
        ids
    }
}

pub(crate) fn plan(
    ctx: &mut Ctx,
    start: &[f64],
    goal: &[f64],
) -> (Outcome, Option<Vec<Vec<f64>>>) {
    let mut st = LazyState {
        tree: Tree::new(ctx.metric.clone(), start.to_vec()),
        children: vec![Vec::new()],
        alive: vec![true],
        validated: vec![true],
    };

    loop {
        if ctx.exhausted() {
            return (Outcome::Timeout, None);
        }
        ctx.iterations += 1;

        let target = ctx.sample_or_goal(goal);
        let near = st.tree.nearest(&target);
        let qnew = ctx.steer(&st.tree.configs[near], &target);
        // State validity only; the edge stays unchecked until a candidate
        // path uses it.
        if !ctx.free(&qnew) {
            continue;
        }
        let id = st.add(qnew, near);

        let d_goal = ctx.metric.dist(&st.tree.configs[id], goal);
        let goal_id = if d_goal == 0.0 {
            id
        } else if d_goal <= ctx.step {
            st.add(goal.to_vec(), id)
        } else {
            continue;
        };

        // Candidate path found: validate its unchecked edges.
        let ids = st.ids_from_root(goal_id);
        let mut broken = false;
        for w in ids.windows(2) {
            let (u, v) = (w[0], w[1]);
            if st.validated[v] {
                continue;
            }
            if ctx.exhausted() {
                return (Outcome::Timeout, None);
            }
            let ok = {
                let (a, b) = (st.tree.configs[u].clone(), st.tree.configs[v].clone());
                ctx.edge_valid(&a, &b)
            };
            if ok {
                st.validated[v] = true;
            } else {
                st.remove_subtree(v);
                broken = true;
                break;
            }
        }
        if !broken {
            let path = ids
                .into_iter()
                .map(|i| st.tree.configs[i].clone())
                .collect();
            return (Outcome::Solved, Some(path));
        }
    }
}
