//! Problem-to-graph encoding: one feature-bearing node per workspace object,
//! directed k-nearest-neighbor edges, and (for arms) the joint-configuration
//! side vector.
//!
//! Navigation nodes carry 8 features: `[x, y, theta, width, height]` plus a
//! one-hot role in the order (obstacle, goal, start). Arm nodes carry 13:
//! position padded to 3D, an orientation quaternion (planar rotation about z),
//! axis-aligned bounding-box dimensions padded to 3D, and a one-hot role in
//! the order (obstacle, active link, inactive link). Features are stored raw;
//! normalization statistics live in the model checkpoint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_diff, forward_kinematics};
use crate::problem::{Problem, Robot, Vec2};

pub const NAV_FEATURES: usize = 8;
pub const ARM_FEATURES: usize = 13;
pub const NAV_K: usize = 3;
pub const ARM_K: usize = 4;

/// Threshold on ancestor joint motion that makes a link "active".
const ACTIVE_JOINT_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Obstacle,
    Goal,
    Start,
    ActiveLink,
    InactiveLink,
}

/// Directed edge: `target` aggregates a message from `source`.
pub type Edge = (u32, u32);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceGraph {
    pub n_nodes: usize,
    pub feature_dim: usize,
    /// Row-major `n_nodes x feature_dim`.
    pub features: Vec<f64>,
    pub edges: Vec<Edge>,
    pub node_roles: Vec<NodeRole>,
    /// Start joints followed by goal joints (arm problems only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_vector: Option<Vec<f64>>,
}

impl WorkspaceGraph {
    pub fn node(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }
}

/// Directed k-NN edges over `positions`: each node receives one edge from
/// each of its `k` nearest others (Euclidean; ties break toward the lower
/// index; no self edges).
pub fn knn_edges(positions: &[Vec2], k: usize) -> Result<Vec<Edge>> {
    if k >= positions.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} needs at least {} nodes, got {}",
            k + 1,
            positions.len()
        )));
    }
    let mut edges = Vec::with_capacity(positions.len() * k);
    let mut order: Vec<usize> = Vec::with_capacity(positions.len() - 1);
    for (target, &pt) in positions.iter().enumerate() {
        order.clear();
        order.extend((0..positions.len()).filter(|&j| j != target));
        order.sort_by(|&a, &b| {
            let da = (positions[a] - pt).dot(positions[a] - pt);
            let db = (positions[b] - pt).dot(positions[b] - pt);
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        for &source in order.iter().take(k) {
            edges.push((target as u32, source as u32));
        }
    }
    Ok(edges)
}

fn one_hot<const N: usize>(slot: usize) -> [f64; N] {
    let mut v = [0.0; N];
    v[slot] = 1.0;
    v
}

/// Navigation problem to an 8-feature graph with k = 3.
pub fn encode_nav(problem: &Problem) -> Result<WorkspaceGraph> {
    let Robot::Block { half_extents } = &problem.robot else {
        return Err(Error::InvalidArgument(
            "encode_nav needs a block-robot problem".into(),
        ));
    };
    let block_w = 2.0 * half_extents.x;
    let block_h = 2.0 * half_extents.y;

    let mut features = Vec::new();
    let mut roles = Vec::new();
    let mut positions = Vec::new();

    for b in &problem.obstacles {
        let [h0, h1, h2] = one_hot::<3>(0);
        features.extend_from_slice(&[
            b.center.x,
            b.center.y,
            b.angle,
            2.0 * b.half_extents.x,
            2.0 * b.half_extents.y,
            h0,
            h1,
            h2,
        ]);
        roles.push(NodeRole::Obstacle);
        positions.push(b.center);
    }
    // One-hot order is (obstacle, goal, start): start = [0, 0, 1].
    for (q, role, slot) in [
        (&problem.start, NodeRole::Start, 2usize),
        (&problem.goal, NodeRole::Goal, 1usize),
    ] {
        let [h0, h1, h2] = one_hot::<3>(slot);
        features.extend_from_slice(&[q[0], q[1], q[2], block_w, block_h, h0, h1, h2]);
        roles.push(role);
        positions.push(Vec2::new(q[0], q[1]));
    }

    let edges = knn_edges(&positions, NAV_K)?;
    Ok(WorkspaceGraph {
        n_nodes: roles.len(),
        feature_dim: NAV_FEATURES,
        features,
        edges,
        node_roles: roles,
        config_vector: None,
    })
}

/// Arm problem to a 13-feature graph with k = 4 and the start++goal joint
/// side vector. Links appear at the start configuration only.
pub fn encode_arm(problem: &Problem) -> Result<WorkspaceGraph> {
    let Robot::Arm(spec) = &problem.robot else {
        return Err(Error::InvalidArgument(
            "encode_arm needs an arm-robot problem".into(),
        ));
    };

    let mut features = Vec::new();
    let mut roles = Vec::new();
    let mut positions = Vec::new();

    let push_box = |features: &mut Vec<f64>,
                    positions: &mut Vec<Vec2>,
                    b: &crate::geometry::OrientedBox,
                    hot: [f64; 3]| {
        let (w, h) = b.aabb_dims();
        let half = b.angle / 2.0;
        features.extend_from_slice(&[
            b.center.x,
            b.center.y,
            0.0,
            half.cos(),
            0.0,
            0.0,
            half.sin(),
            w,
            h,
            0.0,
            hot[0],
            hot[1],
            hot[2],
        ]);
        positions.push(b.center);
    };

    for b in &problem.obstacles {
        push_box(&mut features, &mut positions, b, one_hot::<3>(0));
        roles.push(NodeRole::Obstacle);
    }

    // A link is active when any joint at or before it moves between start
    // and goal.
    let link_boxes = forward_kinematics(spec, &problem.start)?;
    let mut ancestor_moves = false;
    for (i, b) in link_boxes.iter().enumerate() {
        ancestor_moves |= angle_diff(problem.start[i], problem.goal[i]).abs() > ACTIVE_JOINT_EPS;
        let (role, slot) = if ancestor_moves {
            (NodeRole::ActiveLink, 1)
        } else {
            (NodeRole::InactiveLink, 2)
        };
        push_box(&mut features, &mut positions, b, one_hot::<3>(slot));
        roles.push(role);
    }

    let edges = knn_edges(&positions, ARM_K)?;
    let mut config_vector = problem.start.clone();
    config_vector.extend_from_slice(&problem.goal);
    Ok(WorkspaceGraph {
        n_nodes: roles.len(),
        feature_dim: ARM_FEATURES,
        features,
        edges,
        node_roles: roles,
        config_vector: Some(config_vector),
    })
}

/// Dispatches on the problem's robot type.
pub fn encode(problem: &Problem) -> Result<WorkspaceGraph> {
    match problem.robot {
        Robot::Block { .. } => encode_nav(problem),
        Robot::Arm(_) => encode_arm(problem),
    }
}

/// Debug dump of a graph as pretty JSON.
pub fn graph_to_json(graph: &WorkspaceGraph) -> Result<String> {
    Ok(serde_json::to_string_pretty(graph)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_gen::{generate_arm_problem, generate_nav_problem};
    use crate::geometry::OrientedBox;
    use crate::problem::{Aabb, ArmSpec};
    use crate::rng::Stream;

    fn nav_fixture(n_obstacles: usize) -> Problem {
        let mut rng = Stream::new(11);
        let obstacles = (0..n_obstacles)
            .map(|_| {
                OrientedBox::new(
                    Vec2::new(rng.uniform(0.1, 0.8), rng.uniform(0.1, 0.8)),
                    Vec2::new(rng.uniform(0.01, 0.05), rng.uniform(0.01, 0.05)),
                    rng.angle(),
                )
            })
            .collect();
        Problem {
            id: "fixture".into(),
            seed: 0,
            robot: Robot::Block {
                half_extents: Vec2::new(0.025, 0.025),
            },
            obstacles,
            start: vec![0.24, 0.0, 2.3],
            goal: vec![0.74, 0.9, 1.6],
            workspace: Aabb::new(Vec2::new(-0.1, -0.1), Vec2::new(1.0, 1.0)),
            pos_bounds: Some(Aabb::new(Vec2::new(0.0, 0.0), Vec2::new(0.9, 0.9))),
            possibly_infeasible: false,
            barrier_count: 0,
        }
    }

    #[test]
    fn four_nodes_with_k3_are_fully_connected() {
        let g = encode_nav(&nav_fixture(2)).unwrap();
        assert_eq!(g.n_nodes, 4);
        assert_eq!(g.edges.len(), 12);
        for t in 0..4u32 {
            let out: Vec<u32> = g
                .edges
                .iter()
                .filter(|(tt, _)| *tt == t)
                .map(|(_, s)| *s)
                .collect();
            assert_eq!(out.len(), 3);
            assert!(!out.contains(&t));
        }
    }

    #[test]
    fn start_node_feature_vector_layout() {
        // Start node carries the block extents and one-hot slot (obstacle,
        // goal, start) = (0, 0, 1).
        let mut p = nav_fixture(2);
        p.robot = Robot::Block {
            half_extents: Vec2::new(0.5, 0.4),
        };
        p.start = vec![0.24, 0.9, 2.3];
        let g = encode_nav(&p).unwrap();
        let start_idx = g
            .node_roles
            .iter()
            .position(|r| *r == NodeRole::Start)
            .unwrap();
        assert_eq!(
            g.node(start_idx),
            &[0.24, 0.9, 2.3, 1.0, 0.8, 0.0, 0.0, 1.0]
        );
        let goal_idx = g
            .node_roles
            .iter()
            .position(|r| *r == NodeRole::Goal)
            .unwrap();
        assert_eq!(&g.node(goal_idx)[5..8], &[0.0, 1.0, 0.0]);
        let obs = g.node(0);
        assert_eq!(&obs[5..8], &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn one_hot_sums_to_one_and_dims_are_fixed() {
        let g = encode_nav(&generate_nav_problem(3)).unwrap();
        assert_eq!(g.feature_dim, NAV_FEATURES);
        for i in 0..g.n_nodes {
            let hot: f64 = g.node(i)[5..8].iter().sum();
            assert_eq!(hot, 1.0);
        }
        let a = encode_arm(&generate_arm_problem(8, 3).unwrap()).unwrap();
        assert_eq!(a.feature_dim, ARM_FEATURES);
        for i in 0..a.n_nodes {
            let hot: f64 = a.node(i)[10..13].iter().sum();
            assert_eq!(hot, 1.0);
        }
    }

    #[test]
    fn knn_degree_is_exactly_k() {
        let mut rng = Stream::new(5);
        let pts: Vec<Vec2> = (0..50)
            .map(|_| Vec2::new(rng.unit(), rng.unit()))
            .collect();
        let edges = knn_edges(&pts, 4).unwrap();
        for t in 0..pts.len() as u32 {
            assert_eq!(edges.iter().filter(|(tt, _)| *tt == t).count(), 4);
        }
    }

    #[test]
    fn knn_matches_brute_force_oracle() {
        let mut rng = Stream::new(6);
        let pts: Vec<Vec2> = (0..50)
            .map(|_| Vec2::new(rng.unit(), rng.unit()))
            .collect();
        let edges = knn_edges(&pts, 4).unwrap();
        for t in 0..pts.len() {
            let got: Vec<u32> = edges
                .iter()
                .filter(|(tt, _)| *tt as usize == t)
                .map(|(_, s)| *s)
                .collect();
            let mut all: Vec<usize> = (0..pts.len()).filter(|&j| j != t).collect();
            all.sort_by(|&a, &b| {
                let da = (pts[a] - pts[t]).dot(pts[a] - pts[t]);
                let db = (pts[b] - pts[t]).dot(pts[b] - pts[t]);
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            });
            let want: Vec<u32> = all[..4].iter().map(|&x| x as u32).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn knn_ties_break_by_lower_index() {
        // Three collinear equidistant points around each target.
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(-1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ];
        let edges = knn_edges(&pts, 2).unwrap();
        let from_zero: Vec<u32> = edges
            .iter()
            .filter(|(t, _)| *t == 0)
            .map(|(_, s)| *s)
            .collect();
        // Nodes 1, 2, 3 all at distance 1 from node 0; lowest indices win.
        assert_eq!(from_zero, vec![1, 2]);
    }

    #[test]
    fn knn_k_too_large_errors() {
        let pts = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)];
        assert!(knn_edges(&pts, 2).is_err());
    }

    #[test]
    fn arm_counts_and_config_vector() {
        let p = generate_arm_problem(14, 3).unwrap();
        let g = encode_arm(&p).unwrap();
        assert_eq!(g.n_nodes, p.obstacles.len() + 3);
        assert_eq!(g.config_vector.as_ref().unwrap().len(), 6);
        for t in 0..g.n_nodes as u32 {
            assert_eq!(g.edges.iter().filter(|(tt, _)| *tt == t).count(), ARM_K);
        }
    }

    #[test]
    fn arm_active_links_follow_ancestor_joints() {
        let mut p = generate_arm_problem(14, 3).unwrap();
        // Only joint 1 moves: links 1 and 2 are active, link 0 inactive.
        p.goal = p.start.clone();
        p.goal[1] += 0.5;
        let g = encode_arm(&p).unwrap();
        let link_roles: Vec<NodeRole> = g.node_roles[p.obstacles.len()..].to_vec();
        assert_eq!(
            link_roles,
            vec![
                NodeRole::InactiveLink,
                NodeRole::ActiveLink,
                NodeRole::ActiveLink
            ]
        );
    }

    #[test]
    fn arm_quaternion_encodes_planar_rotation() {
        let p = Problem {
            id: "arm".into(),
            seed: 0,
            robot: Robot::Arm(ArmSpec {
                base: Vec2::new(0.5, 0.5),
                link_lengths: vec![0.2, 0.2],
                link_widths: vec![0.04, 0.04],
            }),
            obstacles: (0..5)
                .map(|i| {
                    OrientedBox::new(
                        Vec2::new(0.1 + 0.15 * i as f64, 0.1),
                        Vec2::new(0.02, 0.02),
                        0.0,
                    )
                })
                .collect(),
            start: vec![std::f64::consts::FRAC_PI_2, 0.0],
            goal: vec![0.0, 0.0],
            workspace: Aabb::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)),
            pos_bounds: None,
            possibly_infeasible: false,
            barrier_count: 0,
        };
        let g = encode_arm(&p).unwrap();
        let link0 = g.node(5);
        let theta = std::f64::consts::FRAC_PI_2;
        assert!((link0[3] - (theta / 2.0).cos()).abs() < 1e-12);
        assert_eq!(link0[4], 0.0);
        assert_eq!(link0[5], 0.0);
        assert!((link0[6] - (theta / 2.0).sin()).abs() < 1e-12);
        // z padding stays zero.
        assert_eq!(link0[2], 0.0);
        assert_eq!(link0[9], 0.0);
    }

    #[test]
    fn encoding_is_deterministic() {
        let p = generate_nav_problem(21);
        assert_eq!(encode_nav(&p).unwrap(), encode_nav(&p).unwrap());
    }

    #[test]
    fn obstacle_permutation_relabels_without_changing_feature_multisets() {
        let p = nav_fixture(5);
        let g1 = encode_nav(&p).unwrap();
        let mut p2 = p.clone();
        p2.obstacles.reverse();
        let g2 = encode_nav(&p2).unwrap();

        let summarize = |g: &WorkspaceGraph| {
            let mut items: Vec<(Vec<String>, Vec<Vec<String>>)> = (0..g.n_nodes)
                .map(|i| {
                    let feat: Vec<String> =
                        g.node(i).iter().map(|v| format!("{v:.12}")).collect();
                    let mut nbrs: Vec<Vec<String>> = g
                        .edges
                        .iter()
                        .filter(|(t, _)| *t as usize == i)
                        .map(|(_, s)| {
                            g.node(*s as usize)
                                .iter()
                                .map(|v| format!("{v:.12}"))
                                .collect()
                        })
                        .collect();
                    nbrs.sort();
                    (feat, nbrs)
                })
                .collect();
            items.sort();
            items
        };
        assert_eq!(summarize(&g1), summarize(&g2));
    }
}
