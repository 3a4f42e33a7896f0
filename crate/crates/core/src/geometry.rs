//! 2D primitives, collision checking, and configuration-space interpolation.
//!
//! The collision model is closed-set: touching geometry counts as collision,
//! which keeps boundary decisions deterministic. Arm links are oriented boxes;
//! non-adjacent links are checked against each other as well as against
//! obstacles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Aabb, ArmSpec, Problem, Robot, Vec2};

/// Default edge-validation resolution, as a fraction of per-axis range
/// (angles scaled by 1/pi). Below the narrowest generated gap margin.
pub const DEFAULT_RESOLUTION: f64 = 0.005;

/// Maps any angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = a % TAU;
    if r <= -PI {
        r += TAU;
    } else if r > PI {
        r -= TAU;
    }
    r
}

/// Shortest-arc signed difference `to - from`, in `(-pi, pi]`.
///
/// The pi tie breaks toward the positive direction.
pub fn angle_diff(from: f64, to: f64) -> f64 {
    normalize_angle(to - from)
}

/// Rectangle with arbitrary orientation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec2,
    /// Half width (local x) and half height (local y); strictly positive.
    pub half_extents: Vec2,
    /// Radians in `(-pi, pi]`.
    pub angle: f64,
}

impl OrientedBox {
    pub fn new(center: Vec2, half_extents: Vec2, angle: f64) -> Self {
        assert!(
            half_extents.x > 0.0 && half_extents.y > 0.0,
            "half_extents must be strictly positive, got {half_extents:?}"
        );
        Self {
            center,
            half_extents,
            angle: normalize_angle(angle),
        }
    }

    /// Local x and y axes in world coordinates.
    pub fn axes(&self) -> [Vec2; 2] {
        let (s, c) = self.angle.sin_cos();
        [Vec2::new(c, s), Vec2::new(-s, c)]
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let [ax, ay] = self.axes();
        let ex = ax * self.half_extents.x;
        let ey = ay * self.half_extents.y;
        [
            self.center + ex + ey,
            self.center + ex - ey,
            self.center - ex - ey,
            self.center - ex + ey,
        ]
    }

    /// Closed-set point membership.
    pub fn contains(&self, p: Vec2) -> bool {
        let d = p - self.center;
        let [ax, ay] = self.axes();
        d.dot(ax).abs() <= self.half_extents.x && d.dot(ay).abs() <= self.half_extents.y
    }

    /// Width and height of the axis-aligned bounding box.
    pub fn aabb_dims(&self) -> (f64, f64) {
        let (s, c) = self.angle.sin_cos();
        let w = 2.0 * (self.half_extents.x * c.abs() + self.half_extents.y * s.abs());
        let h = 2.0 * (self.half_extents.x * s.abs() + self.half_extents.y * c.abs());
        (w, h)
    }

    pub fn bounding_radius(&self) -> f64 {
        self.half_extents.norm()
    }
}

fn projection_interval(b: &OrientedBox, axis: Vec2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in b.corners() {
        let p = c.dot(axis);
        lo = lo.min(p);
        hi = hi.max(p);
    }
    (lo, hi)
}

/// Exact overlap test for two oriented boxes (separating-axis over the four
/// candidate axes). Closed sets: touching counts as intersecting.
pub fn boxes_intersect(a: &OrientedBox, b: &OrientedBox) -> bool {
    let axes = [a.axes()[0], a.axes()[1], b.axes()[0], b.axes()[1]];
    for axis in axes {
        let (alo, ahi) = projection_interval(a, axis);
        let (blo, bhi) = projection_interval(b, axis);
        if ahi < blo || bhi < alo {
            return false;
        }
    }
    true
}

/// True iff the box lies entirely inside the bounds (closed containment).
pub fn box_inside_aabb(b: &OrientedBox, bounds: &Aabb) -> bool {
    b.corners().iter().all(|&c| bounds.contains(c))
}

/// Poses of the arm's link boxes at joint configuration `q`.
///
/// Link i extends from the end of link i-1 along the cumulative joint angle;
/// its box is centered halfway along the link.
pub fn forward_kinematics(spec: &ArmSpec, q: &[f64]) -> Result<Vec<OrientedBox>> {
    if q.len() != spec.n_links() {
        return Err(Error::InvalidConfiguration(format!(
            "arm has {} links but configuration has {} joints",
            spec.n_links(),
            q.len()
        )));
    }
    let mut boxes = Vec::with_capacity(q.len());
    let mut origin = spec.base;
    let mut heading = 0.0;
    for i in 0..q.len() {
        heading = normalize_angle(heading + q[i]);
        let dir = Vec2::new(heading.cos(), heading.sin());
        let len = spec.link_lengths[i];
        let center = origin + dir * (len / 2.0);
        boxes.push(OrientedBox::new(
            center,
            Vec2::new(len / 2.0, spec.link_widths[i] / 2.0),
            heading,
        ));
        origin = origin + dir * len;
    }
    Ok(boxes)
}

/// The robot's geometry at configuration `q`.
pub fn robot_boxes(problem: &Problem, q: &[f64]) -> Result<Vec<OrientedBox>> {
    match &problem.robot {
        Robot::Block { half_extents } => {
            if q.len() != 3 {
                return Err(Error::InvalidConfiguration(format!(
                    "block configuration needs [x, y, theta], got {} values",
                    q.len()
                )));
            }
            Ok(vec![OrientedBox::new(
                Vec2::new(q[0], q[1]),
                *half_extents,
                q[2],
            )])
        }
        Robot::Arm(spec) => forward_kinematics(spec, q),
    }
}

/// Configuration-space bounds and interpolation for one problem.
#[derive(Clone, Debug)]
pub struct CSpace {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub angular: Vec<bool>,
}

impl CSpace {
    pub fn for_problem(problem: &Problem) -> CSpace {
        use std::f64::consts::PI;
        match &problem.robot {
            Robot::Block { .. } => {
                let b = problem.pos_bounds.unwrap_or(problem.workspace);
                CSpace {
                    lower: vec![b.min.x, b.min.y, -PI],
                    upper: vec![b.max.x, b.max.y, PI],
                    angular: vec![false, false, true],
                }
            }
            Robot::Arm(spec) => {
                let n = spec.n_links();
                CSpace {
                    lower: vec![-PI; n],
                    upper: vec![PI; n],
                    angular: vec![true; n],
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn check_dim(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dim() {
            return Err(Error::InvalidConfiguration(format!(
                "expected {} dimensions, got {}",
                self.dim(),
                q.len()
            )));
        }
        Ok(())
    }

    /// Per-dimension signed deltas from `a` to `b`, shortest-arc on angles.
    pub fn delta(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                if self.angular[i] {
                    angle_diff(a[i], b[i])
                } else {
                    b[i] - a[i]
                }
            })
            .collect()
    }

    /// Interpolant at `t` in [0, 1]; angles follow the shortest arc.
    pub fn interpolate(&self, a: &[f64], b: &[f64], t: f64, out: &mut [f64]) {
        for i in 0..self.dim() {
            if self.angular[i] {
                out[i] = normalize_angle(a[i] + t * angle_diff(a[i], b[i]));
            } else {
                out[i] = a[i] + t * (b[i] - a[i]);
            }
        }
    }

    /// Largest per-axis motion as a fraction of that axis's range; angles are
    /// scaled by 1/pi. Drives the interpolation step count.
    pub fn normalized_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, d) in self.delta(a, b).iter().enumerate() {
            let range = if self.angular[i] {
                std::f64::consts::PI
            } else {
                self.upper[i] - self.lower[i]
            };
            worst = worst.max(d.abs() / range);
        }
        worst
    }

    /// True for configurations inside the sampling bounds (angles always are).
    pub fn in_bounds(&self, q: &[f64]) -> bool {
        (0..self.dim())
            .all(|i| self.angular[i] || (q[i] >= self.lower[i] && q[i] <= self.upper[i]))
    }
}

/// Collision queries for one problem, with a running count of box-pair tests.
///
/// The counter is the planner's deterministic unit of work; see
/// `planners::budget`.
pub struct CollisionModel<'a> {
    problem: &'a Problem,
    space: CSpace,
    checks: u64,
}

impl<'a> CollisionModel<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        Self {
            problem,
            space: CSpace::for_problem(problem),
            checks: 0,
        }
    }

    pub fn space(&self) -> &CSpace {
        &self.space
    }

    /// Box-pair tests performed so far.
    pub fn checks(&self) -> u64 {
        self.checks
    }

    /// True iff the robot at `q` hits an obstacle, leaves the workspace,
    /// violates sampling bounds, or (arms) self-collides.
    pub fn collides(&mut self, q: &[f64]) -> Result<bool> {
        self.space.check_dim(q)?;
        if !self.space.in_bounds(q) {
            return Ok(true);
        }
        let boxes = robot_boxes(self.problem, q)?;
        for rb in &boxes {
            self.checks += 1;
            if !box_inside_aabb(rb, &self.problem.workspace) {
                return Ok(true);
            }
            for ob in &self.problem.obstacles {
                self.checks += 1;
                if boxes_intersect(rb, ob) {
                    return Ok(true);
                }
            }
        }
        // Self-collision between non-adjacent links.
        for i in 0..boxes.len() {
            for j in (i + 2)..boxes.len() {
                self.checks += 1;
                if boxes_intersect(&boxes[i], &boxes[j]) {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// True iff every interpolated configuration between `q0` and `q1` at
    /// spacing <= `resolution` is collision-free.
    ///
    /// The step count is rounded up to a power of two so that finer
    /// resolutions check a superset of the coarser resolution's points; a
    /// motion rejected at resolution r is therefore rejected at every r' < r.
    pub fn motion_valid(&mut self, q0: &[f64], q1: &[f64], resolution: f64) -> Result<bool> {
        self.space.check_dim(q0)?;
        self.space.check_dim(q1)?;
        let dist = self.space.normalized_dist(q0, q1);
        let raw_steps = (dist / resolution).ceil().max(1.0);
        let steps = (raw_steps as u64).next_power_of_two();
        let mut q = vec![0.0; q0.len()];
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            self.space.interpolate(q0, q1, t, &mut q);
            if self.collides(&q)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Coarse distance from the robot to the nearest obstacle: bounding-circle
    /// gaps only. Used as the TRRT cost signal, not for validity.
    pub fn clearance_estimate(&mut self, q: &[f64]) -> Result<f64> {
        let boxes = robot_boxes(self.problem, q)?;
        let mut best = f64::INFINITY;
        for rb in &boxes {
            for ob in &self.problem.obstacles {
                self.checks += 1;
                let gap = (ob.center - rb.center).norm() - ob.bounding_radius()
                    - rb.bounding_radius();
                best = best.min(gap);
            }
        }
        if best == f64::INFINITY {
            // No obstacles; fall back to half the workspace diagonal.
            let d = self.problem.workspace.max - self.problem.workspace.min;
            best = d.norm() / 2.0;
        }
        Ok(best.max(0.0))
    }
}

/// See [`CollisionModel::collides`].
pub fn config_collides(problem: &Problem, q: &[f64]) -> Result<bool> {
    CollisionModel::new(problem).collides(q)
}

/// See [`CollisionModel::motion_valid`].
pub fn motion_valid(problem: &Problem, q0: &[f64], q1: &[f64], resolution: f64) -> Result<bool> {
    CollisionModel::new(problem).motion_valid(q0, q1, resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_box(x: f64, y: f64) -> OrientedBox {
        OrientedBox::new(Vec2::new(x, y), Vec2::new(0.5, 0.5), 0.0)
    }

    #[test]
    fn distant_boxes_do_not_intersect() {
        assert!(!boxes_intersect(&unit_box(0.0, 0.0), &unit_box(10.0, 10.0)));
    }

    #[test]
    fn box_intersects_itself() {
        let b = OrientedBox::new(Vec2::new(0.3, -0.2), Vec2::new(1.0, 0.2), 0.7);
        assert!(boxes_intersect(&b, &b));
    }

    #[test]
    fn touching_boxes_count_as_intersecting() {
        // Shared edge at x = 0.5.
        assert!(boxes_intersect(&unit_box(0.0, 0.0), &unit_box(1.0, 0.0)));
    }

    #[test]
    fn rotated_corner_case() {
        // A thin box rotated 45 degrees reaching toward another thin box.
        let a = OrientedBox::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.2), 0.0);
        let b = OrientedBox::new(Vec2::new(0.9, 0.0), Vec2::new(1.0, 0.2), PI / 4.0);
        assert!(boxes_intersect(&a, &b));
    }

    #[test]
    fn normalize_angle_maps_to_half_open_interval() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert_eq!(normalize_angle(3.0 * PI), PI);
        assert!((normalize_angle(2.0 * PI)).abs() < 1e-12);
        assert!((normalize_angle(-PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn angle_diff_breaks_pi_tie_positively() {
        assert_eq!(angle_diff(0.0, PI), PI);
        assert_eq!(angle_diff(PI / 2.0, -PI / 2.0), PI);
    }

    #[test]
    fn fk_zero_pose_is_collinear() {
        let spec = ArmSpec {
            base: Vec2::new(1.0, 2.0),
            link_lengths: vec![0.4, 0.3, 0.2],
            link_widths: vec![0.05, 0.05, 0.05],
        };
        let boxes = forward_kinematics(&spec, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(boxes.len(), 3);
        let expected_centers = [1.0 + 0.2, 1.0 + 0.4 + 0.15, 1.0 + 0.7 + 0.1];
        for (b, cx) in boxes.iter().zip(expected_centers) {
            assert!((b.center.x - cx).abs() < 1e-12);
            assert!((b.center.y - 2.0).abs() < 1e-12);
            assert_eq!(b.angle, 0.0);
        }
    }

    #[test]
    fn fk_quarter_turn_single_link() {
        let spec = ArmSpec {
            base: Vec2::new(0.0, 0.0),
            link_lengths: vec![1.0],
            link_widths: vec![0.1],
        };
        let boxes = forward_kinematics(&spec, &[PI / 2.0]).unwrap();
        assert!((boxes[0].center.x).abs() < 1e-12);
        assert!((boxes[0].center.y - 0.5).abs() < 1e-12);
        assert!((boxes[0].angle - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn fk_matches_complex_rotation_reference() {
        // End-effector position recomputed with complex-number products.
        let spec = ArmSpec {
            base: Vec2::new(0.2, -0.1),
            link_lengths: vec![0.31, 0.27, 0.18],
            link_widths: vec![0.04, 0.04, 0.04],
        };
        let q = [0.7, -1.3, 2.1];
        let boxes = forward_kinematics(&spec, &q).unwrap();
        let last = boxes.last().unwrap();
        let dir = Vec2::new(last.angle.cos(), last.angle.sin());
        let tip = last.center + dir * spec.link_lengths[2] * 0.5;

        // Reference: multiply unit complex numbers.
        let mut z = (1.0, 0.0);
        let mut pos = (0.2, -0.1);
        for (angle, len) in q.iter().zip(&spec.link_lengths) {
            let r = (angle.cos(), angle.sin());
            z = (z.0 * r.0 - z.1 * r.1, z.0 * r.1 + z.1 * r.0);
            pos = (pos.0 + len * z.0, pos.1 + len * z.1);
        }
        assert!((tip.x - pos.0).abs() < 1e-12);
        assert!((tip.y - pos.1).abs() < 1e-12);
    }

    #[test]
    fn fk_dimension_mismatch_errors() {
        let spec = ArmSpec {
            base: Vec2::new(0.0, 0.0),
            link_lengths: vec![1.0, 1.0],
            link_widths: vec![0.1, 0.1],
        };
        assert!(forward_kinematics(&spec, &[0.0]).is_err());
    }

    fn nav_problem(obstacles: Vec<OrientedBox>) -> Problem {
        Problem {
            id: "test".into(),
            seed: 0,
            robot: Robot::Block {
                half_extents: Vec2::new(0.025, 0.025),
            },
            obstacles,
            start: vec![0.1, 0.0, 0.0],
            goal: vec![0.8, 0.9, 0.0],
            workspace: Aabb::new(Vec2::new(-0.1, -0.1), Vec2::new(1.0, 1.0)),
            pos_bounds: Some(Aabb::new(Vec2::new(0.0, 0.0), Vec2::new(0.9, 0.9))),
            possibly_infeasible: false,
            barrier_count: 0,
        }
    }

    #[test]
    fn empty_workspace_never_collides() {
        let p = nav_problem(vec![]);
        assert!(!config_collides(&p, &[0.45, 0.45, 1.0]).unwrap());
    }

    #[test]
    fn containment_collides() {
        // Block larger than the obstacle, coincident centers.
        let p = Problem {
            robot: Robot::Block {
                half_extents: Vec2::new(0.2, 0.2),
            },
            ..nav_problem(vec![OrientedBox::new(
                Vec2::new(0.5, 0.5),
                Vec2::new(0.01, 0.01),
                0.3,
            )])
        };
        assert!(config_collides(&p, &[0.5, 0.5, 0.0]).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = nav_problem(vec![]);
        assert!(config_collides(&p, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn zero_length_motion_is_valid() {
        let p = nav_problem(vec![]);
        let q = [0.3, 0.3, 0.5];
        assert!(motion_valid(&p, &q, &q, DEFAULT_RESOLUTION).unwrap());
    }

    #[test]
    fn motion_through_solid_barrier_is_invalid() {
        // Full-height barrier with no gap between start and goal.
        let barrier = OrientedBox::new(Vec2::new(0.45, 0.45), Vec2::new(0.025, 0.55), 0.0);
        let p = nav_problem(vec![barrier]);
        let q0 = [0.1, 0.45, 0.0];
        let q1 = [0.8, 0.45, 0.0];
        assert!(!motion_valid(&p, &q0, &q1, DEFAULT_RESOLUTION).unwrap());
    }

    #[test]
    fn arm_self_collision_detected() {
        // Fold the arm back onto itself; link 3 overlaps link 1.
        let p = Problem {
            id: "arm".into(),
            seed: 0,
            robot: Robot::Arm(ArmSpec {
                base: Vec2::new(0.5, 0.5),
                link_lengths: vec![0.2, 0.2, 0.2],
                link_widths: vec![0.04, 0.04, 0.04],
            }),
            obstacles: vec![],
            start: vec![0.0; 3],
            goal: vec![0.0; 3],
            workspace: Aabb::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)),
            pos_bounds: None,
            possibly_infeasible: false,
            barrier_count: 0,
        };
        assert!(config_collides(&p, &[0.0, 3.0, 3.0]).unwrap());
        assert!(!config_collides(&p, &[0.0, 1.2, 1.2]).unwrap());
    }
}
