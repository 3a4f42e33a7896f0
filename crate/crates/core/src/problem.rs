//! The shared problem data model: robots, obstacles, and workspace bounds.
//!
//! Problems are serialized one JSON object per line (JSONL). Positions are in
//! workspace units, angles in radians; see the format section of the README.

use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, OrientedBox};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Axis-aligned bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Planar articulated arm: a chain of box links anchored at `base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub base: Vec2,
    pub link_lengths: Vec<f64>,
    pub link_widths: Vec<f64>,
}

impl ArmSpec {
    pub fn n_links(&self) -> usize {
        self.link_lengths.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Robot {
    /// Rigid block moving in SE(2); configurations are `[x, y, theta]`.
    Block { half_extents: Vec2 },
    /// Planar arm; configurations are joint angles, one per link.
    Arm(ArmSpec),
}

impl Robot {
    pub fn config_dim(&self) -> usize {
        match self {
            Robot::Block { .. } => 3,
            Robot::Arm(spec) => spec.n_links(),
        }
    }
}

/// One motion-planning instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub seed: u64,
    pub robot: Robot,
    pub obstacles: Vec<OrientedBox>,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    /// Bounds the robot's geometry must stay inside.
    pub workspace: Aabb,
    /// Sampling bounds for the positional dimensions (block robots only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_bounds: Option<Aabb>,
    /// Set when the generator skipped the spacing constraints that keep
    /// problems navigable; such problems may have no solution.
    pub possibly_infeasible: bool,
    /// Number of vertical barriers (navigation problems; 0 for arm problems).
    pub barrier_count: usize,
}

impl Problem {
    /// Normalizes every angular quantity into `(-pi, pi]`.
    pub fn normalized(mut self) -> Self {
        for b in &mut self.obstacles {
            b.angle = normalize_angle(b.angle);
        }
        match self.robot {
            Robot::Block { .. } => {
                self.start[2] = normalize_angle(self.start[2]);
                self.goal[2] = normalize_angle(self.goal[2]);
            }
            Robot::Arm(_) => {
                for q in self.start.iter_mut().chain(self.goal.iter_mut()) {
                    *q = normalize_angle(*q);
                }
            }
        }
        self
    }

    pub fn is_arm(&self) -> bool {
        matches!(self.robot, Robot::Arm(_))
    }
}
