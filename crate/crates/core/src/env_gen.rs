//! Seeded generation of the narrow-gap navigation dataset and the planar-arm
//! manipulation dataset.
//!
//! Every problem derives its own seed from `(global_seed, index)`, so parallel
//! and serial generation produce identical datasets, and regenerating with the
//! same seed is byte-identical.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::OrientedBox;
use crate::problem::{Aabb, ArmSpec, Problem, Robot, Vec2};
use crate::rng::{derive_seed, Stream, RNG_ALGORITHM};

pub const GENERATOR_VERSION: &str = "1";

/// Block robot dimensions (workspace units); recorded in the manifest.
pub const BLOCK_EXTENTS: [f64; 2] = [0.05, 0.05];

/// Fraction of navigation problems generated without spacing constraints, to
/// admit infeasible instances.
pub const UNCONSTRAINED_FRACTION: f64 = 0.05;

const BARRIER_WIDTH: f64 = 0.05;
/// Gap openings are drawn from this range, in units of the block diagonal.
const GAP_RANGE_DIAGONALS: (f64, f64) = (1.2, 3.0);
/// Minimum face-to-face clearance between barriers, in block diagonals.
const BARRIER_SPACING_DIAGONALS: f64 = 2.0;

const ARM_REACH: f64 = 0.45;
const ARM_LINK_WIDTH: f64 = 0.03;
const REJECTION_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotType {
    Nav2d,
    Arm,
}

impl std::fmt::Display for RobotType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RobotType::Nav2d => write!(f, "nav2d"),
            RobotType::Arm => write!(f, "arm"),
        }
    }
}

impl std::str::FromStr for RobotType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nav2d" => Ok(RobotType::Nav2d),
            "arm" => Ok(RobotType::Arm),
            other => Err(Error::InvalidArgument(format!(
                "unknown robot type `{other}` (expected nav2d or arm)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitEntry {
    pub id: String,
    pub split: Split,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub generator_version: String,
    pub robot_type: RobotType,
    pub count: usize,
    pub global_seed: u64,
    pub rng_algorithm: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_extents: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_links: Option<usize>,
    pub split: Vec<SplitEntry>,
}

impl DatasetManifest {
    pub fn ids_with_split(&self, split: Split) -> Vec<&str> {
        self.split
            .iter()
            .filter(|e| e.split == split)
            .map(|e| e.id.as_str())
            .collect()
    }
}

fn nav_workspace() -> Aabb {
    Aabb::new(Vec2::new(-0.1, -0.1), Vec2::new(1.0, 1.0))
}

fn nav_pos_bounds() -> Aabb {
    Aabb::new(Vec2::new(0.0, 0.0), Vec2::new(0.9, 0.9))
}

fn block_diagonal() -> f64 {
    (BLOCK_EXTENTS[0].powi(2) + BLOCK_EXTENTS[1].powi(2)).sqrt()
}

/// One vertical barrier spanning the full workspace height, with an opening.
struct Barrier {
    x: f64,
    gap_low: f64,
    gap_high: f64,
}

impl Barrier {
    fn segments(&self, workspace: &Aabb) -> Vec<OrientedBox> {
        let hw = BARRIER_WIDTH / 2.0;
        let mut out = Vec::with_capacity(2);
        let lower_h = self.gap_low - workspace.min.y;
        if lower_h > 0.0 {
            out.push(OrientedBox::new(
                Vec2::new(self.x, workspace.min.y + lower_h / 2.0),
                Vec2::new(hw, lower_h / 2.0),
                0.0,
            ));
        }
        let upper_h = workspace.max.y - self.gap_high;
        if upper_h > 0.0 {
            out.push(OrientedBox::new(
                Vec2::new(self.x, workspace.max.y - upper_h / 2.0),
                Vec2::new(hw, upper_h / 2.0),
                0.0,
            ));
        }
        out
    }
}

/// Narrow-gap navigation problem: block start at y = 0, goal at y = 0.9,
/// 1-3 full-height vertical barriers each pierced by one gap.
pub fn generate_nav_problem(seed: u64) -> Problem {
    let mut rng = Stream::new(seed);
    let workspace = nav_workspace();
    let pos_bounds = nav_pos_bounds();
    let diag = block_diagonal();

    let barrier_count = 1 + rng.below(3);
    let constrained = !rng.chance(UNCONSTRAINED_FRACTION);
    let min_center_dist = BARRIER_WIDTH + BARRIER_SPACING_DIAGONALS * diag;

    let xs: Vec<f64> = loop {
        let candidate: Vec<f64> = (0..barrier_count).map(|_| rng.uniform(0.1, 0.8)).collect();
        if !constrained {
            break candidate;
        }
        let spaced = candidate.iter().enumerate().all(|(i, &a)| {
            candidate[..i]
                .iter()
                .all(|&b| (a - b).abs() >= min_center_dist)
        });
        if spaced {
            break candidate;
        }
    };

    let barriers: Vec<Barrier> = xs
        .into_iter()
        .map(|x| {
            let gap = rng.uniform(GAP_RANGE_DIAGONALS.0 * diag, GAP_RANGE_DIAGONALS.1 * diag);
            let margin = 0.02;
            let lo = workspace.min.y + margin;
            let hi = workspace.max.y - margin - gap;
            let gap_low = rng.uniform(lo, hi);
            Barrier {
                x,
                gap_low,
                gap_high: gap_low + gap,
            }
        })
        .collect();

    let obstacles: Vec<OrientedBox> = barriers
        .iter()
        .flat_map(|b| b.segments(&workspace))
        .collect();

    let mut problem = Problem {
        id: format!("nav2d-{seed:016x}"),
        seed,
        robot: Robot::Block {
            half_extents: Vec2::new(BLOCK_EXTENTS[0] / 2.0, BLOCK_EXTENTS[1] / 2.0),
        },
        obstacles,
        start: vec![0.0, 0.0, 0.0],
        goal: vec![0.0, 0.9, 0.0],
        workspace,
        pos_bounds: Some(pos_bounds),
        possibly_infeasible: !constrained,
        barrier_count,
    };

    // Start and goal keep their fixed y; x and theta are rejection-sampled to
    // be collision-free. Failure (possible only for unconstrained layouts)
    // leaves the last sample in place and flags the problem.
    for endpoint in 0..2 {
        let mut placed = false;
        for _ in 0..REJECTION_CAP {
            let q = vec![rng.uniform(0.0, 0.9), if endpoint == 0 { 0.0 } else { 0.9 }, rng.angle()];
            let free = !crate::geometry::config_collides(&problem, &q).expect("dims fixed");
            if endpoint == 0 {
                problem.start = q;
            } else {
                problem.goal = q;
            }
            if free {
                placed = true;
                break;
            }
        }
        if !placed {
            problem.possibly_infeasible = true;
        }
    }
    problem
}

/// Planar-arm problem: 6-11 box obstacles in the reachable annulus,
/// collision-free start and goal joint configurations.
pub fn generate_arm_problem(seed: u64, n_links: usize) -> Result<Problem> {
    assert!(n_links >= 2, "arm needs at least 2 links");
    let mut rng = Stream::new(seed);
    let workspace = Aabb::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0));
    let base = Vec2::new(0.5, 0.5);
    let spec = ArmSpec {
        base,
        link_lengths: vec![ARM_REACH / n_links as f64; n_links],
        link_widths: vec![ARM_LINK_WIDTH; n_links],
    };

    let count = 6 + rng.below(6);
    let obstacles: Vec<OrientedBox> = (0..count)
        .map(|_| {
            let r = rng.uniform(0.12, 0.42);
            let phi = rng.angle();
            let center = base + Vec2::new(phi.cos(), phi.sin()) * r;
            let he = Vec2::new(rng.uniform(0.02, 0.05), rng.uniform(0.02, 0.05));
            OrientedBox::new(center, he, rng.angle())
        })
        .collect();

    let mut problem = Problem {
        id: format!("arm-{seed:016x}"),
        seed,
        robot: Robot::Arm(spec),
        obstacles,
        start: vec![0.0; n_links],
        goal: vec![0.0; n_links],
        workspace,
        pos_bounds: None,
        possibly_infeasible: false,
        barrier_count: 0,
    };

    for endpoint in 0..2 {
        let mut placed = false;
        for _ in 0..REJECTION_CAP {
            let q: Vec<f64> = (0..n_links).map(|_| rng.angle()).collect();
            if !crate::geometry::config_collides(&problem, &q).expect("dims fixed") {
                if endpoint == 0 {
                    problem.start = q;
                } else {
                    problem.goal = q;
                }
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::GenerationFailed(format!(
                "no collision-free {} configuration after {REJECTION_CAP} samples (seed {seed})",
                if endpoint == 0 { "start" } else { "goal" }
            )));
        }
    }
    Ok(problem)
}

/// Distinct sub-stream tag for the split shuffle.
const SPLIT_STREAM: u64 = 0x53_50_4c_49_54; // "SPLIT"

/// Generates `n` problems and the train/test split assignment.
///
/// Problem i's seed is `derive_seed(global_seed, i)`; arm generation failures
/// re-derive deterministically, so the dataset is a pure function of the
/// arguments.
pub fn generate_dataset(
    global_seed: u64,
    n: usize,
    robot_type: RobotType,
    n_links: usize,
) -> Result<(DatasetManifest, Vec<Problem>)> {
    assert!(n >= 1, "dataset needs at least one problem");
    let mut problems = Vec::with_capacity(n);
    for i in 0..n {
        let base = derive_seed(global_seed, i as u64);
        let problem = match robot_type {
            RobotType::Nav2d => generate_nav_problem(base),
            RobotType::Arm => {
                let mut found = None;
                for attempt in 0..100u64 {
                    let seed = if attempt == 0 {
                        base
                    } else {
                        derive_seed(base, attempt)
                    };
                    match generate_arm_problem(seed, n_links) {
                        Ok(p) => {
                            found = Some(p);
                            break;
                        }
                        Err(Error::GenerationFailed(_)) => continue,
                        Err(e) => return Err(e),
                    }
                }
                found.ok_or_else(|| {
                    Error::GenerationFailed(format!("problem index {i} failed 100 re-seeds"))
                })?
            }
        };
        problems.push(problem);
    }

    // 80/20 split by seeded index shuffle, independent of problem content.
    let mut order: Vec<usize> = (0..n).collect();
    Stream::new(derive_seed(global_seed, SPLIT_STREAM)).shuffle(&mut order);
    let n_train = n * 8 / 10;
    let mut tags = vec![Split::Test; n];
    for &idx in order.iter().take(n_train) {
        tags[idx] = Split::Train;
    }
    let split = problems
        .iter()
        .zip(&tags)
        .map(|(p, &s)| SplitEntry {
            id: p.id.clone(),
            split: s,
        })
        .collect();

    let manifest = DatasetManifest {
        schema_version: 1,
        generator_version: format!("{robot_type}/{GENERATOR_VERSION}"),
        robot_type,
        count: n,
        global_seed,
        rng_algorithm: RNG_ALGORITHM.to_string(),
        block_extents: (robot_type == RobotType::Nav2d).then_some(BLOCK_EXTENTS),
        n_links: (robot_type == RobotType::Arm).then_some(n_links),
        split,
    };
    Ok((manifest, problems))
}

/// Writes `manifest.json` and `problems.jsonl` into `dir`.
pub fn write_dataset(dir: &Path, manifest: &DatasetManifest, problems: &[Problem]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("problems.jsonl"))?);
    for p in problems {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(manifest)?,
    )?;
    Ok(())
}

/// Loads a dataset written by [`write_dataset`].
pub fn load_dataset(dir: &Path) -> Result<(DatasetManifest, Vec<Problem>)> {
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.exists() {
        return Err(Error::MissingArtifact(format!(
            "dataset manifest {}",
            manifest_path.display()
        )));
    }
    let manifest: DatasetManifest = serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
    let file = fs::File::open(dir.join("problems.jsonl"))?;
    let mut problems = Vec::with_capacity(manifest.count);
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        problems.push(serde_json::from_str::<Problem>(&line)?);
    }
    if problems.len() != manifest.count {
        return Err(Error::Dataset(format!(
            "manifest says {} problems, file has {}",
            manifest.count,
            problems.len()
        )));
    }
    Ok((manifest, problems))
}
