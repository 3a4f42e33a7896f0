//! Planfolio: measure how long sampling-based motion planners take on
//! generated problems, learn to predict those runtimes from a workspace-graph
//! encoding, and use the predictions for planner-portfolio selection,
//! fastest-problem selection, and a constrained task-sequencing experiment.
//!
//! The crate is organized around the pipeline stages:
//!
//! * [`geometry`] — oriented-box primitives, collision checking, and
//!   configuration-space interpolation shared by everything else.
//! * [`env_gen`] — seeded generation of the narrow-gap navigation dataset and
//!   the planar-arm dataset.
//! * [`planners`] — RRT, RRTConnect, TRRT and LazyRRT over a common state
//!   space, plus the repeated-trial measurement harness.
//! * [`graph_encode`] — problems to feature graphs (k-NN edges).
//! * [`gnn`] — dense tensors, EdgeConv layers, backprop, Adam, training.
//! * [`predict`] — learned and baseline predictors plus the selection
//!   experiments.
//! * [`tamp`] — segment/quadrant triple sequencing experiment.
//! * [`cli`] — the `planfolio` command-line surface.

pub mod cli;
pub mod env_gen;
pub mod error;
pub mod geometry;
pub mod gnn;
pub mod graph_encode;
pub mod planners;
pub mod predict;
pub mod problem;
pub mod rng;
pub mod tamp;

pub use error::{Error, Result};
pub use problem::{Aabb, ArmSpec, Problem, Robot, Vec2};
