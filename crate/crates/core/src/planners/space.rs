//! Planner metric and sampling over a problem's configuration space.

use crate::geometry::{angle_diff, CSpace};
use crate::rng::Stream;

/// Fraction of the positional per-axis range used to weight angular axes.
const ANGULAR_WEIGHT_FACTOR: f64 = 0.3;

/// Weighted Euclidean metric with shortest-arc angular differences.
#[derive(Clone, Debug)]
pub struct Metric {
    pub weights: Vec<f64>,
    angular: Vec<bool>,
    /// Weighted diagonal of the space; step sizes are fractions of this.
    pub extent: f64,
}

impl Metric {
    pub fn for_space(space: &CSpace) -> Metric {
        let pos_range = space
            .angular
            .iter()
            .zip(space.lower.iter().zip(&space.upper))
            .filter(|(&ang, _)| !ang)
            .map(|(_, (lo, hi))| hi - lo)
            .fold(0.0_f64, f64::max);
        let pos_range = if pos_range > 0.0 { pos_range } else { 1.0 };
        let weights: Vec<f64> = space
            .angular
            .iter()
            .map(|&ang| {
                if ang {
                    ANGULAR_WEIGHT_FACTOR * pos_range
                } else {
                    1.0
                }
            })
            .collect();
        let extent = space
            .angular
            .iter()
            .enumerate()
            .map(|(i, &ang)| {
                let range = if ang {
                    std::f64::consts::PI
                } else {
                    space.upper[i] - space.lower[i]
                };
                (weights[i] * range).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        Metric {
            weights,
            angular: space.angular.clone(),
            extent,
        }
    }

    pub fn dist2(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..a.len() {
            let d = if self.angular[i] {
                angle_diff(a[i], b[i])
            } else {
                b[i] - a[i]
            };
            let wd = self.weights[i] * d;
            acc += wd * wd;
        }
        acc
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        self.dist2(a, b).sqrt()
    }

    pub fn is_angular(&self, dim: usize) -> bool {
        self.angular[dim]
    }

    /// Weighted distance contribution of a single axis gap.
    pub fn axis_dist(&self, dim: usize, a: f64, b: f64) -> f64 {
        let d = if self.angular[dim] {
            angle_diff(a, b)
        } else {
            b - a
        };
        (self.weights[dim] * d).abs()
    }
}

/// Uniform sample of the space (angles in `(-pi, pi]`).
pub fn sample_uniform(space: &CSpace, rng: &mut Stream) -> Vec<f64> {
    (0..space.dim())
        .map(|i| {
            if space.angular[i] {
                rng.angle()
            } else {
                rng.uniform(space.lower[i], space.upper[i])
            }
        })
        .collect()
}

/// Moves from `from` toward `to` by at most `step` in metric distance;
/// returns an exact copy of `to` when it is within reach.
pub fn steer(space: &CSpace, metric: &Metric, from: &[f64], to: &[f64], step: f64) -> Vec<f64> {
    let d = metric.dist(from, to);
    if d <= step {
        return to.to_vec();
    }
    let mut out = vec![0.0; from.len()];
    space.interpolate(from, to, step / d, &mut out);
    out
}
