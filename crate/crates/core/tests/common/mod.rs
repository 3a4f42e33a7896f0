//! Shared test oracles, independent of the library's collision code paths.

#![allow(dead_code)]

use planfolio::geometry::OrientedBox;
use planfolio::problem::{Problem, Robot, Vec2};
use planfolio::rng::Stream;

/// Point membership in a box, written against the box definition directly
/// (rotate into the local frame, compare against half extents).
pub fn point_in_box(b: &OrientedBox, p: Vec2) -> bool {
    let dx = p.x - b.center.x;
    let dy = p.y - b.center.y;
    let (s, c) = b.angle.sin_cos();
    let u = c * dx + s * dy;
    let v = -s * dx + c * dy;
    u.abs() <= b.half_extents.x && v.abs() <= b.half_extents.y
}

/// Sampling oracle: grid over `b`'s interior and boundary, membership in `a`.
/// `samples_per_axis^2` total points (10^6 at 1000).
pub fn oracle_boxes_intersect(a: &OrientedBox, b: &OrientedBox, samples_per_axis: usize) -> bool {
    let n = samples_per_axis;
    let (s, c) = b.angle.sin_cos();
    for i in 0..n {
        let u = -b.half_extents.x + 2.0 * b.half_extents.x * (i as f64) / (n - 1) as f64;
        for j in 0..n {
            let v = -b.half_extents.y + 2.0 * b.half_extents.y * (j as f64) / (n - 1) as f64;
            let p = Vec2::new(
                b.center.x + c * u - s * v,
                b.center.y + s * u + c * v,
            );
            if point_in_box(a, p) {
                return true;
            }
        }
    }
    false
}

fn corners(b: &OrientedBox) -> [Vec2; 4] {
    let (s, c) = b.angle.sin_cos();
    let ex = Vec2::new(c * b.half_extents.x, s * b.half_extents.x);
    let ey = Vec2::new(-s * b.half_extents.y, c * b.half_extents.y);
    [
        b.center + ex + ey,
        b.center + ex - ey,
        b.center - ex - ey,
        b.center - ex + ey,
    ]
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    };
    let proj = a + ab * t;
    (p - proj).norm()
}

fn sat_overlap(a: &OrientedBox, b: &OrientedBox) -> Option<f64> {
    // Minimum projection overlap over the four face normals; None when a
    // separating axis exists. For convex polygons this minimum is the exact
    // penetration depth.
    let axes = [a.axes()[0], a.axes()[1], b.axes()[0], b.axes()[1]];
    let project = |bx: &OrientedBox, axis: Vec2| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for cp in corners(bx) {
            let v = cp.dot(axis);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    };
    let mut min_overlap = f64::INFINITY;
    for axis in axes {
        let (alo, ahi) = project(a, axis);
        let (blo, bhi) = project(b, axis);
        let overlap = ahi.min(bhi) - alo.max(blo);
        if overlap < 0.0 {
            return None;
        }
        min_overlap = min_overlap.min(overlap);
    }
    Some(min_overlap)
}

/// Signed clearance: positive separation distance when disjoint, negative
/// penetration depth when overlapping. Exact for convex quads.
pub fn signed_clearance(a: &OrientedBox, b: &OrientedBox) -> f64 {
    match sat_overlap(a, b) {
        Some(depth) => -depth,
        None => {
            let ca = corners(a);
            let cb = corners(b);
            let mut best = f64::INFINITY;
            for i in 0..4 {
                for j in 0..4 {
                    best = best.min(point_segment_distance(ca[i], cb[j], cb[(j + 1) % 4]));
                    best = best.min(point_segment_distance(cb[i], ca[j], ca[(j + 1) % 4]));
                }
            }
            best
        }
    }
}

/// Random box inside roughly the unit workspace.
pub fn random_box(rng: &mut Stream) -> OrientedBox {
    OrientedBox::new(
        Vec2::new(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)),
        Vec2::new(rng.uniform(0.01, 0.25), rng.uniform(0.01, 0.25)),
        rng.angle(),
    )
}

/// Sampling oracle for whole-robot collision: samples every robot box
/// against obstacles, workspace bounds, and (arms) non-adjacent links.
/// Returns `None` when any pairwise clearance is within `margin` of the
/// boundary (ambiguous at sampling density).
pub fn oracle_config_collides(
    problem: &Problem,
    q: &[f64],
    samples_per_axis: usize,
    margin: f64,
) -> Option<bool> {
    let boxes = planfolio::geometry::robot_boxes(problem, q).ok()?;

    // Bounds check via corner distances.
    let ws = problem.workspace;
    for rb in &boxes {
        let mut worst_inside = f64::INFINITY;
        let mut worst_outside = 0.0f64;
        for cpt in corners(rb) {
            let dx_out = (ws.min.x - cpt.x).max(cpt.x - ws.max.x);
            let dy_out = (ws.min.y - cpt.y).max(cpt.y - ws.max.y);
            let out = dx_out.max(dy_out);
            if out > 0.0 {
                worst_outside = worst_outside.max(out);
            } else {
                worst_inside = worst_inside.min(-out);
            }
        }
        if worst_outside > 0.0 {
            if worst_outside <= margin {
                return None;
            }
            return Some(true);
        }
        if worst_inside <= margin {
            return None;
        }
    }

    let mut pairs: Vec<(&OrientedBox, &OrientedBox)> = Vec::new();
    for rb in &boxes {
        for ob in &problem.obstacles {
            pairs.push((rb, ob));
        }
    }
    for i in 0..boxes.len() {
        for j in (i + 2)..boxes.len() {
            pairs.push((&boxes[i], &boxes[j]));
        }
    }
    let mut collides = false;
    for (a, b) in pairs {
        let clearance = signed_clearance(a, b);
        if clearance.abs() <= margin {
            return None;
        }
        if clearance < 0.0 {
            collides = true;
        } else {
            // Double-check the disjoint verdict by sampling.
            if oracle_boxes_intersect(a, b, samples_per_axis.min(200)) {
                collides = true;
            }
        }
    }
    Some(collides)
}
