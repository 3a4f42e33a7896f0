//! Nearest-neighbor lookup for tree planners.
//!
//! Linear scan below [`KD_THRESHOLD`] points, then a kd-tree with per-node
//! bounding boxes so angular (wrap-around) axes prune correctly. Ties break
//! toward the lower node id in both paths, which keeps results identical
//! whichever structure answers the query.

use super::space::Metric;
use crate::geometry::normalize_angle;

const KD_THRESHOLD: usize = 512;

struct KdNode {
    point: u32,
    left: i32,
    right: i32,
    bb_min: Vec<f64>,
    bb_max: Vec<f64>,
}

pub struct NnIndex {
    metric: Metric,
    dim: usize,
    points: Vec<f64>, // row-major, dim per point
    alive: Vec<bool>,
    kd_nodes: Vec<KdNode>,
    kd_root: i32,
    /// Points with id >= kd_covered are scanned linearly until a rebuild.
    kd_covered: usize,
}

impl NnIndex {
    pub fn new(metric: Metric, dim: usize) -> Self {
        Self {
            metric,
            dim,
            points: Vec::new(),
            alive: Vec::new(),
            kd_nodes: Vec::new(),
            kd_root: -1,
            kd_covered: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.alive.len()
    }

    pub fn point(&self, id: usize) -> &[f64] {
        &self.points[id * self.dim..(id + 1) * self.dim]
    }

    pub fn insert(&mut self, q: &[f64]) -> usize {
        debug_assert_eq!(q.len(), self.dim);
        let id = self.alive.len();
        self.points.extend_from_slice(q);
        self.alive.push(true);
        let n = self.alive.len();
        if n >= KD_THRESHOLD && n >= 2 * self.kd_covered.max(KD_THRESHOLD / 2) {
            self.rebuild();
        }
        id
    }

    pub fn remove(&mut self, id: usize) {
        self.alive[id] = false;
    }

    /// Id of the alive point nearest to `q`; lowest id wins ties.
    pub fn nearest(&self, q: &[f64]) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        if self.kd_root >= 0 {
            self.kd_query(self.kd_root, q, &mut best);
        }
        let linear_from = if self.kd_root >= 0 { self.kd_covered } else { 0 };
        for id in linear_from..self.alive.len() {
            if !self.alive[id] {
                continue;
            }
            let d2 = self.metric.dist2(q, self.point(id));
            if better(d2, id, &best) {
                best = Some((d2, id));
            }
        }
        best.map(|(_, id)| id)
    }

    fn rebuild(&mut self) {
        self.kd_covered = self.alive.len();
        self.kd_nodes.clear();
        let mut ids: Vec<u32> = (0..self.alive.len() as u32)
            .filter(|&i| self.alive[i as usize])
            .collect();
        self.kd_root = self.build(&mut ids, 0);
    }

    fn build(&mut self, ids: &mut [u32], depth: usize) -> i32 {
        if ids.is_empty() {
            return -1;
        }
        let dim = depth % self.dim;
        let mid = ids.len() / 2;
        ids.select_nth_unstable_by(mid, |&a, &b| {
            let pa = self.points[a as usize * self.dim + dim];
            let pb = self.points[b as usize * self.dim + dim];
            pa.partial_cmp(&pb).unwrap().then(a.cmp(&b))
        });
        let point = ids[mid];
        let mut bb_min = vec![f64::INFINITY; self.dim];
        let mut bb_max = vec![f64::NEG_INFINITY; self.dim];
        for &id in ids.iter() {
            for d in 0..self.dim {
                let v = self.points[id as usize * self.dim + d];
                bb_min[d] = bb_min[d].min(v);
                bb_max[d] = bb_max[d].max(v);
            }
        }
        let slot = self.kd_nodes.len();
        self.kd_nodes.push(KdNode {
            point,
            left: -1,
            right: -1,
            bb_min,
            bb_max,
        });
        // Split the slices out before recursing to appease the borrow checker.
        let (lo, rest) = ids.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = self.build_owned(lo, depth + 1);
        let right = self.build_owned(hi, depth + 1);
        self.kd_nodes[slot].left = left;
        self.kd_nodes[slot].right = right;
        slot as i32
    }

    fn build_owned(&mut self, ids: &mut [u32], depth: usize) -> i32 {
        self.build(ids, depth)
    }

    fn kd_query(&self, node: i32, q: &[f64], best: &mut Option<(f64, usize)>) {
        if node < 0 {
            return;
        }
        let n = &self.kd_nodes[node as usize];
        if let Some((bd, _)) = best {
            if self.box_dist2(q, &n.bb_min, &n.bb_max) > *bd {
                return;
            }
        }
        let id = n.point as usize;
        if self.alive[id] {
            let d2 = self.metric.dist2(q, self.point(id));
            if better(d2, id, best) {
                *best = Some((d2, id));
            }
        }
        // Visit the nearer child first.
        let (first, second) = match (n.left, n.right) {
            (-1, r) => (r, -1),
            (l, -1) => (l, -1),
            (l, r) => {
                let dl = self.box_dist2(
                    q,
                    &self.kd_nodes[l as usize].bb_min,
                    &self.kd_nodes[l as usize].bb_max,
                );
                let dr = self.box_dist2(
                    q,
                    &self.kd_nodes[r as usize].bb_min,
                    &self.kd_nodes[r as usize].bb_max,
                );
                if dl <= dr {
                    (l, r)
                } else {
                    (r, l)
                }
            }
        };
        self.kd_query(first, q, best);
        self.kd_query(second, q, best);
    }

    /// Lower bound on the squared metric distance from `q` to any point in
    /// the box. Angular axes measure the circle distance to the arc
    /// `[lo, hi]`, which is zero inside and the nearer endpoint otherwise.
    fn box_dist2(&self, q: &[f64], bb_min: &[f64], bb_max: &[f64]) -> f64 {
        let mut acc = 0.0;
        for d in 0..self.dim {
            let gap = if self.metric.is_angular(d) {
                if q[d] >= bb_min[d] && q[d] <= bb_max[d] {
                    0.0
                } else {
                    let to_lo = normalize_angle(q[d] - bb_min[d]).abs();
                    let to_hi = normalize_angle(q[d] - bb_max[d]).abs();
                    to_lo.min(to_hi)
                }
            } else if q[d] < bb_min[d] {
                bb_min[d] - q[d]
            } else if q[d] > bb_max[d] {
                q[d] - bb_max[d]
            } else {
                0.0
            };
            let wg = self.metric.weights[d] * gap;
            acc += wg * wg;
        }
        acc
    }
}

fn better(d2: f64, id: usize, best: &Option<(f64, usize)>) -> bool {
    match best {
        None => true,
        Some((bd, bid)) => d2 < *bd || (d2 == *bd && id < *bid),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CSpace;
    use crate::planners::space::Metric;
    use crate::rng::Stream;
    use std::f64::consts::PI;

    fn space(dim_angular: bool) -> CSpace {
        CSpace {
            lower: vec![0.0, 0.0, -PI],
            upper: vec![0.9, 0.9, PI],
            angular: vec![false, false, dim_angular],
        }
    }

    #[test]
    fn kd_matches_linear_scan() {
        let sp = space(true);
        let metric = Metric::for_space(&sp);
        let mut idx = NnIndex::new(metric.clone(), 3);
        let mut rng = Stream::new(31);
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for _ in 0..2000 {
            let p = vec![
                rng.uniform(0.0, 0.9),
                rng.uniform(0.0, 0.9),
                rng.angle(),
            ];
            idx.insert(&p);
            pts.push(p);
        }
        assert!(idx.kd_root >= 0, "kd tree should have been built");
        for _ in 0..300 {
            let q = vec![rng.uniform(0.0, 0.9), rng.uniform(0.0, 0.9), rng.angle()];
            let got = idx.nearest(&q).unwrap();
            let mut want = 0;
            let mut want_d = f64::INFINITY;
            for (i, p) in pts.iter().enumerate() {
                let d = metric.dist2(&q, p);
                if d < want_d {
                    want_d = d;
                    want = i;
                }
            }
            assert_eq!(got, want, "query {q:?}");
        }
    }

    #[test]
    fn wraparound_neighbors_found() {
        let sp = space(true);
        let metric = Metric::for_space(&sp);
        let mut idx = NnIndex::new(metric, 3);
        // Far in coordinate space but adjacent across the angular seam.
        let near_seam_pos = vec![0.5, 0.5, PI - 0.01];
        let near_seam_neg = vec![0.5, 0.5, -PI + 0.01];
        let elsewhere = vec![0.5, 0.5, 0.0];
        let a = idx.insert(&near_seam_pos);
        let _b = idx.insert(&elsewhere);
        assert_eq!(idx.nearest(&near_seam_neg), Some(a));
    }

    #[test]
    fn removed_points_are_skipped() {
        let sp = space(false);
        let metric = Metric::for_space(&sp);
        let mut idx = NnIndex::new(metric, 3);
        let a = idx.insert(&[0.1, 0.1, 0.0]);
        let b = idx.insert(&[0.5, 0.5, 0.0]);
        assert_eq!(idx.nearest(&[0.12, 0.1, 0.0]), Some(a));
        idx.remove(a);
        assert_eq!(idx.nearest(&[0.12, 0.1, 0.0]), Some(b));
    }
}
