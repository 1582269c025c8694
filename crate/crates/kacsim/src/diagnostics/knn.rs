use std::collections::HashMap;

use crate::geometry::Vec3;

type Key = (i64, i64, i64);

const MAX_RING: i64 = 24;

/// Points bucketed on a uniform cubic grid for radius and k-NN queries.
#[derive(Debug, Clone)]
pub struct PointGrid<'a> {
    points: &'a [Vec3],
    cell: f64,
    /// Range of each occupied cell in `index` and `sorted`.
    buckets: HashMap<Key, (u32, u32)>,
    index: Vec<u32>,
    sorted: Vec<Vec3>,
}

impl<'a> PointGrid<'a> {
    pub fn new(points: &'a [Vec3], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite());
        let mut keyed: Vec<(Key, u32)> = points.iter().enumerate().map(|(i, p)| (key(*p, cell), i as u32)).collect();
        keyed.sort_unstable();
        let mut buckets = HashMap::new();
        let mut start = 0;
        while start < keyed.len() {
            let k = keyed[start].0;
            let mut end = start;
            while end < keyed.len() && keyed[end].0 == k {
                end += 1;
            }
            buckets.insert(k, (start as u32, end as u32));
            start = end;
        }
        let index: Vec<u32> = keyed.iter().map(|(_, i)| *i).collect();
        let sorted = index.iter().map(|&i| points[i as usize]).collect();
        PointGrid { points, cell, buckets, index, sorted }
    }

    fn bucket(&self, k: Key) -> Option<(&[u32], &[Vec3])> {
        self.buckets.get(&k).map(|&(a, b)| (&self.index[a as usize..b as usize], &self.sorted[a as usize..b as usize]))
    }

    /// Cell size giving about `per_cell` points per occupied cell of a
    /// sample with the given spread.
    pub fn cell_for(points: &[Vec3], per_cell: f64) -> f64 {
        let n = points.len().max(1) as f64;
        let mean = points.iter().fold(Vec3::ZERO, |a, p| a + *p) / n;
        let var = points.iter().map(|p| (*p - mean).norm_sq()).sum::<f64>() / (3.0 * n);
        let sd = var.sqrt().max(1e-12);
        // volume of the bulk ≈ (4 sd)³
        (per_cell / n).cbrt() * 4.0 * sd
    }

    /// Distances from point `i` to its `k` nearest other points, ascending.
    pub fn knn_distances(&self, i: usize, k: usize) -> Vec<f64> {
        assert!(k >= 1 && k < self.points.len(), "need 1 ≤ k < n");
        let p = self.points[i];
        let (cx, cy, cz) = key(p, self.cell);
        let mut best: Vec<f64> = Vec::with_capacity(k + 1);
        let push = |d: f64, best: &mut Vec<f64>| {
            if best.len() < k || d < best[k - 1] {
                let at = best.partition_point(|x| *x <= d);
                best.insert(at, d);
                best.truncate(k);
            }
        };
        for ring in 0..=MAX_RING {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    let edge = dx.abs() == ring || dy.abs() == ring;
                    let step = if edge || ring == 0 { 1 } else { (2 * ring) as usize };
                    for dz in (-ring..=ring).step_by(step) {
                        let Some((ids, pts)) = self.bucket((cx + dx, cy + dy, cz + dz)) else { continue };
                        for (&j, q) in ids.iter().zip(pts) {
                            if j as usize != i {
                                push((*q - p).norm(), &mut best);
                            }
                        }
                    }
                }
            }
            // Unvisited cells lie at least `ring · cell` away.
            if best.len() == k && best[k - 1] <= ring as f64 * self.cell {
                return best;
            }
        }
        // Isolated point: scan everything.
        best.clear();
        for (j, q) in self.points.iter().enumerate() {
            if j != i {
                push((*q - p).norm(), &mut best);
            }
        }
        best
    }

    /// Calls `f(j, x_j − p)` for every point within `radius` of `p`.
    pub fn for_each_within<F: FnMut(usize, Vec3)>(&self, p: Vec3, radius: f64, mut f: F) {
        let (cx, cy, cz) = key(p, self.cell);
        let reach = (radius / self.cell).ceil() as i64;
        let r2 = radius * radius;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    let Some((ids, pts)) = self.bucket((cx + dx, cy + dy, cz + dz)) else { continue };
                    for (&j, q) in ids.iter().zip(pts) {
                        let d = *q - p;
                        if d.norm_sq() <= r2 {
                            f(j as usize, d);
                        }
                    }
                }
            }
        }
    }
}

fn key(p: Vec3, cell: f64) -> Key {
    ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64)
}
