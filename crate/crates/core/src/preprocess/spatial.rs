//! Uniform-grid spatial hash for fixed-radius neighbor queries.

use std::collections::HashMap;

use crate::pointcloud::Point;

pub(crate) struct SpatialHash<'a> {
    points: &'a [Point],
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl<'a> SpatialHash<'a> {
    /// `radius` is the largest query radius the hash will be asked for.
    pub fn new(points: &'a [Point], radius: f64) -> Self {
        // Slightly larger than the radius so rounding in the division never
        // pushes a true neighbor two cells away.
        let cell = radius.max(1e-9) * (1.0 + 1e-9);
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(key(p, cell)).or_default().push(i);
        }
        Self { points, cell, buckets }
    }

    /// Calls `f` with the index of every point within `radius` of `q`
    /// (inclusive). Order is bucket order, not index order.
    pub fn for_each_within(&self, q: &Point, radius: f64, mut f: impl FnMut(usize)) {
        let r2 = radius * radius;
        let [cx, cy, cz] = key(q, self.cell);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = self.buckets.get(&[cx + dx, cy + dy, cz + dz]) {
                        for &i in bucket {
                            if self.points[i].distance_sq(q) <= r2 {
                                f(i);
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn any_within(&self, q: &Point, radius: f64) -> bool {
        let r2 = radius * radius;
        let [cx, cy, cz] = key(q, self.cell);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = self.buckets.get(&[cx + dx, cy + dy, cz + dz]) {
                        if bucket.iter().any(|&i| self.points[i].distance_sq(q) <= r2) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

fn key(p: &Point, cell: f64) -> [i64; 3] {
    [(p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_linear_scan() {
        let pts: Vec<Point> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.37;
                Point::at(t.sin(), (1.7 * t).cos() + 1.0, (0.3 * t).sin() * 0.5)
            })
            .collect();
        let hash = SpatialHash::new(&pts, 0.4);
        for q in &pts {
            let mut got = Vec::new();
            hash.for_each_within(q, 0.4, |i| got.push(i));
            got.sort_unstable();
            let want: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].distance_sq(q) <= 0.16).collect();
            assert_eq!(got, want);
            assert!(hash.any_within(q, 0.4));
        }
    }
}
