//! Fixed-size voxel grids.
//!
//! Grid dims are `(m, n, p)` along `(z, x, y)`: the coarse first axis is the
//! vertical one. Counts are stored row-major in that axis order.

use serde::{Deserialize, Serialize};

use crate::pointcloud::{Frame, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoxelDims {
    /// Cells along z.
    pub m: usize,
    /// Cells along x.
    pub n: usize,
    /// Cells along y.
    pub p: usize,
}

impl VoxelDims {
    pub const fn new(m: usize, n: usize, p: usize) -> Self {
        Self { m, n, p }
    }

    pub fn len(&self) -> usize {
        self.m * self.n * self.p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn offset(&self, iz: usize, ix: usize, iy: usize) -> usize {
        (iz * self.n + ix) * self.p + iy
    }
}

impl Default for VoxelDims {
    fn default() -> Self {
        Self::new(10, 32, 32)
    }
}

/// Closed interval `[lo, hi]` in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
}

impl AxisRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.hi > self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    /// Cell index of `v` among `cells` equal cells, or `None` when outside.
    /// `v == hi` falls in the last cell.
    pub fn bin(&self, v: f64, cells: usize) -> Option<usize> {
        if !self.contains(v) {
            return None;
        }
        let width = (self.hi - self.lo) / cells as f64;
        let i = ((v - self.lo) / width).floor() as usize;
        Some(i.min(cells - 1))
    }
}

/// Axis-aligned box in the radar frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoxelBounds {
    pub x: AxisRange,
    pub y: AxisRange,
    pub z: AxisRange,
}

impl VoxelBounds {
    pub fn is_valid(&self) -> bool {
        self.x.is_valid() && self.y.is_valid() && self.z.is_valid()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.x.contains(p.x) && self.y.contains(p.y) && self.z.contains(p.z)
    }

    pub fn center(&self) -> [f64; 3] {
        [0.5 * (self.x.lo + self.x.hi), 0.5 * (self.y.lo + self.y.hi), 0.5 * (self.z.lo + self.z.hi)]
    }
}

impl Default for VoxelBounds {
    fn default() -> Self {
        Self { x: AxisRange::new(-1.0, 1.0), y: AxisRange::new(0.3, 2.3), z: AxisRange::new(-0.6, 0.4) }
    }
}

/// What a voxel stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoxelValue {
    /// Number of points in the cell.
    #[default]
    Count,
    /// 1 if any point falls in the cell.
    Binary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelGrid {
    pub dims: VoxelDims,
    pub counts: Vec<u32>,
    pub source_frame_index: usize,
}

impl VoxelGrid {
    pub fn zeros(dims: VoxelDims, source_frame_index: usize) -> Self {
        Self { dims, counts: vec![0; dims.len()], source_frame_index }
    }

    pub fn get(&self, iz: usize, ix: usize, iy: usize) -> u32 {
        self.counts[self.dims.offset(iz, ix, iy)]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Cell of `p` in the grid, or `None` when `p` lies outside `bounds`.
pub fn voxel_index(p: &Point, dims: VoxelDims, bounds: &VoxelBounds) -> Option<usize> {
    let iz = bounds.z.bin(p.z, dims.m)?;
    let ix = bounds.x.bin(p.x, dims.n)?;
    let iy = bounds.y.bin(p.y, dims.p)?;
    Some(dims.offset(iz, ix, iy))
}

/// Bins a frame's points by position. Out-of-bounds points are dropped.
pub fn voxelize(frame: &Frame, dims: VoxelDims, bounds: &VoxelBounds) -> VoxelGrid {
    voxelize_with(frame, dims, bounds, VoxelValue::Count)
}

pub fn voxelize_with(frame: &Frame, dims: VoxelDims, bounds: &VoxelBounds, value: VoxelValue) -> VoxelGrid {
    let mut grid = VoxelGrid::zeros(dims, frame.index);
    for p in &frame.points {
        if let Some(i) = voxel_index(p, dims, bounds) {
            grid.counts[i] += 1;
        }
    }
    if value == VoxelValue::Binary {
        for c in &mut grid.counts {
            *c = (*c).min(1);
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Counts points per cell by testing each cell's box directly.
    fn oracle(points: &[Point], dims: VoxelDims, b: &VoxelBounds) -> Vec<u32> {
        let edges = |r: &AxisRange, cells: usize, i: usize| {
            let w = (r.hi - r.lo) / cells as f64;
            (r.lo + i as f64 * w, r.lo + (i + 1) as f64 * w, i + 1 == cells)
        };
        let inside = |v: f64, (lo, hi, last): (f64, f64, bool)| v >= lo && (v < hi || (last && v <= hi));
        let mut out = Vec::new();
        for iz in 0..dims.m {
            for ix in 0..dims.n {
                for iy in 0..dims.p {
                    let c = points
                        .iter()
                        .filter(|p| {
                            inside(p.z, edges(&b.z, dims.m, iz))
                                && inside(p.x, edges(&b.x, dims.n, ix))
                                && inside(p.y, edges(&b.y, dims.p, iy))
                        })
                        .count();
                    out.push(c as u32);
                }
            }
        }
        out
    }

    #[test]
    fn empty_frame_gives_zero_grid() {
        let g = voxelize(&Frame::default(), VoxelDims::default(), &VoxelBounds::default());
        assert_eq!(g.counts.len(), 10 * 32 * 32);
        assert_eq!(g.total(), 0);
    }

    #[test]
    fn center_point_hits_one_voxel() {
        let b = VoxelBounds::default();
        let [x, y, z] = b.center();
        let g = voxelize(&Frame::new(3, 0.0, vec![Point::at(x, y, z)]), VoxelDims::default(), &b);
        assert_eq!(g.total(), 1);
        assert_eq!(g.counts.iter().filter(|&&c| c == 1).count(), 1);
        assert_eq!(g.source_frame_index, 3);
    }

    #[test]
    fn upper_edge_clamps_and_outside_drops() {
        let b = VoxelBounds::default();
        let dims = VoxelDims::new(4, 8, 8);
        let pts = vec![Point::at(1.0, 2.3, 0.4), Point::at(1.0001, 1.0, 0.0), Point::at(-1.0, 0.3, -0.6)];
        let g = voxelize(&Frame::new(0, 0.0, pts), dims, &b);
        assert_eq!(g.total(), 2);
        assert_eq!(g.get(3, 7, 7), 1);
        assert_eq!(g.get(0, 0, 0), 1);
    }

    #[test]
    fn binary_mode_caps_at_one() {
        let b = VoxelBounds::default();
        let pts = vec![Point::at(0.0, 1.0, 0.0); 4];
        let g = voxelize_with(&Frame::new(0, 0.0, pts), VoxelDims::new(2, 2, 2), &b, VoxelValue::Binary);
        assert_eq!(g.total(), 1);
    }

    #[test]
    fn random_points_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = VoxelBounds::default();
        for dims in [VoxelDims::new(10, 32, 32), VoxelDims::new(4, 8, 8), VoxelDims::new(3, 5, 7)] {
            let pts: Vec<Point> = (0..100)
                .map(|_| {
                    Point::at(
                        rng.random_range(b.x.lo..b.x.hi),
                        rng.random_range(b.y.lo..b.y.hi),
                        rng.random_range(b.z.lo..b.z.hi),
                    )
                })
                .collect();
            let g = voxelize(&Frame::new(0, 0.0, pts.clone()), dims, &b);
            assert_eq!(g.total(), 100);
            assert_eq!(g.counts, oracle(&pts, dims, &b));
        }
    }
}
