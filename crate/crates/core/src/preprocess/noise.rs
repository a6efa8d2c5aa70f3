//! Noise removal: empty-scene filtering, static clutter removal and DBSCAN
//! outlier removal.

use crate::pointcloud::{Frame, Point};

use super::spatial::SpatialHash;

/// Drops every point within `radius` (inclusive) of any reference point.
///
/// The reference is the pooled point set of an empty-scene recording.
pub fn background_filter(frame: &Frame, reference: &[Point], radius: f64) -> Frame {
    if reference.is_empty() || frame.is_empty() {
        return frame.clone();
    }
    let index = SpatialHash::new(reference, radius);
    frame.with_points(frame.points.iter().filter(|p| !index.any_within(p, radius)).copied().collect())
}

/// Same as [`background_filter`] over a sequence, building the reference
/// index once.
pub fn background_filter_all(frames: &[Frame], reference: &[Point], radius: f64) -> Vec<Frame> {
    if reference.is_empty() {
        return frames.to_vec();
    }
    let index = SpatialHash::new(reference, radius);
    frames
        .iter()
        .map(|f| f.with_points(f.points.iter().filter(|p| !index.any_within(p, radius)).copied().collect()))
        .collect()
}

/// Removes points that stay put: a point in frame `i` is dropped iff every
/// one of the `track_len - 1` following frames has a point within `delta` of
/// it. Frames with fewer than `track_len - 1` successors are left untouched.
pub fn static_clutter_removal(frames: &[Frame], delta: f64, track_len: usize) -> Vec<Frame> {
    let horizon = track_len.saturating_sub(1);
    if horizon == 0 {
        return frames.to_vec();
    }
    let indexes: Vec<SpatialHash<'_>> = frames.iter().map(|f| SpatialHash::new(&f.points, delta)).collect();
    frames
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            if i + horizon >= frames.len() {
                return frame.clone();
            }
            let successors = &indexes[i + 1..=i + horizon];
            frame.with_points(
                frame.points.iter().filter(|p| !successors.iter().all(|s| s.any_within(p, delta))).copied().collect(),
            )
        })
        .collect()
}

/// Point classes assigned by DBSCAN.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DbscanRole {
    Core,
    Border,
    Noise,
}

/// DBSCAN clustering over 3-D positions.
///
/// `min_points` counts the point itself. Returns the role of every point and
/// its cluster id (`None` for noise). Clusters are numbered in order of
/// their lowest-index core point.
pub fn dbscan(points: &[Point], eps: f64, min_points: usize) -> (Vec<DbscanRole>, Vec<Option<usize>>) {
    let n = points.len();
    let index = SpatialHash::new(points, eps);
    let neighbors: Vec<Vec<usize>> = points
        .iter()
        .map(|p| {
            let mut v = Vec::new();
            index.for_each_within(p, eps, |j| v.push(j));
            v.sort_unstable();
            v
        })
        .collect();
    let is_core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_points).collect();

    let mut cluster: Vec<Option<usize>> = vec![None; n];
    let mut next_id = 0;
    let mut stack = Vec::new();
    for seed in 0..n {
        if !is_core[seed] || cluster[seed].is_some() {
            continue;
        }
        let id = next_id;
        next_id += 1;
        cluster[seed] = Some(id);
        stack.push(seed);
        while let Some(p) = stack.pop() {
            for &q in &neighbors[p] {
                if cluster[q].is_none() {
                    cluster[q] = Some(id);
                    if is_core[q] {
                        stack.push(q);
                    }
                }
            }
        }
    }

    let roles = (0..n)
        .map(|i| match (is_core[i], cluster[i]) {
            (true, _) => DbscanRole::Core,
            (false, Some(_)) => DbscanRole::Border,
            (false, None) => DbscanRole::Noise,
        })
        .collect();
    (roles, cluster)
}

/// Removes exactly the DBSCAN noise points; every cluster is kept whatever
/// its size.
pub fn dbscan_denoise(frame: &Frame, eps: f64, min_points: usize) -> Frame {
    if frame.is_empty() {
        return frame.clone();
    }
    let (roles, _) = dbscan(&frame.points, eps, min_points);
    frame
        .with_points(frame.points.iter().zip(roles).filter(|(_, r)| *r != DbscanRole::Noise).map(|(p, _)| *p).collect())
}
