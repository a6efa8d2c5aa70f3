//! Frame aggregation and sliding windows.

use crate::pointcloud::{ActivityLabel, Frame};

use super::voxel::VoxelGrid;

/// Concatenates disjoint groups of `k` consecutive frames. A trailing group
/// shorter than `k` is dropped. Output frames are renumbered from 0 and keep
/// the timestamp of their group's first frame, so their frame duration is
/// `k` times the input one.
pub fn aggregate_frames(frames: &[Frame], k: usize) -> Vec<Frame> {
    assert!(k >= 1, "aggregation factor must be at least 1");
    frames
        .chunks_exact(k)
        .enumerate()
        .map(|(i, group)| {
            let points = group.iter().flat_map(|f| f.points.iter().copied()).collect();
            Frame::new(i, group[0].timestamp, points)
        })
        .collect()
}

/// `W` consecutive voxel grids from one session.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub grids: Vec<VoxelGrid>,
    pub label: ActivityLabel,
    pub session_id: String,
    /// Index of the first grid in the session's grid sequence.
    pub start_frame: usize,
}

impl WindowSample {
    pub fn window(&self) -> usize {
        self.grids.len()
    }
}

/// Number of windows [`make_windows`] yields for `n` grids.
pub fn window_count(n: usize, window: usize, slide: usize) -> usize {
    if window == 0 || slide == 0 || n < window {
        0
    } else {
        (n - window) / slide + 1
    }
}

/// Windows of `window` grids starting at 0, `slide`, `2 slide`, ...
pub fn make_windows(
    grids: &[VoxelGrid],
    label: ActivityLabel,
    session_id: &str,
    window: usize,
    slide: usize,
) -> Vec<WindowSample> {
    assert!(window >= 1 && slide >= 1 && slide <= window, "invalid window/slide {window}/{slide}");
    (0..window_count(grids.len(), window, slide))
        .map(|i| {
            let start = i * slide;
            WindowSample {
                grids: grids[start..start + window].to_vec(),
                label,
                session_id: session_id.to_owned(),
                start_frame: grids[start].source_frame_index,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::Point;
    use crate::preprocess::voxel::VoxelDims;
    use proptest::prelude::*;

    fn frames(counts: &[usize]) -> Vec<Frame> {
        counts
            .iter()
            .enumerate()
            .map(|(i, &n)| Frame::new(i, i as f64 * 0.1, (0..n).map(|k| Point::at(k as f64, i as f64, 0.0)).collect()))
            .collect()
    }

    fn grids(n: usize) -> Vec<VoxelGrid> {
        (0..n).map(|i| VoxelGrid::zeros(VoxelDims::new(1, 1, 1), i)).collect()
    }

    #[test]
    fn two_frames_merge() {
        let out = aggregate_frames(&frames(&[12, 7]), 2);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].len(), 19);
    }

    #[test]
    fn remainder_dropped() {
        let f = frames(&[1, 2, 3, 4, 5]);
        let out = aggregate_frames(&f, 2);
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].len(), 7);
        assert_eq!(out[1].index, 1);
        assert!((out[1].timestamp - 0.2).abs() < 1e-12);
    }

    #[test]
    fn k1_is_identity() {
        let f = frames(&[3, 0, 2]);
        assert_eq!(aggregate_frames(&f, 1), f);
    }

    #[test]
    fn window_examples() {
        assert_eq!(make_windows(&grids(150), ActivityLabel::Eating, "s", 30, 10).len(), 13);
        assert_eq!(make_windows(&grids(30), ActivityLabel::Eating, "s", 30, 10).len(), 1);
        assert!(make_windows(&grids(29), ActivityLabel::Eating, "s", 30, 10).is_empty());
        let w = make_windows(&grids(50), ActivityLabel::Lying, "s", 20, 4);
        assert_eq!(w[2].start_frame, 8);
        assert_eq!(w[2].grids.len(), 20);
        assert_eq!(w[2].grids[19].source_frame_index, 27);
    }

    proptest! {
        #[test]
        fn window_count_formula((n, w, sw) in (1usize..200).prop_flat_map(|n| (Just(n), 1..=n))
            .prop_flat_map(|(n, w)| (Just(n), Just(w), 1..=w))) {
            let out = make_windows(&grids(n), ActivityLabel::Sitting, "s", w, sw);
            prop_assert_eq!(out.len(), (n - w) / sw + 1);
            for (i, s) in out.iter().enumerate() {
                prop_assert_eq!(s.start_frame, i * sw);
                for (j, g) in s.grids.iter().enumerate() {
                    prop_assert_eq!(g.source_frame_index, s.start_frame + j);
                }
            }
        }

        #[test]
        fn aggregation_count(n in 0usize..60, k in 1usize..8) {
            let f = frames(&vec![1; n]);
            let out = aggregate_frames(&f, k);
            prop_assert_eq!(out.len(), n / k);
            prop_assert!(out.iter().all(|g| g.len() == k));
        }
    }
}
