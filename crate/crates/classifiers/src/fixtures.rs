//! Synthetic window sets with known structure, for tests and smoke runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raypet_core::preprocess::{VoxelDims, VoxelGrid, WindowSample};
use raypet_core::ActivityLabel;

/// Five linearly separable classes. Class `k` fills the `(z, x)` column
/// block `(k / n, k % n)` with counts 3..=6 in every grid of the window; a
/// few stray single counts land elsewhere. Every sample is its own session.
///
/// Needs `m * n >= 5`.
pub fn separable_toy(per_class: usize, dims: VoxelDims, window: usize, seed: u64) -> Vec<WindowSample> {
    assert!(dims.m * dims.n >= ActivityLabel::COUNT, "grid too small for five blocks");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(per_class * ActivityLabel::COUNT);
    for label in ActivityLabel::ALL {
        let k = label.index();
        let (bz, bx) = (k / dims.n, k % dims.n);
        for i in 0..per_class {
            let grids = (0..window)
                .map(|w| {
                    let mut g = VoxelGrid::zeros(dims, w);
                    for iy in 0..dims.p {
                        g.counts[dims.offset(bz, bx, iy)] = rng.random_range(3..=6);
                    }
                    for _ in 0..2 {
                        let cell = rng.random_range(0..dims.len());
                        if g.counts[cell] == 0 {
                            g.counts[cell] = 1;
                        }
                    }
                    g
                })
                .collect();
            out.push(WindowSample { grids, label, session_id: format!("toy-{label}-{i:03}"), start_frame: 0 });
        }
    }
    out
}
