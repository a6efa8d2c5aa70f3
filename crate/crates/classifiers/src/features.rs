use raypet_core::preprocess::{VoxelDims, VoxelGrid, WindowSample};

use crate::ClassifierError;

/// Voxel counts of every grid, concatenated: row-major over
/// `(window, z, x, y)`, length `W * m * n * p`.
pub fn flatten_features(sample: &WindowSample) -> Vec<f64> {
    sample.grids.iter().flat_map(|g| g.counts.iter().map(|&c| f64::from(c))).collect()
}

/// Inverse of [`flatten_features`]. Grids get source indices `0..window`.
pub fn unflatten_features(values: &[f64], dims: VoxelDims, window: usize) -> Result<Vec<VoxelGrid>, ClassifierError> {
    if values.len() != dims.len() * window {
        return Err(ClassifierError::Shape(format!(
            "{} values cannot hold {window} grids of {}x{}x{}",
            values.len(),
            dims.m,
            dims.n,
            dims.p
        )));
    }
    Ok(values
        .chunks(dims.len().max(1))
        .take(window)
        .enumerate()
        .map(|(i, c)| VoxelGrid { dims, counts: c.iter().map(|&v| v as u32).collect(), source_frame_index: i })
        .collect())
}

/// What every classifier actually sees: `ln(1 + count)` per voxel, which
/// keeps aggregated frames from dominating by sheer point count.
pub fn model_input(sample: &WindowSample) -> Vec<f64> {
    sample.grids.iter().flat_map(|g| g.counts.iter().map(|&c| f64::from(c).ln_1p())).collect()
}

/// Checks that a sample has the grid shape a model was trained on.
pub fn check_sample(sample: &WindowSample, dims: VoxelDims, window: usize) -> Result<(), ClassifierError> {
    if sample.grids.len() != window {
        return Err(ClassifierError::Shape(format!("expected {window} grids per window, got {}", sample.grids.len())));
    }
    if let Some(g) = sample.grids.iter().find(|g| g.dims != dims || g.counts.len() != dims.len()) {
        return Err(ClassifierError::Shape(format!(
            "expected {}x{}x{} grids, got {}x{}x{}",
            dims.m, dims.n, dims.p, g.dims.m, g.dims.n, g.dims.p
        )));
    }
    Ok(())
}
