//! Radar point clouds of a pet: sensor geometry, clip storage, a synthetic
//! scene generator and the preprocessing chain that turns clips into
//! windows of voxel grids.

pub mod clipio;
pub mod dataset;
pub mod pointcloud;
pub mod preprocess;
pub mod radar;
pub mod synth;

pub use clipio::{read_clip, read_clip_file, write_clip, write_clip_file, ClipIoError};
pub use dataset::{Dataset, DatasetError};
pub use pointcloud::{ActivityLabel, Clip, Frame, Point};
pub use preprocess::{run_pipeline, PipelineConfig, PipelineError, VoxelDims, VoxelGrid, WindowSample};
pub use radar::RadarConfig;
