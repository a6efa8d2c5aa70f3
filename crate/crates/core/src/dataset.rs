//! Preprocessed window datasets and their binary file format.
//!
//! Layout, little endian throughout:
//!
//! ```text
//! b"RPDS" | u32 version | u64 header_len | header JSON
//! per sample: u16 id_len | id bytes | u8 label | u32 start_frame
//!             per grid: u32 nonzero | nonzero x (u32 offset, u32 count)
//! ```
//!
//! The JSON header carries the pipeline config, the sample count and free
//! provenance. Grids are stored sparsely; most voxels are empty.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pointcloud::{ActivityLabel, Clip};
use crate::preprocess::{run_pipeline, PipelineConfig, PipelineError, VoxelDims, VoxelGrid, WindowSample};

pub const MAGIC: &[u8; 4] = b"RPDS";
pub const FORMAT_VERSION: u32 = 1;
pub const DATASET_EXTENSION: &str = "rpds";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("I/O error: {0}")]
    Stream(#[from] std::io::Error),
    #[error("malformed dataset: {0}")]
    Format(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl DatasetError {
    fn with_path(self, path: &Path) -> Self {
        match self {
            DatasetError::Stream(source) => DatasetError::Io { path: path.to_owned(), source },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    sample_count: usize,
    pipeline: PipelineConfig,
    provenance: serde_json::Value,
}

/// Windows produced by one pipeline config.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub pipeline: PipelineConfig,
    /// Free-form record of where the samples came from.
    pub provenance: serde_json::Value,
    pub samples: Vec<WindowSample>,
}

impl Dataset {
    /// Runs the pipeline over every labeled clip, in clip order.
    pub fn build(clips: &[Clip], background: Option<&Clip>, pipeline: &PipelineConfig) -> Result<Self, PipelineError> {
        pipeline.validate()?;
        let per_clip: Vec<Vec<WindowSample>> =
            clips.par_iter().map(|c| run_pipeline(c, background, pipeline)).collect::<Result<_, _>>()?;
        Ok(Self {
            pipeline: pipeline.clone(),
            provenance: serde_json::json!({ "clips": clips.len() }),
            samples: per_clip.into_iter().flatten().collect(),
        })
    }

    pub fn dims(&self) -> VoxelDims {
        self.pipeline.voxel_dims
    }

    pub fn window(&self) -> usize {
        self.pipeline.window_size
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples per class, in label order.
    pub fn class_counts(&self) -> [usize; ActivityLabel::COUNT] {
        let mut out = [0; ActivityLabel::COUNT];
        for s in &self.samples {
            out[s.label.index()] += 1;
        }
        out
    }

    pub fn write<W: Write>(&self, sink: W) -> Result<(), DatasetError> {
        let mut out = BufWriter::new(sink);
        let header = Header {
            format_version: FORMAT_VERSION,
            sample_count: self.samples.len(),
            pipeline: self.pipeline.clone(),
            provenance: self.provenance.clone(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| DatasetError::Format(e.to_string()))?;
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&(json.len() as u64).to_le_bytes())?;
        out.write_all(&json)?;
        let dims = self.dims();
        for s in &self.samples {
            if s.grids.len() != self.window() || s.grids.iter().any(|g| g.dims != dims) {
                return Err(DatasetError::Format(format!(
                    "sample {}@{} does not match the dataset's window and grid dims",
                    s.session_id, s.start_frame
                )));
            }
            let id = s.session_id.as_bytes();
            let id_len = u16::try_from(id.len()).map_err(|_| DatasetError::Format("session id too long".into()))?;
            out.write_all(&id_len.to_le_bytes())?;
            out.write_all(id)?;
            out.write_all(&[s.label.index() as u8])?;
            out.write_all(&u32_of(s.start_frame)?.to_le_bytes())?;
            for g in &s.grids {
                let nz: Vec<(usize, u32)> = g.counts.iter().copied().enumerate().filter(|&(_, c)| c != 0).collect();
                out.write_all(&u32_of(nz.len())?.to_le_bytes())?;
                for (i, c) in nz {
                    out.write_all(&u32_of(i)?.to_le_bytes())?;
                    out.write_all(&c.to_le_bytes())?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(source: R) -> Result<Self, DatasetError> {
        let mut r = BufReader::new(source);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(DatasetError::Format("bad magic, not a dataset file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(DatasetError::Format(format!("unsupported format version {version}")));
        }
        let header_len = read_u64(&mut r)?;
        if header_len > 1 << 24 {
            return Err(DatasetError::Format(format!("header length {header_len} is implausible")));
        }
        let mut json = vec![0u8; header_len as usize];
        r.read_exact(&mut json)?;
        let header: Header = serde_json::from_slice(&json).map_err(|e| DatasetError::Format(format!("header: {e}")))?;
        header.pipeline.validate()?;
        let dims = header.pipeline.voxel_dims;
        let window = header.pipeline.window_size;
        let cells = dims.len();

        let mut samples = Vec::with_capacity(header.sample_count.min(1 << 16));
        for k in 0..header.sample_count {
            let mut len = [0u8; 2];
            r.read_exact(&mut len)?;
            let mut id = vec![0u8; u16::from_le_bytes(len) as usize];
            r.read_exact(&mut id)?;
            let session_id = String::from_utf8(id)
                .map_err(|_| DatasetError::Format(format!("sample {k}: session id is not UTF-8")))?;
            let mut label = [0u8; 1];
            r.read_exact(&mut label)?;
            let label = ActivityLabel::from_index(label[0] as usize)
                .ok_or_else(|| DatasetError::Format(format!("sample {k}: label code {}", label[0])))?;
            let start_frame = read_u32(&mut r)? as usize;
            let mut grids = Vec::with_capacity(window);
            for j in 0..window {
                let mut g = VoxelGrid::zeros(dims, start_frame + j);
                let nz = read_u32(&mut r)? as usize;
                if nz > cells {
                    return Err(DatasetError::Format(format!("sample {k}: {nz} nonzero cells in a {cells}-cell grid")));
                }
                for _ in 0..nz {
                    let i = read_u32(&mut r)? as usize;
                    let c = read_u32(&mut r)?;
                    if i >= cells {
                        return Err(DatasetError::Format(format!("sample {k}: cell offset {i} out of range")));
                    }
                    g.counts[i] = c;
                }
                grids.push(g);
            }
            samples.push(WindowSample { grids, label, session_id, start_frame });
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(DatasetError::Format("trailing bytes after the last sample".into()));
        }
        Ok(Self { pipeline: header.pipeline, provenance: header.provenance, samples })
    }

    /// Writes to a temporary sibling, then renames over `path`.
    pub fn write_file(&self, path: &Path) -> Result<(), DatasetError> {
        let tmp = path.with_extension("rpds.tmp");
        let io = |source| DatasetError::Io { path: path.to_owned(), source };
        let file = File::create(&tmp).map_err(io)?;
        if let Err(e) = self.write(file) {
            let _ = std::fs::remove_file(&tmp);
            return Err(e.with_path(path));
        }
        std::fs::rename(&tmp, path).map_err(io)
    }

    pub fn read_file(path: &Path) -> Result<Self, DatasetError> {
        let file = File::open(path).map_err(|source| DatasetError::Io { path: path.to_owned(), source })?;
        Self::read(file).map_err(|e| e.with_path(path))
    }
}

fn u32_of(v: usize) -> Result<u32, DatasetError> {
    u32::try_from(v).map_err(|_| DatasetError::Format(format!("{v} does not fit in u32")))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, DatasetError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, DatasetError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
