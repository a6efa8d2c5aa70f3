//! The file list written by `gen` and read by the dataset-level commands.

use std::path::{Path, PathBuf};

use raypet_core::{read_clip_file, Clip};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::sha256_file;

pub const MANIFEST_FORMAT: &str = "raypet-manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub file: String,
    pub session_id: String,
    pub label: String,
    /// Seed the clip was synthesized from.
    pub seed: u64,
    pub frames: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub generator: String,
    pub seed: u64,
    /// Resolved run config of the `gen` invocation.
    pub config: serde_json::Value,
    pub clips: Vec<ManifestEntry>,
    pub background: Option<ManifestEntry>,
}

/// Clips and background loaded from a manifest.
pub struct LoadedClips {
    pub clips: Vec<Clip>,
    pub background: Option<Clip>,
    pub manifest: Manifest,
    pub manifest_sha256: String,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: Manifest =
            serde_json::from_str(&text).map_err(|e| CliError::io(path, format!("not a manifest: {e}")))?;
        if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
            return Err(CliError::io(path, format!("unsupported manifest {} v{}", m.format, m.version)));
        }
        Ok(m)
    }
}

fn load_entry(dir: &Path, e: &ManifestEntry) -> Result<Clip, CliError> {
    let path: PathBuf = dir.join(&e.file);
    let digest = sha256_file(&path)?;
    if digest != e.sha256 {
        return Err(CliError::io(&path, "checksum does not match the manifest"));
    }
    read_clip_file(&path).map_err(|err| CliError::io(&path, err))
}

/// Reads every clip of the manifest at `path`. An explicit `background`
/// file replaces the manifest's own. A manifest without clips is a usage
/// error.
pub fn load_clips(path: &Path, background: Option<&Path>) -> Result<LoadedClips, CliError> {
    let manifest = Manifest::read(path)?;
    if manifest.clips.is_empty() {
        return Err(CliError::Usage(format!("{}: manifest lists no clips", path.display())));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let clips = manifest.clips.iter().map(|e| load_entry(dir, e)).collect::<Result<Vec<_>, _>>()?;
    let background = match background {
        Some(p) => Some(read_clip_file(p).map_err(|err| CliError::io(p, err))?),
        None => manifest.background.as_ref().map(|e| load_entry(dir, e)).transpose()?,
    };
    if let Some(b) = &background {
        if !b.is_background() {
            return Err(CliError::Usage(format!("background clip {:?} carries a label", b.session_id)));
        }
    }
    Ok(LoadedClips { clips, background, manifest_sha256: sha256_file(path)?, manifest })
}
