//! Frame-sequence input: a directory holding `manifest.json` and PPM (P6) frames.

use std::fs;
use std::path::{Path, PathBuf};

use mirage_core::ppm::{decode_ppm, encode_ppm};
use mirage_core::tensor::{FrameTensor, VideoTensor};
use mirage_core::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::output::write_atomic;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing manifest: {0}")]
    MissingManifest(PathBuf),
    #[error("malformed manifest {path}: {reason}")]
    MalformedManifest { path: PathBuf, reason: String },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("unreadable frame {path}: {reason}")]
    UnreadableFrame { path: PathBuf, reason: String },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

/// Contents of `manifest.json`. Frame paths are relative to the directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub fps: f64,
    pub frame_count: usize,
    pub frames: Vec<String>,
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Self, IngestError> {
        let path = dir.join(MANIFEST_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(IngestError::MissingManifest(path)),
            Err(e) => return Err(IngestError::MalformedManifest { path, reason: e.to_string() }),
        };
        serde_json::from_str(&text).map_err(|e| IngestError::MalformedManifest { path, reason: e.to_string() })
    }

    fn check(&self, dir: &Path) -> Result<(), IngestError> {
        if self.channels != 3 {
            return Err(IngestError::DimMismatch(format!("PPM frames have 3 channels, manifest says {}", self.channels)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(IngestError::DimMismatch("frame size must be positive".into()));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(IngestError::MalformedManifest { path: dir.join(MANIFEST_FILE), reason: "fps must be positive".into() });
        }
        let present = self.frames.iter().filter(|f| dir.join(f).is_file()).count();
        if self.frame_count != self.frames.len() || self.frame_count != present {
            return Err(IngestError::DimMismatch(format!(
                "manifest declares {} frames, lists {}, {} present",
                self.frame_count,
                self.frames.len(),
                present
            )));
        }
        if self.frame_count == 0 {
            return Err(IngestError::DimMismatch("manifest lists no frames".into()));
        }
        Ok(())
    }
}

/// Loads the frames listed in `dir/manifest.json`, in manifest order, scaled
/// to `[0, 1]`.
pub fn ingest<T: Scalar>(dir: &Path) -> Result<VideoTensor<T>, IngestError> {
    let manifest = RunManifest::read(dir)?;
    manifest.check(dir)?;
    let mut frames = Vec::with_capacity(manifest.frame_count);
    for name in &manifest.frames {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| IngestError::UnreadableFrame { path: path.clone(), reason: e.to_string() })?;
        let frame: FrameTensor<T> =
            decode_ppm(&bytes).map_err(|e| IngestError::UnreadableFrame { path: path.clone(), reason: e.to_string() })?;
        if frame.height() != manifest.height || frame.width() != manifest.width {
            return Err(IngestError::DimMismatch(format!(
                "{} is {}x{}, manifest says {}x{}",
                path.display(),
                frame.width(),
                frame.height(),
                manifest.width,
                manifest.height
            )));
        }
        frames.push(frame);
    }
    VideoTensor::new(frames, manifest.fps).map_err(|e| IngestError::DimMismatch(e.to_string()))
}

/// Writes `video` as `frame_NNNN.ppm` files plus a manifest that [`ingest`]
/// reads back.
pub fn export<T: Scalar>(video: &VideoTensor<T>, dir: &Path) -> Result<RunManifest, IngestError> {
    let (height, width, channels) = video.frame_shape();
    let mut names = Vec::with_capacity(video.len());
    for (i, frame) in video.frames().iter().enumerate() {
        let name = format!("frame_{i:04}.ppm");
        let path = dir.join(&name);
        let bytes = encode_ppm(frame).map_err(|e| IngestError::UnreadableFrame { path: path.clone(), reason: e.to_string() })?;
        write_atomic(&path, &bytes).map_err(|source| IngestError::Write { path, source })?;
        names.push(name);
    }
    let manifest = RunManifest { width, height, channels, fps: video.fps(), frame_count: names.len(), frames: names };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&path, &json).map_err(|source| IngestError::Write { path, source })?;
    Ok(manifest)
}
