use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::CodecError;

/// Encoder output `z_e` of shape `c x h x w`, stored as `h * w` vectors of
/// length `c` in raster order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentGrid<T> {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<T>,
}

impl<T: Scalar> LatentGrid<T> {
    pub fn new(channels: usize, height: usize, width: usize, values: Vec<T>) -> Result<Self, CodecError> {
        if channels == 0 || height * width == 0 || values.len() != channels * height * width {
            return Err(CodecError::DimensionMismatch(format!(
                "latent grid {channels}x{height}x{width} cannot hold {} values",
                values.len()
            )));
        }
        Ok(Self { channels, height, width, values })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn vectors(&self) -> std::slice::ChunksExact<'_, T> {
        self.values.chunks_exact(self.channels)
    }

    pub fn vector(&self, j: usize) -> &[T] {
        &self.values[j * self.channels..(j + 1) * self.channels]
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Codeword indices `s^j` for every latent position, tied to one codebook.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMap {
    pub height: usize,
    pub width: usize,
    /// Zero-based indices; values received over a noisy channel may exceed
    /// the codebook size and are saturated at decode time.
    pub indices: Vec<u32>,
    pub codebook_id: u32,
}

impl IndexMap {
    pub fn new(height: usize, width: usize, indices: Vec<u32>, codebook_id: u32) -> Result<Self, CodecError> {
        if indices.len() != height * width {
            return Err(CodecError::DimensionMismatch(format!("{} indices for a {height}x{width} grid", indices.len())));
        }
        Ok(Self { height, width, indices, codebook_id })
    }
}
