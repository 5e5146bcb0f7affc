//! Frame and video containers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum TensorError {
    #[error("frame dimensions must be non-zero, got {height}x{width}x{channels}")]
    EmptyFrame { height: usize, width: usize, channels: usize },
    #[error("expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("sample {index} is outside [0, 1] or not finite")]
    OutOfRange { index: usize },
    #[error("video has no frames")]
    EmptyVideo,
    #[error("frame {index} has shape {actual:?}, expected {expected:?}")]
    ShapeMismatch { index: usize, expected: (usize, usize, usize), actual: (usize, usize, usize) },
    #[error("fps must be positive and finite")]
    InvalidFps,
}

/// An `H x W x D` image with samples in `[0, 1]`, stored row-major with
/// interleaved channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTensor<T> {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Scalar> FrameTensor<T> {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<T>) -> Result<Self, TensorError> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(TensorError::EmptyFrame { height, width, channels });
        }
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(TensorError::LengthMismatch { expected, actual: data.len() });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite() || *v < T::zero() || *v > T::one()) {
            return Err(TensorError::OutOfRange { index });
        }
        Ok(Self { height, width, channels, data })
    }

    /// Builds a frame, clamping every sample into `[0, 1]` (NaN becomes 0).
    pub fn from_clamped(height: usize, width: usize, channels: usize, mut data: Vec<T>) -> Result<Self, TensorError> {
        for v in &mut data {
            *v = clamp_unit(*v);
        }
        Self::new(height, width, channels, data)
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        assert!(height * width * channels > 0, "empty frame");
        Self { height, width, channels, data: vec![T::zero(); height * width * channels] }
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: T) -> Self {
        let mut f = Self::zeros(height, width, channels);
        let v = clamp_unit(value);
        f.data.iter_mut().for_each(|x| *x = v);
        f
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> T {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Converts between scalar types.
    pub fn cast<U: Scalar>(&self) -> FrameTensor<U> {
        FrameTensor {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|v| clamp_unit(U::lit(v.as_f64()))).collect(),
        }
    }
}

pub(crate) fn clamp_unit<T: Scalar>(v: T) -> T {
    if v.is_nan() {
        T::zero()
    } else {
        v.max(T::zero()).min(T::one())
    }
}

/// A frame sequence `v_1 .. v_n` sharing one shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoTensor<T> {
    frames: Vec<FrameTensor<T>>,
    fps: f64,
}

impl<T: Scalar> VideoTensor<T> {
    pub fn new(frames: Vec<FrameTensor<T>>, fps: f64) -> Result<Self, TensorError> {
        let first = frames.first().ok_or(TensorError::EmptyVideo)?.shape();
        if !(fps.is_finite() && fps > 0.0) {
            return Err(TensorError::InvalidFps);
        }
        for (index, f) in frames.iter().enumerate() {
            if f.shape() != first {
                return Err(TensorError::ShapeMismatch { index, expected: first, actual: f.shape() });
            }
        }
        Ok(Self { frames, fps })
    }

    pub fn frames(&self) -> &[FrameTensor<T>] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<FrameTensor<T>> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frame_shape(&self) -> (usize, usize, usize) {
        self.frames[0].shape()
    }

    /// Copies the frames at `indices` into a new video.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, TensorError> {
        let frames = indices.iter().map(|&i| self.frames[i].clone()).collect();
        Self::new(frames, self.fps)
    }
}
