use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::tensor::{FrameTensor, TensorError};

use super::latent::LatentGrid;
use super::CodecError;

/// `y = W x + b` with `W` stored row-major as `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> AffineMap<T> {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self { in_dim, out_dim, weights: vec![T::zero(); in_dim * out_dim], bias: vec![T::zero(); out_dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.weights[i * dim + i] = T::one();
        }
        m
    }

    /// Gaussian weights with standard deviation `std`, zero bias.
    pub fn random<R: Rng>(in_dim: usize, out_dim: usize, std: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, std).expect("finite std");
        let weights = (0..in_dim * out_dim).map(|_| T::lit(normal.sample(rng))).collect();
        Self { in_dim, out_dim, weights, bias: vec![T::zero(); out_dim] }
    }

    pub fn apply_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.in_dim);
        debug_assert_eq!(out.len(), self.out_dim);
        for (o, (row, b)) in out.iter_mut().zip(self.weights.chunks_exact(self.in_dim).zip(&self.bias)) {
            *o = row.iter().zip(x).fold(*b, |acc, (w, v)| acc + *w * *v);
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.out_dim];
        self.apply_into(x, &mut out);
        out
    }

    /// `W^T g`: gradient with respect to the input given output gradient `g`.
    pub fn backprop_input(&self, g: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.in_dim];
        for (row, gi) in self.weights.chunks_exact(self.in_dim).zip(g) {
            for (o, w) in out.iter_mut().zip(row) {
                *o = *o + *w * *gi;
            }
        }
        out
    }

    /// Accumulates `g x^T` into `grad.weights` and `g` into `grad.bias`.
    pub fn accumulate_grad(grad: &mut Self, x: &[T], g: &[T]) {
        let in_dim = grad.in_dim;
        for ((row, gb), gi) in grad.weights.chunks_exact_mut(in_dim).zip(grad.bias.iter_mut()).zip(g) {
            *gb = *gb + *gi;
            for (w, v) in row.iter_mut().zip(x) {
                *w = *w + *gi * *v;
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn cast<U: Scalar>(&self) -> AffineMap<U> {
        AffineMap {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            weights: self.weights.iter().map(|v| U::lit(v.as_f64())).collect(),
            bias: self.bias.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

/// Splits a frame into non-overlapping `patch x patch` tiles, each flattened
/// row-major with interleaved channels. Tiles are returned in raster order.
pub fn extract_patches<T: Scalar>(frame: &FrameTensor<T>, patch: usize) -> Result<Vec<Vec<T>>, CodecError> {
    let (h, w, d) = frame.shape();
    check_tiling(h, w, patch)?;
    let mut out = Vec::with_capacity((h / patch) * (w / patch));
    for py in 0..h / patch {
        for px in 0..w / patch {
            let mut v = Vec::with_capacity(patch * patch * d);
            for y in py * patch..(py + 1) * patch {
                let start = (y * w + px * patch) * d;
                v.extend_from_slice(&frame.as_slice()[start..start + patch * d]);
            }
            out.push(v);
        }
    }
    Ok(out)
}

/// Inverse of [`extract_patches`]; samples are clamped into `[0, 1]`.
pub fn assemble_patches<T: Scalar>(
    patches: &[Vec<T>],
    grid_h: usize,
    grid_w: usize,
    patch: usize,
    channels: usize,
) -> Result<FrameTensor<T>, TensorError> {
    let (h, w) = (grid_h * patch, grid_w * patch);
    let mut data = vec![T::zero(); h * w * channels];
    for (i, p) in patches.iter().enumerate() {
        let (py, px) = (i / grid_w, i % grid_w);
        for r in 0..patch {
            let y = py * patch + r;
            let start = (y * w + px * patch) * channels;
            data[start..start + patch * channels].copy_from_slice(&p[r * patch * channels..(r + 1) * patch * channels]);
        }
    }
    FrameTensor::from_clamped(h, w, channels, data)
}

pub(crate) fn check_tiling(h: usize, w: usize, patch: usize) -> Result<(), CodecError> {
    if patch == 0 || !h.is_multiple_of(patch) || !w.is_multiple_of(patch) {
        return Err(CodecError::DimensionMismatch(format!("patch {patch} does not tile a {h}x{w} frame")));
    }
    Ok(())
}

/// Per-patch affine encoder producing one latent vector per tile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchEncoder<T> {
    pub patch: usize,
    pub channels: usize,
    pub map: AffineMap<T>,
}

impl<T: Scalar> PatchEncoder<T> {
    pub fn latent_dim(&self) -> usize {
        self.map.out_dim
    }

    pub fn encode(&self, frame: &FrameTensor<T>) -> Result<LatentGrid<T>, CodecError> {
        if frame.channels() != self.channels {
            return Err(CodecError::DimensionMismatch(format!(
                "encoder expects {} channels, frame has {}",
                self.channels,
                frame.channels()
            )));
        }
        let patches = extract_patches(frame, self.patch)?;
        let d = self.latent_dim();
        let mut values = vec![T::zero(); patches.len() * d];
        for (p, out) in patches.iter().zip(values.chunks_exact_mut(d)) {
            self.map.apply_into(p, out);
        }
        LatentGrid::new(d, frame.height() / self.patch, frame.width() / self.patch, values)
    }
}

/// Per-patch affine decoder mapping each latent vector back to a tile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchDecoder<T> {
    pub patch: usize,
    pub channels: usize,
    pub map: AffineMap<T>,
}

impl<T: Scalar> PatchDecoder<T> {
    pub fn latent_dim(&self) -> usize {
        self.map.in_dim
    }

    pub fn decode(&self, z: &LatentGrid<T>) -> Result<FrameTensor<T>, CodecError> {
        if z.channels() != self.latent_dim() {
            return Err(CodecError::DimensionMismatch(format!(
                "decoder expects {} latent channels, grid has {}",
                self.latent_dim(),
                z.channels()
            )));
        }
        let patches: Vec<Vec<T>> = z.vectors().map(|v| self.map.apply(v)).collect();
        Ok(assemble_patches(&patches, z.height(), z.width(), self.patch, self.channels)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patches_round_trip() {
        let data: Vec<f64> = (0..4 * 6 * 2).map(|i| i as f64 / 48.0).collect();
        let frame = FrameTensor::new(4, 6, 2, data).unwrap();
        let patches = extract_patches(&frame, 2).unwrap();
        assert_eq!(patches.len(), 6);
        assert_eq!(patches[0], [0.0, 1.0, 2.0, 3.0, 12.0, 13.0, 14.0, 15.0].iter().map(|v| v / 48.0).collect::<Vec<_>>());
        assert_eq!(assemble_patches(&patches, 2, 3, 2, 2).unwrap(), frame);
    }

    #[test]
    fn tiling_must_divide() {
        let frame = FrameTensor::<f32>::zeros(5, 4, 1);
        assert!(extract_patches(&frame, 2).is_err());
    }

    #[test]
    fn backprop_is_transpose() {
        let m = AffineMap::<f64> { in_dim: 2, out_dim: 3, weights: vec![1., 2., 3., 4., 5., 6.], bias: vec![0.; 3] };
        assert_eq!(m.backprop_input(&[1., 0., 1.]), vec![6., 8.]);
        assert_eq!(m.apply(&[1., 1.]), vec![3., 7., 11.]);
    }
}
