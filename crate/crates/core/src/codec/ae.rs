use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::bits::{pack_codes, unpack_codes, Bitstream};
use crate::scalar::Scalar;
use crate::tensor::FrameTensor;

use super::affine::{extract_patches, AffineMap, PatchDecoder, PatchEncoder};
use super::latent::LatentGrid;
use super::pixel::{check_bits, dequantize_value, quantize_value};
use super::CodecError;

/// Latent values emitted per source pixel. At 8 bits each this pins the
/// autoencoder rate to 16 bpp.
pub const LATENTS_PER_PIXEL: usize = 2;

/// Linear patch autoencoder with a uniform latent quantizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeCodec<T> {
    pub encoder: PatchEncoder<T>,
    pub decoder: PatchDecoder<T>,
    /// Latent values are clamped to this interval before quantization.
    pub latent_range: (f64, f64),
}

impl<T: Scalar> AeCodec<T> {
    pub fn latent_dim(patch: usize) -> usize {
        LATENTS_PER_PIXEL * patch * patch
    }

    /// All weights and biases zero; latent range `[-1, 1]`.
    pub fn zeros(patch: usize, channels: usize) -> Self {
        let c = Self::latent_dim(patch);
        let in_dim = patch * patch * channels;
        Self {
            encoder: PatchEncoder { patch, channels, map: AffineMap::zeros(in_dim, c) },
            decoder: PatchDecoder { patch, channels, map: AffineMap::zeros(c, in_dim) },
            latent_range: (-1.0, 1.0),
        }
    }

    /// Fits the optimal linear autoencoder (principal components of the
    /// training patches). The latent range covers every training latent.
    pub fn fit_pca(frames: &[FrameTensor<T>], patch: usize) -> Result<Self, CodecError> {
        let first = frames.first().ok_or(CodecError::InsufficientData { needed: 1, found: 0 })?;
        let channels = first.channels();
        let in_dim = patch * patch * channels;
        let c = Self::latent_dim(patch);
        let mut patches = Vec::new();
        for f in frames {
            if f.channels() != channels {
                return Err(CodecError::DimensionMismatch("mixed channel counts".into()));
            }
            patches.extend(extract_patches(f, patch)?);
        }
        let n = patches.len() as f64;
        let mut mean = vec![0.0f64; in_dim];
        for p in &patches {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v.as_f64() / n;
            }
        }
        let mut cov = DMatrix::<f64>::zeros(in_dim, in_dim);
        let mut centred = vec![0.0f64; in_dim];
        for p in &patches {
            for ((c, v), m) in centred.iter_mut().zip(p).zip(&mean) {
                *c = v.as_f64() - m;
            }
            for i in 0..in_dim {
                let ci = centred[i] / n;
                for j in i..in_dim {
                    cov[(i, j)] += ci * centred[j];
                }
            }
        }
        for i in 0..in_dim {
            for j in 0..i {
                cov[(i, j)] = cov[(j, i)];
            }
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..in_dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

        let mut enc = AffineMap::<f64>::zeros(in_dim, c);
        let mut dec = AffineMap::<f64>::zeros(c, in_dim);
        for (k, &col) in order.iter().take(c.min(in_dim)).enumerate() {
            let v = eig.eigenvectors.column(col);
            // Sign convention: largest-magnitude component positive.
            let pivot = (0..in_dim).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
            let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
            let mut b = 0.0;
            for i in 0..in_dim {
                let vi = sign * v[i];
                enc.weights[k * in_dim + i] = vi;
                dec.weights[i * c + k] = vi;
                b -= vi * mean[i];
            }
            enc.bias[k] = b;
        }
        dec.bias.copy_from_slice(&mean);

        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let enc_t: AffineMap<T> = enc.cast();
        for p in &patches {
            for z in enc_t.apply(p) {
                lo = lo.min(z.as_f64());
                hi = hi.max(z.as_f64());
            }
        }
        if !(hi > lo) {
            lo -= 0.5;
            hi += 0.5;
        }
        Ok(Self {
            encoder: PatchEncoder { patch, channels, map: enc_t },
            decoder: PatchDecoder { patch, channels, map: dec.cast() },
            latent_range: (lo, hi),
        })
    }

    pub fn encode(&self, frame: &FrameTensor<T>) -> Result<LatentGrid<T>, CodecError> {
        self.encoder.encode(frame)
    }

    pub fn decode(&self, z: &LatentGrid<T>) -> Result<FrameTensor<T>, CodecError> {
        self.decoder.decode(z)
    }

    /// Quantizes every latent value to `q` bits over `latent_range`.
    pub fn latent_codes(&self, z: &LatentGrid<T>, q: u8) -> Result<Vec<u32>, CodecError> {
        check_bits(q)?;
        let (lo, hi) = self.latent_range;
        let span = hi - lo;
        Ok(z.values().iter().map(|v| quantize_value(T::lit((v.as_f64() - lo) / span), q)).collect())
    }

    pub fn latents_from_codes(&self, codes: &[u32], q: u8, height: usize, width: usize) -> Result<LatentGrid<T>, CodecError> {
        check_bits(q)?;
        let (lo, hi) = self.latent_range;
        let values = codes.iter().map(|&c| T::lit(lo + (hi - lo) * dequantize_value::<f64>(c, q))).collect();
        LatentGrid::new(self.encoder.latent_dim(), height, width, values)
    }

    /// Encodes and serializes a frame: `LATENTS_PER_PIXEL * q` bits per pixel.
    pub fn compress(&self, frame: &FrameTensor<T>, q: u8) -> Result<Bitstream, CodecError> {
        let z = self.encode(frame)?;
        Ok(pack_codes(&self.latent_codes(&z, q)?, u32::from(q)))
    }

    /// Inverse of [`AeCodec::compress`] for a frame of `height x width` pixels.
    pub fn decompress(&self, bits: &Bitstream, q: u8, height: usize, width: usize) -> Result<FrameTensor<T>, CodecError> {
        let p = self.encoder.patch;
        super::affine::check_tiling(height, width, p)?;
        let count = Self::latent_dim(p) * (height / p) * (width / p);
        if bits.len() < count * q as usize {
            return Err(CodecError::DimensionMismatch("latent stream too short".into()));
        }
        let codes = unpack_codes(bits, u32::from(q), count);
        let z = self.latents_from_codes(&codes, q, height / p, width / p)?;
        self.decode(&z)
    }
}
