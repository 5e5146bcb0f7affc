//! Patch VQ-VAE trained with the straight-through estimator.
//!
//! The objective per minibatch of patches `x` is
//!
//! ```text
//! L = mean((D(e_s) - x)^2) + mean_j ||sg[z_j] - e_s(j)||^2 + beta * mean_j ||z_j - sg[e_s(j)]||^2
//! ```
//!
//! where the reconstruction term is the Gaussian log-likelihood up to
//! constants. Codewords receive gradients from the reconstruction and
//! codebook terms; the encoder receives the decoder-input gradient copied
//! across the quantizer plus the commitment gradient.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{rng_from_seed, substream};
use crate::scalar::Scalar;
use crate::tensor::FrameTensor;

use super::affine::{extract_patches, AffineMap, PatchDecoder, PatchEncoder};
use super::codebook::{sq_dist, Codebook};
use super::kmeans::kmeans_codebook;
use super::latent::IndexMap;
use super::vq::{vq_decode, vq_encode};
use super::CodecError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqVaeConfig {
    /// Square patch edge in pixels; each patch becomes one latent vector.
    pub patch_size: usize,
    pub latent_dim: usize,
    pub codebook_size: usize,
    /// Commitment weight.
    pub beta: f64,
    pub learning_rate: f64,
    pub steps: usize,
    /// Patches per optimisation step.
    pub batch_size: usize,
    /// Lloyd iterations for the codebook initialisation.
    pub kmeans_iters: usize,
}

impl Default for VqVaeConfig {
    fn default() -> Self {
        Self {
            patch_size: 4,
            latent_dim: 8,
            codebook_size: 64,
            beta: 0.25,
            learning_rate: 1e-2,
            steps: 200,
            batch_size: 64,
            kmeans_iters: 25,
        }
    }
}

impl VqVaeConfig {
    pub fn validate(&self) -> Result<(), CodecError> {
        let bad = |m: &str| Err(CodecError::InvalidConfig(m.into()));
        if self.patch_size == 0 || self.latent_dim == 0 {
            return bad("patch_size and latent_dim must be positive");
        }
        if self.codebook_size < 2 {
            return bad("codebook_size must be at least 2");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        Ok(())
    }
}

/// The three loss terms and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossTerms<T> {
    pub total: T,
    pub reconstruction: T,
    pub codebook: T,
    pub commitment: T,
}

/// Evaluates the loss for flat buffers: `x`/`recon` are samples, `z_e`/`e_s`
/// are `dim`-length latent vectors laid end to end.
pub fn vqvae_loss<T: Scalar>(x: &[T], recon: &[T], z_e: &[T], e_s: &[T], dim: usize, beta: T) -> Result<LossTerms<T>, CodecError> {
    if x.len() != recon.len() || x.is_empty() {
        return Err(CodecError::DimensionMismatch("reconstruction shape differs from input".into()));
    }
    if z_e.len() != e_s.len() || dim == 0 || !z_e.len().is_multiple_of(dim) || z_e.is_empty() {
        return Err(CodecError::DimensionMismatch("latent and codeword buffers disagree".into()));
    }
    let reconstruction = sq_dist(x, recon) / T::lit(x.len() as f64);
    let vectors = T::lit((z_e.len() / dim) as f64);
    let vq = sq_dist(z_e, e_s) / vectors;
    let commitment = beta * vq;
    Ok(LossTerms { total: reconstruction + vq + commitment, reconstruction, codebook: vq, commitment })
}

/// Gradients of one minibatch, split so each piece can be checked alone.
#[derive(Debug, Clone, PartialEq)]
pub struct VqVaeGrads<T> {
    pub decoder: AffineMap<T>,
    /// Reconstruction plus codebook-term gradient for every codeword.
    pub codebook: Vec<T>,
    /// Gradient of the commitment term with respect to the encoder.
    pub encoder_commitment: AffineMap<T>,
    /// Decoder-input gradient copied across the quantizer.
    pub encoder_straight_through: AffineMap<T>,
}

impl<T: Scalar> VqVaeGrads<T> {
    pub fn encoder_total(&self) -> AffineMap<T> {
        let mut e = self.encoder_commitment.clone();
        for (a, b) in e.weights.iter_mut().zip(&self.encoder_straight_through.weights) {
            *a = *a + *b;
        }
        for (a, b) in e.bias.iter_mut().zip(&self.encoder_straight_through.bias) {
            *a = *a + *b;
        }
        e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqVae<T> {
    pub encoder: PatchEncoder<T>,
    pub decoder: PatchDecoder<T>,
    pub codebook: Codebook<T>,
    pub beta: T,
}

impl<T: Scalar> VqVae<T> {
    /// Random encoder, near-zero decoder, codebook from k-means over the
    /// initial latents of `frames`.
    pub fn init(frames: &[FrameTensor<T>], cfg: &VqVaeConfig, seed: u64) -> Result<Self, CodecError> {
        cfg.validate()?;
        let patches = collect_patches(frames, cfg.patch_size)?;
        let channels = frames[0].channels();
        let in_dim = cfg.patch_size * cfg.patch_size * channels;
        let mut rng = rng_from_seed(substream(seed, "vqvae-init"));
        let enc_map = AffineMap::random(in_dim, cfg.latent_dim, 1.0 / (in_dim as f64).sqrt(), &mut rng);
        let dec_map = AffineMap::random(cfg.latent_dim, in_dim, 0.01, &mut rng);
        let encoder = PatchEncoder { patch: cfg.patch_size, channels, map: enc_map };
        let decoder = PatchDecoder { patch: cfg.patch_size, channels, map: dec_map };

        let mut latents = Vec::with_capacity(patches.len() * cfg.latent_dim);
        for p in &patches {
            latents.extend(encoder.map.apply(p));
        }
        let codebook = kmeans_codebook(&latents, cfg.latent_dim, cfg.codebook_size, substream(seed, "vqvae-kmeans"), cfg.kmeans_iters)?;
        Ok(Self { encoder, decoder, codebook, beta: T::lit(cfg.beta) })
    }

    pub fn in_dim(&self) -> usize {
        self.encoder.map.in_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.latent_dim()
    }

    /// Loss over a set of flattened patches.
    pub fn loss(&self, patches: &[&[T]]) -> Result<LossTerms<T>, CodecError> {
        let mut x = Vec::with_capacity(patches.len() * self.in_dim());
        let mut recon = Vec::with_capacity(x.capacity());
        let mut z_e = Vec::with_capacity(patches.len() * self.latent_dim());
        let mut e_s = Vec::with_capacity(z_e.capacity());
        for p in patches {
            let z = self.encoder.map.apply(p);
            let (k, _) = self.codebook.nearest(&z);
            let q = self.codebook.codeword(k);
            recon.extend(self.decoder.map.apply(q));
            x.extend_from_slice(p);
            z_e.extend_from_slice(&z);
            e_s.extend_from_slice(q);
        }
        vqvae_loss(&x, &recon, &z_e, &e_s, self.latent_dim(), self.beta)
    }

    /// Loss and straight-through gradients for a minibatch.
    pub fn gradients(&self, patches: &[&[T]]) -> Result<(LossTerms<T>, VqVaeGrads<T>), CodecError> {
        let terms = self.loss(patches)?;
        let n = T::lit(patches.len() as f64);
        let elems = n * T::lit(self.in_dim() as f64);
        let two = T::lit(2.0);
        let d = self.latent_dim();
        let mut grads = VqVaeGrads {
            decoder: AffineMap::zeros(d, self.in_dim()),
            codebook: vec![T::zero(); self.codebook.codewords().len()],
            encoder_commitment: AffineMap::zeros(self.in_dim(), d),
            encoder_straight_through: AffineMap::zeros(self.in_dim(), d),
        };
        for p in patches {
            let z = self.encoder.map.apply(p);
            let (k, _) = self.codebook.nearest(&z);
            let q = self.codebook.codeword(k);
            let r = self.decoder.map.apply(q);
            let g_r: Vec<T> = r.iter().zip(p.iter()).map(|(ri, xi)| two * (*ri - *xi) / elems).collect();
            AffineMap::accumulate_grad(&mut grads.decoder, q, &g_r);
            let g_q = self.decoder.map.backprop_input(&g_r);
            for j in 0..d {
                let diff = z[j] - q[j];
                grads.codebook[k * d + j] = grads.codebook[k * d + j] + g_q[j] - two * diff / n;
            }
            let g_commit: Vec<T> = z.iter().zip(q).map(|(zi, qi)| two * self.beta * (*zi - *qi) / n).collect();
            AffineMap::accumulate_grad(&mut grads.encoder_commitment, p, &g_commit);
            AffineMap::accumulate_grad(&mut grads.encoder_straight_through, p, &g_q);
        }
        Ok((terms, grads))
    }

    pub fn encode_frame(&self, frame: &FrameTensor<T>) -> Result<IndexMap, CodecError> {
        vq_encode(&self.encoder.encode(frame)?, &self.codebook)
    }

    pub fn decode_indices(&self, s: &IndexMap) -> Result<FrameTensor<T>, CodecError> {
        vq_decode(s, &self.codebook, &self.decoder)
    }

    /// Mean squared error of encode/decode over `frames`.
    pub fn reconstruction_mse(&self, frames: &[FrameTensor<T>]) -> Result<T, CodecError> {
        let mut sum = T::zero();
        let mut count = 0usize;
        for f in frames {
            let r = self.decode_indices(&self.encode_frame(f)?)?;
            sum = sum + sq_dist(f.as_slice(), r.as_slice());
            count += f.as_slice().len();
        }
        Ok(sum / T::lit(count as f64))
    }

    pub fn cast<U: Scalar>(&self) -> VqVae<U> {
        VqVae {
            encoder: PatchEncoder { patch: self.encoder.patch, channels: self.encoder.channels, map: self.encoder.map.cast() },
            decoder: PatchDecoder { patch: self.decoder.patch, channels: self.decoder.channels, map: self.decoder.map.cast() },
            codebook: self.codebook.cast(),
            beta: U::lit(self.beta.as_f64()),
        }
    }
}

pub(crate) fn collect_patches<T: Scalar>(frames: &[FrameTensor<T>], patch: usize) -> Result<Vec<Vec<T>>, CodecError> {
    let first = frames.first().ok_or(CodecError::InsufficientData { needed: 1, found: 0 })?;
    let mut out = Vec::new();
    for f in frames {
        if f.channels() != first.channels() {
            return Err(CodecError::DimensionMismatch("mixed channel counts".into()));
        }
        out.extend(extract_patches(f, patch)?);
    }
    Ok(out)
}

struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Scalar> Adam<T> {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize) -> Self {
        Self { m: vec![T::zero(); len], v: vec![T::zero(); len] }
    }

    fn step(&mut self, params: &mut [T], grads: &[T], lr: T, t: i32) {
        let (b1, b2) = (T::lit(Self::B1), T::lit(Self::B2));
        let c1 = T::one() - b1.powi(t);
        let c2 = T::one() - b2.powi(t);
        for i in 0..params.len() {
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * grads[i];
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * grads[i] * grads[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] = params[i] - lr * m_hat / (v_hat.sqrt() + T::lit(Self::EPS));
        }
    }
}

/// Trained model plus per-step minibatch losses (evaluated before each update).
#[derive(Debug, Clone)]
pub struct TrainedVqVae<T> {
    pub model: VqVae<T>,
    pub loss_trace: Vec<LossTerms<T>>,
}

/// Initialises with [`VqVae::init`] and runs `cfg.steps` Adam steps.
pub fn train_vqvae<T: Scalar>(frames: &[FrameTensor<T>], cfg: &VqVaeConfig, seed: u64) -> Result<TrainedVqVae<T>, CodecError> {
    let model = VqVae::init(frames, cfg, seed)?;
    train_from(model, frames, cfg, seed)
}

/// Continues training an existing model.
pub fn train_from<T: Scalar>(
    mut model: VqVae<T>,
    frames: &[FrameTensor<T>],
    cfg: &VqVaeConfig,
    seed: u64,
) -> Result<TrainedVqVae<T>, CodecError> {
    cfg.validate()?;
    let patches = collect_patches(frames, model.encoder.patch)?;
    let mut rng = rng_from_seed(substream(seed, "vqvae-batches"));
    let lr = T::lit(cfg.learning_rate);
    let mut opt_enc_w = Adam::new(model.encoder.map.weights.len());
    let mut opt_enc_b = Adam::new(model.encoder.map.bias.len());
    let mut opt_dec_w = Adam::new(model.decoder.map.weights.len());
    let mut opt_dec_b = Adam::new(model.decoder.map.bias.len());
    let mut opt_cb = Adam::new(model.codebook.codewords().len());
    let mut trace = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let batch: Vec<&[T]> = if cfg.batch_size >= patches.len() {
            patches.iter().map(Vec::as_slice).collect()
        } else {
            (0..cfg.batch_size).map(|_| patches[rng.random_range(0..patches.len())].as_slice()).collect()
        };
        let (terms, grads) = model.gradients(&batch)?;
        if !terms.total.is_finite() {
            return Err(CodecError::Divergence { step });
        }
        trace.push(terms);
        let enc = grads.encoder_total();
        let t = step as i32 + 1;
        opt_enc_w.step(&mut model.encoder.map.weights, &enc.weights, lr, t);
        opt_enc_b.step(&mut model.encoder.map.bias, &enc.bias, lr, t);
        opt_dec_w.step(&mut model.decoder.map.weights, &grads.decoder.weights, lr, t);
        opt_dec_b.step(&mut model.decoder.map.bias, &grads.decoder.bias, lr, t);
        opt_cb.step(model.codebook.codewords_mut(), &grads.codebook, lr, t);
        if model.codebook.codewords().iter().any(|v| !v.is_finite()) {
            return Err(CodecError::Divergence { step });
        }
    }
    model.codebook.refresh_id();
    Ok(TrainedVqVae { model, loss_trace: trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_examples() {
        let t = vqvae_loss(&[0.3f64], &[0.3], &[1.0], &[0.0], 1, 0.25).unwrap();
        assert_eq!(t.total, 1.25);
        assert_eq!((t.reconstruction, t.codebook, t.commitment), (0.0, 1.0, 0.25));
        let t = vqvae_loss(&[0.3f64, 0.2], &[0.3, 0.2], &[1.0, 2.0], &[1.0, 2.0], 2, 0.25).unwrap();
        assert_eq!(t.total, 0.0);
    }

    #[test]
    fn loss_shape_errors() {
        assert!(vqvae_loss(&[0.3f64], &[0.3, 0.1], &[1.0], &[0.0], 1, 0.25).is_err());
        assert!(vqvae_loss(&[0.3f64], &[0.3], &[1.0, 2.0], &[0.0], 1, 0.25).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(VqVaeConfig { beta: 0.0, ..VqVaeConfig::default() }.validate().is_err());
        assert!(VqVaeConfig { codebook_size: 1, ..VqVaeConfig::default() }.validate().is_err());
    }
}
