use crate::codec::{train_vqvae, AeCodec, CodecError, VqVae, VqVaeConfig};
use crate::rng::substream;
use crate::scalar::Scalar;
use crate::tensor::FrameTensor;
use crate::transport::Scheme;

use super::{PipelineError, SchemeConfig};

/// Patch edge of the autoencoder fitted by [`CodecModels::fit_for`].
pub const AE_PATCH: usize = 4;

/// VQ-VAE settings used when a model is trained on the fly: 16x16 patches
/// (a 256x256 frame becomes a 16x16 index map) and 8-dimensional latents.
pub fn default_vq_config(codebook_size: usize) -> VqVaeConfig {
    VqVaeConfig { patch_size: 16, latent_dim: 8, codebook_size, steps: 60, ..VqVaeConfig::default() }
}

/// Trained codecs shared by the schemes of a run.
#[derive(Debug, Clone, Default)]
pub struct CodecModels<T> {
    pub ae: Option<AeCodec<T>>,
    pub vq: Option<VqVae<T>>,
}

impl<T: Scalar> CodecModels<T> {
    /// Fits whatever the given schemes need on `frames`.
    pub fn fit_for(frames: &[FrameTensor<T>], schemes: &[SchemeConfig], seed: u64) -> Result<Self, PipelineError> {
        let mut models = Self::default();
        if schemes.iter().any(|s| matches!(s.scheme, Scheme::RawAe | Scheme::MirageAe)) {
            models.ae = Some(AeCodec::fit_pca(frames, AE_PATCH)?);
        }
        if let Some(vq) = schemes.iter().find(|s| s.scheme == Scheme::MirageVq) {
            let cfg = default_vq_config(vq.codebook_size);
            models.vq = Some(train_vqvae(frames, &cfg, substream(seed, "training"))?.model);
        }
        Ok(models)
    }

    pub(crate) fn ae(&self, scheme: Scheme) -> Result<&AeCodec<T>, PipelineError> {
        self.ae.as_ref().ok_or(PipelineError::MissingModel(scheme, "autoencoder"))
    }

    pub(crate) fn vq(&self, scheme: Scheme, codebook_size: usize) -> Result<&VqVae<T>, PipelineError> {
        let m = self.vq.as_ref().ok_or(PipelineError::MissingModel(scheme, "VQ-VAE"))?;
        if m.codebook.size() != codebook_size {
            return Err(CodecError::InvalidCodebook(format!("scheme asks for K = {codebook_size}, model has {}", m.codebook.size())).into());
        }
        Ok(m)
    }
}
