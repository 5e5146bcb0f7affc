//! Source codecs: raw pixel quantization, the linear patch autoencoder and
//! the vector-quantized codec with its training routines.

mod ae;
mod affine;
mod codebook;
mod kmeans;
mod latent;
mod pixel;
mod vq;
mod vqvae;

use thiserror::Error;

use crate::tensor::TensorError;

pub use ae::{AeCodec, LATENTS_PER_PIXEL};
pub use affine::{assemble_patches, extract_patches, AffineMap, PatchDecoder, PatchEncoder};
pub use codebook::{index_width, Codebook, CODEBOOK_MAGIC, CODEBOOK_VERSION};
pub use kmeans::{kmeans_codebook, kmeans_fit, quantization_mse, KMeansFit};
pub use latent::{IndexMap, LatentGrid};
pub use pixel::{dequantize_pixels, dequantize_value, max_code, quantize_pixels, quantize_value};
pub use vq::{lookup, vq_cost_bits, vq_decode, vq_encode};
pub use vqvae::{train_from, train_vqvae, vqvae_loss, LossTerms, TrainedVqVae, VqVae, VqVaeConfig, VqVaeGrads};

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("quantization depth {0} outside 1..=16")]
    InvalidBits(u8),
    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),
    #[error("codebook file: {0}")]
    CodebookFormat(String),
    #[error("index map refers to codebook {found:#010x}, have {expected:#010x}")]
    UnknownCodebook { expected: u32, found: u32 },
    #[error("need at least {needed} distinct vectors, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at step {step}")]
    Divergence { step: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
