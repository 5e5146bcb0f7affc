//! Semantic video transmission simulator.
//!
//! Keyframes and captions are encoded into a compact semantic payload, sent
//! over a modelled AWGN link, and scored for fidelity and efficiency. Numeric
//! code is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! the common concrete choices.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bits;
pub mod channel;
pub mod codec;
pub mod genclient;
pub mod metrics;
pub mod pipeline;
pub mod ppm;
pub mod rng;
pub mod scalar;
pub mod selector;
mod serde_inf;
pub mod tensor;
pub mod transport;

pub use scalar::Scalar;

pub type Frame = tensor::FrameTensor<f64>;
pub type Frame32 = tensor::FrameTensor<f32>;
pub type Video = tensor::VideoTensor<f64>;
pub type Video32 = tensor::VideoTensor<f32>;
pub type Codebook = codec::Codebook<f64>;
pub type Codebook32 = codec::Codebook<f32>;
pub type LatentGrid = codec::LatentGrid<f64>;
pub type AeCodec = codec::AeCodec<f64>;
pub type VqVae = codec::VqVae<f64>;
pub type VqVae32 = codec::VqVae<f32>;
