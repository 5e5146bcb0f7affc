//! AWGN link math, the bit-flip channel and the ARQ reliability sublayer.

mod arq;
mod erfc;
mod link;
mod noise;

use thiserror::Error;

pub use arq::{arq_transmit, block_error_rate, expected_channel_bits, ArqOutcome, ReliabilityConfig, Segmentation, CRC_BITS};
pub use erfc::{erf, erfc};
pub use link::{channel_time, link_budget, transmission_latency, ChannelConfig, LinkBudget};
pub use noise::{flip_in_place, transmit_bits};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid channel configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate channel at {snr_db} dB: capacity is zero")]
    DegenerateChannel { snr_db: f64 },
    #[error("reliability exhausted: block {block} failed {attempts} attempts")]
    ReliabilityExhausted { block: usize, attempts: u32 },
    #[error("undetected-error probability {residual:e} exceeds epsilon {epsilon:e}")]
    ReliabilityUnattainable { residual: f64, epsilon: f64 },
    #[error("payload is empty")]
    EmptyPayload,
}
