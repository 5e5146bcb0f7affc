//! Payload framing and caption compression.

mod caption;
mod wire;

pub use caption::{compress_caption, decompress_caption};
pub use wire::{
    frame_payload, parse_payload, payload_size_report, KeyframeCodes, Scheme, SemanticPayload, SizeReport, PAYLOAD_MAGIC, PAYLOAD_VERSION,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported payload version {0}")]
    BadVersion(u8),
    #[error("unknown scheme tag {0}")]
    BadScheme(u8),
    #[error("CRC mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("stream truncated: needed {needed} bytes, {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("malformed caption stream: {0}")]
    MalformedCaption(String),
    #[error("invalid payload: {0}")]
    InvalidPayload(String),
}
