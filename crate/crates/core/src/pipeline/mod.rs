//! End-to-end scheme execution: select, encode, frame, transmit, decode, score.

mod models;
mod run;
mod sweep;
mod synthetic;
mod table;

pub use models::{default_vq_config, CodecModels, AE_PATCH};
pub use run::{raw_reference, run_scheme, TransmissionRecord, RAW_REFERENCE_BITS};
pub use sweep::{sweep, SweepRow};
pub use synthetic::synthetic_video;
pub use table::{run_table1, size_model_table, SizeEntry, SizeModel, Table1Report, Table1Row};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelError;
use crate::codec::CodecError;
use crate::metrics::MetricsError;
use crate::selector::{Scorer, SelectorConfig, SelectorError};
use crate::tensor::TensorError;
use crate::transport::{Scheme, TransportError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid scheme config: {0}")]
    InvalidConfig(String),
    #[error("scheme {0} needs a trained {1} model")]
    MissingModel(Scheme, &'static str),
    #[error("no {0} entry to use as the speedup baseline")]
    MissingBaseline(Scheme),
}

/// One transmission scheme and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Quantization bits for raw samples or AE latents.
    pub q: u8,
    /// Codebook size K for the VQ scheme.
    pub codebook_size: usize,
    /// Caption text sent alongside keyframes by the Mirage schemes.
    pub caption: String,
    /// Keyframe budget and scorer for the Mirage schemes.
    pub selector: SelectorConfig,
}

impl SchemeConfig {
    fn base(scheme: Scheme) -> Self {
        Self { scheme, q: 8, codebook_size: 256, caption: String::new(), selector: SelectorConfig { budget: 1, scorer: Scorer::Variance } }
    }

    pub fn raw(q: u8) -> Self {
        Self { q, ..Self::base(Scheme::Raw) }
    }

    pub fn raw_ae(q: u8) -> Self {
        Self { q, ..Self::base(Scheme::RawAe) }
    }

    pub fn mirage_ae(q: u8, keyframes: usize, caption: &str) -> Self {
        let mut c = Self { q, caption: caption.to_string(), ..Self::base(Scheme::MirageAe) };
        c.selector.budget = keyframes;
        c
    }

    pub fn mirage_vq(codebook_size: usize, keyframes: usize, caption: &str) -> Self {
        let mut c = Self { codebook_size, caption: caption.to_string(), ..Self::base(Scheme::MirageVq) };
        c.selector.budget = keyframes;
        c
    }

    /// The four schemes with default parameters.
    pub fn table1(caption: &str) -> Vec<Self> {
        vec![Self::raw(8), Self::raw_ae(8), Self::mirage_ae(8, 1, caption), Self::mirage_vq(256, 1, caption)]
    }

    pub fn keyframe_budget(&self) -> usize {
        self.selector.budget
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        match self.scheme {
            Scheme::MirageVq => {
                if self.codebook_size < 2 {
                    return bad(format!("codebook size {} < 2", self.codebook_size));
                }
            }
            _ => {
                if !(1..=16).contains(&self.q) {
                    return bad(format!("q = {} outside 1..=16", self.q));
                }
            }
        }
        if self.scheme.is_mirage() && self.selector.budget == 0 {
            return bad("keyframe budget must be at least 1".into());
        }
        Ok(())
    }
}
