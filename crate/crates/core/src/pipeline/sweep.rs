use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, ReliabilityConfig};
use crate::scalar::Scalar;
use crate::tensor::VideoTensor;
use crate::transport::Scheme;

use super::{run_scheme, CodecModels, SchemeConfig, TransmissionRecord};

/// One sweep cell, flattened for CSV output. Failed cells carry `error` and
/// leave the measurements empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub q: Option<u8>,
    #[serde(rename = "K")]
    pub codebook_size: Option<usize>,
    pub seed: u64,
    pub semantic_bytes: Option<f64>,
    pub total_bytes: Option<u64>,
    pub latency_ms: Option<f64>,
    pub attempts: Option<u64>,
    pub mse: Option<f64>,
    pub psnr_db: Option<f64>,
    pub bpp: Option<f64>,
    pub data_speedup: Option<f64>,
    pub latency_speedup: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn from_record<T>(r: &TransmissionRecord<T>) -> Self {
        Self {
            scheme: r.scheme,
            snr_db: r.snr_db,
            q: r.q,
            codebook_size: r.codebook_size,
            seed: r.seed,
            semantic_bytes: Some(r.semantic_bits as f64 / 8.0),
            total_bytes: Some(r.transmitted_bytes),
            latency_ms: Some(r.latency_s * 1e3),
            attempts: Some(r.arq_attempts),
            mse: Some(r.quality.mse),
            psnr_db: Some(r.quality.psnr_db),
            bpp: Some(r.quality.bpp),
            data_speedup: Some(r.quality.data_speedup),
            latency_speedup: Some(r.quality.latency_speedup),
            error: None,
        }
    }

    fn failed(cfg: &SchemeConfig, snr_db: f64, seed: u64, error: String) -> Self {
        Self {
            scheme: cfg.scheme,
            snr_db,
            q: (!cfg.scheme.is_vq()).then_some(cfg.q),
            codebook_size: cfg.scheme.is_vq().then_some(cfg.codebook_size),
            seed,
            semantic_bytes: None,
            total_bytes: None,
            latency_ms: None,
            attempts: None,
            mse: None,
            psnr_db: None,
            bpp: None,
            data_speedup: None,
            latency_speedup: None,
            error: Some(error),
        }
    }
}

/// Runs the cross product of schemes, SNRs and seeds in parallel. Rows come
/// back ordered by scheme, then SNR, then seed; a failing cell is recorded
/// rather than aborting the sweep.
pub fn sweep<T: Scalar>(
    video: &VideoTensor<T>,
    schemes: &[SchemeConfig],
    models: &CodecModels<T>,
    snr_db: &[f64],
    template: &ChannelConfig,
    rel: &ReliabilityConfig,
    seeds: &[u64],
) -> Vec<SweepRow> {
    let cells: Vec<(&SchemeConfig, f64, u64)> =
        schemes.iter().flat_map(|s| snr_db.iter().flat_map(move |&snr| seeds.iter().map(move |&seed| (s, snr, seed)))).collect();
    cells
        .into_par_iter()
        .map(|(cfg, snr, seed)| {
            let ccfg = template.with_snr_db(snr);
            match run_scheme(video, cfg, models, &ccfg, rel, seed) {
                Ok(r) => SweepRow::from_record(&r),
                Err(e) => SweepRow::failed(cfg, snr, seed, e.to_string()),
            }
        })
        .collect()
}
