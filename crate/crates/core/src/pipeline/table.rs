use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::{channel_time, expected_channel_bits, link_budget, ChannelConfig, ReliabilityConfig};
use crate::metrics::{speedups, TransferCost, BYTES_PER_KB};
use crate::scalar::Scalar;
use crate::tensor::VideoTensor;
use crate::transport::Scheme;

use super::{run_scheme, CodecModels, PipelineError, SchemeConfig, TransmissionRecord};

/// One row of the scheme comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub scheme: Scheme,
    pub frame_kb: f64,
    pub text_kb: f64,
    pub total_kb: f64,
    pub latency_ms: f64,
    pub bpp: Option<f64>,
    pub mse: Option<f64>,
    #[serde(with = "opt_inf")]
    pub psnr_db: Option<f64>,
    pub data_speedup: f64,
    pub latency_speedup: f64,
}

impl TransferCost for Table1Row {
    fn transmitted_bytes(&self) -> f64 {
        self.total_kb * BYTES_PER_KB
    }

    fn latency_s(&self) -> f64 {
        self.latency_ms / 1e3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Report {
    pub snr_db: f64,
    pub bandwidth_hz: f64,
    pub ber: f64,
    /// `"simulated"` or `"size-model"`.
    pub mode: String,
    pub rows: Vec<Table1Row>,
}

fn fill_speedups(rows: &mut [Table1Row]) -> Result<(), PipelineError> {
    let base = rows.iter().find(|r| r.scheme == Scheme::Raw).cloned().ok_or(PipelineError::MissingBaseline(Scheme::Raw))?;
    for r in rows.iter_mut() {
        let (d, l) = speedups(&*r, &base)?;
        r.data_speedup = d;
        r.latency_speedup = l;
    }
    Ok(())
}

/// Runs every configured scheme on `video` and compares them with the raw row.
/// Sizes here are full framed payloads.
pub fn run_table1<T: Scalar>(
    video: &VideoTensor<T>,
    configs: &[SchemeConfig],
    models: &CodecModels<T>,
    ccfg: &ChannelConfig,
    rel: &ReliabilityConfig,
    seed: u64,
) -> Result<(Table1Report, Vec<TransmissionRecord<T>>), PipelineError> {
    let budget = link_budget(ccfg)?;
    let records = configs.iter().map(|c| run_scheme(video, c, models, ccfg, rel, seed)).collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<Table1Row> = records
        .iter()
        .map(|r| {
            let text_kb = (r.caption_bits / 8) as f64 / BYTES_PER_KB;
            let total_kb = r.transmitted_bytes as f64 / BYTES_PER_KB;
            Table1Row {
                scheme: r.scheme,
                frame_kb: total_kb - text_kb,
                text_kb,
                total_kb,
                latency_ms: r.latency_s * 1e3,
                bpp: Some(r.quality.bpp),
                mse: Some(r.quality.mse),
                psnr_db: Some(r.quality.psnr_db),
                data_speedup: 0.0,
                latency_speedup: 0.0,
            }
        })
        .collect();
    fill_speedups(&mut rows)?;
    let report = Table1Report { snr_db: ccfg.snr_db, bandwidth_hz: ccfg.bandwidth_hz, ber: budget.ber, mode: "simulated".into(), rows };
    Ok((report, records))
}

/// Size of one scheme's payload in KB (1024 bytes): either a single total or
/// a frame part plus an ARQ-protected text part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SizeEntry {
    Total(f64),
    Split { frame: f64, text: f64 },
}

impl SizeEntry {
    fn parts(self) -> (f64, f64) {
        match self {
            SizeEntry::Total(t) => (t, 0.0),
            SizeEntry::Split { frame, text } => (frame, text),
        }
    }
}

/// Externally supplied per-scheme sizes, keyed by scheme name.
pub type SizeModel = BTreeMap<Scheme, SizeEntry>;

/// Speedup arithmetic on supplied sizes. Frame bits cross the channel once;
/// text bits pay the expected ARQ expansion at the link's BER.
pub fn size_model_table(sizes: &SizeModel, ccfg: &ChannelConfig, rel: &ReliabilityConfig) -> Result<Table1Report, PipelineError> {
    let budget = link_budget(ccfg)?;
    let mut rows = Vec::with_capacity(sizes.len());
    for (&scheme, &entry) in sizes {
        let (frame_kb, text_kb) = entry.parts();
        if !(frame_kb >= 0.0 && text_kb >= 0.0 && frame_kb + text_kb > 0.0) || !(frame_kb + text_kb).is_finite() {
            return Err(PipelineError::InvalidConfig(format!("size for {scheme} must be positive")));
        }
        let frame_bits = frame_kb * BYTES_PER_KB * 8.0;
        let text_bits = (text_kb * BYTES_PER_KB * 8.0).round() as usize;
        let bits = frame_bits + expected_channel_bits(text_bits, budget.ber, rel);
        rows.push(Table1Row {
            scheme,
            frame_kb,
            text_kb,
            total_kb: frame_kb + text_kb,
            latency_ms: channel_time(bits, &budget, ccfg)? * 1e3,
            bpp: None,
            mse: None,
            psnr_db: None,
            data_speedup: 0.0,
            latency_speedup: 0.0,
        });
    }
    fill_speedups(&mut rows)?;
    Ok(Table1Report { snr_db: ccfg.snr_db, bandwidth_hz: ccfg.bandwidth_hz, ber: budget.ber, mode: "size-model".into(), rows })
}

mod opt_inf {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "crate::serde_inf")] f64);

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}
