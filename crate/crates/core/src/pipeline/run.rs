use serde::{Deserialize, Serialize};

use crate::bits::{pack_codes, unpack_codes, Bitstream};
use crate::channel::{arq_transmit, channel_time, flip_in_place, link_budget, ChannelConfig, LinkBudget, ReliabilityConfig};
use crate::codec::{dequantize_value, quantize_value, IndexMap};
use crate::metrics::{bpp, mse_many, psnr, speedups, QualityReport, TransferCost};
use crate::rng::{indexed, rng_from_seed, substream};
use crate::scalar::Scalar;
use crate::selector::{score_frames, select_keyframes};
use crate::tensor::{FrameTensor, VideoTensor};
use crate::transport::{compress_caption, decompress_caption, frame_payload, payload_size_report, KeyframeCodes, Scheme, SemanticPayload};

use super::{CodecModels, PipelineError, SchemeConfig};

/// Quantization depth of the raw reference that speedups are measured against.
pub const RAW_REFERENCE_BITS: u32 = 8;

/// Outcome of one scheme run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionRecord<T> {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub bandwidth_hz: f64,
    pub ber: f64,
    pub q: Option<u8>,
    #[serde(rename = "K")]
    pub codebook_size: Option<usize>,
    pub seed: u64,
    /// Indices of the frames whose codes were sent.
    pub frames_sent: Vec<usize>,
    pub code_bits: u64,
    pub caption_bits: u64,
    pub semantic_bits: u64,
    pub overhead_bits: u64,
    /// Framed payload size, semantic content plus overhead.
    pub transmitted_bytes: u64,
    /// Bits put on the air, ARQ retransmissions included.
    pub channel_bits: u64,
    pub latency_s: f64,
    pub arq_attempts: u64,
    pub arq_blocks: usize,
    /// Bit flips suffered by the unprotected code stream.
    pub bit_errors: u64,
    /// Receiver caption text; `None` when no caption was sent.
    pub received_caption: Option<String>,
    /// Whether the decompressed caption equals the sent text (true with no caption).
    pub caption_intact: bool,
    /// Whether every received code and caption byte equals what was sent.
    pub payload_intact: bool,
    pub quality: QualityReport,
    /// Decoded frames, in `frames_sent` order. Not serialized.
    #[serde(skip)]
    pub reconstruction: Vec<FrameTensor<T>>,
}

impl<T> TransferCost for TransmissionRecord<T> {
    fn transmitted_bytes(&self) -> f64 {
        self.transmitted_bytes as f64
    }

    fn latency_s(&self) -> f64 {
        self.latency_s
    }
}

/// Size and latency of sending every frame as 8-bit raw samples without
/// ARQ, used as the speedup reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawReference {
    pub bytes: u64,
    pub latency_s: f64,
}

impl TransferCost for RawReference {
    fn transmitted_bytes(&self) -> f64 {
        self.bytes as f64
    }

    fn latency_s(&self) -> f64 {
        self.latency_s
    }
}

pub fn raw_reference<T: Scalar>(video: &VideoTensor<T>, budget: &LinkBudget, ccfg: &ChannelConfig) -> Result<RawReference, PipelineError> {
    let (h, w, d) = video.frame_shape();
    let (gh, gw) = grid_dims(h, w * d)?;
    let keyframes = (0..video.len())
        .map(|_| KeyframeCodes { height: gh, width: gw, tag: RAW_REFERENCE_BITS, codebook_id: 0, codes: Vec::new() })
        .collect();
    let bytes = SemanticPayload { scheme: Scheme::Raw, keyframes, caption: Vec::new() }.framed_len() as u64;
    let latency_s = channel_time((bytes * 8) as f64, budget, ccfg)?;
    Ok(RawReference { bytes, latency_s })
}

fn grid_dims(h: usize, w: usize) -> Result<(u16, u16), PipelineError> {
    match (u16::try_from(h), u16::try_from(w)) {
        (Ok(a), Ok(b)) => Ok((a, b)),
        _ => Err(PipelineError::InvalidConfig(format!("code grid {h}x{w} exceeds the 16-bit wire fields"))),
    }
}

fn encode_frame<T: Scalar>(frame: &FrameTensor<T>, scfg: &SchemeConfig, models: &CodecModels<T>) -> Result<KeyframeCodes, PipelineError> {
    let (h, w, d) = frame.shape();
    match scfg.scheme {
        Scheme::Raw => {
            let (gh, gw) = grid_dims(h, w * d)?;
            let codes = frame.as_slice().iter().map(|&v| quantize_value(v, scfg.q)).collect();
            Ok(KeyframeCodes { height: gh, width: gw, tag: u32::from(scfg.q), codebook_id: 0, codes })
        }
        Scheme::RawAe | Scheme::MirageAe => {
            let ae = models.ae(scfg.scheme)?;
            let codes = ae.latent_codes(&ae.encode(frame)?, scfg.q)?;
            let (gh, gw) = grid_dims(h, codes.len() / h)?;
            Ok(KeyframeCodes { height: gh, width: gw, tag: u32::from(scfg.q), codebook_id: 0, codes })
        }
        Scheme::MirageVq => {
            let vq = models.vq(scfg.scheme, scfg.codebook_size)?;
            let map = vq.encode_frame(frame)?;
            let (gh, gw) = grid_dims(map.height, map.width)?;
            Ok(KeyframeCodes { height: gh, width: gw, tag: scfg.codebook_size as u32, codebook_id: map.codebook_id, codes: map.indices })
        }
    }
}

fn decode_frame<T: Scalar>(
    codes: &KeyframeCodes,
    shape: (usize, usize, usize),
    scfg: &SchemeConfig,
    models: &CodecModels<T>,
) -> Result<FrameTensor<T>, PipelineError> {
    let (h, w, d) = shape;
    match scfg.scheme {
        Scheme::Raw => {
            let values = codes.codes.iter().map(|&c| dequantize_value(c, scfg.q)).collect();
            Ok(FrameTensor::new(h, w, d, values)?)
        }
        Scheme::RawAe | Scheme::MirageAe => {
            let ae = models.ae(scfg.scheme)?;
            let p = ae.encoder.patch;
            let z = ae.latents_from_codes(&codes.codes, scfg.q, h / p, w / p)?;
            Ok(ae.decode(&z)?)
        }
        Scheme::MirageVq => {
            let vq = models.vq(scfg.scheme, scfg.codebook_size)?;
            let map = IndexMap::new(codes.height as usize, codes.width as usize, codes.codes.clone(), codes.codebook_id)?;
            Ok(vq.decode_indices(&map)?)
        }
    }
}

/// Runs one scheme end to end.
///
/// Code sections cross the binary symmetric channel unprotected; keyframe
/// headers are treated as reliably delivered side information. The caption
/// goes through ARQ. Latency is every channel bit over the Shannon rate plus
/// the fixed overhead. Speedups are against [`raw_reference`].
pub fn run_scheme<T: Scalar>(
    video: &VideoTensor<T>,
    scfg: &SchemeConfig,
    models: &CodecModels<T>,
    ccfg: &ChannelConfig,
    rel: &ReliabilityConfig,
    seed: u64,
) -> Result<TransmissionRecord<T>, PipelineError> {
    scfg.validate()?;
    let budget = link_budget(ccfg)?;
    let shape = video.frame_shape();

    let frames_sent: Vec<usize> = if scfg.scheme.is_mirage() {
        select_keyframes(&score_frames(video, &scfg.selector)?, scfg.keyframe_budget())?
    } else {
        (0..video.len()).collect()
    };
    let keyframes = frames_sent.iter().map(|&i| encode_frame(&video.frames()[i], scfg, models)).collect::<Result<Vec<_>, _>>()?;
    let caption = if scfg.scheme.is_mirage() { compress_caption(scfg.caption.as_bytes()) } else { Vec::new() };
    let payload = SemanticPayload { scheme: scfg.scheme, keyframes, caption };
    let framed = frame_payload(&payload)?;
    let sizes = payload_size_report(&payload);

    // Keyframe codes: raw BER channel.
    let run_seed = indexed(seed, ccfg.seed);
    let mut rng = rng_from_seed(substream(run_seed, "channel-codes"));
    let mut bit_errors = 0u64;
    let mut received = Vec::with_capacity(payload.keyframes.len());
    for k in &payload.keyframes {
        let width = scfg.scheme.code_width(k.tag);
        let mut bits: Bitstream = pack_codes(&k.codes, width);
        bit_errors += flip_in_place(&mut bits, budget.ber, &mut rng) as u64;
        received.push(KeyframeCodes { codes: unpack_codes(&bits, width, k.codes.len()), ..k.clone() });
    }

    // Caption: ARQ.
    let (rx_caption, arq_attempts, arq_blocks, arq_bits) = if payload.caption.is_empty() {
        (Vec::new(), 0, 0, 0)
    } else {
        let bits = Bitstream::from_slice(&payload.caption);
        let out = arq_transmit(&bits, &budget, rel, substream(run_seed, "channel-caption"))?;
        (out.delivered.into_vec(), out.attempts, out.blocks, out.channel_bits)
    };
    let received_caption = if scfg.scheme.is_mirage() {
        Some(decompress_caption(&rx_caption).map(|b| String::from_utf8_lossy(&b).into_owned()).unwrap_or_default())
    } else {
        None
    };
    let caption_intact = received_caption.as_deref().is_none_or(|c| c == scfg.caption);
    let rx_payload = SemanticPayload { scheme: payload.scheme, keyframes: received, caption: rx_caption };
    let payload_intact = rx_payload == payload;

    let channel_bits = (framed.len() - payload.caption.len()) as u64 * 8 + arq_bits;
    let latency_s = channel_time(channel_bits as f64, &budget, ccfg)?;

    let reconstruction = rx_payload.keyframes.iter().map(|k| decode_frame(k, shape, scfg, models)).collect::<Result<Vec<_>, _>>()?;
    let mse = mse_many(frames_sent.iter().zip(&reconstruction).map(|(&i, r)| (video.frames()[i].as_slice(), r.as_slice())))?.as_f64();
    let (h, w, _) = shape;
    let mut record = TransmissionRecord {
        scheme: scfg.scheme,
        snr_db: ccfg.snr_db,
        bandwidth_hz: ccfg.bandwidth_hz,
        ber: budget.ber,
        q: (!scfg.scheme.is_vq()).then_some(scfg.q),
        codebook_size: scfg.scheme.is_vq().then_some(scfg.codebook_size),
        seed,
        code_bits: sizes.code_bits,
        caption_bits: sizes.caption_bits,
        semantic_bits: sizes.semantic_bits,
        overhead_bits: sizes.overhead_bits,
        transmitted_bytes: sizes.total_bytes,
        channel_bits,
        latency_s,
        arq_attempts,
        arq_blocks,
        bit_errors,
        received_caption,
        caption_intact,
        payload_intact,
        quality: QualityReport {
            mse,
            psnr_db: psnr(mse),
            bpp: bpp(sizes.code_bits, h, w) / frames_sent.len() as f64,
            data_speedup: 1.0,
            latency_speedup: 1.0,
        },
        frames_sent,
        reconstruction,
    };
    let (ds, ls) = speedups(&record, &raw_reference(video, &budget, ccfg)?)?;
    record.quality.data_speedup = ds;
    record.quality.latency_speedup = ls;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::synthetic_video;

    fn clean_channel() -> ChannelConfig {
        ChannelConfig::new(100.0, 20e6, 0.002, 0).unwrap()
    }

    #[test]
    fn raw_noiseless_is_quantization_only() {
        let video: VideoTensor<f64> = synthetic_video(2, 8, 8, 1);
        let r =
            run_scheme(&video, &SchemeConfig::raw(8), &CodecModels::default(), &clean_channel(), &ReliabilityConfig::default(), 3).unwrap();
        assert_eq!(r.ber, 0.0);
        assert!(r.payload_intact);
        assert_eq!(r.bit_errors, 0);
        assert!(r.quality.mse <= (1.0f64 / 510.0).powi(2));
        assert_eq!(r.quality.bpp, 24.0);
        assert_eq!((r.quality.data_speedup, r.quality.latency_speedup), (1.0, 1.0));
        assert!(r.received_caption.is_none());
    }

    #[test]
    fn missing_model_is_reported() {
        let video: VideoTensor<f64> = synthetic_video(2, 8, 8, 1);
        let err = run_scheme(&video, &SchemeConfig::raw_ae(8), &CodecModels::default(), &clean_channel(), &ReliabilityConfig::default(), 3);
        assert!(matches!(err, Err(PipelineError::MissingModel(Scheme::RawAe, _))));
    }

    #[test]
    fn mirage_ae_sends_keyframes_and_caption() {
        let video: VideoTensor<f64> = synthetic_video(4, 8, 8, 1);
        let cfg = SchemeConfig::mirage_ae(8, 2, "waves drift left");
        let models = CodecModels::fit_for(video.frames(), std::slice::from_ref(&cfg), 0).unwrap();
        let r = run_scheme(&video, &cfg, &models, &clean_channel(), &ReliabilityConfig::default(), 3).unwrap();
        assert_eq!(r.frames_sent.len(), 2);
        assert_eq!(r.code_bits, 2 * 8 * 8 * 16);
        assert_eq!(r.quality.bpp, 16.0);
        assert!(r.caption_intact && r.payload_intact);
        assert_eq!(r.received_caption.as_deref(), Some("waves drift left"));
        assert!(r.latency_s > 0.002);
    }

    #[test]
    fn deterministic_given_seed() {
        let video: VideoTensor<f64> = synthetic_video(2, 8, 8, 1);
        let ch = ChannelConfig::new(0.0, 1e6, 0.0, 0).unwrap();
        let a = run_scheme(&video, &SchemeConfig::raw(8), &CodecModels::default(), &ch, &ReliabilityConfig::default(), 11).unwrap();
        let b = run_scheme(&video, &SchemeConfig::raw(8), &CodecModels::default(), &ch, &ReliabilityConfig::default(), 11).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.bit_errors > 0);
        assert!(!a.payload_intact);
    }
}
