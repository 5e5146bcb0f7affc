use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TransportError;
use crate::bits::{pack_codes, to_bytes, unpack_codes, Bitstream};
use crate::codec::index_width;

pub const PAYLOAD_MAGIC: &[u8; 4] = b"MRG1";
pub const PAYLOAD_VERSION: u8 = 1;

const HEADER_BYTES: usize = 8;
const KEYFRAME_HEADER_BYTES: usize = 12;
const CAPTION_LEN_BYTES: usize = 4;
const CRC_BYTES: usize = 4;
const MAX_CODE_BITS: u32 = 32;

/// Transmission scheme. The wire tag is the declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Raw,
    RawAe,
    MirageAe,
    MirageVq,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Raw, Scheme::RawAe, Scheme::MirageAe, Scheme::MirageVq];

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Result<Self, TransportError> {
        Self::ALL.get(tag as usize).copied().ok_or(TransportError::BadScheme(tag))
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Raw => "raw",
            Scheme::RawAe => "raw-ae",
            Scheme::MirageAe => "mirage-ae",
            Scheme::MirageVq => "mirage-vq",
        }
    }

    /// Mirage schemes send keyframes plus a caption instead of every frame.
    pub fn is_mirage(self) -> bool {
        matches!(self, Scheme::MirageAe | Scheme::MirageVq)
    }

    pub fn is_vq(self) -> bool {
        self == Scheme::MirageVq
    }

    /// Bits per code for a keyframe tagged with `tag` (K for VQ, q otherwise).
    pub fn code_width(self, tag: u32) -> u32 {
        if self.is_vq() {
            index_width(tag as usize)
        } else {
            tag
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown scheme {s:?} (expected raw, raw-ae, mirage-ae or mirage-vq)"))
    }
}

/// One keyframe's code grid: `height * width` codes, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyframeCodes {
    pub height: u16,
    pub width: u16,
    /// Codebook size K for VQ, quantization bits q otherwise.
    pub tag: u32,
    /// Zero when no codebook is involved.
    pub codebook_id: u32,
    pub codes: Vec<u32>,
}

impl KeyframeCodes {
    pub fn code_count(&self) -> usize {
        self.height as usize * self.width as usize
    }

    pub fn code_bits(&self, scheme: Scheme) -> u64 {
        self.code_count() as u64 * scheme.code_width(self.tag) as u64
    }

    fn section_bytes(&self, scheme: Scheme) -> usize {
        self.code_bits(scheme).div_ceil(8) as usize
    }

    fn validate(&self, scheme: Scheme) -> Result<(), TransportError> {
        let invalid = |m: String| Err(TransportError::InvalidPayload(m));
        if scheme.is_vq() {
            if self.tag < 2 {
                return invalid(format!("codebook size {} < 2", self.tag));
            }
        } else if self.tag == 0 || self.tag > MAX_CODE_BITS {
            return invalid(format!("quantization bits {} outside 1..={MAX_CODE_BITS}", self.tag));
        }
        if self.codes.len() != self.code_count() {
            return invalid(format!("{} codes for a {}x{} grid", self.codes.len(), self.height, self.width));
        }
        let width = scheme.code_width(self.tag);
        if width < 32 {
            if let Some(c) = self.codes.iter().find(|&&c| c >> width != 0) {
                return invalid(format!("code {c} does not fit in {width} bits"));
            }
        }
        Ok(())
    }
}

/// Keyframe codes plus the compressed caption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticPayload {
    pub scheme: Scheme,
    pub keyframes: Vec<KeyframeCodes>,
    /// Compressed caption bytes; empty for schemes without a caption.
    pub caption: Vec<u8>,
}

impl SemanticPayload {
    pub fn validate(&self) -> Result<(), TransportError> {
        if self.keyframes.len() > u16::MAX as usize {
            return Err(TransportError::InvalidPayload(format!("{} keyframes exceed the 16-bit count", self.keyframes.len())));
        }
        if self.caption.len() > u32::MAX as usize {
            return Err(TransportError::InvalidPayload("caption longer than 4 GiB".into()));
        }
        self.keyframes.iter().try_for_each(|k| k.validate(self.scheme))
    }

    pub fn code_bits(&self) -> u64 {
        self.keyframes.iter().map(|k| k.code_bits(self.scheme)).sum()
    }

    pub fn caption_bits(&self) -> u64 {
        self.caption.len() as u64 * 8
    }

    /// Length of the framed stream in bytes.
    pub fn framed_len(&self) -> usize {
        HEADER_BYTES
            + self.keyframes.iter().map(|k| KEYFRAME_HEADER_BYTES + k.section_bytes(self.scheme)).sum::<usize>()
            + CAPTION_LEN_BYTES
            + self.caption.len()
            + CRC_BYTES
    }
}

/// Serializes a payload to its wire form, CRC included.
pub fn frame_payload(payload: &SemanticPayload) -> Result<Vec<u8>, TransportError> {
    payload.validate()?;
    let mut out = Vec::with_capacity(payload.framed_len());
    out.extend_from_slice(PAYLOAD_MAGIC);
    out.push(PAYLOAD_VERSION);
    out.push(payload.scheme.tag());
    out.extend_from_slice(&(payload.keyframes.len() as u16).to_be_bytes());
    for k in &payload.keyframes {
        out.extend_from_slice(&k.height.to_be_bytes());
        out.extend_from_slice(&k.width.to_be_bytes());
        out.extend_from_slice(&k.tag.to_be_bytes());
        out.extend_from_slice(&k.codebook_id.to_be_bytes());
        let packed: Bitstream = pack_codes(&k.codes, payload.scheme.code_width(k.tag));
        out.extend_from_slice(&to_bytes(&packed));
    }
    out.extend_from_slice(&(payload.caption.len() as u32).to_be_bytes());
    out.extend_from_slice(&payload.caption);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_be_bytes());
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TransportError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or(TransportError::Truncated { needed: self.pos.saturating_add(n), available: self.buf.len() })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, TransportError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, TransportError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, TransportError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

/// Parses a framed stream. The CRC is checked before any field is trusted, so
/// any corruption of a complete frame reports a CRC mismatch.
pub fn parse_payload(stream: &[u8]) -> Result<SemanticPayload, TransportError> {
    let min = HEADER_BYTES + CAPTION_LEN_BYTES + CRC_BYTES;
    if stream.len() < min {
        return Err(TransportError::Truncated { needed: min, available: stream.len() });
    }
    let (body, crc_bytes) = stream.split_at(stream.len() - CRC_BYTES);
    let stored = u32::from_be_bytes(crc_bytes.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(TransportError::CrcMismatch { stored, computed });
    }

    let mut r = Reader { buf: body, pos: 0 };
    if r.take(4)? != PAYLOAD_MAGIC {
        return Err(TransportError::BadMagic);
    }
    let version = r.u8()?;
    if version != PAYLOAD_VERSION {
        return Err(TransportError::BadVersion(version));
    }
    let scheme = Scheme::from_tag(r.u8()?)?;
    let count = r.u16()?;
    let mut keyframes = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let height = r.u16()?;
        let width = r.u16()?;
        let tag = r.u32()?;
        let codebook_id = r.u32()?;
        let mut k = KeyframeCodes { height, width, tag, codebook_id, codes: Vec::new() };
        let code_width = scheme.code_width(tag);
        if code_width == 0 || code_width > MAX_CODE_BITS {
            return Err(TransportError::InvalidPayload(format!("code width {code_width} for tag {tag}")));
        }
        let section = r.take(k.section_bytes(scheme))?;
        let bits = Bitstream::from_slice(section);
        k.codes = unpack_codes(&bits, code_width, k.code_count());
        keyframes.push(k);
    }
    let caption_len = r.u32()? as usize;
    let caption = r.take(caption_len)?.to_vec();
    if r.pos != body.len() {
        return Err(TransportError::InvalidPayload(format!("{} trailing bytes", body.len() - r.pos)));
    }
    let payload = SemanticPayload { scheme, keyframes, caption };
    payload.validate()?;
    Ok(payload)
}

/// Size accounting for one payload. Semantic bits are code bits plus caption
/// bits; everything else on the wire (headers, padding, length, CRC) is overhead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeReport {
    pub code_bits: u64,
    pub caption_bits: u64,
    pub semantic_bits: u64,
    pub overhead_bits: u64,
    pub total_bytes: u64,
}

impl SizeReport {
    pub fn semantic_kb(&self) -> f64 {
        self.semantic_bits as f64 / 8.0 / crate::metrics::BYTES_PER_KB
    }

    pub fn total_kb(&self) -> f64 {
        self.total_bytes as f64 / crate::metrics::BYTES_PER_KB
    }
}

pub fn payload_size_report(payload: &SemanticPayload) -> SizeReport {
    let code_bits = payload.code_bits();
    let caption_bits = payload.caption_bits();
    let semantic_bits = code_bits + caption_bits;
    let total_bytes = payload.framed_len() as u64;
    SizeReport { code_bits, caption_bits, semantic_bits, overhead_bits: total_bytes * 8 - semantic_bits, total_bytes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::vq_cost_bits;
    use proptest::prelude::*;

    fn vq_payload(h: u16, w: u16, k: u32, caption: &[u8]) -> SemanticPayload {
        let n = h as usize * w as usize;
        let codes = (0..n as u32).map(|i| i % k).collect();
        SemanticPayload {
            scheme: Scheme::MirageVq,
            keyframes: vec![KeyframeCodes { height: h, width: w, tag: k, codebook_id: 0xDEADBEEF, codes }],
            caption: caption.to_vec(),
        }
    }

    #[test]
    fn vq_section_is_2048_bits() {
        let p = vq_payload(16, 16, 256, b"");
        let framed = frame_payload(&p).unwrap();
        let section = framed.len() - HEADER_BYTES - KEYFRAME_HEADER_BYTES - CAPTION_LEN_BYTES - CRC_BYTES;
        assert_eq!(section * 8, 2048);
        let r = payload_size_report(&p);
        assert_eq!(r.semantic_bits, 2048);
        assert_eq!(r.semantic_kb(), 0.25);
        assert_eq!(r.semantic_bits, vq_cost_bits(16, 16, 256));
    }

    #[test]
    fn ae_frame_is_128_kb() {
        // 2 latents per pixel at 8 bits each.
        let p = SemanticPayload {
            scheme: Scheme::MirageAe,
            keyframes: vec![KeyframeCodes { height: 256, width: 512, tag: 8, codebook_id: 0, codes: vec![7; 256 * 512] }],
            caption: vec![],
        };
        let r = payload_size_report(&p);
        assert_eq!(r.semantic_bits / 8, 131072);
        assert_eq!(r.semantic_kb(), 128.0);
    }

    #[test]
    fn empty_caption_is_pure_overhead() {
        let p = SemanticPayload { scheme: Scheme::MirageVq, keyframes: vec![], caption: vec![] };
        let r = payload_size_report(&p);
        assert_eq!(r.semantic_bits, 0);
        assert_eq!(r.total_bytes as usize, HEADER_BYTES + CAPTION_LEN_BYTES + CRC_BYTES);
        assert_eq!(r.overhead_bits, r.total_bytes * 8);
        assert_eq!(parse_payload(&frame_payload(&p).unwrap()).unwrap(), p);
    }

    #[test]
    fn error_kinds() {
        let p = vq_payload(2, 3, 5, b"hi");
        let framed = frame_payload(&p).unwrap();
        assert_eq!(parse_payload(&framed).unwrap(), p);
        assert!(matches!(parse_payload(&framed[..10]), Err(TransportError::Truncated { .. }) | Err(TransportError::CrcMismatch { .. })));
        assert!(matches!(parse_payload(&framed[..5]), Err(TransportError::Truncated { .. })));

        let reseal = |mut body: Vec<u8>| {
            body.truncate(body.len() - 4);
            let crc = crc32fast::hash(&body);
            body.extend_from_slice(&crc.to_be_bytes());
            body
        };
        let mut bad = framed.clone();
        bad[0] = b'X';
        assert_eq!(parse_payload(&reseal(bad)), Err(TransportError::BadMagic));
        let mut bad = framed.clone();
        bad[4] = 9;
        assert_eq!(parse_payload(&reseal(bad)), Err(TransportError::BadVersion(9)));
        let mut bad = framed.clone();
        bad[5] = 7;
        assert_eq!(parse_payload(&reseal(bad)), Err(TransportError::BadScheme(7)));
    }

    #[test]
    fn invalid_payloads_are_refused() {
        let mut p = vq_payload(2, 2, 4, b"");
        p.keyframes[0].codes[0] = 4;
        assert!(frame_payload(&p).is_err());
        p.keyframes[0].codes.pop();
        assert!(frame_payload(&p).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
            assert_eq!(Scheme::from_tag(s.tag()).unwrap(), s);
        }
        assert!("vq".parse::<Scheme>().is_err());
    }

    fn arb_payload() -> impl Strategy<Value = SemanticPayload> {
        let scheme = prop::sample::select(Scheme::ALL.to_vec());
        (
            scheme,
            prop::collection::vec((1u16..6, 1u16..6, 1u32..12, any::<u32>(), any::<u64>()), 0..4),
            prop::collection::vec(any::<u8>(), 0..64),
        )
            .prop_map(|(scheme, frames, caption)| {
                let keyframes = frames
                    .into_iter()
                    .map(|(h, w, t, id, seed)| {
                        let tag = if scheme.is_vq() { t + 1 } else { t };
                        let width = scheme.code_width(tag);
                        let n = h as usize * w as usize;
                        let codes = (0..n as u64)
                            .map(|i| {
                                let v = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(i.wrapping_mul(0xBF58476D1CE4E5B9)) >> 20;
                                let c = (v & ((1u64 << width) - 1)) as u32;
                                if scheme.is_vq() {
                                    c % tag
                                } else {
                                    c
                                }
                            })
                            .collect();
                        KeyframeCodes { height: h, width: w, tag, codebook_id: id, codes }
                    })
                    .collect();
                SemanticPayload { scheme, keyframes, caption }
            })
    }

    proptest! {
        #[test]
        fn round_trip(p in arb_payload()) {
            let framed = frame_payload(&p).unwrap();
            prop_assert_eq!(framed.len(), p.framed_len());
            prop_assert_eq!(parse_payload(&framed).unwrap(), p);
        }

        #[test]
        fn single_flip_detected(p in arb_payload(), pos in any::<prop::sample::Index>()) {
            let mut framed = frame_payload(&p).unwrap();
            let bit = pos.index(framed.len() * 8);
            framed[bit / 8] ^= 0x80 >> (bit % 8);
            let is_crc_mismatch = matches!(parse_payload(&framed), Err(TransportError::CrcMismatch { .. }));
            prop_assert!(is_crc_mismatch);
        }
    }
}
