use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::CodecError;

pub const CODEBOOK_MAGIC: &[u8; 4] = b"MRGC";
pub const CODEBOOK_VERSION: u8 = 1;

/// Bits needed for a fixed-length index into `k` codewords, `ceil(log2 k)`.
pub fn index_width(k: usize) -> u32 {
    if k <= 1 {
        0
    } else {
        usize::BITS - (k - 1).leading_zeros()
    }
}

/// Shared VQ codebook `{e_1 .. e_K}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook<T> {
    size: usize,
    dim: usize,
    codewords: Vec<T>,
    id: u32,
}

impl<T: Scalar> Codebook<T> {
    /// Builds a codebook from `size * dim` row-major values. The identifier is
    /// derived from the codewords as stored on disk (f32), so it survives a
    /// save/load cycle.
    pub fn new(size: usize, dim: usize, codewords: Vec<T>) -> Result<Self, CodecError> {
        if size < 2 {
            return Err(CodecError::InvalidCodebook(format!("K = {size}, need at least 2")));
        }
        if dim == 0 || dim > u16::MAX as usize || size > u32::MAX as usize {
            return Err(CodecError::InvalidCodebook(format!("unsupported shape {size}x{dim}")));
        }
        if codewords.len() != size * dim {
            return Err(CodecError::InvalidCodebook(format!("{} values for {size} codewords of dim {dim}", codewords.len())));
        }
        if codewords.iter().any(|v| !v.is_finite()) {
            return Err(CodecError::InvalidCodebook("non-finite codeword".into()));
        }
        let id = crc32fast::hash(&body_bytes(size, dim, &codewords));
        Ok(Self { size, dim, codewords, id })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn index_width(&self) -> u32 {
        index_width(self.size)
    }

    pub fn codeword(&self, k: usize) -> &[T] {
        &self.codewords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn codewords(&self) -> &[T] {
        &self.codewords
    }

    pub(crate) fn codewords_mut(&mut self) -> &mut [T] {
        &mut self.codewords
    }

    /// Recomputes the identifier after in-place codeword updates.
    pub(crate) fn refresh_id(&mut self) {
        self.id = crc32fast::hash(&body_bytes(self.size, self.dim, &self.codewords));
    }

    /// Index of the nearest codeword in squared Euclidean distance, lowest
    /// index on ties, together with that distance.
    pub fn nearest(&self, z: &[T]) -> (usize, T) {
        let mut best = (0, T::infinity());
        for (k, e) in self.codewords.chunks_exact(self.dim).enumerate() {
            let d = sq_dist(z, e);
            if d < best.1 {
                best = (k, d);
            }
        }
        best
    }

    /// Serializes as `MRGC | version | K u32 | d u16 | f32 codewords | crc32`,
    /// all big-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = body_bytes(self.size, self.dim, &self.codewords);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        const HEADER: usize = 4 + 1 + 4 + 2;
        if bytes.len() < HEADER + 4 {
            return Err(CodecError::CodebookFormat("truncated header".into()));
        }
        if &bytes[..4] != CODEBOOK_MAGIC {
            return Err(CodecError::CodebookFormat("bad magic".into()));
        }
        if bytes[4] != CODEBOOK_VERSION {
            return Err(CodecError::CodebookFormat(format!("unsupported version {}", bytes[4])));
        }
        let k = u32::from_be_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let d = u16::from_be_bytes(bytes[9..11].try_into().unwrap()) as usize;
        let body_len = HEADER + k * d * 4;
        if bytes.len() != body_len + 4 {
            return Err(CodecError::CodebookFormat(format!("expected {} bytes for K={k}, d={d}, found {}", body_len + 4, bytes.len())));
        }
        let stored = u32::from_be_bytes(bytes[body_len..].try_into().unwrap());
        if crc32fast::hash(&bytes[..body_len]) != stored {
            return Err(CodecError::CodebookFormat("crc mismatch".into()));
        }
        let values =
            bytes[HEADER..body_len].chunks_exact(4).map(|c| T::lit(f64::from(f32::from_be_bytes(c.try_into().unwrap())))).collect();
        Self::new(k, d, values)
    }

    pub fn cast<U: Scalar>(&self) -> Codebook<U> {
        Codebook::new(self.size, self.dim, self.codewords.iter().map(|v| U::lit(v.as_f64())).collect()).expect("valid codebook stays valid")
    }
}

fn body_bytes<T: Scalar>(size: usize, dim: usize, codewords: &[T]) -> Vec<u8> {
    let mut out = Vec::with_capacity(11 + codewords.len() * 4);
    out.extend_from_slice(CODEBOOK_MAGIC);
    out.push(CODEBOOK_VERSION);
    out.extend_from_slice(&(size as u32).to_be_bytes());
    out.extend_from_slice(&(dim as u16).to_be_bytes());
    for v in codewords {
        out.extend_from_slice(&(v.as_f64() as f32).to_be_bytes());
    }
    out
}

#[inline]
pub(crate) fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| {
        let d = *x - *y;
        acc + d * d
    })
}
