use crate::scalar::Scalar;
use crate::tensor::FrameTensor;

use super::affine::PatchDecoder;
use super::codebook::{index_width, Codebook};
use super::latent::{IndexMap, LatentGrid};
use super::CodecError;

/// Nearest-codeword assignment `s^j = argmin_k ||z_e^j - e_k||^2`.
pub fn vq_encode<T: Scalar>(z: &LatentGrid<T>, cb: &Codebook<T>) -> Result<IndexMap, CodecError> {
    if z.channels() != cb.dim() {
        return Err(CodecError::DimensionMismatch(format!("latent dim {} vs codebook dim {}", z.channels(), cb.dim())));
    }
    let indices = z.vectors().map(|v| cb.nearest(v).0 as u32).collect();
    IndexMap::new(z.height(), z.width(), indices, cb.id())
}

/// Looks up codewords (saturating indices at `K - 1`) without decoding.
pub fn lookup<T: Scalar>(s: &IndexMap, cb: &Codebook<T>) -> Result<LatentGrid<T>, CodecError> {
    if s.codebook_id != cb.id() {
        return Err(CodecError::UnknownCodebook { expected: cb.id(), found: s.codebook_id });
    }
    let last = cb.size() - 1;
    let mut values = Vec::with_capacity(s.indices.len() * cb.dim());
    for &i in &s.indices {
        values.extend_from_slice(cb.codeword((i as usize).min(last)));
    }
    LatentGrid::new(cb.dim(), s.height, s.width, values)
}

/// Reconstruction `D(e_s)` clamped to `[0, 1]`.
pub fn vq_decode<T: Scalar>(s: &IndexMap, cb: &Codebook<T>, decoder: &PatchDecoder<T>) -> Result<FrameTensor<T>, CodecError> {
    decoder.decode(&lookup(s, cb)?)
}

/// Fixed-length index cost `h * w * ceil(log2 K)` in bits.
pub fn vq_cost_bits(h: usize, w: usize, k: usize) -> u64 {
    (h * w) as u64 * u64::from(index_width(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::affine::AffineMap;

    fn cb_1d(points: &[f64]) -> Codebook<f64> {
        Codebook::new(points.len(), 1, points.to_vec()).unwrap()
    }

    #[test]
    fn nearest_neighbour_examples() {
        let cb = cb_1d(&[0.0, 1.0]);
        let z = LatentGrid::new(1, 1, 1, vec![0.9]).unwrap();
        assert_eq!(vq_encode(&z, &cb).unwrap().indices, vec![1]);
        let cb = cb_1d(&[0.2, 0.4, 0.6, 0.8]);
        let z = LatentGrid::new(1, 1, 4, vec![0.8, 0.6, 0.4, 0.2]).unwrap();
        assert_eq!(vq_encode(&z, &cb).unwrap().indices, vec![3, 2, 1, 0]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let cb = cb_1d(&[0.0, 1.0]);
        let z = LatentGrid::new(1, 1, 1, vec![0.5]).unwrap();
        assert_eq!(vq_encode(&z, &cb).unwrap().indices, vec![0]);
    }

    #[test]
    fn dimension_checks() {
        let cb = cb_1d(&[0.0, 1.0]);
        let z = LatentGrid::new(2, 1, 1, vec![0.5, 0.5]).unwrap();
        assert!(matches!(vq_encode(&z, &cb), Err(CodecError::DimensionMismatch(_))));
    }

    #[test]
    fn identity_decoder_returns_codewords_and_saturates() {
        let cb = cb_1d(&[0.1, 0.3, 0.7]);
        let dec = PatchDecoder { patch: 1, channels: 1, map: AffineMap::identity(1) };
        let s = IndexMap::new(1, 4, vec![2, 0, 1, 250], cb.id()).unwrap();
        let frame = vq_decode(&s, &cb, &dec).unwrap();
        assert_eq!(frame.as_slice(), &[0.7, 0.1, 0.3, 0.7]);
    }

    #[test]
    fn foreign_index_maps_are_refused() {
        let cb = cb_1d(&[0.1, 0.3]);
        let dec = PatchDecoder { patch: 1, channels: 1, map: AffineMap::identity(1) };
        let s = IndexMap::new(1, 1, vec![0], cb.id() ^ 1).unwrap();
        assert!(matches!(vq_decode(&s, &cb, &dec), Err(CodecError::UnknownCodebook { .. })));
    }

    #[test]
    fn cost_examples() {
        assert_eq!(vq_cost_bits(16, 16, 256), 2048);
        assert_eq!(vq_cost_bits(16, 16, 1024), 2560);
        assert_eq!(vq_cost_bits(7, 3, 2), 21);
    }
}
