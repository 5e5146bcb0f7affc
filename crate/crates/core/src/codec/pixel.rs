use crate::bits::{pack_codes, unpack_codes, Bitstream};
use crate::scalar::Scalar;
use crate::tensor::FrameTensor;

use super::CodecError;

/// Largest code of a `q`-bit uniform quantizer.
pub fn max_code(q: u8) -> u32 {
    ((1u64 << q) - 1) as u32
}

pub(crate) fn check_bits(q: u8) -> Result<(), CodecError> {
    if (1..=16).contains(&q) {
        Ok(())
    } else {
        Err(CodecError::InvalidBits(q))
    }
}

/// Maps `v` in `[0, 1]` to `round(v (2^q - 1))`.
pub fn quantize_value<T: Scalar>(v: T, q: u8) -> u32 {
    let levels = T::lit(f64::from(max_code(q)));
    let v = crate::tensor::clamp_unit(v);
    (v * levels).round().to_u32().unwrap_or(0).min(max_code(q))
}

pub fn dequantize_value<T: Scalar>(code: u32, q: u8) -> T {
    let code = code.min(max_code(q));
    T::lit(f64::from(code)) / T::lit(f64::from(max_code(q)))
}

/// Uniform `q`-bit quantization of every sample. Returns the packed codes
/// (`q` bits per sample, MSB first) and the dequantized frame.
pub fn quantize_pixels<T: Scalar>(frame: &FrameTensor<T>, q: u8) -> Result<(Bitstream, FrameTensor<T>), CodecError> {
    check_bits(q)?;
    let codes: Vec<u32> = frame.as_slice().iter().map(|&v| quantize_value(v, q)).collect();
    let recon = codes.iter().map(|&c| dequantize_value(c, q)).collect();
    let (h, w, d) = frame.shape();
    Ok((pack_codes(&codes, u32::from(q)), FrameTensor::new(h, w, d, recon)?))
}

/// Rebuilds a frame from packed `q`-bit sample codes.
pub fn dequantize_pixels<T: Scalar>(
    bits: &Bitstream,
    q: u8,
    height: usize,
    width: usize,
    channels: usize,
) -> Result<FrameTensor<T>, CodecError> {
    check_bits(q)?;
    let count = height * width * channels;
    if bits.len() < count * q as usize {
        return Err(CodecError::DimensionMismatch(format!("{} bits cannot hold {count} samples of {q} bits", bits.len())));
    }
    let values = unpack_codes(bits, u32::from(q), count).into_iter().map(|c| dequantize_value(c, q)).collect();
    Ok(FrameTensor::new(height, width, channels, values)?)
}
