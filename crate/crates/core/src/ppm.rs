//! Binary PPM (P6) frame I/O. Samples map to bytes as `round(v * 255)`.

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::tensor::{FrameTensor, TensorError};

#[derive(Debug, Error)]
pub enum PpmError {
    #[error("not a binary PPM (P6) image")]
    NotP6,
    #[error("PPM frames need 3 channels, got {0}")]
    Channels(usize),
    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub fn encode_ppm<T: Scalar>(frame: &FrameTensor<T>) -> Result<Vec<u8>, PpmError> {
    if frame.channels() != 3 {
        return Err(PpmError::Channels(frame.channels()));
    }
    let bytes: Vec<u8> = frame.as_slice().iter().map(|v| (v.as_f64() * 255.0).round() as u8).collect();
    let mut out = Vec::with_capacity(bytes.len() + 20);
    PnmEncoder::new(&mut out).with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary)).write_image(
        &bytes,
        frame.width() as u32,
        frame.height() as u32,
        ExtendedColorType::Rgb8,
    )?;
    Ok(out)
}

pub fn decode_ppm<T: Scalar>(bytes: &[u8]) -> Result<FrameTensor<T>, PpmError> {
    if !bytes.starts_with(b"P6") {
        return Err(PpmError::NotP6);
    }
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Pnm)?.to_rgb8();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(|b| T::lit(b as f64 / 255.0)).collect();
    Ok(FrameTensor::new(h as usize, w as usize, 3, data)?)
}
