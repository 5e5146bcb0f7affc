use std::f64::consts::TAU;

use rand::Rng;

use crate::rng::{rng_from_seed, substream};
use crate::scalar::Scalar;
use crate::tensor::{FrameTensor, VideoTensor};

/// Frame rate of [`synthetic_video`].
const SYNTHETIC_FPS: f64 = 25.0;

/// Seeded moving-gradient RGB test video: per-channel sinusoidal ramps whose
/// orientation, frequency and drift speed are drawn from `seed`.
pub fn synthetic_video<T: Scalar>(frames: usize, height: usize, width: usize, seed: u64) -> VideoTensor<T> {
    assert!(frames > 0 && height > 0 && width > 0, "synthetic video needs positive dimensions");
    let mut rng = rng_from_seed(substream(seed, "synthetic-video"));
    let params: Vec<[f64; 5]> = (0..3)
        .map(|_| {
            [
                rng.random_range(0.5..2.0),   // cycles across x
                rng.random_range(0.5..2.0),   // cycles across y
                rng.random_range(0.02..0.08), // cycles per frame
                rng.random_range(0.0..TAU),   // phase
                rng.random_range(0.25..0.45), // amplitude
            ]
        })
        .collect();
    let out = (0..frames)
        .map(|t| {
            let mut data = Vec::with_capacity(height * width * 3);
            for y in 0..height {
                let v = y as f64 / height as f64;
                for x in 0..width {
                    let u = x as f64 / width as f64;
                    for p in &params {
                        let arg = TAU * (p[0] * u + p[1] * v - p[2] * t as f64) + p[3];
                        data.push(T::lit(0.5 + p[4] * arg.sin()));
                    }
                }
            }
            FrameTensor::new(height, width, 3, data).expect("samples lie in [0.05, 0.95]")
        })
        .collect();
    VideoTensor::new(out, SYNTHETIC_FPS).expect("uniform frames")
}
