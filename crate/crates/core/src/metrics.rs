//! Fidelity and efficiency metrics. Samples are normalised, so the PSNR peak
//! is 1.0, and a kilobyte is 1024 bytes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("shape mismatch: {left} vs {right} samples")]
    ShapeMismatch { left: usize, right: usize },
    #[error("cannot compute a metric over zero samples")]
    Empty,
    #[error("zero or negative denominator in {0}")]
    ZeroDenominator(&'static str),
}

pub const BYTES_PER_KB: f64 = 1024.0;

/// Mean of squared element differences.
pub fn mse<T: Scalar>(a: &[T], b: &[T]) -> Result<T, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::ShapeMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(MetricsError::Empty);
    }
    let sum = a.iter().zip(b).fold(T::zero(), |acc, (x, y)| {
        let d = *x - *y;
        acc + d * d
    });
    Ok(sum / T::lit(a.len() as f64))
}

/// MSE over several frame pairs, weighted by sample count.
pub fn mse_many<'a, T: Scalar>(pairs: impl IntoIterator<Item = (&'a [T], &'a [T])>) -> Result<T, MetricsError> {
    let mut sum = T::zero();
    let mut count = 0usize;
    for (a, b) in pairs {
        let m = mse(a, b)?;
        sum = sum + m * T::lit(a.len() as f64);
        count += a.len();
    }
    if count == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(sum / T::lit(count as f64))
}

/// `-10 log10(mse)` for unit peak; `+inf` when `mse == 0`.
pub fn psnr<T: Scalar>(mse: T) -> T {
    if mse == T::zero() {
        T::infinity()
    } else {
        -T::lit(10.0) * mse.log10()
    }
}

/// Semantic bits per source pixel.
pub fn bpp(semantic_bits: u64, height: usize, width: usize) -> f64 {
    semantic_bits as f64 / (height * width) as f64
}

/// Anything with a transmitted size and an end-to-end latency.
pub trait TransferCost {
    fn transmitted_bytes(&self) -> f64;
    fn latency_s(&self) -> f64;
}

/// `(baseline_bytes / bytes, baseline_latency / latency)`.
pub fn speedups<R: TransferCost + ?Sized, B: TransferCost + ?Sized>(record: &R, baseline: &B) -> Result<(f64, f64), MetricsError> {
    let (rb, rl) = (record.transmitted_bytes(), record.latency_s());
    let (bb, bl) = (baseline.transmitted_bytes(), baseline.latency_s());
    if !(rb > 0.0) || !(bb > 0.0) {
        return Err(MetricsError::ZeroDenominator("data speedup"));
    }
    if !(rl > 0.0) || !(bl > 0.0) {
        return Err(MetricsError::ZeroDenominator("latency speedup"));
    }
    Ok((bb / rb, bl / rl))
}

/// Per-run fidelity and efficiency summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub mse: f64,
    /// `+inf` is written to JSON as the string `"inf"`.
    #[serde(with = "crate::serde_inf")]
    pub psnr_db: f64,
    pub bpp: f64,
    pub data_speedup: f64,
    pub latency_speedup: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Cost(f64, f64);

    impl TransferCost for Cost {
        fn transmitted_bytes(&self) -> f64 {
            self.0
        }
        fn latency_s(&self) -> f64 {
            self.1
        }
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[0.2f64, 0.4], &[0.2, 0.4]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0f32; 5], &[1.0; 5]).unwrap(), 1.0);
        assert!(matches!(mse(&[0.0f64], &[0.0, 1.0]), Err(MetricsError::ShapeMismatch { .. })));
    }

    #[test]
    fn psnr_examples() {
        assert!((psnr(0.01f64) - 20.0).abs() < 1e-12);
        assert_eq!(psnr(1.0f64), 0.0);
        assert_eq!(psnr(0.0f64), f64::INFINITY);
    }

    #[test]
    fn psnr_strictly_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 1..1000 {
            let v = psnr(i as f64 * 1e-3);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn bpp_examples() {
        assert_eq!(bpp(2048, 256, 256), 0.03125);
        assert_eq!(bpp(256 * 256 * 24, 256, 256), 24.0);
        assert_eq!(bpp(256 * 256 * 16, 256, 256), 16.0);
    }

    #[test]
    fn speedup_examples() {
        let raw = Cost(32415.88 * BYTES_PER_KB, 1.0);
        let (d, _) = speedups(&Cost(128.40 * BYTES_PER_KB, 1.0), &raw).unwrap();
        assert!((d - 252.46).abs() < 0.01, "{d}");
        let (d, _) = speedups(&Cost(21615.02 * BYTES_PER_KB, 1.0), &raw).unwrap();
        assert!((d - 1.4997).abs() < 1e-4);
        assert_eq!(speedups(&raw, &raw).unwrap(), (1.0, 1.0));
        assert!(speedups(&Cost(0.0, 1.0), &raw).is_err());
    }
}
