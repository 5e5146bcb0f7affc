use serde::{Deserialize, Serialize};

use super::erfc::erfc;
use super::ChannelError;

/// AWGN link parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub bandwidth_hz: f64,
    /// Per-transmission protocol setup time added to every latency, seconds.
    pub fixed_overhead_s: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(snr_db: f64, bandwidth_hz: f64, fixed_overhead_s: f64, seed: u64) -> Result<Self, ChannelError> {
        let cfg = Self { snr_db, bandwidth_hz, fixed_overhead_s, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !self.snr_db.is_finite() {
            return Err(ChannelError::InvalidConfig("snr_db must be finite".into()));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(ChannelError::InvalidConfig("bandwidth_hz must be positive".into()));
        }
        if !(self.fixed_overhead_s.is_finite() && self.fixed_overhead_s >= 0.0) {
            return Err(ChannelError::InvalidConfig("fixed_overhead_s must be non-negative".into()));
        }
        Ok(())
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self
    }
}

/// Quantities derived from a [`ChannelConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub snr_linear: f64,
    /// Shannon throughput `b log2(1 + SNR)`, bits per second.
    pub throughput_bps: f64,
    /// Bits/s/Hz, taken equal to `log2(1 + SNR)` (capacity-achieving coding).
    pub spectral_efficiency: f64,
    pub eb_n0: f64,
    /// Coherent BPSK bit error rate at the above Eb/N0.
    pub ber: f64,
}

/// Evaluates throughput, spectral efficiency, Eb/N0 and BER for a link.
pub fn link_budget(cfg: &ChannelConfig) -> Result<LinkBudget, ChannelError> {
    cfg.validate()?;
    let snr_linear = 10f64.powf(cfg.snr_db / 10.0);
    let spectral_efficiency = snr_linear.ln_1p() / std::f64::consts::LN_2;
    if !(spectral_efficiency > 0.0) || !snr_linear.is_finite() {
        return Err(ChannelError::DegenerateChannel { snr_db: cfg.snr_db });
    }
    let throughput_bps = cfg.bandwidth_hz * spectral_efficiency;
    if !(throughput_bps > 0.0 && throughput_bps.is_finite()) {
        return Err(ChannelError::DegenerateChannel { snr_db: cfg.snr_db });
    }
    let eb_n0 = snr_linear / spectral_efficiency;
    let ber = (0.5 * erfc(eb_n0.sqrt())).clamp(0.0, 0.5);
    Ok(LinkBudget { snr_linear, throughput_bps, spectral_efficiency, eb_n0, ber })
}

/// `attempts * n_bits / T + t_0`, in seconds.
pub fn transmission_latency(n_bits: u64, attempts: u64, budget: &LinkBudget, cfg: &ChannelConfig) -> Result<f64, ChannelError> {
    if attempts == 0 {
        return Err(ChannelError::InvalidConfig("attempts must be at least 1".into()));
    }
    channel_time(attempts as f64 * n_bits as f64, budget, cfg)
}

/// Air time for an arbitrary number of channel bits plus the fixed overhead.
pub fn channel_time(channel_bits: f64, budget: &LinkBudget, cfg: &ChannelConfig) -> Result<f64, ChannelError> {
    if !(budget.throughput_bps > 0.0) {
        return Err(ChannelError::DegenerateChannel { snr_db: cfg.snr_db });
    }
    Ok(channel_bits / budget.throughput_bps + cfg.fixed_overhead_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(snr_db: f64, b: f64) -> ChannelConfig {
        ChannelConfig::new(snr_db, b, 0.0, 0).unwrap()
    }

    // Expected values from a 40-digit mpmath evaluation.
    #[test]
    fn zero_db_link() {
        let lb = link_budget(&cfg(0.0, 1e6)).unwrap();
        assert!((lb.throughput_bps - 1.0e6).abs() < 1e-6);
        assert!((lb.spectral_efficiency - 1.0).abs() < 1e-15);
        assert!((lb.ber - 0.078_649_603_525_142_6).abs() < 1e-12);
    }

    #[test]
    fn minus_ten_db_link() {
        let lb = link_budget(&cfg(-10.0, 20e6)).unwrap();
        assert!((lb.spectral_efficiency - 0.137_503_523_75).abs() < 1e-10);
        assert!((lb.throughput_bps - 2_750_070.475).abs() < 1e-2);
        assert!((lb.ber - 0.113_902_976_136_56).abs() < 1e-12);
        assert!((lb.eb_n0 - 0.727_254_089_734).abs() < 1e-10);
    }

    #[test]
    fn plus_ten_db_link() {
        let lb = link_budget(&cfg(10.0, 1e6)).unwrap();
        assert!((lb.spectral_efficiency - 3.459_431_618_64).abs() < 1e-10);
        assert!((lb.ber - 0.008_098_794_556_702_9).abs() < 1e-12);
    }

    #[test]
    fn degenerate_snr_is_an_error() {
        let err = link_budget(&cfg(-4000.0, 1e6)).unwrap_err();
        assert!(matches!(err, ChannelError::DegenerateChannel { .. }));
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(ChannelConfig::new(0.0, 0.0, 0.0, 0).is_err());
        assert!(ChannelConfig::new(f64::NAN, 1.0, 0.0, 0).is_err());
        assert!(ChannelConfig::new(0.0, 1.0, -1.0, 0).is_err());
    }

    #[test]
    fn latency_examples() {
        let c = cfg(0.0, 1e6);
        let lb = link_budget(&c).unwrap();
        assert!((transmission_latency(1_000_000, 1, &lb, &c).unwrap() - 1.0).abs() < 1e-12);
        let c = ChannelConfig::new(0.0, 1e6, 0.25, 0).unwrap();
        assert_eq!(transmission_latency(0, 1, &lb, &c).unwrap(), 0.25);
        let c = cfg(-10.0, 20e6);
        let lb = link_budget(&c).unwrap();
        let t = transmission_latency(2048, 1, &lb, &c).unwrap();
        assert!((t - 7.447_081_878_877_914e-4).abs() < 1e-15);
        assert!(transmission_latency(1, 0, &lb, &c).is_err());
    }

    #[test]
    fn ber_non_increasing_in_snr() {
        let mut prev = 1.0;
        for i in 0..=400 {
            let snr = -20.0 + 0.1 * i as f64;
            let ber = link_budget(&cfg(snr, 1e6)).unwrap().ber;
            assert!(ber <= prev + 1e-15, "ber rose at {snr} dB");
            prev = ber;
        }
    }

    #[test]
    fn latency_is_additive_in_bits() {
        let c = ChannelConfig::new(3.0, 5e6, 0.01, 0).unwrap();
        let lb = link_budget(&c).unwrap();
        let (a, b) = (12_345u64, 678_901u64);
        let lhs = transmission_latency(a + b, 1, &lb, &c).unwrap();
        let rhs = transmission_latency(a, 1, &lb, &c).unwrap() + transmission_latency(b, 1, &lb, &c).unwrap() - 0.01;
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
