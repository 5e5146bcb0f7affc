use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use super::link::LinkBudget;
use super::noise::flip_in_place;
use super::ChannelError;
use crate::bits::{push_bits, read_bits, to_bytes, Bitstream};
use crate::rng::rng_from_seed;

/// Width of the integrity check appended to every ARQ block.
pub const CRC_BITS: usize = 32;

/// How a payload is cut into independently acknowledged blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segmentation {
    /// The whole payload is one block.
    Whole,
    /// Blocks of at most this many payload bits.
    Fixed(usize),
    /// Block size minimising expected channel bits per payload bit at the
    /// link's BER.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityConfig {
    /// Target probability that the delivered stream differs from the sent one.
    pub epsilon: f64,
    /// Transmission attempts allowed per block.
    pub max_attempts: u32,
    pub segmentation: Segmentation,
}

impl ReliabilityConfig {
    pub fn new(epsilon: f64, max_attempts: u32, segmentation: Segmentation) -> Result<Self, ChannelError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ChannelError::InvalidConfig("epsilon must lie in (0, 1)".into()));
        }
        if max_attempts == 0 {
            return Err(ChannelError::InvalidConfig("max_attempts must be at least 1".into()));
        }
        if let Segmentation::Fixed(0) = segmentation {
            return Err(ChannelError::InvalidConfig("block size must be positive".into()));
        }
        Ok(Self { epsilon, max_attempts, segmentation })
    }

    pub fn crc_bits(&self) -> usize {
        CRC_BITS
    }

    /// Payload bits per block for a payload of `n_bits` at bit error rate `ber`.
    pub fn block_bits(&self, n_bits: usize, ber: f64) -> usize {
        let n = n_bits.max(1);
        match self.segmentation {
            Segmentation::Whole => n,
            Segmentation::Fixed(b) => b.min(n),
            Segmentation::Auto => optimal_block_bits(n, ber),
        }
    }
}

impl Default for ReliabilityConfig {
    fn default() -> Self {
        Self { epsilon: 1e-6, max_attempts: 1 << 16, segmentation: Segmentation::Auto }
    }
}

/// `1 - (1 - ber)^n_bits`.
pub fn block_error_rate(ber: f64, n_bits: u64) -> f64 {
    if ber <= 0.0 {
        return 0.0;
    }
    if ber >= 1.0 {
        return 1.0;
    }
    -((n_bits as f64) * (-ber).ln_1p()).exp_m1()
}

/// Mean channel bits needed to deliver `n_bits` under `rel`: a block of `B`
/// payload bits costs `(B + 32) / (1 - BLER(B + 32))` on average.
pub fn expected_channel_bits(n_bits: usize, ber: f64, rel: &ReliabilityConfig) -> f64 {
    if n_bits == 0 {
        return 0.0;
    }
    let b = rel.block_bits(n_bits, ber);
    let per_block = |len: usize| {
        let framed = (len + CRC_BITS) as u64;
        framed as f64 / (1.0 - block_error_rate(ber, framed))
    };
    let full = n_bits / b;
    let rest = n_bits % b;
    full as f64 * per_block(b) + if rest > 0 { per_block(rest) } else { 0.0 }
}

fn optimal_block_bits(n: usize, ber: f64) -> usize {
    if !(ber > 0.0) {
        return n;
    }
    if ber >= 1.0 {
        return n.min(1);
    }
    // minimise ln((B + c) / B) - (B + c) ln(1 - ber)
    let log_keep = (-ber).ln_1p();
    let c = CRC_BITS as f64;
    let cost = |b: usize| {
        let b = b as f64;
        ((b + c) / b).ln() - (b + c) * log_keep
    };
    let mut best = n;
    let mut best_cost = cost(n);
    for b in 1..n {
        let v = cost(b);
        if v < best_cost {
            best = b;
            best_cost = v;
        } else if b > 64 && v > best_cost + 50.0 {
            // Convex in B: once far past the minimum nothing better follows.
            break;
        }
    }
    best
}

/// Result of a successful ARQ delivery.
#[derive(Debug, Clone, PartialEq)]
pub struct ArqOutcome {
    pub delivered: Bitstream,
    /// Total block transmissions, retransmissions included.
    pub attempts: u64,
    pub blocks: usize,
    /// Bits put on the channel, CRC fields and retransmissions included.
    pub channel_bits: u64,
}

impl ArqOutcome {
    /// Mean transmissions per block.
    pub fn attempts_per_block(&self) -> f64 {
        self.attempts as f64 / self.blocks as f64
    }
}

/// Stop-and-wait ARQ over the binary symmetric channel.
///
/// The payload is cut into blocks, each sent with a CRC-32 (IEEE, reflected)
/// until the receiver's check passes or `max_attempts` is used up. Before
/// sending, the per-transmission undetected-error probability
/// `BLER * 2^-32` is checked against `epsilon`.
pub fn arq_transmit(payload: &Bitstream, budget: &LinkBudget, rel: &ReliabilityConfig, rng_seed: u64) -> Result<ArqOutcome, ChannelError> {
    if payload.is_empty() {
        return Err(ChannelError::EmptyPayload);
    }
    let ber = budget.ber;
    let block_bits = rel.block_bits(payload.len(), ber);
    let residual = block_error_rate(ber, (block_bits + CRC_BITS) as u64) * 2f64.powi(-(CRC_BITS as i32));
    if residual > rel.epsilon {
        return Err(ChannelError::ReliabilityUnattainable { residual, epsilon: rel.epsilon });
    }

    let mut rng = rng_from_seed(rng_seed);
    let mut delivered = Bitstream::with_capacity(payload.len());
    let mut attempts = 0u64;
    let mut channel_bits = 0u64;
    let chunks: Vec<&BitSlice<u8, Msb0>> = payload.chunks(block_bits).collect();
    for (index, block) in chunks.iter().enumerate() {
        let mut frame: Bitstream = block.to_bitvec();
        push_bits(&mut frame, u64::from(block_crc(block)), CRC_BITS as u32);
        let mut ok = false;
        for _ in 0..rel.max_attempts {
            attempts += 1;
            channel_bits += frame.len() as u64;
            let mut rx = frame.clone();
            flip_in_place(&mut rx, ber, &mut rng);
            let (data, check) = rx.split_at(block.len());
            if block_crc(data) == read_bits(check, 0, CRC_BITS as u32) as u32 {
                delivered.extend_from_bitslice(data);
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(ChannelError::ReliabilityExhausted { block: index, attempts: rel.max_attempts });
        }
    }
    Ok(ArqOutcome { delivered, attempts, blocks: chunks.len(), channel_bits })
}

fn block_crc(bits: &BitSlice<u8, Msb0>) -> u32 {
    crc32fast::hash(&to_bytes(bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::link::{link_budget, ChannelConfig};

    fn budget_with_ber(ber: f64) -> LinkBudget {
        let mut lb = link_budget(&ChannelConfig::new(0.0, 1e6, 0.0, 0).unwrap()).unwrap();
        lb.ber = ber;
        lb
    }

    fn whole(max_attempts: u32) -> ReliabilityConfig {
        ReliabilityConfig::new(1e-6, max_attempts, Segmentation::Whole).unwrap()
    }

    #[test]
    fn unaligned_blocks_pass_on_a_clean_channel() {
        let payload: Bitstream = (0..1000).map(|i| (i * 7) % 3 == 0).collect();
        let rel = ReliabilityConfig::new(1e-6, 1, Segmentation::Fixed(13)).unwrap();
        let out = arq_transmit(&payload, &budget_with_ber(0.0), &rel, 4).unwrap();
        assert_eq!(out.delivered, payload);
        assert_eq!(out.blocks, 77);
        assert_eq!(out.attempts, 77);
    }

    #[test]
    fn expected_cost_examples() {
        let whole = ReliabilityConfig::new(1e-6, 10, Segmentation::Whole).unwrap();
        assert_eq!(expected_channel_bits(1000, 0.0, &whole), 1032.0);
        let e = expected_channel_bits(1000, 1e-3, &whole);
        assert!((e / 1032.0 - 1.0 / (1.0 - block_error_rate(1e-3, 1032))).abs() < 1e-12);
        let fixed = ReliabilityConfig::new(1e-6, 10, Segmentation::Fixed(300)).unwrap();
        assert_eq!(expected_channel_bits(1000, 0.0, &fixed), 1000.0 + 4.0 * 32.0);
    }

    #[test]
    fn bler_examples() {
        assert_eq!(block_error_rate(0.0, 1000), 0.0);
        assert_eq!(block_error_rate(1.0, 7), 1.0);
        // 1 - 0.999^1000, 40-digit reference
        assert!((block_error_rate(1e-3, 1000) - 0.632_304_575_229_036).abs() < 1e-12);
    }

    #[test]
    fn bler_monotone() {
        let mut prev = 0.0;
        for n in 1..200 {
            let v = block_error_rate(0.01, n);
            assert!(v > prev);
            prev = v;
        }
        let mut prev = 0.0;
        for i in 1..100 {
            let v = block_error_rate(i as f64 / 100.0, 64);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn noiseless_delivery_takes_one_attempt() {
        let payload = crate::bits::from_bytes(b"hello, receiver");
        let out = arq_transmit(&payload, &budget_with_ber(0.0), &whole(4), 1).unwrap();
        assert_eq!(out.delivered, payload);
        assert_eq!(out.attempts, 1);
        assert_eq!(out.channel_bits, payload.len() as u64 + 32);
    }

    #[test]
    fn coin_flip_channel_exhausts_single_attempt() {
        let payload = Bitstream::repeat(true, 128);
        let err = arq_transmit(&payload, &budget_with_ber(0.5), &whole(1), 9).unwrap_err();
        assert!(matches!(err, ChannelError::ReliabilityExhausted { block: 0, attempts: 1 }));
    }

    #[test]
    fn mean_attempts_follow_geometric_law() {
        // Whole-payload blocks carry 1000 + 32 bits, so the success
        // probability per attempt is 0.999^1032.
        let payload = Bitstream::repeat(false, 1000);
        let lb = budget_with_ber(1e-3);
        let rel = whole(1000);
        let trials = 4000u64;
        let total: u64 = (0..trials).map(|s| arq_transmit(&payload, &lb, &rel, s).unwrap().attempts).sum();
        let mean = total as f64 / trials as f64;
        let p = 1.0 - block_error_rate(1e-3, 1032);
        let sd = ((1.0 - p) / (p * p) / trials as f64).sqrt();
        assert!((mean - 1.0 / p).abs() < 4.0 * sd, "mean {mean} vs {}", 1.0 / p);
    }

    #[test]
    fn auto_segmentation_handles_noisy_links() {
        let payload = crate::bits::from_bytes(&[0x5a; 256]);
        let out = arq_transmit(&payload, &budget_with_ber(0.1), &ReliabilityConfig::default(), 4).unwrap();
        assert_eq!(out.delivered, payload);
        assert!(out.blocks > 1);
    }

    #[test]
    fn auto_block_size_is_whole_on_clean_links() {
        let rel = ReliabilityConfig::default();
        assert_eq!(rel.block_bits(5000, 0.0), 5000);
        let b = rel.block_bits(5000, 0.1);
        assert!((5..=15).contains(&b), "{b}");
        assert!(rel.block_bits(5000, 1e-4) > 400);
    }

    #[test]
    fn rejects_bad_reliability_configs() {
        assert!(ReliabilityConfig::new(0.0, 1, Segmentation::Whole).is_err());
        assert!(ReliabilityConfig::new(1.0, 1, Segmentation::Whole).is_err());
        assert!(ReliabilityConfig::new(0.1, 0, Segmentation::Whole).is_err());
        assert!(ReliabilityConfig::new(0.1, 1, Segmentation::Fixed(0)).is_err());
    }

    #[test]
    fn epsilon_below_crc_floor_is_refused() {
        let payload = Bitstream::repeat(false, 64);
        let rel = ReliabilityConfig::new(1e-12, 10, Segmentation::Whole).unwrap();
        let err = arq_transmit(&payload, &budget_with_ber(0.5), &rel, 0).unwrap_err();
        assert!(matches!(err, ChannelError::ReliabilityUnattainable { .. }));
    }

    #[test]
    fn empty_payload_rejected() {
        assert!(matches!(arq_transmit(&Bitstream::new(), &budget_with_ber(0.0), &whole(1), 0), Err(ChannelError::EmptyPayload)));
    }
}
