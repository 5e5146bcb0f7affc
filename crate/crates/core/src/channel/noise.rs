use rand::Rng;

use crate::bits::Bitstream;
use crate::rng::{rng_from_seed, DetRng};

/// Binary symmetric channel: flips each bit independently with probability
/// `ber`, driven by a generator seeded with `rng_seed`.
pub fn transmit_bits(bits: &Bitstream, ber: f64, rng_seed: u64) -> Bitstream {
    let mut out = bits.clone();
    let mut rng = rng_from_seed(rng_seed);
    flip_in_place(&mut out, ber, &mut rng);
    out
}

/// Flips bits of `bits` in place and returns how many were flipped.
///
/// Positions are drawn by geometric gap sampling, which yields the same
/// joint distribution as one Bernoulli draw per bit at O(flips) cost.
pub fn flip_in_place(bits: &mut Bitstream, ber: f64, rng: &mut DetRng) -> usize {
    debug_assert!((0.0..=1.0).contains(&ber), "ber {ber} outside [0, 1]");
    let n = bits.len();
    if n == 0 || !(ber > 0.0) {
        return 0;
    }
    if ber >= 1.0 {
        for mut b in bits.iter_mut() {
            *b = !*b;
        }
        return n;
    }
    let log_keep = (-ber).ln_1p();
    let mut flips = 0;
    let mut pos = 0usize;
    loop {
        let u: f64 = 1.0 - rng.random::<f64>();
        let gap = (u.ln() / log_keep).floor();
        if gap >= (n - pos) as f64 {
            break;
        }
        pos += gap as usize;
        let cur = bits[pos];
        bits.set(pos, !cur);
        flips += 1;
        pos += 1;
        if pos >= n {
            break;
        }
    }
    flips
}
