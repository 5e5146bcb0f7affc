//! MSB-first bit packing.

use bitvec::prelude::*;

/// A bitstream as transmitted over the simulated channel. Bit 0 is the most
/// significant bit of the first byte.
pub type Bitstream = BitVec<u8, Msb0>;

/// Appends the low `width` bits of `value`, most significant first.
pub fn push_bits(out: &mut Bitstream, value: u64, width: u32) {
    debug_assert!(width <= 64);
    for shift in (0..width).rev() {
        out.push((value >> shift) & 1 == 1);
    }
}

/// Reads `width` bits starting at `pos` as an unsigned integer.
pub fn read_bits(bits: &BitSlice<u8, Msb0>, pos: usize, width: u32) -> u64 {
    bits[pos..pos + width as usize].iter().fold(0u64, |acc, b| (acc << 1) | u64::from(*b))
}

/// Packs fixed-width codes into a bitstream with no padding.
pub fn pack_codes(codes: &[u32], width: u32) -> Bitstream {
    debug_assert!((1..=32).contains(&width));
    let total = codes.len() * width as usize;
    let mut bytes = Vec::with_capacity(total.div_ceil(8));
    let mask = (1u64 << width) - 1;
    let mut acc = 0u64;
    let mut held = 0u32;
    for &c in codes {
        acc = (acc << width) | (u64::from(c) & mask);
        held += width;
        while held >= 8 {
            held -= 8;
            bytes.push((acc >> held) as u8);
        }
        acc &= (1u64 << held) - 1;
    }
    if held > 0 {
        bytes.push((acc << (8 - held)) as u8);
    }
    let mut out = Bitstream::from_vec(bytes);
    out.truncate(total);
    out
}

/// Inverse of [`pack_codes`]. `bits.len()` must be at least `count * width`.
pub fn unpack_codes(bits: &BitSlice<u8, Msb0>, width: u32, count: usize) -> Vec<u32> {
    debug_assert!((1..=32).contains(&width));
    let need = count * width as usize;
    assert!(bits.len() >= need, "{} bits cannot hold {count} codes of width {width}", bits.len());
    let bytes = to_bytes(&bits[..need]);
    let mask = (1u64 << width) - 1;
    let mut out = Vec::with_capacity(count);
    let mut acc = 0u64;
    let mut held = 0u32;
    let mut next = bytes.iter();
    for _ in 0..count {
        while held < width {
            acc = (acc << 8) | u64::from(*next.next().expect("length checked"));
            held += 8;
        }
        held -= width;
        out.push(((acc >> held) & mask) as u32);
        acc &= (1u64 << held) - 1;
    }
    out
}

/// Byte image of a bitstream, trailing bits of the last byte zeroed.
pub fn to_bytes(bits: &BitSlice<u8, Msb0>) -> Vec<u8> {
    // A fresh vector starts at bit 0 whatever the source slice's offset.
    let mut v = Bitstream::with_capacity(bits.len());
    v.extend_from_bitslice(bits);
    v.set_uninitialized(false);
    v.into_vec()
}

pub fn from_bytes(bytes: &[u8]) -> Bitstream {
    Bitstream::from_slice(bytes)
}

/// Number of positions where two equal-length streams differ.
pub fn hamming(a: &BitSlice<u8, Msb0>, b: &BitSlice<u8, Msb0>) -> usize {
    assert_eq!(a.len(), b.len(), "hamming distance needs equal lengths");
    a.iter().zip(b.iter()).filter(|(x, y)| **x != **y).count()
}
