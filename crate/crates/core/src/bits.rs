//! Conversions between bit sequences, field symbols and bytes.
//!
//! Everything is most-significant-bit first.

use crate::error::{Error, Result};
use crate::gf::Elem;

/// Packs `bits` into `m`-bit symbols. `bits.len()` must be a multiple of `m`.
pub fn bits_to_symbols(bits: &[bool], m: u32) -> Result<Vec<Elem>> {
    let m = m as usize;
    if !bits.len().is_multiple_of(m) {
        return Err(Error::Length {
            expected: bits.len().next_multiple_of(m),
            got: bits.len(),
        });
    }
    Ok(bits
        .chunks(m)
        .map(|c| c.iter().fold(0, |acc, &b| (acc << 1) | b as Elem))
        .collect())
}

pub fn symbols_to_bits(symbols: &[Elem], m: u32) -> Vec<bool> {
    let mut out = Vec::with_capacity(symbols.len() * m as usize);
    for &s in symbols {
        for i in (0..m).rev() {
            out.push((s >> i) & 1 == 1);
        }
    }
    out
}

/// Packs bits into bytes, zero-padding the final byte.
pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))
        })
        .collect()
}

/// Unpacks the first `len` bits of `bytes`.
pub fn unpack_bits(bytes: &[u8], len: usize) -> Vec<bool> {
    (0..len).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1).collect()
}

pub fn hamming_distance(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

pub fn count_ones(bits: &[bool]) -> usize {
    bits.iter().filter(|&&b| b).count()
}
