//! Key-driven splitting of the random stream into two groups.
//!
//! Bit `x[i]` joins group I when `key[i mod N_K]` is 1 and group II
//! otherwise; the key repeats cyclically and is aligned to offset 0 of
//! the session. Admissible keys are those whose 1-count stays within
//! `r1 * sigma1` of `N_K / 2`, `sigma1 = sqrt(N_K / 4)`.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{binomial_tail, TailDirection, TailMode, TailQuery};
use crate::error::{Error, Result};

const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    /// Bits routed where the key bit is 1.
    I,
    /// Bits routed where the key bit is 0.
    II,
}

impl Group {
    pub fn wire_tag(self) -> u8 {
        match self {
            Group::I => 1,
            Group::II => 2,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::I => "I",
            Group::II => "II",
        })
    }
}

/// How `outside_set_probability` evaluates the binomial mass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaMode {
    Exact,
    Normal,
}

/// Pre-shared key steering the grouping.
#[derive(Clone, PartialEq, Eq)]
pub struct CommonKey {
    bits: Vec<bool>,
    n1: usize,
}

impl fmt::Debug for CommonKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CommonKey")
            .field("n_k", &self.bits.len())
            .field("n1", &self.n1)
            .finish_non_exhaustive()
    }
}

impl CommonKey {
    /// Wraps `bits`, rejecting keys outside the admissible set for `r1`.
    pub fn new(bits: Vec<bool>, r1: f64) -> Result<Self> {
        if !validate_key(&bits, r1) {
            return Err(Error::KeyNotAdmissible {
                n1: bits.iter().filter(|&&b| b).count(),
                n_k: bits.len(),
                r1,
            });
        }
        Ok(Self::unconstrained(bits))
    }

    /// Wraps `bits` without the admissibility check. Used by enumeration
    /// code that tests membership itself.
    pub fn unconstrained(bits: Vec<bool>) -> Self {
        let n1 = bits.iter().filter(|&&b| b).count();
        CommonKey { bits, n1 }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Count of 1-bits, N_1.
    pub fn n1(&self) -> usize {
        self.n1
    }

    /// Count of 0-bits, N_2.
    pub fn n2(&self) -> usize {
        self.bits.len() - self.n1
    }

    /// Lowercase hex, most significant bit first. Requires N_K % 4 == 0.
    pub fn to_hex(&self) -> Result<String> {
        if !self.bits.len().is_multiple_of(4) {
            return Err(Error::Config(format!(
                "key length {} is not a multiple of 4 and cannot be written as hex",
                self.bits.len()
            )));
        }
        Ok(self
            .bits
            .chunks(4)
            .map(|c| {
                let nib = c.iter().fold(0u8, |a, &b| (a << 1) | b as u8);
                char::from_digit(nib as u32, 16).unwrap()
            })
            .collect())
    }

    pub fn from_hex(text: &str, r1: f64) -> Result<Self> {
        let text = text.trim();
        let mut bits = Vec::with_capacity(text.len() * 4);
        for ch in text.chars() {
            if ch.is_ascii_uppercase() {
                return Err(Error::Parse(format!("key hex must be lowercase, found {ch:?}")));
            }
            let nib = ch
                .to_digit(16)
                .ok_or_else(|| Error::Parse(format!("invalid hex digit {ch:?} in key")))?;
            bits.extend((0..4).rev().map(|i| (nib >> i) & 1 == 1));
        }
        if bits.len() < 2 {
            return Err(Error::Parse("key must have at least 2 bits".into()));
        }
        CommonKey::new(bits, r1)
    }

    pub fn load(path: &Path, r1: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if text.trim_end_matches('\n').contains('\n') {
            return Err(Error::Parse("key file must contain a single line".into()));
        }
        CommonKey::from_hex(&text, r1)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, format!("{}\n", self.to_hex()?))?;
        Ok(())
    }
}

/// sigma1 = sqrt(N_K / 4).
pub fn sigma1(n_k: usize) -> f64 {
    (n_k as f64 / 4.0).sqrt()
}

/// Membership in the admissible set: |N_1 - N_K/2| <= r1 * sigma1.
pub fn validate_key(bits: &[bool], r1: f64) -> bool {
    let n_k = bits.len();
    if n_k < 2 {
        return false;
    }
    let n1 = bits.iter().filter(|&&b| b).count();
    admissible_count(n1, n_k, r1)
}

pub fn admissible_count(n1: usize, n_k: usize, r1: f64) -> bool {
    let dev = (n1 as f64 - n_k as f64 / 2.0).abs();
    dev <= r1 * sigma1(n_k) + BOUNDARY_EPS
}

/// Inclusive range of admissible 1-counts.
pub fn admissible_range(n_k: usize, r1: f64) -> (usize, usize) {
    let half = n_k as f64 / 2.0;
    let w = r1 * sigma1(n_k);
    let lo = (half - w - BOUNDARY_EPS).ceil().max(0.0) as usize;
    let hi = ((half + w + BOUNDARY_EPS).floor() as usize).min(n_k);
    (lo, hi)
}

/// Whether one block of `info_bits` consumes the whole key period for every
/// admissible key: N_K/2 + ceil(r1 * sigma1) <= m*k.
pub fn key_fits_block(n_k: usize, r1: f64, info_bits: usize) -> bool {
    let need = n_k as f64 / 2.0 + (r1 * sigma1(n_k) - BOUNDARY_EPS).ceil();
    need <= info_bits as f64 + BOUNDARY_EPS
}

/// Uniform sample from the admissible set by rejection.
pub fn sample_key<R: Rng + ?Sized>(n_k: usize, r1: f64, rng: &mut R) -> Result<CommonKey> {
    if n_k < 2 {
        return Err(Error::Config("key length must be at least 2".into()));
    }
    let (lo, hi) = admissible_range(n_k, r1);
    if lo > hi {
        return Err(Error::Config(format!("admissible set is empty for N_K = {n_k}, r1 = {r1}")));
    }
    loop {
        let bits: Vec<bool> = (0..n_k).map(|_| rng.random::<bool>()).collect();
        if validate_key(&bits, r1) {
            return Ok(CommonKey::unconstrained(bits));
        }
    }
}

/// Probability that a uniform N_K-bit string falls outside the admissible set.
pub fn outside_set_probability(n_k: usize, r1: f64, mode: DeltaMode) -> f64 {
    match mode {
        DeltaMode::Normal => statrs::function::erf::erfc(r1 / std::f64::consts::SQRT_2),
        DeltaMode::Exact => {
            let (lo, hi) = admissible_range(n_k, r1);
            let below = if lo == 0 {
                0.0
            } else {
                binomial_tail(
                    &TailQuery { trials: n_k as u64, p: 0.5, threshold: lo as u64, direction: TailDirection::Below },
                    TailMode::Exact,
                )
            };
            let above = binomial_tail(
                &TailQuery { trials: n_k as u64, p: 0.5, threshold: hi as u64, direction: TailDirection::Above },
                TailMode::Exact,
            );
            (below + above).min(1.0)
        }
    }
}

/// The two group streams produced from one input.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroupStreams {
    pub group1: Vec<bool>,
    pub group2: Vec<bool>,
    /// Offset of key bit 0 within the stream.
    pub alignment: usize,
}

pub fn split_stream(x: &[bool], key: &CommonKey) -> GroupStreams {
    let mut out = GroupStreams::default();
    for (&bit, &k) in x.iter().zip(key.bits.iter().cycle()) {
        if k {
            out.group1.push(bit);
        } else {
            out.group2.push(bit);
        }
    }
    out
}

pub fn merge_stream(groups: &GroupStreams, key: &CommonKey) -> Result<Vec<bool>> {
    let total = groups.group1.len() + groups.group2.len();
    if total > 0 && key.is_empty() {
        return Err(Error::Framing("empty key".into()));
    }
    let ones = key_ones_in_prefix(key, total);
    if ones != groups.group1.len() {
        return Err(Error::Framing(format!(
            "group I holds {} bits but the key routes {} of {} bits there",
            groups.group1.len(),
            ones,
            total
        )));
    }
    let (mut a, mut b) = (groups.group1.iter(), groups.group2.iter());
    Ok(key
        .bits
        .iter()
        .cycle()
        .take(total)
        .map(|&k| if k { *a.next().unwrap() } else { *b.next().unwrap() })
        .collect())
}

fn key_ones_in_prefix(key: &CommonKey, len: usize) -> usize {
    if key.is_empty() {
        return 0;
    }
    let full = len / key.len();
    let rest = len % key.len();
    full * key.n1 + key.bits[..rest].iter().filter(|&&b| b).count()
}

/// Streaming splitter that emits a block as soon as a group has
/// accumulated `block_bits` bits. Partial groups are simply dropped with
/// the splitter.
#[derive(Clone, Debug)]
pub struct BlockSplitter {
    key: CommonKey,
    block_bits: usize,
    pos: usize,
    buf1: Vec<bool>,
    buf2: Vec<bool>,
    emitted: u32,
}

impl BlockSplitter {
    pub fn new(key: CommonKey, block_bits: usize) -> Self {
        BlockSplitter {
            key,
            block_bits,
            pos: 0,
            buf1: Vec::with_capacity(block_bits),
            buf2: Vec::with_capacity(block_bits),
            emitted: 0,
        }
    }

    /// Routes one bit; returns `(group, ordinal, bits)` when a block completes.
    pub fn push(&mut self, bit: bool) -> Option<(Group, u32, Vec<bool>)> {
        let to_one = self.key.bits[self.pos];
        self.pos = (self.pos + 1) % self.key.len();
        let (group, buf) = if to_one {
            (Group::I, &mut self.buf1)
        } else {
            (Group::II, &mut self.buf2)
        };
        buf.push(bit);
        if buf.len() == self.block_bits {
            let block = std::mem::replace(buf, Vec::with_capacity(self.block_bits));
            let index = self.emitted;
            self.emitted += 1;
            Some((group, index, block))
        } else {
            None
        }
    }

    pub fn feed(&mut self, bits: &[bool]) -> Vec<(Group, u32, Vec<bool>)> {
        bits.iter().filter_map(|&b| self.push(b)).collect()
    }

    pub fn blocks_emitted(&self) -> u32 {
        self.emitted
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn key_with_ones(n_k: usize, n1: usize) -> Vec<bool> {
        (0..n_k).map(|i| i < n1).collect()
    }

    fn choose(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn validate_examples() {
        assert!(validate_key(&key_with_ones(2496, 1248), 3.5));
        // deviation 88 > 3.5 * 24.98
        assert!(!validate_key(&key_with_ones(2496, 1336), 3.5));
        assert!(validate_key(&key_with_ones(2496, 1335), 3.5));
        assert!(!validate_key(&[false; 64], 3.9));
        assert!(!validate_key(&[true], 10.0));
    }

    #[test]
    fn design_point_meets_block_gate() {
        assert!((sigma1(2496) - 24.98).abs() < 0.01);
        assert!(key_fits_block(2496, 3.5, 8 * 167));
        assert!(!key_fits_block(2498, 3.5, 8 * 167));
    }

    #[test]
    fn exact_delta_small_case() {
        // N1 in {3,4,5} is admissible for N_K = 8, r1 = 1
        let expect = 1.0 - (choose(8, 3) + choose(8, 4) + choose(8, 5)) / 256.0;
        assert!((expect - 74.0 / 256.0).abs() < 1e-15);
        let got = outside_set_probability(8, 1.0, DeltaMode::Exact);
        assert!((got - expect).abs() < 1e-12, "{got}");
    }

    #[test]
    fn exact_delta_matches_enumeration() {
        for n_k in [6usize, 10, 13, 16] {
            for r1 in [0.5, 1.0, 1.7, 2.5] {
                let outside = (0u32..1 << n_k)
                    .filter(|&v| {
                        let bits: Vec<bool> = (0..n_k).map(|i| v >> i & 1 == 1).collect();
                        !validate_key(&bits, r1)
                    })
                    .count();
                let got = outside_set_probability(n_k, r1, DeltaMode::Exact);
                assert!((got - outside as f64 / (1u64 << n_k) as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normal_delta() {
        let d = outside_set_probability(100_000, 3.0, DeltaMode::Normal);
        assert!((d - 0.0027).abs() < 0.00005, "{d}");
        assert!(outside_set_probability(64, 12.0, DeltaMode::Normal) < 1e-30);
        assert!(outside_set_probability(64, 12.0, DeltaMode::Exact) == 0.0);
    }

    #[test]
    fn exact_delta_approaches_normal() {
        for r1 in [1.0, 2.0] {
            let normal = outside_set_probability(0, r1, DeltaMode::Normal);
            let errs: Vec<f64> = [64, 256, 1024]
                .iter()
                .map(|&n| (outside_set_probability(n, r1, DeltaMode::Exact) / normal - 1.0).abs())
                .collect();
            assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
            assert!(errs[2] < 0.10, "{errs:?}");
        }
    }

    #[test]
    fn sampling_is_deterministic_and_admissible() {
        let a = sample_key(64, 2.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_key(64, 2.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples = 10_000;
        let mut freq = vec![0usize; 64];
        for _ in 0..samples {
            let k = sample_key(64, 2.0, &mut rng).unwrap();
            assert!(validate_key(k.bits(), 2.0));
            for (f, &b) in freq.iter_mut().zip(k.bits()) {
                *f += b as usize;
            }
        }
        // each position is a fair coin; chi-square over all positions at 1e-3
        let chi2: f64 = freq
            .iter()
            .map(|&f| {
                let d = f as f64 - samples as f64 / 2.0;
                2.0 * d * d / (samples as f64 / 2.0)
            })
            .sum();
        let crit = ChiSquared::new(64.0).unwrap().inverse_cdf(1.0 - 1e-3);
        assert!(chi2 < crit, "chi2 = {chi2}");
    }

    #[test]
    fn figure_four_routing() {
        let key = CommonKey::unconstrained(vec![true, false, true, true, false, true, false, false]);
        let x: Vec<bool> = (0..16).map(|i| i % 3 == 0).collect();
        let g = split_stream(&x, &key);
        assert_eq!(g.group1[0], x[0]);
        assert_eq!(g.group2[0], x[1]);
        assert_eq!(g.group1.len(), 8);
        assert_eq!(merge_stream(&g, &key).unwrap(), x);
    }

    #[test]
    fn all_ones_key_routes_everything_to_group_one() {
        let key = CommonKey::unconstrained(vec![true; 8]);
        let x: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        let g = split_stream(&x, &key);
        assert_eq!(g.group1, x);
        assert!(g.group2.is_empty());
    }

    #[test]
    fn merge_edge_cases() {
        let key = CommonKey::unconstrained(vec![true, false, false, true]);
        assert!(merge_stream(&GroupStreams::default(), &key).unwrap().is_empty());
        let x: Vec<bool> = (0..10_000).map(|i| (i * 7919) % 13 < 6).collect();
        let mut g = split_stream(&x, &key);
        assert_eq!(merge_stream(&g, &key).unwrap(), x);
        // dropping the last group I bit is a valid shorter split; dropping a group II bit is not
        g.group2.pop();
        assert!(matches!(merge_stream(&g, &key), Err(Error::Framing(_))));
    }

    #[test]
    fn hex_round_trip_and_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let key = sample_key(2496, 3.5, &mut rng).unwrap();
        let hex = key.to_hex().unwrap();
        assert_eq!(hex.len(), 624);
        assert_eq!(CommonKey::from_hex(&hex, 3.5).unwrap(), key);
        assert!(CommonKey::from_hex(&hex.to_uppercase(), 3.5).is_err());
        assert!(matches!(
            CommonKey::from_hex(&"0".repeat(624), 3.5),
            Err(Error::KeyNotAdmissible { .. })
        ));
        let k = CommonKey::unconstrained(vec![true, false, true, false, false, true, false, true]);
        assert_eq!(k.to_hex().unwrap(), "a5");
    }

    #[test]
    fn splitter_emits_blocks_in_completion_order() {
        let key = CommonKey::unconstrained(vec![true, true, false, true]);
        let mut s = BlockSplitter::new(key.clone(), 3);
        let x: Vec<bool> = (0..12).map(|i| i % 2 == 1).collect();
        let blocks = s.feed(&x);
        let g = split_stream(&x, &key);
        assert_eq!(blocks.len(), 4);
        let ones: Vec<bool> = blocks.iter().filter(|b| b.0 == Group::I).flat_map(|b| b.2.clone()).collect();
        assert_eq!(ones, g.group1[..9]);
        assert_eq!(blocks.iter().map(|b| b.1).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }

    proptest! {
        #[test]
        fn split_merge_bijection(
            key in proptest::collection::vec(any::<bool>(), 1..40),
            x in proptest::collection::vec(any::<bool>(), 0..300),
        ) {
            let key = CommonKey::unconstrained(key);
            let g = split_stream(&x, &key);
            prop_assert_eq!(g.group1.len() + g.group2.len(), x.len());
            prop_assert_eq!(merge_stream(&g, &key).unwrap(), x);
        }
    }
}
