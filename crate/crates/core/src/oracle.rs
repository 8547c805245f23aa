//! Exhaustive adversary on toy parameters.
//!
//! Eve sees the noisy stream and the parity of every block. Knowing where
//! the key period starts, she tries every admissible key, regroups the
//! stream, and keeps the keys whose first block is consistent with the
//! observed parity, optionally after removing a guessed error pattern.
//! Everything here is exponential in N_K and only meant for N_K <= 20.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::symbol_error_rate;
use crate::bits::bits_to_symbols;
use crate::code::{CodeSpec, Decoded};
use crate::error::{Error, Result};
use crate::gf::Elem;
use crate::grouping::{admissible_range, BlockSplitter, CommonKey, Group};

/// Enumeration budget: 2^26 key/pattern evaluations.
pub const COST_LIMIT_LOG2: u32 = 26;
pub const MAX_KEY_BITS: usize = 20;
/// Budget for enumerating all information vectors.
pub const INFO_LIMIT_LOG2: u32 = 24;

/// Key `v` as N_K bits, most significant first.
pub fn key_bits(v: u32, n_k: usize) -> Vec<bool> {
    (0..n_k).map(|i| (v >> (n_k - 1 - i)) & 1 == 1).collect()
}

pub fn key_value(bits: &[bool]) -> u32 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u32)
}

fn parity_index(parity: &[Elem], m: u32) -> u64 {
    parity.iter().fold(0u64, |acc, &p| (acc << m) | p as u64)
}

/// All information vectors whose parity equals `parity`.
pub fn enumerate_info_candidates(code: &CodeSpec, parity: &[Elem]) -> Result<Vec<Vec<Elem>>> {
    let info_bits = code.info_bits();
    if info_bits > INFO_LIMIT_LOG2 as usize {
        return Err(Error::Intractable { cost_log2: info_bits as f64, limit_log2: INFO_LIMIT_LOG2 });
    }
    if parity.len() != code.redundancy() {
        return Err(Error::Length { expected: code.redundancy(), got: parity.len() });
    }
    let mut out = Vec::new();
    for v in 0..(1u64 << info_bits) {
        let bits: Vec<bool> = (0..info_bits).map(|i| (v >> (info_bits - 1 - i)) & 1 == 1).collect();
        let info = bits_to_symbols(&bits, code.m())?;
        if code.encode_parity(&info)? == parity {
            out.push(info);
        }
    }
    Ok(out)
}

/// Eve's view of a toy session, restricted to the first block.
#[derive(Clone, Debug)]
pub struct TinyScenario {
    pub code: CodeSpec,
    pub n_k: usize,
    pub r1: f64,
    /// Eve's received stream, starting at key bit 0.
    pub stream: Vec<bool>,
    /// Parity of the first completed block.
    pub parity: Vec<Elem>,
}

impl TinyScenario {
    /// Simulates Alice: draws a stream, encodes the first block under
    /// `key`, and hands Eve the stream after BSC(p_E) noise.
    pub fn simulate<R: Rng + ?Sized>(code: &CodeSpec, key: &CommonKey, r1: f64, p_e: f64, rng: &mut R) -> Result<(Self, Vec<Elem>)> {
        let len = 2 * code.info_bits();
        let x: Vec<bool> = (0..len).map(|_| rng.random()).collect();
        let (_, info) = first_block(code, &x, key.bits())?;
        let parity = code.encode_parity(&info)?;
        let stream = crate::channel::bsc_transmit(&x, p_e, rng);
        let scenario = TinyScenario { code: code.clone(), n_k: key.len(), r1, stream, parity };
        scenario.check_tractable(1)?;
        Ok((scenario, info))
    }

    pub fn check_tractable(&self, patterns: usize) -> Result<()> {
        let cost = self.n_k as f64 + (patterns.max(1) as f64).log2();
        if self.n_k > MAX_KEY_BITS || cost > COST_LIMIT_LOG2 as f64 {
            return Err(Error::Intractable { cost_log2: cost, limit_log2: COST_LIMIT_LOG2 });
        }
        Ok(())
    }

    /// Admissible keys as integers, ascending.
    pub fn key_space(&self) -> Vec<u32> {
        let (lo, hi) = admissible_range(self.n_k, self.r1);
        (0..(1u32 << self.n_k))
            .into_par_iter()
            .filter(|v| (lo..=hi).contains(&(v.count_ones() as usize)))
            .collect()
    }
}

/// The first block completed when `stream` is grouped under `key`.
pub fn first_block(code: &CodeSpec, stream: &[bool], key: &[bool]) -> Result<(Group, Vec<Elem>)> {
    let mut splitter = BlockSplitter::new(CommonKey::unconstrained(key.to_vec()), code.info_bits());
    for &b in stream {
        if let Some((g, _, bits)) = splitter.push(b) {
            return Ok((g, bits_to_symbols(&bits, code.m())?));
        }
    }
    Err(Error::Length { expected: 2 * code.info_bits() - 1, got: stream.len() })
}

/// Symbol error patterns over the k information symbols, ordered by weight
/// then position then value. The zero pattern comes first.
pub fn error_patterns(code: &CodeSpec, max_weight: usize) -> Vec<Vec<Elem>> {
    let k = code.k();
    let q = code.field().size() as Elem;
    let mut out = vec![vec![0; k]];
    let mut frontier = vec![(vec![0 as Elem; k], 0usize)];
    for _ in 0..max_weight {
        let mut next = Vec::new();
        for (pattern, start) in &frontier {
            for pos in *start..k {
                for v in 1..q {
                    let mut p = pattern.clone();
                    p[pos] = v;
                    out.push(p.clone());
                    next.push((p, pos + 1));
                }
            }
        }
        frontier = next;
    }
    out
}

/// Probability of `pattern` at the bit level over a BSC(p).
pub fn pattern_probability(pattern: &[Elem], m: u32, p: f64) -> f64 {
    let flips = pattern.iter().map(|s| s.count_ones() as i32).sum::<i32>();
    let total = pattern.len() as i32 * m as i32;
    p.powi(flips) * (1.0 - p).powi(total - flips)
}

/// Candidate keys per error pattern.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub patterns: Vec<Vec<Elem>>,
    /// `keys[i]` holds the keys consistent with `patterns[i]`, ascending.
    pub keys: Vec<Vec<u32>>,
}

impl CandidateSet {
    pub fn total(&self) -> usize {
        self.keys.iter().map(Vec::len).sum()
    }

    /// Keys appearing under more than one pattern.
    pub fn overlaps(&self) -> usize {
        let mut seen: BTreeMap<u32, usize> = BTreeMap::new();
        for list in &self.keys {
            for &k in list {
                *seen.entry(k).or_default() += 1;
            }
        }
        seen.values().filter(|&&c| c > 1).count()
    }

    pub fn pattern_of(&self, key: u32) -> Option<usize> {
        self.keys.iter().position(|l| l.binary_search(&key).is_ok())
    }
}

/// Keys whose first block, corrected by `e`, has the observed parity.
pub fn enumerate_with_errors(s: &TinyScenario, max_weight: usize) -> Result<CandidateSet> {
    if max_weight > s.code.t_c() {
        return Err(Error::Config(format!(
            "max weight {max_weight} exceeds t_c = {}",
            s.code.t_c()
        )));
    }
    let patterns = error_patterns(&s.code, max_weight);
    s.check_tractable(patterns.len())?;
    // parity is linear: parity(b + e) = parity(b) + parity(e)
    let m = s.code.m();
    let mut targets: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, e) in patterns.iter().enumerate() {
        let pe = s.code.encode_parity(e)?;
        let target: Vec<Elem> = s.parity.iter().zip(&pe).map(|(a, b)| a ^ b).collect();
        targets.entry(parity_index(&target, m)).or_default().push(i);
    }
    let hits: Vec<(usize, u32)> = s
        .key_space()
        .into_par_iter()
        .map(|v| {
            let (_, info) = first_block(&s.code, &s.stream, &key_bits(v, s.n_k))?;
            let p = parity_index(&s.code.encode_parity(&info)?, m);
            Ok(targets.get(&p).map(|ids| ids.iter().map(|&i| (i, v)).collect::<Vec<_>>()))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .flatten()
        .collect();
    let mut keys = vec![Vec::new(); patterns.len()];
    for (i, v) in hits {
        keys[i].push(v);
    }
    Ok(CandidateSet { patterns, keys })
}

/// The error-free candidate set K_e0.
pub fn enumerate_key_candidates(s: &TinyScenario) -> Result<Vec<u32>> {
    Ok(enumerate_with_errors(s, 0)?.keys.swap_remove(0))
}

/// Sizes of every parity class of the key space for a fixed stream.
pub fn parity_classes(s: &TinyScenario) -> Result<BTreeMap<u64, usize>> {
    s.check_tractable(1)?;
    let m = s.code.m();
    let parities = s
        .key_space()
        .into_par_iter()
        .map(|v| {
            let (_, info) = first_block(&s.code, &s.stream, &key_bits(v, s.n_k))?;
            Ok(parity_index(&s.code.encode_parity(&info)?, m))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut classes = BTreeMap::new();
    for p in parities {
        *classes.entry(p).or_insert(0) += 1;
    }
    Ok(classes)
}

/// Positions of the key that are the same across all of `candidates`.
/// Empty when no proper subset of key bits is pinned down by the parity.
pub fn fixed_positions(candidates: &[u32], n_k: usize) -> Vec<usize> {
    if candidates.len() < 2 {
        return Vec::new();
    }
    let all_and = candidates.iter().fold(u32::MAX, |a, &v| a & v);
    let all_or = candidates.iter().fold(0, |a, &v| a | v);
    (0..n_k)
        .filter(|&i| {
            let bit = 1 << (n_k - 1 - i);
            all_and & bit != 0 || all_or & bit == 0
        })
        .collect()
}

/// Outcome of regrouping observed blocks under a guessed key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub consistent: bool,
    pub blocks: usize,
    pub failures: usize,
    /// Corrected symbol errors per decodable block, indexed by count.
    pub histogram: Vec<usize>,
    pub mean_errors: f64,
    pub threshold: f64,
}

/// Parity observed on the wire for one block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedParity {
    pub group: Group,
    pub parity: Vec<Elem>,
}

/// Regroups `stream` under `key_guess` and decodes every block against the
/// parity observed for the same group, in order. The guess is consistent
/// when every block decodes and the mean corrected-error count stays below
/// k p_eff + 4 sqrt(k p_eff (1 - p_eff) / blocks).
pub fn judge_candidate(
    key_guess: &[bool],
    stream: &[bool],
    parity: &[ObservedParity],
    code: &CodeSpec,
    p_bit: f64,
) -> Result<Judgment> {
    let mut queues: [std::collections::VecDeque<&[Elem]>; 2] = Default::default();
    for p in parity {
        queues[(p.group == Group::II) as usize].push_back(&p.parity);
    }
    let mut splitter = BlockSplitter::new(CommonKey::unconstrained(key_guess.to_vec()), code.info_bits());
    let mut histogram = vec![0usize; code.t_c() + 1];
    let (mut blocks, mut failures, mut sum) = (0usize, 0usize, 0usize);
    for (group, _, bits) in splitter.feed(stream) {
        let Some(par) = queues[(group == Group::II) as usize].pop_front() else {
            continue;
        };
        let mut word = bits_to_symbols(&bits, code.m())?;
        word.extend_from_slice(par);
        blocks += 1;
        match code.decode(&word)? {
            Decoded::Corrected { symbol_errors, .. } => {
                histogram[symbol_errors.min(code.t_c())] += 1;
                sum += symbol_errors;
            }
            Decoded::Failed => failures += 1,
        }
    }
    if blocks == 0 {
        return Err(Error::Config("no block could be paired with observed parity".into()));
    }
    let p_eff = symbol_error_rate(p_bit, code.m());
    let k = code.k() as f64;
    let threshold = k * p_eff + 4.0 * (k * p_eff * (1.0 - p_eff) / blocks as f64).sqrt();
    let decoded = blocks - failures;
    let mean_errors = if decoded > 0 { sum as f64 / decoded as f64 } else { f64::NAN };
    Ok(Judgment {
        consistent: failures == 0 && mean_errors <= threshold,
        blocks,
        failures,
        histogram,
        mean_errors,
        threshold,
    })
}

/// Work done by an exhaustive attacker who tries error patterns in order of
/// decreasing probability and, for each, every key in its candidate list.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackTrial {
    /// Keys examined up to and including the true key's pattern.
    pub candidates_examined: usize,
    /// 1-based rank of the true error pattern.
    pub pattern_rank: usize,
    /// Size of the true pattern's candidate list.
    pub class_size: usize,
}

/// Runs one attack where the true first-block error has weight <= t_c.
/// Returns `None` when the realized noise is outside the enumerated patterns.
pub fn attack_trial<R: Rng + ?Sized>(code: &CodeSpec, n_k: usize, r1: f64, p_e: f64, rng: &mut R) -> Result<Option<AttackTrial>> {
    let key = crate::grouping::sample_key(n_k, r1, rng)?;
    let (scenario, _) = TinyScenario::simulate(code, &key, r1, p_e, rng)?;
    let set = enumerate_with_errors(&scenario, code.t_c())?;
    let truth = key_value(key.bits());
    let Some(true_pattern) = set.pattern_of(truth) else {
        return Ok(None);
    };
    let mut order: Vec<usize> = (0..set.patterns.len()).collect();
    let prob = |i: usize| pattern_probability(&set.patterns[i], code.m(), p_e);
    order.sort_by(|&a, &b| prob(b).total_cmp(&prob(a)).then(a.cmp(&b)));
    let mut examined = 0;
    for (rank, &i) in order.iter().enumerate() {
        examined += set.keys[i].len();
        if i == true_pattern {
            return Ok(Some(AttackTrial {
                candidates_examined: examined,
                pattern_rank: rank + 1,
                class_size: set.keys[i].len(),
            }));
        }
    }
    unreachable!("true pattern is in the ordering")
}

/// Averages of the error-free candidate count over random streams.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassAverages {
    pub draws: usize,
    pub key_space: usize,
    /// Mean over streams of |K_e| / (number of parity vectors).
    pub per_parity: f64,
    /// Mean over streams of the average size of the nonempty classes.
    pub per_nonempty_class: f64,
    /// Mean |K_e0| for the class that holds the true key.
    pub observed: f64,
    /// 2^(N_K - m(n-k)) (1 - delta) with the exact delta.
    pub formula: f64,
}

pub fn class_averages<R: Rng + ?Sized>(code: &CodeSpec, n_k: usize, r1: f64, draws: usize, rng: &mut R) -> Result<ClassAverages> {
    let parities = 2f64.powi((code.m() as usize * code.redundancy()) as i32);
    let delta = crate::grouping::outside_set_probability(n_k, r1, crate::grouping::DeltaMode::Exact);
    let formula = 2f64.powi(n_k as i32) / parities * (1.0 - delta);
    let (mut per_parity, mut per_class, mut observed) = (0.0, 0.0, 0.0);
    let mut key_space = 0;
    for _ in 0..draws {
        let key = crate::grouping::sample_key(n_k, r1, rng)?;
        let (s, info) = TinyScenario::simulate(code, &key, r1, 0.0, rng)?;
        let classes = parity_classes(&s)?;
        key_space = classes.values().sum::<usize>();
        per_parity += key_space as f64 / parities;
        per_class += key_space as f64 / classes.len() as f64;
        let p = parity_index(&code.encode_parity(&info)?, code.m());
        observed += classes[&p] as f64;
    }
    let d = draws as f64;
    Ok(ClassAverages {
        draws,
        key_space,
        per_parity: per_parity / d,
        per_nonempty_class: per_class / d,
        observed: observed / d,
        formula,
    })
}

/// Entropy of the enumerated error patterns in bits, for comparing the
/// tally against 2^H_p on the same toy.
pub fn toy_pattern_entropy(code: &CodeSpec, p_e: f64) -> f64 {
    crate::analysis::error_pattern_entropy(code.m(), code.k(), p_e, code.d()).h_p
}
