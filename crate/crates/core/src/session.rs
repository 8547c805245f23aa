//! End-to-end key agreement: transmitter, channel, receiver and Eve's tap.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::amplify::{capacity_lower_bound, extract_key, CapacityParams, HashSeed};
use crate::bits::{bits_to_symbols, hamming_distance, symbols_to_bits};
use crate::channel::{deliver, encode_frame, ChannelConfig, Frame, FrameLayout, PayloadKind, Recipient};
use crate::code::{Block, CodeSpec, Decoded};
use crate::error::{Error, Result};
use crate::grouping::{key_fits_block, sample_key, BlockSplitter, CommonKey, Group};
use crate::params::{derive_seed, Lane, Params};

#[derive(Clone, Debug)]
pub struct SessionConfig {
    pub key: CommonKey,
    pub r1: f64,
    pub code: CodeSpec,
    pub channel: ChannelConfig,
    pub u: usize,
    pub n_s: f64,
    pub r: f64,
    /// Key bits per unit; the secure maximum when `None`.
    pub n_r: Option<usize>,
    pub blocks_target: usize,
    pub source_seed: u64,
    pub hash_seed: u64,
    /// Keep Eve's view of every frame in the report.
    pub capture_eve: bool,
}

impl SessionConfig {
    /// Builds a session from a parameter set, sampling the common key from
    /// the key lane of the seed.
    pub fn from_params(p: &Params) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(p.seed, Lane::Key));
        Ok(SessionConfig {
            key: sample_key(p.n_k, p.r1, &mut rng)?,
            r1: p.r1,
            code: p.code()?,
            channel: p.channel(),
            u: p.u,
            n_s: p.n_s,
            r: p.r,
            n_r: p.n_r,
            blocks_target: p.blocks,
            source_seed: derive_seed(p.seed, Lane::Source),
            hash_seed: derive_seed(p.seed, Lane::Hash),
            capture_eve: false,
        })
    }

    pub fn capacity_params(&self) -> CapacityParams {
        CapacityParams::for_code(&self.code, self.channel.p_e, self.u, self.r, self.n_s)
    }

    pub fn layout(&self) -> FrameLayout {
        FrameLayout { info_bits: self.code.info_bits(), parity_bits: self.code.parity_bits() }
    }

    /// Checks every gate and returns the key length per unit.
    pub fn validate(&self) -> Result<usize> {
        self.channel.validate()?;
        let cap = self.capacity_params();
        cap.validate()?;
        if !crate::grouping::validate_key(self.key.bits(), self.r1) {
            return Err(Error::KeyNotAdmissible { n1: self.key.n1(), n_k: self.key.len(), r1: self.r1 });
        }
        if !key_fits_block(self.key.len(), self.r1, self.code.info_bits()) {
            return Err(Error::Config(format!(
                "N_K/2 + ceil(r1 sigma1) exceeds mk = {} for N_K = {}, r1 = {}",
                self.code.info_bits(),
                self.key.len(),
                self.r1
            )));
        }
        let max = capacity_lower_bound(&cap).n_r_max;
        let n_r = self.n_r.unwrap_or(max);
        if n_r > max {
            return Err(Error::RateViolation { requested: n_r, max });
        }
        if n_r == 0 {
            return Err(Error::Config("no secure key bits at these parameters".into()));
        }
        Ok(n_r)
    }

    fn unit_seed(&self, unit: usize) -> HashSeed {
        let mut rng = ChaCha8Rng::seed_from_u64(self.hash_seed);
        rng.set_stream(unit as u64);
        HashSeed(rng.random())
    }
}

/// What Alice sends and keeps.
#[derive(Clone, Debug)]
pub struct Transmission {
    pub frames: Vec<Frame>,
    pub blocks: Vec<Block>,
    pub keys: Vec<Vec<bool>>,
    pub n_r: usize,
}

/// Draws the source stream, groups it, encodes every block and hashes each
/// run of `u` consecutive blocks into a key.
pub fn run_transmitter(config: &SessionConfig) -> Result<Transmission> {
    let n_r = config.validate()?;
    let code = &config.code;
    let mk = code.info_bits();
    let method = config.channel.method;
    let mut rng = ChaCha8Rng::seed_from_u64(config.source_seed);
    let mut splitter = BlockSplitter::new(config.key.clone(), mk);
    let mut frames = Vec::new();
    let mut blocks: Vec<Block> = Vec::with_capacity(config.blocks_target);
    let mut chunk_index = 0u32;
    while blocks.len() < config.blocks_target {
        let chunk: Vec<bool> = (0..mk).map(|_| rng.random()).collect();
        let completed = splitter.feed(&chunk);
        frames.push(Frame::info(method, chunk_index, chunk));
        chunk_index += 1;
        for (group, index, bits) in completed {
            if blocks.len() == config.blocks_target {
                break;
            }
            let info = bits_to_symbols(&bits, code.m())?;
            let parity = code.encode_parity(&info)?;
            frames.push(Frame::parity(method, group, index, symbols_to_bits(&parity, code.m())));
            blocks.push(Block { group, index, info, parity });
        }
    }
    let max = capacity_lower_bound(&config.capacity_params()).n_r_max;
    let keys = blocks
        .chunks_exact(config.u)
        .enumerate()
        .map(|(unit, group)| {
            let bits: Vec<bool> = group.iter().flat_map(|b| symbols_to_bits(&b.info, code.m())).collect();
            extract_key(&bits, n_r, max, config.unit_seed(unit))
        })
        .collect::<Result<_>>()?;
    Ok(Transmission { frames, blocks, keys, n_r })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockOutcome {
    pub group: Group,
    pub index: u32,
    /// Corrected symbol errors, or `None` when decoding failed.
    pub symbol_errors: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reception {
    /// One entry per key unit; `None` when any of its blocks failed.
    pub keys: Vec<Option<Vec<bool>>>,
    pub outcomes: Vec<BlockOutcome>,
}

/// Regroups the received stream with the common key and decodes each block
/// against its parity frame.
pub fn run_receiver(frames: &[Frame], config: &SessionConfig) -> Result<Reception> {
    let n_r = config.validate()?;
    let code = &config.code;
    let layout = config.layout();
    let mut splitter = BlockSplitter::new(config.key.clone(), code.info_bits());
    let mut pending: BTreeMap<u32, (Group, Vec<bool>)> = BTreeMap::new();
    let mut parity: BTreeMap<u32, (Group, Vec<bool>)> = BTreeMap::new();
    let mut outcomes = Vec::new();
    let mut decoded_info: Vec<Option<Vec<bool>>> = Vec::new();
    let mut next_chunk = 0u32;
    let mut next_block = 0u32;
    for frame in frames {
        frame.check(&layout)?;
        match frame.kind {
            PayloadKind::Info => {
                if frame.index != next_chunk {
                    return Err(Error::Framing(format!(
                        "stream chunk {} arrived, expected {next_chunk}",
                        frame.index
                    )));
                }
                next_chunk += 1;
                for (g, i, bits) in splitter.feed(&frame.payload) {
                    pending.insert(i, (g, bits));
                }
            }
            PayloadKind::Parity => {
                let group = frame.group.expect("checked by layout");
                if parity.insert(frame.index, (group, frame.payload.clone())).is_some() {
                    return Err(Error::Framing(format!("duplicate parity for block {}", frame.index)));
                }
            }
        }
        while let (Some((g, info)), Some((pg, par))) = (pending.get(&next_block), parity.get(&next_block)) {
            if g != pg {
                return Err(Error::Framing(format!(
                    "block {next_block} regroups into {g} but its parity is tagged {pg}"
                )));
            }
            let mut word = bits_to_symbols(info, code.m())?;
            word.extend(bits_to_symbols(par, code.m())?);
            let (errors, bits) = match code.decode(&word)? {
                Decoded::Corrected { info, symbol_errors } => (Some(symbol_errors), Some(symbols_to_bits(&info, code.m()))),
                Decoded::Failed => (None, None),
            };
            outcomes.push(BlockOutcome { group: *g, index: next_block, symbol_errors: errors });
            decoded_info.push(bits);
            pending.remove(&next_block);
            parity.remove(&next_block);
            next_block += 1;
        }
    }
    if let Some(i) = parity.keys().next() {
        return Err(Error::Framing(format!("parity for block {i} has no matching stream data")));
    }
    let max = capacity_lower_bound(&config.capacity_params()).n_r_max;
    let keys = decoded_info
        .chunks_exact(config.u)
        .enumerate()
        .map(|(unit, blocks)| {
            let bits: Option<Vec<bool>> = blocks.iter().try_fold(Vec::new(), |mut acc, b| {
                acc.extend(b.as_ref()?);
                Some(acc)
            });
            bits.map(|b| extract_key(&b, n_r, max, config.unit_seed(unit))).transpose()
        })
        .collect::<Result<_>>()?;
    Ok(Reception { keys, outcomes })
}

/// Bits written as a string of '0' and '1'.
pub fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub blocks: usize,
    pub key_units: usize,
    pub n_r: usize,
    pub keys_alice: Vec<String>,
    /// `None` marks a unit with a decode failure.
    pub keys_bob: Vec<Option<String>>,
    pub agreements: usize,
    pub decode_failures: usize,
    /// Units that decoded but produced different keys.
    pub mismatches: usize,
    pub agreement_rate: f64,
    /// Bit errors in each block's information part as regrouped by Bob.
    pub bob_bit_errors: Vec<usize>,
    pub eve_bit_errors: Vec<usize>,
    pub bob_symbol_errors: Vec<Option<usize>>,
    /// Eve's view of every frame, hex encoded in wire format.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eve_capture: Vec<String>,
}

fn regrouped_errors(frames: &[Frame], config: &SessionConfig, alice: &[Block]) -> Vec<usize> {
    let mut splitter = BlockSplitter::new(config.key.clone(), config.code.info_bits());
    let mut out = vec![0; alice.len()];
    for f in frames.iter().filter(|f| f.kind == PayloadKind::Info) {
        for (_, i, bits) in splitter.feed(&f.payload) {
            if let Some(b) = alice.get(i as usize) {
                out[i as usize] = hamming_distance(&bits, &symbols_to_bits(&b.info, config.code.m()));
            }
        }
    }
    out
}

/// Transmitter to Bob through the channel, with Eve tapping at p_E.
pub fn run_session(config: &SessionConfig) -> Result<SessionReport> {
    let tx = run_transmitter(config)?;
    let to_bob: Vec<Frame> = tx.frames.iter().map(|f| deliver(f, &config.channel, Recipient::Bob)).collect();
    let to_eve: Vec<Frame> = tx.frames.iter().map(|f| deliver(f, &config.channel, Recipient::Eve)).collect();
    let rx = run_receiver(&to_bob, config)?;

    let mut report = SessionReport {
        blocks: tx.blocks.len(),
        key_units: tx.keys.len(),
        n_r: tx.n_r,
        ..Default::default()
    };
    for (a, b) in tx.keys.iter().zip(&rx.keys) {
        match b {
            None => report.decode_failures += 1,
            Some(b) if b == a => report.agreements += 1,
            Some(_) => report.mismatches += 1,
        }
        report.keys_alice.push(bit_string(a));
        report.keys_bob.push(b.as_deref().map(bit_string));
    }
    report.agreement_rate = if tx.keys.is_empty() { 0.0 } else { report.agreements as f64 / tx.keys.len() as f64 };
    report.bob_bit_errors = regrouped_errors(&to_bob, config, &tx.blocks);
    report.eve_bit_errors = regrouped_errors(&to_eve, config, &tx.blocks);
    report.bob_symbol_errors = rx.outcomes.iter().map(|o| o.symbol_errors).collect();
    if config.capture_eve {
        report.eve_capture = to_eve.iter().map(|f| hex::encode(encode_frame(f))).collect();
    }
    Ok(report)
}

/// One-time pad: XORs `message` with the leading bits of `key`.
pub fn otp_xor(message: &[u8], key: &[bool]) -> Result<Vec<u8>> {
    if key.len() < message.len() * 8 {
        return Err(Error::Length { expected: message.len() * 8, got: key.len() });
    }
    let pad = crate::bits::pack_bits(&key[..message.len() * 8]);
    Ok(message.iter().zip(pad).map(|(m, k)| m ^ k).collect())
}
