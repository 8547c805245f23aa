//! Binary symmetric channel simulation and the wire frame format.
//!
//! Info frames carry consecutive `mk`-bit chunks of the raw source stream.
//! Parity frames carry the parity bits of one coded block and are tagged
//! with its group and session-wide ordinal. Method 1 sends parity over an
//! errorless public channel, Method 2 over the same noisy channel as the
//! stream.
//!
//! Frame layout (big-endian):
//!
//! ```text
//! "NKY1" | version u8 | method u8 | group u8 | index u32 | kind u8 | bit_len u32 | payload
//! ```
//!
//! The payload is packed MSB-first and zero-padded to a byte boundary.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{pack_bits, unpack_bits};
use crate::error::{Error, Result};
use crate::grouping::Group;

pub const MAGIC: &[u8; 4] = b"NKY1";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 1 + 1 + 4 + 1 + 4;

/// How parity reaches the receiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Method {
    /// Parity over an errorless public channel.
    One,
    /// Parity over the same noisy channel as the stream.
    Two,
}

impl TryFrom<u8> for Method {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Method::One),
            2 => Ok(Method::Two),
            _ => Err(Error::Parse(format!("unknown method {v}"))),
        }
    }
}

impl From<Method> for u8 {
    fn from(m: Method) -> u8 {
        match m {
            Method::One => 1,
            Method::Two => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Eve's bit error rate.
    pub p_e: f64,
    /// Bob's bit error rate.
    pub p_b: f64,
    pub method: Method,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.p_e) || !(0.0..=0.5).contains(&self.p_b) {
            return Err(Error::Config(format!(
                "error rates must lie in [0, 1/2] (p_E = {}, p_B = {})",
                self.p_e, self.p_b
            )));
        }
        if self.p_b < self.p_e {
            return Err(Error::Config(format!(
                "p_B = {} is below p_E = {}; Eve taps at the source",
                self.p_b, self.p_e
            )));
        }
        Ok(())
    }
}

/// Flips each bit independently with probability `p`.
pub fn bsc_transmit<R: Rng + ?Sized>(bits: &[bool], p: f64, rng: &mut R) -> Vec<bool> {
    if p <= 0.0 {
        return bits.to_vec();
    }
    if p >= 1.0 {
        return bits.iter().map(|b| !b).collect();
    }
    bits.iter().map(|&b| b ^ rng.random_bool(p)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recipient {
    Bob,
    Eve,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayloadKind {
    Info,
    Parity,
}

impl PayloadKind {
    fn wire(self) -> u8 {
        match self {
            PayloadKind::Info => 0,
            PayloadKind::Parity => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub method: Method,
    /// `None` for stream chunks, which precede grouping.
    pub group: Option<Group>,
    pub index: u32,
    pub kind: PayloadKind,
    pub payload: Vec<bool>,
}

/// Expected payload lengths, used to reject malformed frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameLayout {
    pub info_bits: usize,
    pub parity_bits: usize,
}

impl Frame {
    pub fn info(method: Method, index: u32, payload: Vec<bool>) -> Self {
        Frame { method, group: None, index, kind: PayloadKind::Info, payload }
    }

    pub fn parity(method: Method, group: Group, index: u32, payload: Vec<bool>) -> Self {
        Frame { method, group: Some(group), index, kind: PayloadKind::Parity, payload }
    }

    pub fn check(&self, layout: &FrameLayout) -> Result<()> {
        let (expected, group_ok) = match self.kind {
            PayloadKind::Info => (layout.info_bits, self.group.is_none()),
            PayloadKind::Parity => (layout.parity_bits, self.group.is_some()),
        };
        if !group_ok {
            return Err(Error::Parse(format!("{:?} frame with group tag {:?}", self.kind, self.group)));
        }
        if self.payload.len() != expected {
            return Err(Error::Parse(format!(
                "{:?} frame carries {} bits, expected {expected}",
                self.kind,
                self.payload.len()
            )));
        }
        Ok(())
    }
}

pub fn encode_frame(frame: &Frame) -> Vec<u8> {
    let bit_len = u32::try_from(frame.payload.len()).expect("payload exceeds u32 bits");
    let mut out = Vec::with_capacity(HEADER_LEN + frame.payload.len().div_ceil(8));
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(frame.method.into());
    out.push(frame.group.map_or(0, Group::wire_tag));
    out.extend_from_slice(&frame.index.to_be_bytes());
    out.push(frame.kind.wire());
    out.extend_from_slice(&bit_len.to_be_bytes());
    out.extend_from_slice(&pack_bits(&frame.payload));
    out
}

fn be_u32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

/// Parses one frame and checks its payload length against `layout`.
pub fn decode_frame(bytes: &[u8], layout: &FrameLayout) -> Result<Frame> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Parse(format!("truncated header: {} bytes", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Parse("bad magic".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::Parse(format!("unsupported version {}", bytes[4])));
    }
    let method = Method::try_from(bytes[5])?;
    let group = match bytes[6] {
        0 => None,
        1 => Some(Group::I),
        2 => Some(Group::II),
        g => return Err(Error::Parse(format!("unknown group tag {g}"))),
    };
    let index = be_u32(&bytes[7..11]);
    let kind = match bytes[11] {
        0 => PayloadKind::Info,
        1 => PayloadKind::Parity,
        k => return Err(Error::Parse(format!("unknown payload kind {k}"))),
    };
    let bit_len = be_u32(&bytes[12..16]) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != bit_len.div_ceil(8) {
        return Err(Error::Parse(format!(
            "payload of {bit_len} bits needs {} bytes, found {}",
            bit_len.div_ceil(8),
            body.len()
        )));
    }
    if !bit_len.is_multiple_of(8) && body[body.len() - 1] << (bit_len % 8) != 0 {
        return Err(Error::Parse("nonzero padding bits".into()));
    }
    let frame = Frame { method, group, index, kind, payload: unpack_bits(body, bit_len) };
    frame.check(layout)?;
    Ok(frame)
}

fn frame_rng(seed: u64, recipient: Recipient, frame: &Frame) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let who = match recipient {
        Recipient::Bob => 0u64,
        Recipient::Eve => 1,
    };
    rng.set_stream((who << 40) | ((frame.kind.wire() as u64) << 32) | frame.index as u64);
    rng
}

/// The frame as `recipient` receives it. Noise is drawn from a sub-stream
/// fixed by (seed, recipient, kind, index), so delivery is a pure function.
pub fn deliver(frame: &Frame, config: &ChannelConfig, recipient: Recipient) -> Frame {
    let noisy = match frame.kind {
        PayloadKind::Info => true,
        PayloadKind::Parity => config.method == Method::Two,
    };
    if !noisy {
        return frame.clone();
    }
    let p = match recipient {
        Recipient::Bob => config.p_b,
        Recipient::Eve => config.p_e,
    };
    let mut rng = frame_rng(config.seed, recipient, frame);
    Frame { payload: bsc_transmit(&frame.payload, p, &mut rng), ..frame.clone() }
}

/// Writes frames as a capture: each encoded frame prefixed by its u32 BE byte length.
pub fn write_capture<W: Write>(mut w: W, frames: &[Frame]) -> Result<()> {
    for f in frames {
        let bytes = encode_frame(f);
        w.write_all(&(bytes.len() as u32).to_be_bytes())?;
        w.write_all(&bytes)?;
    }
    Ok(())
}

pub fn read_capture<R: Read>(mut r: R, layout: &FrameLayout) -> Result<Vec<Frame>> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let mut frames = Vec::new();
    let mut rest = &data[..];
    while !rest.is_empty() {
        if rest.len() < 4 {
            return Err(Error::Parse("truncated length prefix".into()));
        }
        let len = be_u32(rest) as usize;
        rest = &rest[4..];
        if rest.len() < len {
            return Err(Error::Parse(format!("frame of {len} bytes truncated to {}", rest.len())));
        }
        frames.push(decode_frame(&rest[..len], layout)?);
        rest = &rest[len..];
    }
    Ok(frames)
}
