//! Parameter sets and built-in presets.

use std::path::Path;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::amplify::CapacityParams;
use crate::analysis::bit_error_rate_for;
use crate::channel::{ChannelConfig, Method};
use crate::code::CodeSpec;
use crate::error::{Error, Result};
use crate::gf::Field;

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub m: u32,
    /// Field polynomial; the default primitive polynomial for `m` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<u32>,
    pub n: usize,
    pub k: usize,
    /// Common key length N_K.
    pub n_k: usize,
    /// Admissible-set width in units of sigma1.
    pub r1: f64,
    pub p_e: f64,
    pub p_b: f64,
    pub method: Method,
    /// Blocks per key unit.
    pub u: usize,
    /// Fluctuation multiplier.
    pub r: f64,
    pub n_s: f64,
    /// Key bits per unit; the secure maximum when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_r: Option<usize>,
    /// Blocks to transmit in a simulation.
    pub blocks: usize,
    pub seed: u64,
}

pub const PRESETS: [&str; 3] = ["paper-255-167", "toy-63-41", "toy-7-5"];

impl Params {
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper-255-167" => {
                let p = bit_error_rate_for(0.1, 8);
                Ok(Params {
                    m: 8,
                    poly: None,
                    n: 255,
                    k: 167,
                    n_k: 2496,
                    r1: 3.5,
                    p_e: p,
                    p_b: p,
                    method: Method::One,
                    u: 1,
                    r: 3.0,
                    n_s: 10.0,
                    n_r: None,
                    blocks: 1000,
                    seed: 1,
                })
            }
            // per-unit failure near 1e-3 at p_B = p_E
            "toy-63-41" => Ok(Params {
                m: 6,
                poly: None,
                n: 63,
                k: 41,
                n_k: 416,
                r1: 3.0,
                p_e: 0.0189,
                p_b: 0.0189,
                method: Method::One,
                u: 1,
                r: 1.0,
                n_s: 2.0,
                n_r: None,
                blocks: 10_000,
                seed: 1,
            }),
            "toy-7-5" => Ok(Params {
                m: 3,
                poly: None,
                n: 7,
                k: 5,
                n_k: 16,
                r1: 2.0,
                p_e: 0.005,
                p_b: 0.005,
                method: Method::One,
                u: 1,
                r: 1.0,
                n_s: 1.0,
                n_r: None,
                blocks: 50,
                seed: 1,
            }),
            _ => Err(Error::Config(format!(
                "unknown preset {name:?} (known: {})",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn field(&self) -> Result<Arc<Field>> {
        let f = match self.poly {
            Some(p) => Field::new(self.m, p)?,
            None => Field::with_default_poly(self.m)?,
        };
        Ok(Arc::new(f))
    }

    pub fn code(&self) -> Result<CodeSpec> {
        CodeSpec::new(self.field()?, self.n, self.k)
    }

    pub fn capacity(&self) -> CapacityParams {
        CapacityParams {
            m: self.m,
            n: self.n,
            k: self.k,
            p_e: self.p_e,
            u: self.u,
            r: self.r,
            n_s: self.n_s,
        }
    }

    pub fn channel(&self) -> ChannelConfig {
        ChannelConfig { p_e: self.p_e, p_b: self.p_b, method: self.method, seed: derive_seed(self.seed, Lane::Channel) }
    }
}

/// Independent purposes a run seed is split into.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lane {
    Key,
    Source,
    Channel,
    Hash,
}

/// A 64-bit seed for `lane`, drawn from its own ChaCha stream.
pub fn derive_seed(seed: u64, lane: Lane) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(lane as u64 + 1);
    rng.next_u64()
}
