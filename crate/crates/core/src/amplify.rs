//! Privacy amplification and the secure-rate calculation.
//!
//! Keys are extracted from `u` blocks of information bits with a binary
//! Toeplitz matrix whose diagonals are expanded from a public seed. The
//! number of extracted bits is capped by the conditional secrecy capacity
//! lower bound
//!
//! ```text
//! C_s0 = (k - t_mc)/n * h(p_sigmaE) - n_s/(u m n)
//! p_sigmaE = p_E (n_ue - r sigma_u2) / n_ue,  n_ue = u m k p_E
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::code::CodeSpec;
use crate::error::{Error, Result};

/// h(p) = -p log2 p - (1-p) log2 (1-p), with h(0) = h(1) = 0.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Inputs to the capacity bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityParams {
    pub m: u32,
    pub n: usize,
    pub k: usize,
    /// Eve's bit error rate.
    pub p_e: f64,
    /// Blocks per key-generation unit.
    pub u: usize,
    /// Fluctuation multiplier applied to sigma_u2.
    pub r: f64,
    /// Safety parameter in bits.
    pub n_s: f64,
}

impl CapacityParams {
    pub fn for_code(code: &CodeSpec, p_e: f64, u: usize, r: f64, n_s: f64) -> Self {
        CapacityParams {
            m: code.m(),
            n: code.n(),
            k: code.k(),
            p_e,
            u,
            r,
            n_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.u < 1 {
            return Err(Error::Config("u must be at least 1".into()));
        }
        if self.n_s < 1.0 {
            return Err(Error::Config("n_s must be at least 1".into()));
        }
        if !(self.p_e > 0.0 && self.p_e <= 0.5) {
            return Err(Error::Config(format!("p_E = {} must lie in (0, 1/2]", self.p_e)));
        }
        if self.r < 0.0 {
            return Err(Error::Config("r must be non-negative".into()));
        }
        if self.k == 0 || self.k >= self.n {
            return Err(Error::Config("need 0 < k < n".into()));
        }
        Ok(())
    }

    pub fn t_mc(&self) -> usize {
        self.n - self.k
    }

    /// Information bits per key unit, u m k.
    pub fn unit_info_bits(&self) -> usize {
        self.u * self.m as usize * self.k
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluctuationAdjusted {
    /// Mean of Eve's bit errors per unit, u m k p_E.
    pub mean_errors: f64,
    /// Standard deviation sigma_u2.
    pub sigma: f64,
    pub p_sigma_e: f64,
    /// True when mean_errors <= r sigma and p_sigmaE was clamped to 0.
    pub clamped: bool,
}

pub fn fluctuation_adjusted_ber(params: &CapacityParams) -> FluctuationAdjusted {
    let trials = params.unit_info_bits() as f64;
    let mean = trials * params.p_e;
    let sigma = (trials * params.p_e * (1.0 - params.p_e)).sqrt();
    let margin = mean - params.r * sigma;
    if margin <= 0.0 || mean <= 0.0 {
        return FluctuationAdjusted {
            mean_errors: mean,
            sigma,
            p_sigma_e: 0.0,
            clamped: true,
        };
    }
    FluctuationAdjusted {
        mean_errors: mean,
        sigma,
        p_sigma_e: params.p_e * margin / mean,
        clamped: false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Capacity {
    pub p_sigma_e: f64,
    pub h_p_sigma_e: f64,
    /// Lower bound on secret bits per transmitted bit.
    pub c_s0: f64,
    /// u m n C_s0 before flooring.
    pub n_r_bound: f64,
    /// Largest admissible key length, floor(u m n C_s0), or 0.
    pub n_r_max: usize,
    /// n_r_bound / u, secret bits per block.
    pub n_r_per_block: f64,
    /// False when C_s0 <= 0: no secure rate at these parameters.
    pub secure: bool,
}

pub fn capacity_lower_bound(params: &CapacityParams) -> Capacity {
    let adj = fluctuation_adjusted_ber(params);
    let h = binary_entropy(adj.p_sigma_e);
    let m = params.m as f64;
    let n = params.n as f64;
    let u = params.u as f64;
    let c_s0 = (params.k as f64 - params.t_mc() as f64) / n * h - params.n_s / (u * m * n);
    let n_r_bound = u * m * n * c_s0;
    let secure = c_s0 > 0.0;
    Capacity {
        p_sigma_e: adj.p_sigma_e,
        h_p_sigma_e: h,
        c_s0,
        n_r_bound,
        n_r_max: if secure { n_r_bound.floor() as usize } else { 0 },
        n_r_per_block: n_r_bound / u,
        secure,
    }
}

/// Bound on Eve's information per key bit: 2^-n_s / (n_r ln 2).
pub fn leakage_bound(n_s: f64, n_r: f64) -> f64 {
    if n_r <= 0.0 {
        return f64::INFINITY;
    }
    (-n_s).exp2() / (n_r * std::f64::consts::LN_2)
}

/// Public seed selecting one member of the Toeplitz family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HashSeed(pub u64);

/// A binary Toeplitz matrix mapping `input_len` bits to `output_len` bits.
#[derive(Clone, Debug)]
pub struct ToeplitzHash {
    input_len: usize,
    output_len: usize,
    // diag[i - j + input_len - 1] is entry (i, j).
    diag: Vec<bool>,
}

impl ToeplitzHash {
    pub fn new(input_len: usize, output_len: usize, seed: HashSeed) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
        let len = (input_len + output_len).saturating_sub(1);
        let diag = (0..len).map(|_| rng.random::<bool>()).collect();
        ToeplitzHash {
            input_len,
            output_len,
            diag,
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn hash(&self, input: &[bool]) -> Result<Vec<bool>> {
        if input.len() != self.input_len {
            return Err(Error::Length {
                expected: self.input_len,
                got: input.len(),
            });
        }
        let ones: Vec<usize> = input
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
            .collect();
        Ok((0..self.output_len)
            .map(|i| {
                let base = i + self.input_len - 1;
                ones.iter().fold(false, |acc, &j| acc ^ self.diag[base - j])
            })
            .collect())
    }
}

/// Compresses one key unit of information bits to `n_r` secret bits.
/// Refuses when `n_r` exceeds the secure limit `n_r_max`.
pub fn extract_key(info_bits: &[bool], n_r: usize, n_r_max: usize, seed: HashSeed) -> Result<Vec<bool>> {
    if n_r > n_r_max {
        return Err(Error::RateViolation {
            requested: n_r,
            max: n_r_max,
        });
    }
    ToeplitzHash::new(info_bits.len(), n_r, seed).hash(info_bits)
}
