//! Closed-form security quantities.
//!
//! Candidate counts, error-pattern entropy, effective key length, the
//! secure-rate margin against harvested keys and the three-part error
//! budget `gamma`. All probability arithmetic runs in log space.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::amplify::{binary_entropy, capacity_lower_bound, leakage_bound, Capacity, CapacityParams};
use crate::channel::Method;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailDirection {
    /// Pr{X > threshold}
    Above,
    /// Pr{X < threshold}
    Below,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailMode {
    Exact,
    Normal,
}

/// A tail event of X ~ Binomial(trials, p).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailQuery {
    pub trials: u64,
    pub p: f64,
    pub threshold: u64,
    pub direction: TailDirection,
}

/// ln C(n, k) for real arguments.
pub fn ln_choose(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

fn ln_pmf(n: u64, i: u64, p: f64) -> f64 {
    let mut v = ln_choose(n as f64, i as f64);
    if i > 0 {
        v += i as f64 * p.ln();
    }
    if i < n {
        v += (n - i) as f64 * (-p).ln_1p();
    }
    v
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Natural log of the tail probability; `-inf` for an empty event.
pub fn binomial_tail_ln(q: &TailQuery, mode: TailMode) -> f64 {
    let n = q.trials;
    let range = match q.direction {
        TailDirection::Above => (q.threshold.saturating_add(1), n),
        TailDirection::Below => {
            if q.threshold == 0 {
                return f64::NEG_INFINITY;
            }
            (0, q.threshold.min(n + 1) - 1)
        }
    };
    if range.0 > range.1 {
        return f64::NEG_INFINITY;
    }
    match mode {
        TailMode::Exact => {
            if q.p <= 0.0 {
                return if range.0 == 0 { 0.0 } else { f64::NEG_INFINITY };
            }
            if q.p >= 1.0 {
                return if range.1 == n { 0.0 } else { f64::NEG_INFINITY };
            }
            log_sum_exp((range.0..=range.1).map(|i| ln_pmf(n, i, q.p)))
        }
        TailMode::Normal => {
            let mean = n as f64 * q.p;
            let sd = (n as f64 * q.p * (1.0 - q.p)).sqrt();
            if sd == 0.0 {
                return binomial_tail_ln(q, TailMode::Exact);
            }
            let z = (q.threshold as f64 - mean) / sd;
            let tail = match q.direction {
                TailDirection::Above => 0.5 * erfc(z / std::f64::consts::SQRT_2),
                TailDirection::Below => 0.5 * erfc(-z / std::f64::consts::SQRT_2),
            };
            tail.ln()
        }
    }
}

pub fn binomial_tail(q: &TailQuery, mode: TailMode) -> f64 {
    binomial_tail_ln(q, mode).exp()
}

/// 1 - (1 - p)^u without cancellation.
pub fn any_of(p: f64, u: usize) -> f64 {
    -(u as f64 * (-p).ln_1p()).exp_m1()
}

/// Symbol error probability for m-bit symbols over a BSC: 1 - (1 - p)^m.
pub fn symbol_error_rate(p_bit: f64, m: u32) -> f64 {
    any_of(p_bit, m as usize)
}

/// Bit error rate producing symbol error rate `p_eff`.
pub fn bit_error_rate_for(p_eff: f64, m: u32) -> f64 {
    -((1.0 - p_eff).ln() / m as f64).exp_m1()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateCount {
    pub log2_n_cand: f64,
    /// Set when N_K - m(n-k) <= 0, i.e. parity pins down the key.
    pub degenerate: bool,
}

/// log2 N_cand = N_K - m(n-k) + log2(1 - delta).
pub fn candidate_count_log2(n_k: usize, m: u32, n: usize, k: usize, delta: f64) -> CandidateCount {
    let exponent = n_k as f64 - (m as usize * (n - k)) as f64;
    CandidateCount {
        log2_n_cand: exponent + (-delta).ln_1p() / std::f64::consts::LN_2,
        degenerate: exponent <= 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternEntropy {
    /// Entropy of the bit-error patterns truncated at floor((d-1)/2) errors.
    pub h_p: f64,
    /// The untruncated approximation mk h(p_E).
    pub h_p_approx: f64,
    /// Pr{n_e > floor((d-1)/2)}.
    pub tail_mass: f64,
    /// Set when tail_mass is not small and the truncation is questionable.
    pub warning: bool,
}

/// H_p = -sum_{n_e=0}^{floor((d-1)/2)} C(mk, n_e) p_n log2 p_n,
/// p_n = p_E^n_e (1-p_E)^(mk-n_e).
pub fn error_pattern_entropy(m: u32, k: usize, p_e: f64, d: usize) -> PatternEntropy {
    let bits = m as u64 * k as u64;
    let limit = ((d.saturating_sub(1)) / 2) as u64;
    let approx = bits as f64 * binary_entropy(p_e);
    if p_e <= 0.0 {
        return PatternEntropy { h_p: 0.0, h_p_approx: 0.0, tail_mass: 0.0, warning: false };
    }
    let ln_p = p_e.ln();
    let ln_q = (-p_e).ln_1p();
    let mut h = 0.0;
    for e in 0..=limit.min(bits) {
        let ln_pn = e as f64 * ln_p + (bits - e) as f64 * ln_q;
        let ln_count = ln_choose(bits as f64, e as f64);
        h += (ln_count + ln_pn).exp() * (-ln_pn);
    }
    let tail_mass = binomial_tail(
        &TailQuery { trials: bits, p: p_e, threshold: limit, direction: TailDirection::Above },
        TailMode::Exact,
    );
    PatternEntropy {
        h_p: h / std::f64::consts::LN_2,
        h_p_approx: approx,
        tail_mass,
        warning: tail_mass > 1e-3,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternCount {
    /// Mean bit errors per block, p_E m k.
    pub mean_errors: f64,
    /// Standard deviation sigma_2 of the bit-error count.
    pub sigma: f64,
    /// log2 C(mk, mean_errors), evaluated with log-gamma.
    pub log2_count: f64,
    /// log2(2 sigma_2 C(mk, mean_errors)), the effective pattern count.
    pub log2_effective: f64,
}

pub fn average_pattern_count_log2(m: u32, k: usize, p_e: f64) -> PatternCount {
    let bits = (m as usize * k) as f64;
    let mean = p_e * bits;
    let sigma = (bits * p_e * (1.0 - p_e)).sqrt();
    let log2_count = if mean <= 0.0 {
        0.0
    } else {
        ln_choose(bits, mean) / std::f64::consts::LN_2
    };
    let log2_effective = if sigma > 0.0 { log2_count + (2.0 * sigma).log2() } else { log2_count };
    PatternCount { mean_errors: mean, sigma, log2_count, log2_effective }
}

/// N_K - m(n-k) + mk h(p_E) + log2(1 - delta).
pub fn effective_key_length(n_k: usize, m: u32, n: usize, k: usize, p_e: f64, delta: f64) -> f64 {
    candidate_count_log2(n_k, m, n, k, delta).log2_n_cand + (m as usize * k) as f64 * binary_entropy(p_e)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    /// Probability that a key unit fails to decode at Bob.
    pub decode_failure: f64,
    /// Probability that Eve sees fewer errors than u m k p_sigmaE.
    pub low_noise: f64,
    /// 2^-n_s / (n_r ln 2) with the pre-floor n_r.
    pub leakage: f64,
    pub gamma: f64,
}

/// The three components of the error budget and their maximum.
pub fn gamma_report(params: &CapacityParams, p_b: f64, method: Method) -> GammaReport {
    let cap = capacity_lower_bound(params);
    let t_c = ((params.n - params.k) / 2) as u64;
    let exposed = match method {
        Method::One => params.k,
        Method::Two => params.n,
    } as u64;
    let p_eff_b = symbol_error_rate(p_b, params.m);
    let per_block = binomial_tail(
        &TailQuery { trials: exposed, p: p_eff_b, threshold: t_c, direction: TailDirection::Above },
        TailMode::Exact,
    );
    let decode_failure = any_of(per_block, params.u);

    let low_noise = low_noise_probability(params, &cap);
    let leakage = leakage_bound(params.n_s, cap.n_r_bound);
    GammaReport {
        decode_failure,
        low_noise,
        leakage,
        gamma: decode_failure.max(low_noise).max(leakage),
    }
}

fn low_noise_probability(params: &CapacityParams, cap: &Capacity) -> f64 {
    let trials = params.unit_info_bits() as u64;
    let boundary = trials as f64 * cap.p_sigma_e;
    binomial_tail(
        &TailQuery {
            trials,
            p: params.p_e,
            threshold: boundary.ceil() as u64,
            direction: TailDirection::Below,
        },
        TailMode::Exact,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateMargin {
    /// log2 N_p = m(n-k), the parity-based candidate exponent deficit.
    pub parity_bits: f64,
    /// H_s' = n_r / u, secret bits harvested per block.
    pub harvested_per_block: f64,
    /// mk h(p_E), the per-block equivocation.
    pub equivocation: f64,
    /// m(n-k) > H_s'.
    pub holds: bool,
}

pub fn rate_margin(params: &CapacityParams) -> RateMargin {
    let cap = capacity_lower_bound(params);
    let parity_bits = (params.m as usize * (params.n - params.k)) as f64;
    let harvested = cap.n_r_per_block;
    RateMargin {
        parity_bits,
        harvested_per_block: harvested,
        equivocation: (params.m as usize * params.k) as f64 * binary_entropy(params.p_e),
        holds: params.n > params.k && parity_bits > harvested,
    }
}

/// Everything the analyzer reports for one parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub delta: f64,
    pub log2_n_cand: f64,
    pub h_p: f64,
    pub h_p_approx: f64,
    pub log2_attack_cost: f64,
    pub effective_key_length: f64,
    pub pattern_count: PatternCount,
    pub capacity: Capacity,
    pub rate_margin: RateMargin,
    pub gamma: GammaReport,
    pub warnings: Vec<String>,
}

/// Inputs to a full analysis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisInput {
    pub capacity: CapacityParams,
    pub n_k: usize,
    pub delta: f64,
    pub p_b: f64,
    pub method: Method,
}

pub fn analyze(input: &AnalysisInput) -> SecurityReport {
    let c = &input.capacity;
    let d = c.n - c.k + 1;
    let cand = candidate_count_log2(input.n_k, c.m, c.n, c.k, input.delta);
    let ent = error_pattern_entropy(c.m, c.k, c.p_e, d);
    let mut warnings = Vec::new();
    if cand.degenerate {
        warnings.push("N_K - m(n-k) <= 0: parity determines the key".to_string());
    }
    if ent.warning {
        warnings.push(format!(
            "Pr{{n_e > (d-1)/2}} = {:.3e} is not small; H_p truncation is loose",
            ent.tail_mass
        ));
    }
    let capacity = capacity_lower_bound(c);
    if !capacity.secure {
        warnings.push("C_s0 <= 0: no secure rate at these parameters".to_string());
    }
    if crate::amplify::fluctuation_adjusted_ber(c).clamped {
        warnings.push("u m k p_E <= r sigma_u2: p_sigmaE clamped to 0".to_string());
    }
    SecurityReport {
        delta: input.delta,
        log2_n_cand: cand.log2_n_cand,
        h_p: ent.h_p,
        h_p_approx: ent.h_p_approx,
        log2_attack_cost: ent.h_p + cand.log2_n_cand,
        effective_key_length: effective_key_length(input.n_k, c.m, c.n, c.k, c.p_e, input.delta),
        pattern_count: average_pattern_count_log2(c.m, c.k, c.p_e),
        capacity,
        rate_margin: rate_margin(c),
        gamma: gamma_report(c, input.p_b, input.method),
        warnings,
    }
}

/// How a computed cell is compared with the published figure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    /// Published as "< x" with the third significant figure rounded up.
    UpperBound,
    /// Published as ">= x", rounded to three significant figures.
    LowerBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCell {
    pub row: String,
    pub computed: f64,
    pub published: f64,
    pub kind: CellKind,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateColumn {
    pub u: usize,
    pub r: f64,
    pub n_s: f64,
    pub cells: Vec<RateCell>,
}

pub const RATE_ROWS: [&str; 6] = [
    "decode failure Pr{n_cb > (n-k)/2} <",
    "low noise Pr{n_ue/umk < p_sigmaE} <",
    "leakage 2^-n_s/(n_r ln 2) <",
    "gamma <=",
    "C_s >=",
    "n_r/u >=",
];

/// (u, r, n_s) and the six published figures for each column.
pub const RATE_PUBLISHED: [(usize, f64, f64, [f64; 6]); 3] = [
    (1, 3.0, 10.0, [4.70e-10, 4.48e-4, 1.13e-4, 4.48e-4, 0.00615, 12.5]),
    (10, 3.0, 10.0, [4.70e-9, 9.63e-4, 2.79e-6, 9.63e-4, 0.0248, 50.6]),
    (10, 5.0, 16.0, [4.70e-9, 5.07e-8, 5.29e-8, 5.29e-8, 0.0204, 41.6]),
];

/// Rounds to three significant figures, away from zero when `up`.
pub fn round_3sf(x: f64, up: bool) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(2 - x.abs().log10().floor() as i32);
    let scaled = x * scale;
    // guard against representation noise like 447.00000000001
    let scaled = if (scaled - scaled.round()).abs() < 1e-9 { scaled.round() } else { scaled };
    let r = if up { scaled.ceil() } else { scaled.round() };
    r / scale
}

fn same_3sf(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs()
}

pub fn rate_cell(row: &str, computed: f64, published: f64, kind: CellKind) -> RateCell {
    let pass = match kind {
        CellKind::UpperBound => computed <= published && same_3sf(round_3sf(computed, true), published),
        CellKind::LowerBound => same_3sf(round_3sf(computed, false), published),
    };
    RateCell { row: row.to_string(), computed, published, kind, pass }
}

/// Recomputes the secure-rate table for the (255, 167) code over GF(2^8)
/// at symbol error rate 0.1 with p_B = p_E.
pub fn rate_table() -> Vec<RateColumn> {
    let p_e = bit_error_rate_for(0.1, 8);
    RATE_PUBLISHED
        .iter()
        .map(|&(u, r, n_s, published)| {
            let params = CapacityParams { m: 8, n: 255, k: 167, p_e, u, r, n_s };
            let g = gamma_report(&params, p_e, Method::One);
            let cap = capacity_lower_bound(&params);
            let computed = [g.decode_failure, g.low_noise, g.leakage, g.gamma, cap.c_s0, cap.n_r_per_block];
            let cells = RATE_ROWS
                .iter()
                .zip(computed.iter().zip(published))
                .enumerate()
                .map(|(i, (row, (&c, p)))| {
                    let kind = if i < 4 { CellKind::UpperBound } else { CellKind::LowerBound };
                    rate_cell(row, c, p, kind)
                })
                .collect();
            RateColumn { u, r, n_s, cells }
        })
        .collect()
}
