//! The exhaustive attack run behind `noisekey attack`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use noisekey::analysis::candidate_count_log2;
use noisekey::bits::bits_to_symbols;
use noisekey::channel::bsc_transmit;
use noisekey::grouping::{outside_set_probability, sample_key, BlockSplitter, DeltaMode};
use noisekey::oracle::{self, Judgment, ObservedParity, TinyScenario};
use noisekey::params::{derive_seed, Lane};
use noisekey::{Error, Params};

#[derive(Serialize)]
pub struct PatternCount {
    pub pattern: Vec<u16>,
    pub candidates: usize,
}

#[derive(Serialize)]
pub struct Tally {
    pub trials: usize,
    /// Attacks whose true error pattern was within t_c symbols.
    pub completed: usize,
    pub mean_examined: f64,
    pub h_p: f64,
    pub n_cand: f64,
    pub predicted: f64,
    pub ratio: f64,
}

#[derive(Serialize)]
pub struct AttackReport {
    pub key_space: usize,
    pub patterns: Vec<PatternCount>,
    pub total_candidates: usize,
    pub overlaps: usize,
    pub true_key_pattern: Option<usize>,
    pub judge_true_key: Judgment,
    pub judge_wrong_key: Judgment,
    pub tally: Tally,
}

pub fn run(params: &Params, trials: usize) -> Result<AttackReport, Error> {
    let code = params.code()?;
    if params.n_k > oracle::MAX_KEY_BITS {
        return Err(Error::Intractable { cost_log2: params.n_k as f64, limit_log2: oracle::COST_LIMIT_LOG2 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, Lane::Source));
    let key = sample_key(params.n_k, params.r1, &mut ChaCha8Rng::seed_from_u64(derive_seed(params.seed, Lane::Key)))?;

    let (scenario, _) = TinyScenario::simulate(&code, &key, params.r1, params.p_e, &mut rng)?;
    let set = oracle::enumerate_with_errors(&scenario, code.t_c())?;
    let truth = oracle::key_value(key.bits());

    // a longer observation for the judge
    let blocks = params.blocks.max(1);
    let mut splitter = BlockSplitter::new(key.clone(), code.info_bits());
    let (mut x, mut parity) = (Vec::new(), Vec::new());
    while parity.len() < blocks {
        let b: bool = rng.random();
        x.push(b);
        if let Some((group, _, bits)) = splitter.push(b) {
            let info = bits_to_symbols(&bits, code.m())?;
            parity.push(ObservedParity { group, parity: code.encode_parity(&info)? });
        }
    }
    let z = bsc_transmit(&x, params.p_e, &mut rng);
    let judge_true_key = oracle::judge_candidate(key.bits(), &z, &parity, &code, params.p_e)?;
    let wrong = loop {
        let k = sample_key(params.n_k, params.r1, &mut rng)?;
        if k != key {
            break k;
        }
    };
    let judge_wrong_key = oracle::judge_candidate(wrong.bits(), &z, &parity, &code, params.p_e)?;

    let mut examined = Vec::new();
    for _ in 0..trials {
        if let Some(t) = oracle::attack_trial(&code, params.n_k, params.r1, params.p_e, &mut rng)? {
            examined.push(t.candidates_examined as f64);
        }
    }
    let delta = outside_set_probability(params.n_k, params.r1, DeltaMode::Exact);
    let n_cand = candidate_count_log2(params.n_k, code.m(), code.n(), code.k(), delta).log2_n_cand.exp2();
    let h_p = oracle::toy_pattern_entropy(&code, params.p_e);
    let predicted = h_p.exp2() * n_cand;
    let mean_examined = if examined.is_empty() { f64::NAN } else { examined.iter().sum::<f64>() / examined.len() as f64 };

    Ok(AttackReport {
        key_space: scenario.key_space().len(),
        patterns: set
            .patterns
            .iter()
            .zip(&set.keys)
            .map(|(p, k)| PatternCount { pattern: p.clone(), candidates: k.len() })
            .collect(),
        total_candidates: set.total(),
        overlaps: set.overlaps(),
        true_key_pattern: set.pattern_of(truth),
        judge_true_key,
        judge_wrong_key,
        tally: Tally {
            trials,
            completed: examined.len(),
            mean_examined,
            h_p,
            n_cand,
            predicted,
            ratio: mean_examined / predicted,
        },
    })
}
