use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use noisekey::amplify::capacity_lower_bound;
use noisekey::analysis::{analyze, rate_table, AnalysisInput};
use noisekey::grouping::{outside_set_probability, sample_key, CommonKey, DeltaMode};
use noisekey::params::{derive_seed, Lane};
use noisekey::session::{run_session, SessionConfig};
use noisekey::{Error, Method, Params};

mod attack;
mod render;

#[derive(Parser, Debug)]
#[command(name = "noisekey", version, about = "Secret key agreement over noisy channels with a common key")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON parameter file.
    #[arg(long, global = true, conflicts_with = "preset")]
    params: Option<PathBuf>,
    /// Built-in parameter set: paper-255-167, toy-63-41 or toy-7-5.
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    n_k: Option<usize>,
    #[arg(long, global = true)]
    r1: Option<f64>,
    #[arg(long, global = true)]
    p_e: Option<f64>,
    #[arg(long, global = true)]
    p_b: Option<f64>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=2))]
    method: Option<u8>,
    #[arg(long, global = true)]
    u: Option<usize>,
    #[arg(long, global = true)]
    r: Option<f64>,
    #[arg(long, global = true)]
    n_s: Option<f64>,
    #[arg(long, global = true)]
    n_r: Option<usize>,
    #[arg(long, global = true)]
    blocks: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Delta {
    Exact,
    Normal,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a common key from the admissible set.
    Keygen,
    /// Lower bound on the conditional secrecy capacity.
    Capacity,
    /// Full security report.
    Analyze {
        #[arg(long, value_enum, default_value_t = Delta::Exact)]
        delta: Delta,
    },
    /// Run key-agreement sessions.
    Simulate {
        /// Independent sessions with seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        trials: u64,
        /// Hex key file; sampled from the seed when absent.
        #[arg(long)]
        key: Option<PathBuf>,
        /// Write Eve's view of the first session as a frame capture.
        #[arg(long)]
        capture: Option<PathBuf>,
    },
    /// Exhaustive attack on a toy parameter set.
    Attack {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Recompute the secure-rate table next to the published figures.
    #[command(name = "reproduce-table2")]
    ReproduceRates,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Keygen => "keygen",
            Command::Capacity => "capacity",
            Command::Analyze { .. } => "analyze",
            Command::Simulate { .. } => "simulate",
            Command::Attack { .. } => "attack",
            Command::ReproduceRates => "reproduce-table2",
        }
    }

    fn default_preset(&self) -> &'static str {
        match self {
            Command::Attack { .. } => "toy-7-5",
            _ => "paper-255-167",
        }
    }
}

fn resolve(cli: &Cli) -> Result<Params, Error> {
    let c = &cli.common;
    let mut p = match (&c.params, &c.preset) {
        (Some(path), _) => Params::load(path)?,
        (None, Some(name)) => Params::preset(name)?,
        (None, None) => Params::preset(cli.command.default_preset())?,
    };
    macro_rules! apply {
        ($($field:ident),*) => {
            $(if let Some(v) = c.$field { p.$field = v; })*
        };
    }
    apply!(seed, n_k, r1, p_e, p_b, u, r, n_s, blocks);
    if let Some(v) = c.n_r {
        p.n_r = Some(v);
    }
    if let Some(m) = c.method {
        p.method = Method::try_from(m)?;
    }
    Ok(p)
}

/// The report as printed: the resolved parameters and the command's result.
#[derive(Serialize)]
struct Envelope<'a> {
    command: &'a str,
    params: &'a Params,
    result: Value,
}

fn run(cli: &Cli) -> Result<String, Error> {
    let params = resolve(cli)?;
    let result = match &cli.command {
        Command::Keygen => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, Lane::Key));
            let key = sample_key(params.n_k, params.r1, &mut rng)?;
            json!({
                "n_k": key.len(),
                "n1": key.n1(),
                "key": key.to_hex()?,
            })
        }
        Command::Capacity => {
            let cp = params.capacity();
            cp.validate()?;
            serde_json::to_value(capacity_lower_bound(&cp))?
        }
        Command::Analyze { delta } => {
            let mode = match delta {
                Delta::Exact => DeltaMode::Exact,
                Delta::Normal => DeltaMode::Normal,
            };
            let cp = params.capacity();
            cp.validate()?;
            let input = AnalysisInput {
                capacity: cp,
                n_k: params.n_k,
                delta: outside_set_probability(params.n_k, params.r1, mode),
                p_b: params.p_b,
                method: params.method,
            };
            serde_json::to_value(analyze(&input))?
        }
        Command::Simulate { trials, key, capture } => {
            if *trials == 0 {
                return Err(Error::Config("trials must be at least 1".into()));
            }
            let key = key.as_ref().map(|k| CommonKey::load(k, params.r1)).transpose()?;
            let reports = (0..*trials)
                .into_par_iter()
                .map(|t| {
                    let mut p = params.clone();
                    p.seed = params.seed.wrapping_add(t);
                    let mut config = SessionConfig::from_params(&p)?;
                    if let Some(k) = &key {
                        config.key = k.clone();
                    }
                    config.capture_eve = t == 0 && capture.is_some();
                    Ok((p.seed, run_session(&config)?))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            if let Some(path) = capture {
                write_capture(path, &params, &reports[0].1.eve_capture)?;
            }
            let trials: Vec<Value> = reports
                .into_iter()
                .map(|(seed, mut r)| {
                    r.eve_capture.clear();
                    json!({ "seed": seed, "report": r })
                })
                .collect();
            json!({ "trials": trials })
        }
        Command::Attack { trials } => serde_json::to_value(attack::run(&params, *trials)?)?,
        Command::ReproduceRates => {
            let cols = rate_table();
            let pass = cols.iter().all(|c| c.cells.iter().all(|x| x.pass));
            json!({ "columns": cols, "pass": pass })
        }
    };
    let env = Envelope { command: cli.command.name(), params: &params, result };
    Ok(match cli.common.format {
        Format::Json => serde_json::to_string_pretty(&env)? + "\n",
        Format::Text => render::text(env.command, env.params, &env.result),
        Format::Csv => render::csv(env.command, env.params, &env.result),
    })
}

fn write_capture(path: &PathBuf, params: &Params, hex_frames: &[String]) -> Result<(), Error> {
    let layout = noisekey::channel::FrameLayout {
        info_bits: params.m as usize * params.k,
        parity_bits: params.m as usize * (params.n - params.k),
    };
    let frames = hex_frames
        .iter()
        .map(|h| {
            let bytes = hex::decode(h).map_err(|e| Error::Parse(e.to_string()))?;
            noisekey::channel::decode_frame(&bytes, &layout)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    noisekey::channel::write_capture(std::fs::File::create(path)?, &frames)
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::FieldDegree(_) | Error::NotPrimitive { .. } | Error::CodeParams(_) => "code",
        Error::ZeroInverse => "arith",
        Error::Length { .. } | Error::Framing(_) => "framing",
        Error::Parse(_) | Error::Json(_) => "parse",
        Error::Config(_) => "config",
        Error::KeyNotAdmissible { .. } => "key",
        Error::RateViolation { .. } => "rate",
        Error::Intractable { .. } => "intractable",
        Error::Io(_) => "io",
    }
}

fn diagnostic(kind: &str, msg: &str) {
    let msg = msg.lines().next().unwrap_or("").trim();
    eprintln!("noisekey: error kind={kind} msg={}", serde_json::to_string(msg).unwrap());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                e.exit();
            }
            diagnostic("usage", e.to_string().trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    if let Ok(v) = std::env::var("NOISEKEY_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
            }
            _ => {
                diagnostic("config", &format!("NOISEKEY_THREADS must be a positive integer, got {v:?}"));
                return ExitCode::from(2);
            }
        }
    }
    let output = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            diagnostic(error_kind(&e), &e.to_string());
            return ExitCode::from(1);
        }
    };
    let written = match &cli.common.out {
        Some(path) => std::fs::write(path, output),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(output.as_bytes())
        }
    };
    if let Err(e) = written {
        diagnostic("io", &e.to_string());
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
