use noisekey::bits::{bits_to_symbols, hamming_distance, symbols_to_bits};
use noisekey::channel::{decode_frame, deliver, read_capture, write_capture, Frame, Method, PayloadKind, Recipient};
use noisekey::grouping::BlockSplitter;
use noisekey::session::{run_receiver, run_session, run_transmitter, SessionConfig};
use noisekey::Params;

fn config(preset: &str, blocks: usize) -> SessionConfig {
    let mut p = Params::preset(preset).unwrap();
    p.blocks = blocks;
    SessionConfig::from_params(&p).unwrap()
}

fn eve_frames(c: &SessionConfig, hex_frames: &[String]) -> Vec<Frame> {
    hex_frames
        .iter()
        .map(|h| decode_frame(&hex::decode(h).unwrap(), &c.layout()).unwrap())
        .collect()
}

#[test]
fn parity_frames_match_regrouped_stream() {
    let c = config("toy-63-41", 100);
    let tx = run_transmitter(&c).unwrap();
    let m = c.code.m();
    let mut splitter = BlockSplitter::new(c.key.clone(), c.code.info_bits());
    let mut regrouped = Vec::new();
    for f in tx.frames.iter().filter(|f| f.kind == PayloadKind::Info) {
        regrouped.extend(splitter.feed(&f.payload));
    }
    let parity: Vec<&Frame> = tx.frames.iter().filter(|f| f.kind == PayloadKind::Parity).collect();
    assert_eq!(parity.len(), 100);
    for f in parity {
        let (g, i, bits) = &regrouped[f.index as usize];
        assert_eq!(*i, f.index);
        assert_eq!(Some(*g), f.group);
        let expect = c.code.encode_parity(&bits_to_symbols(bits, m).unwrap()).unwrap();
        assert_eq!(f.payload, symbols_to_bits(&expect, m));
    }
}

#[test]
fn design_code_agrees_on_a_thousand_keys() {
    let c = config("paper-255-167", 1000);
    let r = run_session(&c).unwrap();
    assert_eq!(r.key_units, 1000);
    assert_eq!(r.n_r, 12);
    assert_eq!(r.agreements, 1000);
    assert_eq!(r.decode_failures + r.mismatches, 0);
}

#[test]
fn forced_errors_poison_only_their_unit() {
    let mut c = config("toy-63-41", 30);
    c.u = 3;
    c.n_r = Some(4);
    let tx = run_transmitter(&c).unwrap();
    let mut frames: Vec<Frame> = tx.frames.iter().map(|f| deliver(f, &c.channel, Recipient::Bob)).collect();
    let victim = 13u32;
    let t_c = c.code.t_c();
    let m = c.code.m() as usize;
    let f = frames
        .iter_mut()
        .find(|f| f.kind == PayloadKind::Parity && f.index == victim)
        .unwrap();
    // t_c + 2 symbol errors
    for s in 0..t_c + 2 {
        f.payload[s * m] = !f.payload[s * m];
    }
    let rx = run_receiver(&frames, &c).unwrap();
    assert_eq!(rx.keys.len(), 10);
    assert!(rx.keys[victim as usize / 3].is_none());
    for (unit, key) in rx.keys.iter().enumerate() {
        if unit != victim as usize / 3 {
            assert_eq!(key.as_ref(), Some(&tx.keys[unit]));
        }
    }
}

#[test]
fn method_one_parity_reaches_eve_intact() {
    let mut c = config("toy-63-41", 200);
    c.capture_eve = true;
    let tx = run_transmitter(&c).unwrap();
    let r = run_session(&c).unwrap();
    let eve = eve_frames(&c, &r.eve_capture);
    assert_eq!(eve.len(), tx.frames.len());
    for (a, e) in tx.frames.iter().zip(&eve) {
        if a.kind == PayloadKind::Parity {
            assert_eq!(a, e);
        }
    }
}

#[test]
fn method_two_parity_is_noisy_for_eve() {
    let mut p = Params::preset("toy-63-41").unwrap();
    p.method = Method::Two;
    p.blocks = 2000;
    p.p_e = 0.02;
    p.p_b = 0.02;
    let mut c = SessionConfig::from_params(&p).unwrap();
    c.capture_eve = true;
    let tx = run_transmitter(&c).unwrap();
    let r = run_session(&c).unwrap();
    let eve = eve_frames(&c, &r.eve_capture);
    let (mut flips, mut bits) = (0, 0);
    for (a, e) in tx.frames.iter().zip(&eve) {
        if a.kind == PayloadKind::Parity {
            flips += hamming_distance(&a.payload, &e.payload);
            bits += a.payload.len();
        }
    }
    let rate = flips as f64 / bits as f64;
    assert!((rate - 0.02).abs() < 4.0 * (0.02 * 0.98 / bits as f64).sqrt(), "{rate}");
}

#[test]
fn eve_sees_fewer_errors_than_bob() {
    let mut p = Params::preset("toy-63-41").unwrap();
    p.blocks = 2000;
    p.p_e = 0.01;
    p.p_b = 0.03;
    let r = run_session(&SessionConfig::from_params(&p).unwrap()).unwrap();
    let bob: usize = r.bob_bit_errors.iter().sum();
    let eve: usize = r.eve_bit_errors.iter().sum();
    assert!(eve < bob, "eve {eve} bob {bob}");
}

#[test]
fn decoded_units_always_agree() {
    for seed in 0..5 {
        let mut p = Params::preset("toy-63-41").unwrap();
        p.blocks = 2000;
        p.p_e = 0.025;
        p.p_b = 0.025;
        p.seed = seed;
        let r = run_session(&SessionConfig::from_params(&p).unwrap()).unwrap();
        assert!(r.decode_failures > 0);
        assert_eq!(r.mismatches, 0);
    }
}

#[test]
fn source_stream_passes_frequency_and_runs_tests() {
    let c = config("toy-63-41", 2000);
    let tx = run_transmitter(&c).unwrap();
    let x: Vec<bool> = tx
        .frames
        .iter()
        .filter(|f| f.kind == PayloadKind::Info)
        .flat_map(|f| f.payload.iter().copied())
        .collect();
    let n = x.len() as f64;
    let ones = x.iter().filter(|&&b| b).count() as f64;
    // monobit
    assert!((ones - n / 2.0).abs() < 4.0 * (n / 4.0).sqrt());
    // Wald-Wolfowitz runs
    let pi = ones / n;
    let runs = 1 + x.windows(2).filter(|w| w[0] != w[1]).count();
    let mean = 2.0 * n * pi * (1.0 - pi) + 1.0;
    let sd = 2.0 * n.sqrt() * pi * (1.0 - pi);
    assert!((runs as f64 - mean).abs() < 4.0 * sd, "runs {runs} vs {mean}");
}

#[test]
fn capture_file_round_trip() {
    let mut c = config("toy-63-41", 10);
    c.capture_eve = true;
    let r = run_session(&c).unwrap();
    let frames = eve_frames(&c, &r.eve_capture);
    let mut buf = Vec::new();
    write_capture(&mut buf, &frames).unwrap();
    assert_eq!(read_capture(&buf[..], &c.layout()).unwrap(), frames);
}
