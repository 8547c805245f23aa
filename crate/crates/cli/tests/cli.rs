use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use noisekey::channel::{read_capture, FrameLayout, PayloadKind};
use noisekey::grouping::admissible_count;

fn noisekey(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noisekey")).args(args).output().expect("spawn noisekey")
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = noisekey(&all);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn validator() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(v: &Value) {
    let errors: Vec<String> = validator().iter_errors(v).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "schema errors: {errors:#?}");
}

#[test]
fn rate_table_secure_rates() {
    let v = json(&["reproduce-table2"]);
    assert_valid(&v);
    assert_eq!(v["result"]["pass"], true);
    let cols = v["result"]["columns"].as_array().unwrap();
    let c_s: Vec<f64> = cols
        .iter()
        .map(|c| {
            let cell = c["cells"].as_array().unwrap().iter().find(|x| x["row"].as_str().unwrap().contains("C_s")).unwrap();
            cell["computed"].as_f64().unwrap()
        })
        .collect();
    for (got, want) in c_s.iter().zip([0.00615, 0.0248, 0.0204]) {
        assert!((got - want).abs() / want < 5e-3, "C_s {got} vs {want}");
    }
}

#[test]
fn capacity_single_block() {
    let v = json(&["capacity", "--u", "1", "--r", "3", "--n-s", "10"]);
    assert_valid(&v);
    let c = v["result"]["c_s0"].as_f64().unwrap();
    assert!((c - 0.00615).abs() < 1e-4, "{c}");
    assert_eq!(v["result"]["secure"], true);
}

#[test]
fn every_command_matches_schema() {
    for args in [
        vec!["keygen"],
        vec!["capacity"],
        vec!["analyze"],
        vec!["analyze", "--delta", "normal"],
        vec!["simulate", "--blocks", "30", "--trials", "2"],
        vec!["attack", "--trials", "10"],
        vec!["reproduce-table2"],
    ] {
        let v = json(&args);
        assert_valid(&v);
        assert_eq!(v["command"], args[0]);
    }
}

#[test]
fn schema_rejects_malformed_reports() {
    let mut v = json(&["capacity"]);
    v["result"].as_object_mut().unwrap().remove("c_s0");
    assert!(!validator().is_valid(&v));
    let mut v = json(&["keygen"]);
    v["result"]["key"] = Value::from("not hex");
    assert!(!validator().is_valid(&v));
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--blocks", "60", "--trials", "3", "--seed", "9", "--format", "json"];
    let a = noisekey(&args);
    let b = noisekey(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = noisekey(&["simulate", "--blocks", "60", "--trials", "3", "--seed", "10", "--format", "json"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["simulate", "--blocks", "40", "--trials", "4", "--format", "json"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_noisekey")).args(args).env("NOISEKEY_THREADS", threads).output().unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);

    let bad = run("zero");
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("NOISEKEY_THREADS"));
}

#[test]
fn unknown_flag_is_one_line_diagnostic() {
    let out = noisekey(&["capacity", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("noisekey: error kind=usage"));
}

#[test]
fn run_errors_exit_one() {
    let out = noisekey(&["capacity", "--preset", "nope"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind=config"));

    let out = noisekey(&["attack", "--preset", "toy-63-41"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("kind=intractable"), "{err}");

    let out = noisekey(&["capacity", "--p-e", "0.7"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rate_table_csv_columns() {
    let out = noisekey(&["reproduce-table2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# params {"));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(
        header,
        [
            "quantity", "computed_1", "published_1", "pass_1", "computed_2", "published_2", "pass_2", "computed_3", "published_3",
            "pass_3"
        ]
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "u");
    assert_eq!((first[1], first[4], first[7]), ("1", "10", "10"));
    // quoted row labels keep every data row at ten fields
    for line in lines.skip(2) {
        let fields = line.rsplitn(10, ',').count();
        assert_eq!(fields, 10, "{line}");
        assert!(line.ends_with("true"), "{line}");
    }
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = noisekey(&["analyze", "--format", "json", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let stdout = noisekey(&["analyze", "--format", "json"]).stdout;
    assert_eq!(std::fs::read(&path).unwrap(), stdout);
}

#[test]
fn params_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    let base = json(&["capacity", "--preset", "toy-63-41"]);
    std::fs::write(&path, base["params"].to_string()).unwrap();
    let v = json(&["capacity", "--params", path.to_str().unwrap(), "--n-s", "3"]);
    assert_eq!(v["params"]["n"], 63);
    assert_eq!(v["params"]["n_s"], 3.0);

    std::fs::write(&path, "{\"m\": 3}").unwrap();
    let out = noisekey(&["capacity", "--params", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind=parse"));
}

#[test]
fn keygen_is_admissible_and_seeded() {
    let a = json(&["keygen", "--seed", "3"]);
    let b = json(&["keygen", "--seed", "3"]);
    let c = json(&["keygen", "--seed", "4"]);
    assert_eq!(a, b);
    assert_ne!(a["result"]["key"], c["result"]["key"]);
    let n_k = a["result"]["n_k"].as_u64().unwrap();
    let n1 = a["result"]["n1"].as_f64().unwrap();
    assert_eq!(n_k, 2496);
    assert!(admissible_count(n1 as usize, n_k as usize, 3.5));
    let hex = a["result"]["key"].as_str().unwrap();
    assert_eq!(hex.len(), 2496 / 4);
    let ones: u32 = hex::decode(hex).unwrap().iter().map(|b| b.count_ones()).sum();
    assert_eq!(ones as f64, n1);
}

#[test]
fn simulate_capture_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cap = dir.path().join("eve.cap");
    let v = json(&["simulate", "--blocks", "20", "--capture", cap.to_str().unwrap()]);
    assert_valid(&v);
    let layout = FrameLayout { info_bits: 8 * 167, parity_bits: 8 * 88 };
    let frames = read_capture(std::fs::File::open(&cap).unwrap(), &layout).unwrap();
    let blocks = v["result"]["trials"][0]["report"]["blocks"].as_u64().unwrap() as usize;
    let parity = frames.iter().filter(|f| f.kind == PayloadKind::Parity).count();
    assert_eq!(parity, blocks);
    assert!(frames.iter().filter(|f| f.kind == PayloadKind::Info).all(|f| f.group.is_none()));
    assert!(frames.iter().filter(|f| f.kind == PayloadKind::Parity).all(|f| f.group.is_some()));
}

#[test]
fn attack_reports_disjoint_sets() {
    let v = json(&["attack", "--trials", "20"]);
    let r = &v["result"];
    let per_pattern: u64 = r["patterns"].as_array().unwrap().iter().map(|p| p["candidates"].as_u64().unwrap()).sum();
    assert_eq!(per_pattern, r["total_candidates"].as_u64().unwrap());
    assert!(per_pattern <= r["key_space"].as_u64().unwrap());
    assert_eq!(r["overlaps"], 0);
    assert_eq!(r["judge_true_key"]["consistent"], true);
    assert_eq!(r["judge_wrong_key"]["consistent"], false);
    assert!(r["true_key_pattern"].is_u64());
}
