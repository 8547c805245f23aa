//! Text and CSV renderings of command results.

use std::fmt::Write;

use serde_json::Value;

use noisekey::Params;

fn params_line(out: &mut String, params: &Params) {
    writeln!(out, "# params {}", serde_json::to_string(params).unwrap()).unwrap();
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "null".into(),
        other => other.to_string(),
    }
}

/// Leaf values keyed by their dotted path, skipping arrays longer than `max_array`.
fn flatten(prefix: &str, v: &Value, max_array: usize, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, max_array, out);
            }
        }
        Value::Array(items) if items.len() <= max_array && items.iter().all(|i| !i.is_object()) => {
            let s: Vec<String> = items.iter().map(scalar).collect();
            out.push((prefix.to_string(), s.join(" ")));
        }
        Value::Array(items) => out.push((prefix.to_string(), format!("[{} items]", items.len()))),
        _ => out.push((prefix.to_string(), scalar(v))),
    }
}

const SESSION_SUMMARY: [&str; 6] = ["blocks", "key_units", "n_r", "agreements", "decode_failures", "mismatches"];

/// Computed value, published value and pass flag for one column.
type Cell = (String, String, bool);

fn rate_rows(result: &Value) -> Vec<(String, Vec<Cell>)> {
    let cols = result["columns"].as_array().cloned().unwrap_or_default();
    let n_rows = cols.first().map_or(0, |c| c["cells"].as_array().map_or(0, Vec::len));
    (0..n_rows)
        .map(|i| {
            let name = cols[0]["cells"][i]["row"].as_str().unwrap_or("").to_string();
            let cells = cols
                .iter()
                .map(|c| {
                    let cell = &c["cells"][i];
                    (
                        format!("{:.4e}", cell["computed"].as_f64().unwrap_or(f64::NAN)),
                        format!("{:.3e}", cell["published"].as_f64().unwrap_or(f64::NAN)),
                        cell["pass"].as_bool().unwrap_or(false),
                    )
                })
                .collect();
            (name, cells)
        })
        .collect()
}

pub fn text(command: &str, params: &Params, result: &Value) -> String {
    let mut out = String::new();
    params_line(&mut out, params);
    match command {
        "reproduce-table2" => {
            let cols = result["columns"].as_array().cloned().unwrap_or_default();
            for key in ["u", "r", "n_s"] {
                let vals: Vec<String> = cols.iter().map(|c| format!("{:>34}", scalar(&c[key]))).collect();
                writeln!(out, "{key:<34}{}", vals.join("")).unwrap();
            }
            for (name, cells) in rate_rows(result) {
                let vals: Vec<String> = cells
                    .iter()
                    .map(|(c, p, ok)| format!("{:>34}", format!("{c} ({p}) {}", if *ok { "ok" } else { "FAIL" })))
                    .collect();
                writeln!(out, "{name:<34}{}", vals.join("")).unwrap();
            }
            writeln!(out, "all cells match: {}", result["pass"]).unwrap();
        }
        "simulate" => {
            for t in result["trials"].as_array().into_iter().flatten() {
                let r = &t["report"];
                let fields: Vec<String> = SESSION_SUMMARY.iter().map(|k| format!("{k}={}", r[k])).collect();
                writeln!(out, "seed={} {} agreement_rate={}", t["seed"], fields.join(" "), r["agreement_rate"]).unwrap();
            }
        }
        _ => {
            let mut rows = Vec::new();
            flatten("", result, 16, &mut rows);
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in rows {
                writeln!(out, "{k:<width$}  {v}").unwrap();
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv(command: &str, params: &Params, result: &Value) -> String {
    let mut out = String::new();
    params_line(&mut out, params);
    match command {
        "reproduce-table2" => {
            let cols = result["columns"].as_array().cloned().unwrap_or_default();
            let mut header = vec!["quantity".to_string()];
            for i in 1..=cols.len() {
                header.extend([format!("computed_{i}"), format!("published_{i}"), format!("pass_{i}")]);
            }
            writeln!(out, "{}", header.join(",")).unwrap();
            for key in ["u", "r", "n_s"] {
                let mut row = vec![key.to_string()];
                for c in &cols {
                    let v = scalar(&c[key]);
                    row.extend([v.clone(), v, String::new()]);
                }
                writeln!(out, "{}", row.join(",")).unwrap();
            }
            for (name, cells) in rate_rows(result) {
                let mut row = vec![csv_field(&name)];
                for (c, p, ok) in cells {
                    row.extend([c, p, ok.to_string()]);
                }
                writeln!(out, "{}", row.join(",")).unwrap();
            }
        }
        "simulate" => {
            writeln!(out, "seed,{},agreement_rate", SESSION_SUMMARY.join(",")).unwrap();
            for t in result["trials"].as_array().into_iter().flatten() {
                let r = &t["report"];
                let fields: Vec<String> = SESSION_SUMMARY.iter().map(|k| scalar(&r[k])).collect();
                writeln!(out, "{},{},{}", t["seed"], fields.join(","), r["agreement_rate"]).unwrap();
            }
        }
        "attack" => {
            writeln!(out, "pattern,candidates").unwrap();
            for p in result["patterns"].as_array().into_iter().flatten() {
                let pattern: Vec<String> = p["pattern"].as_array().into_iter().flatten().map(scalar).collect();
                writeln!(out, "{},{}", pattern.join(" "), p["candidates"]).unwrap();
            }
        }
        _ => {
            writeln!(out, "field,value").unwrap();
            let mut rows = Vec::new();
            flatten("", result, 16, &mut rows);
            for (k, v) in rows {
                writeln!(out, "{},{}", csv_field(&k), csv_field(&v)).unwrap();
            }
        }
    }
    out
}
