use std::fs;
use std::path::Path;

use ewm_core::cli::run_command;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_command(std::iter::once("ewm").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn kernels_to_stdout() {
    let (code, out, err) = run(&["kernels", "--mu-min", "-1", "--mu-max", "1", "--samples", "4"]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "mu,K,J,err_K,err_J");
    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert!((first[1] - 2.221441469079183).abs() < 1e-12);
    assert!(lines[4].contains("-inf") && lines[4].contains(",inf"));
}

#[test]
fn kernel_range_errors_are_collected() {
    let (code, _, err) = run(&["kernels", "--mu-min", "-2", "--mu-max", "-3", "--samples", "0"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: ValidationError: "));
    assert_eq!(err.matches(';').count(), 2, "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn init_evolve_diagnose() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "run.toml",
        &format!("[grid]\nn = 200\n[evolve]\nt_end = 0.4\n[output]\ndir = {:?}\n", out_dir.to_str().unwrap()),
    );
    let (code, out, err) = run(&["init", &cfg]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["admissible"], true);
    assert!(out_dir.join("fields_000000.csv").exists());

    let (code, out, err) = run(&["evolve", &cfg]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["scheme"], "polar");
    assert_eq!(v["t"], 0.4);

    let dump = out_dir.join("fields_000000.csv");
    let (code, out, _) = run(&["diagnose", dump.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 2);
    assert!(out.starts_with("t,"));
}

#[test]
fn null_scheme_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("n");
    let cfg = write_config(
        dir.path(),
        "run.toml",
        "[grid]\nn = 200\n[null]\nu_max = 1.0\nub_max = 2.0\n",
    );
    let (code, out, err) = run(&["evolve", &cfg, "--scheme", "null", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["trapped"], 0);
    assert!(out_dir.join("null.csv").exists() && out_dir.join("diag.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write_config(dir.path(), "a.toml", "[grid]\nfo = 1\n");
    let (code, _, err) = run(&["evolve", &bad_key]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: ParseError: ") && err.contains("fo"), "{err}");

    let invalid = write_config(dir.path(), "b.toml", "[grid]\nn = 2\n[evolve]\ncfl = 3.0\n");
    let (code, _, err) = run(&["evolve", &invalid]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: ValidationError: "), "{err}");

    let heavy = write_config(dir.path(), "c.toml", "[data]\nA = 3.0\n");
    let (code, _, err) = run(&["init", &heavy]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error: SupercriticalEnergy: "), "{err}");

    let (code, _, err) = run(&["evolve", "/nonexistent/x.toml"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: IoError: "));

    let (code, _, err) = run(&["frobnicate"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: UsageError: "));

    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("kernels"));
}

#[test]
fn convergence_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "conv.toml",
        "kappa = 0.0\n[target]\nkind = \"flat\"\n[grid]\nr_max = 1.0\nn = 50\n[data]\nkind = \"exact\"\nsolution = \"quadratic\"\n[evolve]\nt_end = 0.5\nboundary = \"exact\"\n",
    );
    let report = dir.path().join("rep.json");
    let (code, out, err) = run(&["convergence", &cfg, "--observable", "field_error_vs_exact", "--out", report.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let orders: Vec<f64> = v["orders"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(orders.len(), 2);
    assert!(orders.iter().all(|p| (1.8..2.2).contains(p)), "{orders:?}");
    assert_eq!(fs::read_to_string(report).unwrap().trim(), out.trim());

    let (code, _, err) = run(&["convergence", &cfg, "--observable", "nope"]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().and_then(|e| e.to_str()) == Some("toml") {
            let cfg = ewm_core::config::parse_config(&fs::read_to_string(&p).unwrap()).unwrap();
            cfg.validate().unwrap();
            seen += 1;
        }
    }
    assert_eq!(seen, 3);
}
