//! End-to-end runs of the binary against stored CSV files.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the stored files.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperlb"))
}

fn hyperlb(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = hyperlb(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(name)
}

fn check_golden(name: &str, args: &[&str]) -> String {
    let got = stdout_ok(args);
    let path = data("golden").join(format!("{name}.csv"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, &got).unwrap();
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(got == want, "{name}: output differs from {}", path.display());
    got
}

/// Rows as maps from column name to cell.
fn records(csv_text: &str) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records()
        .map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn num(row: &HashMap<String, String>, col: &str) -> f64 {
    row[col].parse().unwrap_or_else(|_| panic!("{col} = {:?}", row[col]))
}

#[test]
fn bound_curves_preset() {
    let text = check_golden("bound_curves", &["reproduce", "bound_curves"]);
    assert!(!text.contains('\r'));
    let rows = records(&text);
    for r in &rows {
        let (d, k, l) = (num(r, "delta"), num(r, "K"), num(r, "lambda_star"));
        // Nine digits round the largest values up to exactly 1, and delta is
        // itself rounded on the dK curves.
        assert!(l > 0.0 && l <= 1.0 && l <= d * k * (1.0 + 1e-8));
        if k == 1.0 {
            let exact = d * (1.0 - (-1.0 / d).exp());
            assert!((l - exact).abs() < 1e-8 * exact.max(1e-3), "{d}: {l} vs {exact}");
        }
        if k == 2.0 && d == 1.0 {
            assert_eq!(r["lambda_star"], "0.896361676");
        }
        if r["curve"].starts_with("dK=") {
            let a: f64 = r["curve"][3..].parse().unwrap();
            assert!((d * k - a).abs() < 1e-8 * a);
        }
    }
    // Nondecreasing in delta along each fixed-K curve; near 1 the nine
    // printed digits cannot resolve the increments.
    for k in ["1", "2", "3", "5", "10"] {
        let curve: Vec<f64> =
            rows.iter().filter(|r| r["curve"] == format!("K={k}")).map(|r| num(r, "lambda_star")).collect();
        assert_eq!(curve.len(), 200);
        assert!(curve.windows(2).all(|w| w[1] >= w[0]), "K={k}");
        assert!(curve[199] > curve[0]);
    }
}

#[test]
fn extension_presets() {
    let rows = records(&check_golden("fig_extension_tau1", &["reproduce", "fig_extension_tau1"]));
    assert_eq!(rows[0]["u"], "1.1156211");
    for w in rows.windows(2) {
        assert!(num(&w[1], "q") < num(&w[0], "q"));
        assert!(num(&w[1], "lambda_star_ext") < num(&w[0], "lambda_star_ext"));
        assert!(num(&w[1], "u") < num(&w[0], "u"));
    }
    let rows = records(&check_golden("fig_extension_tradeoff", &["reproduce", "fig_extension_tradeoff"]));
    for r in &rows {
        assert!((num(r, "tau1") + num(r, "tau2") - 1.0).abs() < 1e-9);
    }
    // Near tau1 = 0 the bound moves to second order only, q to first order.
    let l = |i: usize| num(&rows[i], "lambda_star_ext");
    let q = |i: usize| num(&rows[i], "q");
    assert!((l(0) - l(1)).abs() < 0.01 * (q(0) - q(1)).abs());
}

#[test]
fn pmf_preset() {
    let rows = records(&check_golden("open_count_pmf", &["reproduce", "open_count_pmf"]));
    assert_eq!(rows.len(), 11 + 101);
    let total: f64 = rows.iter().filter(|r| r["servers"] == "100").map(|r| num(r, "probability")).sum();
    assert!((total - 1.0).abs() < 1e-7);
}

#[test]
fn smoke_preset_is_reproducible() {
    let a = check_golden("smoke", &["reproduce", "smoke"]);
    let b = stdout_ok(&["reproduce", "smoke"]);
    assert_eq!(a, b);
    let out = std::env::temp_dir().join(format!("hyperlb-smoke-{}.csv", std::process::id()));
    stdout_ok(&["reproduce", "smoke", "-o", out.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(&out).unwrap(), a);
    fs::remove_file(out).ok();
    for r in records(&a) {
        assert_eq!(r["audits_clean"], "true");
        assert_eq!(r["pass_audited"], "true");
        // Finite systems stay below the many-server bound.
        assert!(num(&r, "throughput") < num(&r, "lambda_star"));
        assert!(num(&r, "message_rate") <= num(&r, "message_rate_cap"));
    }
}

#[test]
fn shortened_simulation_presets() {
    let cases = [
        ("fig_baseline_K2", "50"),
        ("fig_baseline_K3", "50"),
        ("fig_gamma", "50"),
        ("fig_variants", "20"),
        ("fig_work_conserving_tau5", "20"),
        ("fig_aujsq", "20"),
    ];
    for (preset, horizon) in cases {
        let name = format!("{preset}_short");
        let text = check_golden(&name, &["reproduce", preset, "--horizon", horizon, "--seeds", "2"]);
        for r in records(&text) {
            assert_eq!(r["audits_clean"], "true", "{preset}");
            assert_eq!(r["runs"], "2");
        }
    }
}

#[test]
fn simulate_and_sweep_files() {
    let sweep = data("data").join("sweep.toml");
    let text = stdout_ok(&["sweep", sweep.to_str().unwrap(), "--seeds", "2", "--horizon", "100"]);
    let rows = records(&text);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["scheme"], "extension");
    assert_eq!(rows[0]["tau"], "");
    assert_eq!(rows[3]["tau1"], "1");
    let single = data("data").join("simulate.toml");
    let text = stdout_ok(&["simulate", single.to_str().unwrap(), "--seeds", "1"]);
    let rows = records(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["throughput_hw"], "");
    // A sweep file is not a single point.
    assert_eq!(hyperlb(&["simulate", sweep.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_suite_and_custom_network() {
    let out = hyperlb(&["verify"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = records(&String::from_utf8(out.stdout).unwrap());
    assert!(rows.len() > 200);
    assert!(rows.iter().all(|r| num(r, "deviation") < 1e-10));
    let net = data("data").join("network.toml");
    let out = hyperlb(&["verify", "--network", net.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(hyperlb(&["verify", "--cap", "3"]).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(hyperlb(&["--help"]).status.code(), Some(0));
    assert_eq!(hyperlb(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hyperlb(&["bound", "--delta", "1:2", "--k", "2"]).status.code(), Some(1));
    assert_eq!(hyperlb(&["reproduce", "no_such_preset"]).status.code(), Some(1));
    assert_eq!(hyperlb(&["reproduce", "bound_curves", "--seeds", "2"]).status.code(), Some(1));
    assert_eq!(hyperlb(&["bound", "--delta", "1", "--k", "0"]).status.code(), Some(2));
    assert_eq!(hyperlb(&["bound", "--delta=-1", "--k", "2"]).status.code(), Some(2));
    let zero_tau3 = ["extension", "--tau1", "0", "--tau2", "1", "--tau3", "0"];
    assert_eq!(hyperlb(&zero_tau3).status.code(), Some(2));
    assert_eq!(hyperlb(&["sweep", "/nonexistent/file.toml"]).status.code(), Some(2));
    let bad = data("data").join("bad.toml");
    let out = hyperlb(&["sweep", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
}
