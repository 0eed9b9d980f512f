//! End-to-end tests of the `boat` binary: flags, file formats, and exit
//! codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn boat(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boat"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn table_default_grid_matches_formula() {
    let dir = tempfile::tempdir().unwrap();
    let out = boat(&["table"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines[0], "m,d,counted,formula,agree");
    assert_eq!(lines.len(), 1 + 5 * 6); // header + 30 grid rows
    for row in &lines[1..] {
        assert!(row.ends_with(",true"), "disagreement in row {row}");
    }
    // spot checks against the reference counts
    assert!(lines.contains(&"6,3,12,12,true"));
    assert!(lines.contains(&"4,2,2,2,true"));
    assert!(lines.contains(&"5,5,125,125,true"));
}

#[test]
fn table_range_check_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = boat(&["table", "--m-max", "20"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn table_output_file_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = boat(&["table", "--m-max", "2", "--d-max", "2", "--output", "t.csv"], dir.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(csv, "m,d,counted,formula,agree\n2,2,1,1,true\n");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t.csv.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "table");
    assert_eq!(manifest["timestamp"], serde_json::json!(1700000000u64));
    assert_eq!(manifest["outputs"][0]["file"], "t.csv");
    assert_eq!(
        manifest["outputs"][0]["sha256"].as_str().unwrap().len(),
        64
    );
}

#[test]
fn evolve_reports_ghz_formation() {
    let dir = tempfile::tempdir().unwrap();
    let out = boat(
        &["evolve", "--n", "3", "--d", "3", "--time", "2pi/3", "--output", "state.json"],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(stdout(&out).contains("is_ghz = true"));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("state.json")).unwrap()).unwrap();
    assert_eq!(doc["ghz_report"]["is_ghz"], true);
    assert_eq!(doc["state"]["n"], 3);
    assert_eq!(doc["state"]["d"], 3);
    assert_eq!(doc["state"]["amplitudes"].as_array().unwrap().len(), 10);
}

#[test]
fn evolve_d5_is_not_ghz() {
    let dir = tempfile::tempdir().unwrap();
    let out = boat(&["evolve", "--n", "5", "--d", "5", "--time", "2pi/5"], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).contains("is_ghz = false"));
}

#[test]
fn evolve_zero_time_echoes_coherent_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = boat(&["evolve", "--time", "0", "--output", "s.json"], dir.path());
    assert!(out.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert!(doc["ghz_report"].is_null());
    // amplitude on the all-zero label is d^{-N/2} = 3^{-3/2}
    let first = doc["state"]["amplitudes"][0][0].as_f64().unwrap();
    assert!((first - 3.0f64.powf(-1.5)).abs() < 1e-12);
}

#[test]
fn evolve_bad_time_spec_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = boat(&["evolve", "--time", "2pi/x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("accepted forms"));
}

#[test]
fn evolve_is_bitwise_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    boat(&["evolve", "--time", "2pi/3", "--output", "a.json"], dir.path());
    boat(&["evolve", "--time", "2pi/3", "--output", "b.json"], dir.path());
    let a = fs::read(dir.path().join("a.json")).unwrap();
    let b = fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn mqc_recovers_reference_spectrum_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = boat(&["mqc", "--n", "6", "--p", "2", "--q", "1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let spectrum = fs::read_to_string(dir.path().join("mqc_spectrum.csv")).unwrap();
    let value_at = |m: i64| -> f64 {
        spectrum
            .lines()
            .find(|l| l.starts_with(&format!("{m},")))
            .and_then(|l| l.split(',').nth(1))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((value_at(12) - 1.0 / 9.0).abs() < 1e-10);
    assert!((value_at(-12) - 1.0 / 9.0).abs() < 1e-10);
    assert!((value_at(0) - 1.0 / 3.0).abs() < 1e-10);
    assert!((value_at(6) - 2.0 / 9.0).abs() < 1e-10);

    let mags: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("mqc_magnitudes.json")).unwrap())
            .unwrap();
    for key in ["rho01", "rho02", "rho12"] {
        let v = mags["magnitudes"][key].as_f64().unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-10, "{key} = {v}");
    }
    assert_eq!(mags["p"], 2);
    assert_eq!(mags["samples"], 73);

    let curve = fs::read_to_string(dir.path().join("mqc_fidelity.csv")).unwrap();
    assert_eq!(curve.lines().count(), 74); // header + samples
    assert!(curve.lines().nth(1).unwrap().starts_with("0.0000000000000000e0,"));
}

#[test]
fn mqc_with_strong_dephasing_kills_coherences() {
    let dir = tempfile::tempdir().unwrap();
    let out = boat(&["mqc", "--n", "4", "--gamma", "1e9", "--out-prefix", "dead"], dir.path());
    assert!(out.status.success());
    let mags: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("dead_magnitudes.json")).unwrap())
            .unwrap();
    for key in ["rho01", "rho02", "rho12"] {
        assert!(mags["magnitudes"][key].as_f64().unwrap() < 1e-7);
    }
}

#[test]
fn mqc_undersampling_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = boat(&["mqc", "--n", "6", "--samples", "10"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn certify_perfect_and_diagonal_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let third = 1.0 / 3.0;
    fs::write(
        dir.path().join("perfect.json"),
        format!(
            r#"{{"populations": [{third}, {third}, {third}], "magnitudes": [{third}, {third}, {third}]}}"#
        ),
    )
    .unwrap();
    let out = boat(&["certify", "--block", "perfect.json"], dir.path());
    assert!(out.status.success());
    let verdict: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(verdict["certified"], true);
    assert_eq!(verdict["lower"], 1.0);
    assert_eq!(verdict["s"], 1.0);
    assert!((verdict["threshold"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);

    fs::write(
        dir.path().join("diag.json"),
        format!(r#"{{"populations": [{third}, {third}, {third}], "magnitudes": [0, 0, 0]}}"#),
    )
    .unwrap();
    let out = boat(&["certify", "--block", "diag.json"], dir.path());
    let verdict: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(verdict["certified"], false);
    assert!((verdict["lower"].as_f64().unwrap() - third).abs() < 1e-14);
}

#[test]
fn certify_threshold_margin_and_d4() {
    let dir = tempfile::tempdir().unwrap();
    // lower lands at 0.67 for d = 3: certified by margin ~0.0033
    fs::write(
        dir.path().join("b.json"),
        r#"{"populations": [0.34, 0.33, 0.33], "magnitudes": [0.255, 0.25, 0.0]}"#,
    )
    .unwrap();
    let out = boat(&["certify", "--block", "b.json"], dir.path());
    let verdict: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(verdict["certified"], true);
    let margin = verdict["margin"].as_f64().unwrap();
    assert!(margin > 0.0 && margin < 0.01, "margin = {margin}");

    let out = boat(&["certify", "--block", "b.json", "--d", "4"], dir.path());
    let verdict: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(verdict["threshold"], 0.75);
    assert_eq!(verdict["certified"], false);
}

#[test]
fn certify_malformed_json_is_usage_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("broken.json"), "{\"populations\": [0.3,\n oops").unwrap();
    let out = boat(&["certify", "--block", "broken.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("line 2"), "missing diagnostics: {err}");
}

#[test]
fn certify_unphysical_block_is_computational_failure() {
    let dir = tempfile::tempdir().unwrap();
    // saturated 01/02 coherences with a small 12 coherence: no PSD completion
    fs::write(
        dir.path().join("bad.json"),
        r#"{"populations": [0.4, 0.3, 0.3], "magnitudes": [0.34641016151377546, 0.3, 0.15]}"#,
    )
    .unwrap();
    let out = boat(&["certify", "--block", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not PSD-completable"));
}

#[test]
fn compile_emits_blocks_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = boat(
        &["compile", "--n", "2", "--d", "3", "--time", "2pi/3", "--verify", "--output", "c.json"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = stdout(&out);
    let residual: f64 = text
        .lines()
        .find(|l| l.starts_with("unitary residual"))
        .unwrap()
        .split('=')
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(residual < 1e-10);

    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    let ops = doc["circuit"]["ops"].as_array().unwrap();
    let oat_count = ops.iter().filter(|o| o["kind"] == "oat").count();
    assert_eq!(oat_count, 3);
    assert!(ops.iter().all(|o| o["kind"] != "oat"
        || (o["levels"] == serde_json::json!([0, 1]) && o["axis"] == "z")));
    assert!(doc["verification"]["unitary_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn compile_d4_verifies_at_pi() {
    let dir = tempfile::tempdir().unwrap();
    let out = boat(
        &["compile", "--n", "2", "--d", "4", "--time", "pi", "--verify"],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(stdout(&out).contains("unitary residual"));
    assert!(stdout(&out).contains("6 twisting pulses"));
}

#[test]
fn compile_verify_beyond_cap_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = boat(
        &["compile", "--n", "7", "--d", "3", "--time", "2pi/3", "--verify"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("state-level"));
}

#[test]
fn compile_respects_expand_cap_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_boat"))
        .args(["compile", "--n", "7", "--d", "2", "--time", "pi", "--verify"])
        .current_dir(dir.path())
        .env("BOAT_EXPAND_CAP", "128")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
