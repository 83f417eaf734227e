use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rydberg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydberg")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = rydberg(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fail(args: &[&str]) -> String {
    let out = rydberg(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn predict_lists_freezing_frequencies() {
    let out = ok(&["predict", "--delta0", "20", "--omega-min", "1.5", "--omega-max", "4.5"]);
    let list: Vec<f64> = serde_json::from_str(&out).unwrap();
    let want = [3.6232, 2.3112, 1.6961];
    assert_eq!(list.len(), 3);
    for (g, w) in list.iter().zip(want) {
        assert!((g - w).abs() < 1e-4, "{list:?}");
    }
}

#[test]
fn version_flag() {
    assert!(ok(&["--version"]).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn sweep_writes_grid_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pxp.csv");
    let report = dir.path().join("pxp.report.json");
    let o = out.to_str().unwrap();
    ok(&["sweep", "--model", "pxp", "--L", "14", "--delta0", "20", "--omega0", "2", "--out", o, "--report", report.to_str().unwrap()]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["omega_rad_per_us", "n_final", "status"]);
    assert_eq!(rows.len(), 62);
    assert!(rows[1..].iter().all(|r| r[2] == "ok"));

    let meta = json(&dir.path().join("pxp.meta.json"));
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["config"]["model.kind"], "pxp");
    assert_eq!(meta["config"]["drive.delta0"], 20.0);
    assert_eq!(meta["details"]["basis_dim"], 987);

    let minima = json(&report)["minima"].as_array().unwrap().len();
    assert_eq!(minima, 3);
}

#[test]
fn sweep_is_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |jobs: &str| {
        let out = dir.path().join(format!("j{jobs}.csv"));
        ok(&["sweep", "--L", "8", "--points", "13", "--jobs", jobs, "--out", out.to_str().unwrap()]);
        fs::read(out).unwrap()
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("8"));
}

#[test]
fn config_file_merges_with_flags_winning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"model.kind": "pxp", "geometry.L": 6, "sweep.points": 5, "drive.delta0": -20}"#).unwrap();
    let out = dir.path().join("s.csv");
    ok(&["sweep", "--config", cfg.to_str().unwrap(), "--points", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(csv_rows(&out).len(), 8);
    let meta = json(&dir.path().join("s.meta.json"));
    assert_eq!(meta["config"]["geometry.L"], 6);
    assert_eq!(meta["config"]["sweep.points"], 7);
    assert_eq!(meta["config"]["drive.delta0"], -20.0);
}

#[test]
fn bad_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"drive.omega0": 2, "drive.detune": 3}"#).unwrap();
    assert!(fail(&["predict", "--config", cfg.to_str().unwrap()]).contains("drive.detune"));
    fs::write(&cfg, r#"{"evolve.steps_per_cycle": 1}"#).unwrap();
    assert!(fail(&["sweep", "--config", cfg.to_str().unwrap()]).contains("evolve.steps_per_cycle"));
    fs::write(&cfg, "{not json").unwrap();
    assert!(fail(&["predict", "--config", cfg.to_str().unwrap()]).contains("malformed"));
    assert!(fail(&["sweep", "--d", "-1"]).contains("geometry.d"));
}

#[test]
fn unknown_flag_is_rejected() {
    fail(&["sweep", "--frobnicate", "3"]);
    fail(&["teleport"]);
}

#[test]
fn geometry_and_custom_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sites = dir.path().join("sites.txt");
    ok(&["geometry", "--kind", "chain", "--L", "5", "--d", "5.3", "--out", sites.to_str().unwrap()]);
    let text = fs::read_to_string(&sites).unwrap();
    let xs: Vec<f64> = text.lines().map(|l| l.split_whitespace().next().unwrap().parse().unwrap()).collect();
    assert_eq!(xs.len(), 5);
    assert!((xs[4] - 21.2).abs() < 1e-12);
    assert_eq!(json(&dir.path().join("sites.meta.json"))["details"]["basis_dim"], 32);

    // a custom array with the same coordinates sweeps identically
    let chain = dir.path().join("chain.csv");
    let custom = dir.path().join("custom.csv");
    ok(&["sweep", "--L", "5", "--d", "5.3", "--points", "9", "--out", chain.to_str().unwrap()]);
    ok(&["sweep", "--kind", "custom", "--sites-file", sites.to_str().unwrap(), "--points", "9", "--out", custom.to_str().unwrap()]);
    assert_eq!(fs::read(chain).unwrap(), fs::read(custom).unwrap());

    assert!(fail(&["geometry", "--kind", "chain", "--L", "20", "--d", "5", "--device-bounds"]).contains("outside"));
}

#[test]
fn waveform_export() {
    let dir = tempfile::tempdir().unwrap();
    let wf = dir.path().join("wf.csv");
    let out = rydberg(&[
        "waveform", "--delta0", "20", "--omega0", "5", "--omega", "2.5", "--r", "2", "--resolution", "0.05", "--out",
        wf.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let rows = csv_rows(&wf);
    assert_eq!(rows[0], ["t_us", "delta_rad_per_us", "omega_rad_per_us"]);
    let omega: Vec<f64> = rows[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(omega[0], 0.0);
    assert_eq!(*omega.last().unwrap(), 0.0);
    let meta = json(&dir.path().join("wf.meta.json"));
    let fraction = meta["details"]["ramp_fraction"].as_f64().unwrap();
    assert!((fraction - 0.1 / (std::f64::consts::TAU / 2.5)).abs() < 1e-12);

    // a fast drive spends more than a tenth of the cycle ramping
    let out = rydberg(&["waveform", "--omega", "15", "--resolution", "0.01", "--out", wf.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

fn trace_densities(path: &Path) -> Vec<f64> {
    csv_rows(path)[1..].iter().map(|r| r[1].parse().unwrap()).collect()
}

#[test]
fn half_cycle_trace_lacks_second_passage_drop() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.csv");
    let half = dir.path().join("half.csv");
    let args = ["trace", "--model", "full", "--L", "14", "--d", "4.7", "--delta0", "20", "--omega", "3.825"];
    ok(&[&args[..], &["--out", full.to_str().unwrap()]].concat());
    ok(&[&args[..], &["--half-cycle", "--out", half.to_str().unwrap()]].concat());
    let header = &csv_rows(&full)[0];
    assert_eq!(header.len(), 16);
    assert_eq!(header[15], "n_site_13");
    let (f, h) = (trace_densities(&full), trace_densities(&half));
    assert_eq!(f.len(), 65);
    assert_eq!(f[..33], h[..33]);
    let mid = f[32];
    assert!(f[64] < 0.5 * mid, "full cycle {} vs midpoint {mid}", f[64]);
    assert!(h[64] > 0.5 * mid, "half cycle {} vs midpoint {mid}", h[64]);
}

#[test]
fn fpt_orders() {
    let first: Value = serde_json::from_str(&ok(&["fpt", "--order", "1", "--delta0", "20", "--omega0", "2", "--omega", "2.5"])).unwrap();
    let k = first["kinetic_coefficient"].as_f64().unwrap();
    // 2·J₀(8)
    assert!((k - 2.0 * 0.171_650_807_137_553_9).abs() < 1e-12);
    assert_eq!(first["interaction_terms"].as_array().unwrap().len(), 13);

    let args = ["fpt", "--order", "2", "--model", "pxp", "--L", "6", "--delta0", "20", "--omega", "2.5", "--v", "5"];
    let second: Value = serde_json::from_str(&ok(&args)).unwrap();
    assert!(second["second_order_terms"].as_array().unwrap().is_empty());
    assert!(second["three_site"]["simulated"].as_f64().unwrap() >= 0.0);

    let tails: Value = serde_json::from_str(&ok(&[&args[..], &["--retain-tails"]].concat())).unwrap();
    let terms = tails["second_order_terms"].as_array().unwrap();
    assert_eq!(terms.len(), 8);
    assert_eq!(terms[0]["offset"], 2);
}

#[test]
fn analyze_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    fs::write(&a, "omega_rad_per_us,n_final,status\n1,0.2,ok\n2,0.05,ok\n3,0.3,ok\n4,0.02,ok\n5,0.25,ok\n").unwrap();
    fs::write(&b, "omega_rad_per_us,n_final,status\n1,0.2,ok\n2,0.22,ok\n3,0.3,ok\n4,0.02,ok\n5,0.25,ok\n").unwrap();
    fs::write(&c, "omega_rad_per_us,n_final,status\n1,0.2,ok\n2,0.2,ok\n").unwrap();

    let report: Value = serde_json::from_str(&ok(&["analyze", "--in", a.to_str().unwrap(), "--depth", "0.2"])).unwrap();
    let minima = report["minima"].as_array().unwrap();
    assert_eq!(minima.len(), 2);

    let out = dir.path().join("spam.json");
    ok(&["analyze", "--in", a.to_str().unwrap(), "--spam", "apply", "--out", out.to_str().unwrap()]);
    let curve = json(&out)["curve"]["n"].as_array().unwrap().clone();
    assert!((curve[1].as_f64().unwrap() - (0.05 * 0.91 + 0.01)).abs() < 1e-15);
    assert!(dir.path().join("spam.meta.json").exists());

    let cmp: Value = serde_json::from_str(&ok(&["compare", "--in", a.to_str().unwrap(), "--in", b.to_str().unwrap()])).unwrap();
    let unmatched = cmp["unmatched"].as_array().unwrap();
    assert_eq!(unmatched.len(), 1);
    assert_eq!(unmatched[0]["omega"].as_f64().unwrap().round(), 2.0);
    assert!(fail(&["compare", "--in", a.to_str().unwrap(), "--in", c.to_str().unwrap()]).contains("grid"));
}

#[test]
fn acceptance_subcommand_runs_one_criterion() {
    let out = ok(&["acceptance", "--criterion", "1"]);
    assert!(out.starts_with("criterion 1"), "{out}");
    assert!(out.contains("PASS"));
}
