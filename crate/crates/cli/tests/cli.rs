use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const ASYMMETRIC: &str = r#"{"A": [[2.1, 0], [0, 2.6]], "B": [[2.2, 0], [0, 2.4]], "C": [[1.9, 0], [0, -0.7]]}"#;
const VACUUM: &str = r#"{"V": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}"#;

fn teleport(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teleport"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn analyze_tmss() {
    let v = json(&teleport(&[
        "analyze", "--tmss", "1", "--g", "1", "--ta", "1", "--tb", "1",
    ]));
    assert!((f(&v["fidelity"]) - 0.880797078).abs() < 1e-9);
    assert_eq!(v["region"], "I");
    assert_eq!(v["physical"], true);
    assert_eq!(v["ppt_entangled"], true);
    assert!((f(&v["optimal_gain"]["g_min"]) - 1.313035285).abs() < 1e-9);
    assert_eq!(v["toolkit_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(f(&v["config"]["command"]["analyze"]["g"]), 1.0);
}

#[test]
fn analyze_fixture_and_vacuum() {
    let dir = tempfile::tempdir().unwrap();
    let asymmetric = write(dir.path(), "asymmetric.json", ASYMMETRIC);
    let v = json(&teleport(&[
        "analyze", "--state", &asymmetric, "--g", "1", "--ta", "1", "--tb", "1",
    ]));
    assert!((f(&v["w_rob"]) - 0.26).abs() < 1e-12);
    assert_eq!(v["physical"], false);
    assert_eq!(v["region"], "UNPHYS");
    assert!(v["ppt_entangled"].is_null());
    assert!((f(&v["symplectic"]["nu_minus"]) - 0.8930).abs() < 1e-4);

    let vac = write(dir.path(), "vacuum.json", VACUUM);
    let v = json(&teleport(&["analyze", "--state", &vac, "--g", "1"]));
    assert_eq!(v["region"], "SEP");
    assert_eq!(f(&v["fidelity"]), 0.5);
}

#[test]
fn emitted_state_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let emitted = dir.path().join("emitted.json");
    let emitted = emitted.to_str().unwrap();
    let first = json(&teleport(&["analyze", "--tmss", "0.7315", "--emit-state", emitted]));
    let second = json(&teleport(&["analyze", "--state", emitted]));
    assert_eq!(first["V"], second["V"]);
    assert_eq!(first["fidelity"], second["fidelity"]);
}

#[test]
fn analyze_csv_format() {
    let out = teleport(&["analyze", "--tmss", "1", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = text.lines();
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    assert!(header.contains(&"fidelity") && header.contains(&"region") && header.contains(&"toolkit_version"));
    assert_eq!(rows.count(), 1);
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"V": [[1,2],[3,4]]}"#);
    assert_eq!(teleport(&["analyze", "--state", &bad]).status.code(), Some(2));
    assert_eq!(
        teleport(&["analyze", "--state", "/nonexistent/state.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(teleport(&["analyze"]).status.code(), Some(2));
    assert_eq!(
        teleport(&["analyze", "--tmss", "1", "--state", &bad]).status.code(),
        Some(2)
    );
    assert_eq!(
        teleport(&["analyze", "--tmss", "1", "--ta", "1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        teleport(&["scan", "region", "--Q", "2", "--P", "2", "--ratio", "2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn validate_passes_on_tmss() {
    let v = json(&teleport(&[
        "validate",
        "--tmss",
        "1",
        "--g",
        "1",
        "--samples",
        "1000000",
        "--seed",
        "7",
    ]));
    assert_eq!(v["pass"], true);
    assert!((f(&v["analytic"]) - 0.880797078).abs() < 1e-9);

    let v = json(&teleport(&[
        "validate", "--tmss", "1", "--g", "2.5", "--ta", "0.8", "--tb", "0.9",
    ]));
    assert_eq!(v["pass"], true);
    assert!((f(&v["cft"]) - 0.1379310).abs() < 1e-7);
}

#[test]
fn validate_rejects_unphysical_state() {
    let dir = tempfile::tempdir().unwrap();
    let asymmetric = write(dir.path(), "asymmetric.json", ASYMMETRIC);
    let out = teleport(&["validate", "--state", &asymmetric]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("state fails bona-fide condition"));
}

#[test]
fn optimal_gain_reports() {
    let v = json(&teleport(&["optimal-gain", "--tmss", "1"]));
    assert!((f(&v["g_min"]) - 1.313035285).abs() < 1e-9);
    assert!((f(&v["w_sum_at_g_min"]) + 4.0).abs() < 1e-9);
    let dir = tempfile::tempdir().unwrap();
    let vac = write(dir.path(), "vacuum.json", VACUUM);
    assert_eq!(teleport(&["optimal-gain", "--state", &vac]).status.code(), Some(3));
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn surface_scan_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("surface.csv");
    let summary = json(&teleport(&[
        "scan",
        "surface",
        "--tmss",
        "1",
        "--g",
        "1",
        "--steps",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(summary["rows"], 10_000);
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["ta", "tb", "fidelity", "cft", "quantum"]);
    assert_eq!(rows.len(), 10_000);
    let flag_at = |ta: f64, tb: f64| {
        rows.iter()
            .find(|r| {
                (r[0].parse::<f64>().unwrap() - ta).abs() < 1e-9 && (r[1].parse::<f64>().unwrap() - tb).abs() < 1e-9
            })
            .map(|r| r[4].clone())
            .unwrap()
    };
    assert_eq!(flag_at(0.2, 1.0), "0");
    assert_eq!(flag_at(0.5, 1.0), "1");

    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("surface.json")).unwrap()).unwrap();
    assert_eq!(meta["toolkit_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["kind"], "surface");
    assert_eq!(meta["g"], 1.0);
    assert!(meta["V"].is_array());
    assert_eq!(meta["config"]["command"]["scan"]["surface"]["steps"], 100);
}

#[test]
fn region_scans() {
    let dir = tempfile::tempdir().unwrap();
    for (ratio, name) in [("1", "fig_a.csv"), ("0.65", "fig_b.csv")] {
        let out = dir.path().join(name);
        json(&teleport(&[
            "scan",
            "region",
            "--Q",
            "2",
            "--P",
            "2",
            "--ratio",
            ratio,
            "--steps",
            "400",
            "--out",
            out.to_str().unwrap(),
        ]));
        let (header, rows) = read_csv(&out);
        assert_eq!(header, ["kq_bar", "kp_bar", "region"]);
        assert_eq!(rows.len(), 160_000);
        for code in ["UNPHYS", "SEP", "I", "II"] {
            assert!(rows.iter().any(|r| r[2] == code), "{code} missing at ratio {ratio}");
        }
        let meta: Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
        assert_eq!(meta["family"]["q"], 2.0);
        let ta = f(&meta["channel"]["ta"]);
        assert!((ta - ratio.parse::<f64>().unwrap()).abs() < 1e-15);
    }
}

#[test]
fn region_scan_thread_count_independent() {
    let one = teleport(&[
        "--threads",
        "1",
        "scan",
        "region",
        "--Q",
        "2",
        "--P",
        "2",
        "--steps",
        "60",
    ]);
    let many = teleport(&[
        "--threads",
        "4",
        "scan",
        "region",
        "--Q",
        "2",
        "--P",
        "2",
        "--steps",
        "60",
    ]);
    assert!(one.status.success() && many.status.success());
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn gain_and_robustness_scans() {
    let dir = tempfile::tempdir().unwrap();
    let gain = dir.path().join("gain.csv");
    json(&teleport(&[
        "scan",
        "gain",
        "--tmss",
        "1",
        "--ta",
        "0.5",
        "--g-max",
        "4",
        "--steps",
        "401",
        "--out",
        gain.to_str().unwrap(),
    ]));
    let (header, rows) = read_csv(&gain);
    assert_eq!(header, ["g", "fidelity", "cft", "w_sum", "quantum"]);
    assert_eq!(rows.len(), 401);
    assert_eq!(rows[0][4], "0");

    let rob = dir.path().join("robust.csv");
    json(&teleport(&[
        "scan",
        "robustness",
        "--tmss",
        "1",
        "--steps",
        "20",
        "--out",
        rob.to_str().unwrap(),
    ]));
    let (header, rows) = read_csv(&rob);
    assert_eq!(header, ["ta", "tb", "best_g", "ratio", "quantum"]);
    assert_eq!(rows.len(), 400);
    assert!(rows.iter().all(|r| r[4] == "1"));
}
