use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn krein_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krein-lab")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const TWO_ATOMS: &str = r#"{"atoms": [[-1.0, 0.5], [1.0, 0.5]], "ac": []}"#;

#[test]
fn perturb_writes_golden_ratio_atoms() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "mu.json", TWO_ATOMS);
    let out_dir = dir.path().join("out");
    let out = krein_lab(&["perturb", "--measure", s(&m), "--alpha", "1", "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mu = json(&out_dir.join("mu_alpha.json"));
    let atoms = mu["atoms"].as_array().unwrap();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((atoms[0][0].as_f64().unwrap() - (1.0 - phi)).abs() < 1e-10);
    assert!((atoms[1][0].as_f64().unwrap() - phi).abs() < 1e-10);
    let csv = std::fs::read_to_string(out_dir.join("transform.csv")).unwrap();
    assert!(csv.starts_with("x,eps,re_formula,im_formula,re_measure,im_measure\n"));
    assert_eq!(csv.lines().count(), 402);
}

#[test]
fn negative_coupling_is_accepted() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "mu.json", TWO_ATOMS);
    let out = krein_lab(&["perturb", "--measure", s(&m), "--alpha", "-2.5", "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn failed_check_exits_one_and_keeps_the_artifacts() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "mu.json", TWO_ATOMS);
    let out_dir = dir.path().join("out");
    let out = krein_lab(&["perturb", "--measure", s(&m), "--alpha", "1", "--out", s(&out_dir), "--tol", "1e-300"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
    assert!(out_dir.join("mu_alpha.json").exists());
}

#[test]
fn malformed_input_exits_two_without_output() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"atoms": [[0.0, -1.0]], "ac": []}"#);
    let out_dir = dir.path().join("out");
    let out = krein_lab(&["perturb", "--measure", s(&bad), "--alpha", "1", "--out", s(&out_dir)]);
    assert_eq!(code(&out), 2);
    assert!(!out_dir.exists() || std::fs::read_dir(&out_dir).unwrap().next().is_none());

    let out = krein_lab(&["perturb", "--measure", s(&dir.path().join("missing.json")), "--alpha", "1", "--out", s(&out_dir)]);
    assert_eq!(code(&out), 2);
    let out = krein_lab(&["perturb", "--measure", s(&bad), "--alpha", "x", "--out", s(&out_dir)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn invalid_thread_count_exits_two() {
    let out = Command::new(env!("CARGO_BIN_EXE_krein-lab"))
        .args(["verify", "--suite", "measures"])
        .env("KREIN_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn shift_reconstruct_surgery_chain() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "delta.json", r#"{"atoms": [[0.0, 1.0]], "ac": []}"#);
    let shift_dir = dir.path().join("shift");
    let out = krein_lab(&["shift", "--measure", s(&m), "--alpha", "1", "--out", s(&shift_dir), "--grid", "-1:2:300"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["shift.json", "shift.csv", "shift.svg", "report.json"] {
        assert!(shift_dir.join(f).exists(), "{f}");
    }
    let shift = shift_dir.join("shift.json");

    let rec_dir = dir.path().join("rec");
    let out = krein_lab(&["reconstruct", "--shift", s(&shift), "--out", s(&rec_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let nu = json(&rec_dir.join("nu.json"));
    assert!((nu["atoms"][0][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((nu["atoms"][0][1].as_f64().unwrap() - 1.0).abs() < 1e-6);

    let out = krein_lab(&["reconstruct", "--shift", s(&shift), "--out", s(&dir.path().join("rec2")), "--reference", "0:1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let surg_dir = dir.path().join("surgery");
    let out = krein_lab(&["surgery", "--shift", s(&shift), "--region", "0.2:0.4", "--out", s(&surg_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&surg_dir.join("report.json"));
    let k1 = &report["k1_bound"];
    assert_eq!(k1["points"], 200);
    assert!(k1["max_abs_difference"].as_f64().unwrap() <= k1["bound"].as_f64().unwrap());
    assert_eq!(report["mu_classification"]["kind"], "equivalent");
    assert!(surg_dir.join("shift_tilde.csv").exists() && surg_dir.join("surgery.svg").exists());

    let out = krein_lab(&["surgery", "--shift", s(&shift), "--region", "-100:100", "--out", s(&dir.path().join("all"))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("both restrictions vanish"));

    let out = krein_lab(&["surgery", "--shift", s(&shift), "--region", "3:1", "--out", s(&dir.path().join("bad"))]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("bad").exists());
}

#[test]
fn anderson_writes_report_and_samples() {
    let dir = TempDir::new().unwrap();
    let model = write(
        dir.path(),
        "model.json",
        r#"{"dim": 1, "L": 80, "boundary": "periodic", "distribution": {"kind": "uniform", "params": [0.0, 1.0]}, "master_seed": 3}"#,
    );
    let out_dir = dir.path().join("a");
    let out = krein_lab(&["anderson", "--model", s(&model), "--samples", "6", "--out", s(&out_dir), "--resolution", "0.1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out_dir.join("report.json"));
    assert_eq!(report["model"]["L"], 80);
    let samples = std::fs::read_to_string(out_dir.join("samples.csv")).unwrap();
    assert!(samples.starts_with("index,eigenvalue,weight\n"));
    assert_eq!(samples.lines().count(), 1 + 6 * 80);
    for f in ["dos.svg", "sigma_ess_first.csv", "sigma_ess_second.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }

    let again = dir.path().join("b");
    let out = Command::new(env!("CARGO_BIN_EXE_krein-lab"))
        .args(["anderson", "--model", s(&model), "--samples", "6", "--out", s(&again), "--resolution", "0.1"])
        .env("KREIN_LAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    for f in ["report.json", "samples.csv", "dos.svg"] {
        assert_eq!(std::fs::read(out_dir.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn unknown_distribution_exits_two() {
    let dir = TempDir::new().unwrap();
    let model = write(
        dir.path(),
        "model.json",
        r#"{"dim": 1, "L": 10, "boundary": "periodic", "distribution": {"kind": "cauchy", "params": [0.0]}, "master_seed": 3}"#,
    );
    let out = krein_lab(&["anderson", "--model", s(&model), "--samples", "4", "--out", s(&dir.path().join("a"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_writes_json_and_rejects_unknown_suites() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("v.json");
    let out = krein_lab(&["verify", "--suite", "cauchy", "--seed", "4", "--out", s(&path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&path);
    assert_eq!(report["passed"], true);
    let stdout = krein_lab(&["verify", "--suite", "cauchy", "--seed", "4"]).stdout;
    assert_eq!(stdout, std::fs::read(&path).unwrap());
    assert_eq!(code(&krein_lab(&["verify", "--suite", "nope"])), 2);
}

#[test]
fn plot_is_deterministic_and_rejects_empty_series() {
    let dir = TempDir::new().unwrap();
    let csv = write(dir.path(), "s.csv", "x,y\n0,1\n1,3\n2,2\n");
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    for p in [&a, &b] {
        let out = krein_lab(&["plot", "--input", s(&csv), "--style", "step", "--title", "t", "--out", s(p)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let svg = std::fs::read(&a).unwrap();
    assert_eq!(svg, std::fs::read(&b).unwrap());
    assert!(String::from_utf8_lossy(&svg).starts_with("<svg"));

    let empty = write(dir.path(), "e.csv", "x,y\n");
    let out = krein_lab(&["plot", "--input", s(&empty), "--out", s(&dir.path().join("e.svg"))]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("e.svg").exists());
}

#[test]
fn run_config_matches_direct_invocation() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "mu.json", TWO_ATOMS);
    let via_config = dir.path().join("c");
    let config = serde_json::json!({"kind": "perturb", "measure": m, "alpha": 0.5, "out": via_config});
    let config = write(dir.path(), "scenario.json", &config.to_string());
    let out = krein_lab(&["run", "--config", s(&config)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let direct = dir.path().join("d");
    assert_eq!(code(&krein_lab(&["perturb", "--measure", s(&m), "--alpha", "0.5", "--out", s(&direct)])), 0);
    for f in ["mu_alpha.json", "transform.csv"] {
        assert_eq!(std::fs::read(via_config.join(f)).unwrap(), std::fs::read(direct.join(f)).unwrap(), "{f}");
    }

    let unknown = write(dir.path(), "u.json", r#"{"kind": "perturb", "measure": "x", "alpha": 1, "out": "o", "colour": 1}"#);
    assert_eq!(code(&krein_lab(&["run", "--config", s(&unknown)])), 2);
    let missing = serde_json::json!({"kind": "perturb", "measure": dir.path().join("none.json"), "alpha": 1.0, "out": dir.path().join("o")});
    let missing = write(dir.path(), "m.json", &missing.to_string());
    assert_eq!(code(&krein_lab(&["run", "--config", s(&missing)])), 2);
}
