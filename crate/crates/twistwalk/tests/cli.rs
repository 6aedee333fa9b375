use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twistwalk"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn csv_column(path: &Path, name: &str) -> Vec<String> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let idx = rd.headers().unwrap().iter().position(|h| h == name).unwrap();
    rd.records().map(|r| r.unwrap()[idx].to_string()).collect()
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["check"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("check.json").exists());

    let cfg = configs().join("check_identical.toml");
    let bad = run(&["check", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("H1"));

    let broken = dir.path().join("broken.toml");
    fs::write(&broken, "epsilon = 0.02\nsamples = \"many\"\n").unwrap();
    let out = run(&["check", "--config", broken.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    fs::write(&broken, "epsilon = 0.02\nepsilom = 0.01\n").unwrap();
    assert_eq!(run(&["check", "--config", broken.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["check", "--no-such-flag"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--epsilon", "0.7"], dir.path()).status.code(), Some(2));
}

#[test]
fn help_lists_every_flag() {
    let out = bin().arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in ["--config", "--epsilon", "--s", "--samples", "--seed", "--beta", "--out", "--threads"] {
        assert!(text.contains(flag), "{flag} missing from --help");
    }
    for cmd in ["check", "simulate", "clt", "drift", "classify", "exits", "walk", "ergodize"] {
        assert!(text.contains(cmd));
    }
}

#[test]
fn drift_of_exact_system_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("drift_exact.toml");
    let out = run(&["nf", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let b = csv_column(&dir.path().join("drift.csv"), "b");
    let vals: Vec<f64> = b.iter().filter(|s| !s.is_empty()).map(|s| s.parse().unwrap()).collect();
    assert!(vals.len() > 100);
    assert!(vals.iter().all(|x| x.abs() <= 1e-8));
}

#[test]
fn classify_agrees_with_ir_measure() {
    let dir = tempfile::tempdir().unwrap();
    for eps in ["1e-4", "1e-6"] {
        let out = run(&["classify", "--epsilon", eps], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let strips = dir.path().join("strips.csv");
        let class = csv_column(&strips, "class");
        let lo = csv_column(&strips, "r_lo");
        let hi = csv_column(&strips, "r_hi");
        let ir_len: f64 = (0..class.len())
            .filter(|&i| class[i] == "IR")
            .map(|i| hi[i].parse::<f64>().unwrap() - lo[i].parse::<f64>().unwrap())
            .sum();
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("classify.json")).unwrap()).unwrap();
        let d = &json["details"];
        let point = d["ir_point_measure"].as_f64().unwrap();
        let width = 1e-6f64.max(eps.parse::<f64>().unwrap()).powf(0.81);
        assert!((d["ir_strip_length"].as_f64().unwrap() - ir_len).abs() < 1e-12);
        // every IR point lies in an IR strip, and IR strips reach at most one
        // strip width past the neighbourhoods
        assert!(point <= ir_len + 1e-12, "{eps}: {point} > {ir_len}");
        let witnesses = class.iter().zip(csv_column(&strips, "q")).filter(|(c, _)| *c == "IR").count();
        assert!(ir_len <= point + 2.0 * width * witnesses as f64 + 1e-12);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, threads) in [(&a, "1"), (&b, "4")] {
        let o = bin()
            .args(["simulate", "--samples", "300", "--s", "0.5", "--seed", "9", "--threads", threads, "--out"])
            .arg(out)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["displacements.csv", "simulate.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let other = dir.path().join("c");
    bin().args(["simulate", "--samples", "300", "--s", "0.5", "--seed", "10", "--out"]).arg(&other).output().unwrap();
    assert_ne!(fs::read(a.join("displacements.csv")).unwrap(), fs::read(other.join("displacements.csv")).unwrap());
}

#[test]
fn sample_configs_load() {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        // potential files hold only terms and presets
        if text.lines().any(|l| l.starts_with("[[term]]") || l.starts_with("preset")) && !text.contains("potentials =") {
            continue;
        }
        let out = run(&["check", "--config", path.to_str().unwrap()], dir.path());
        assert!(matches!(out.status.code(), Some(0 | 1)), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn clt_writes_histogram_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["clt", "--samples", "1000", "--s", "0.25", "--epsilon", "0.01"], dir.path());
    assert!(matches!(out.status.code(), Some(0 | 1)));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("clt.json")).unwrap()).unwrap();
    let tests = json["tests"].as_array().unwrap();
    assert_eq!(tests.len(), 3);
    for t in tests {
        for key in ["test", "statistic", "threshold", "pass", "M", "seed"] {
            assert!(t.get(key).is_some(), "{key}");
        }
    }
    assert!(json["params"]["epsilon"].as_f64().unwrap() == 0.01);
    let counts = csv_column(&dir.path().join("histogram.csv"), "count");
    assert_eq!(counts.len(), 60);
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("histogram.json")).unwrap()).unwrap();
    assert!((side["reference_variance"].as_f64().unwrap() - 0.0625).abs() < 1e-12);
}
