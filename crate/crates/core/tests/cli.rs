// Command-line behavior: exit codes, output files and reproducible reruns.

use std::fs;
use std::path::Path;
use std::process::Command;

use entire_fronts::pipeline::RunManifest;

const BIN: &str = env!("CARGO_BIN_EXE_entire-fronts");

const E1: &str = r#"
seed = 4
[model]
kind = "epidemic"
d1 = 1.0
d2 = 1.0
gamma = 1.0
beta = 1.0
g = "g1"
omega = 2.0
nu = 1.0
[checker]
samples = 1000
[entire]
waves = [{ c = 1.5 }]
chi = [1, 1]
h_last = -4.0
t_end = 3.0
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn pipeline_passes_and_rerun_hits_cache_with_identical_digests() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "e1.toml", E1);
    let out = tmp.path().join("out");
    let out_s = out.display().to_string();
    let (code, stdout, stderr) = run(&["pipeline", "--config", &cfg, "--out", &out_s, "--schedule", "2,4"]);
    assert_eq!(code, 0, "{stdout}\n{stderr}");
    let first = manifest(&out);
    assert!(first.passed);
    let names: Vec<&str> = first.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["verify-assumptions", "spectral", "sis", "front", "entire"]);
    for f in ["spectral.json", "spectral_table.csv", "gamma.csv", "front_c1.5.csv", "entire_snapshots.csv"] {
        assert!(first.files.iter().any(|r| r.path == f), "{f} missing");
    }
    // the entire stage reuses the profiles stored by the sis and front stages
    let hits = |m: &RunManifest| -> Vec<usize> { m.stages.iter().map(|s| s.cache_hits).collect() };
    assert_eq!(hits(&first), [0, 0, 0, 0, 2]);

    let (code, _, _) = run(&["pipeline", "--config", &cfg, "--out", &out_s, "--schedule", "2,4"]);
    assert_eq!(code, 0);
    let second = manifest(&out);
    assert_eq!(first.files, second.files);
    assert_eq!(first.config_hash, second.config_hash);
    assert_eq!(hits(&second), [0, 0, 1, 1, 2]);
}

#[test]
fn seed_and_schedule_change_config_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "e1.toml", E1);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let (ca, _, _) = run(&["verify-assumptions", "--config", &cfg, "--out", &a.display().to_string()]);
    let (cb, _, _) = run(&[
        "verify-assumptions",
        "--config",
        &cfg,
        "--out",
        &b.display().to_string(),
        "--seed",
        "99",
    ]);
    assert_eq!((ca, cb), (0, 0));
    assert_ne!(manifest(&a).config_hash, manifest(&b).config_hash);
    assert_eq!(manifest(&b).seed, 99);
}

#[test]
fn speed_below_critical_is_refused_at_spectral() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "slow.toml", &E1.replace("c = 1.5", "c = 1.3"));
    let out = tmp.path().join("out").display().to_string();
    let (code, _, stderr) = run(&["spectral", "--config", &cfg, "--out", &out]);
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("stage spectral"), "{stderr}");
    assert!(stderr.contains("critical speed"), "{stderr}");
}

#[test]
fn config_errors_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.toml", &E1.replace("nu = 1.0", "nu = 1.0\nmu = 3.0"));
    let (code, _, stderr) = run(&["spectral", "--config", &bad]);
    assert_eq!(code, 4);
    assert!(stderr.contains("mu"), "{stderr}");
    let (code, _, _) = run(&["spectral"]);
    assert_eq!(code, 4);
    let (code, _, _) = run(&["spectral", "--config", "/nonexistent/x.toml"]);
    assert_eq!(code, 4);
    let cfg = write_config(tmp.path(), "e1.toml", E1);
    let (code, _, stderr) = run(&["entire", "--config", &cfg, "--schedule", "4,2"]);
    assert_eq!(code, 4, "{stderr}");
}

#[test]
fn assumption_failure_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    // 1 > k2 b is violated
    let text = r#"
[model]
kind = "buffered"
d1 = 1.0
d2 = 1.0
k1 = 1.0
k2 = 1.0
b = 1.5
[checker]
samples = 500
"#;
    let cfg = write_config(tmp.path(), "buf.toml", text);
    let out = tmp.path().join("out");
    let (code, stdout, _) = run(&["verify-assumptions", "--config", &cfg, "--out", &out.display().to_string()]);
    assert_eq!(code, 2, "{stdout}");
    let m = manifest(&out);
    assert!(!m.passed);
    let table = fs::read_to_string(out.join("assumptions.txt")).unwrap();
    assert!(table.contains("buffered-parameters"));
}

#[test]
fn front_and_sis_subcommands_with_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[model]\nkind = \"fisher\"\n[front]\nspeeds = [2.5, 3.0]\n";
    let cfg = write_config(tmp.path(), "f.toml", text);
    let out = tmp.path().join("out");
    let out_s = out.display().to_string();
    let (code, _, stderr) = run(&["front", "--config", &cfg, "--out", &out_s, "--dx", "0.05", "--tol", "1e-7"]);
    assert_eq!(code, 0, "{stderr}");
    let csv = fs::read_to_string(out.join("front_c3.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("xi,u1"));
    let xs: Vec<f64> = lines.take(2).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!((xs[1] - xs[0] - 0.05).abs() < 1e-12);
    let (code, _, stderr) = run(&["sis", "--config", &cfg, "--out", &out_s, "--dt", "0.004"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(out.join("gamma.csv").exists());
}

#[test]
fn full_e1_pipeline_all_verdicts_pass() {
    let tmp = tempfile::tempdir().unwrap();
    // default schedule, grid and horizon
    let text = E1.replace("t_end = 3.0\n", "").replace("samples = 1000", "samples = 10000");
    let cfg = write_config(tmp.path(), "e1.toml", &text);
    let out = tmp.path().join("out");
    let start = std::time::Instant::now();
    let (code, stdout, stderr) = run(&["pipeline", "--config", &cfg, "--out", &out.display().to_string()]);
    assert_eq!(code, 0, "{stdout}\n{stderr}");
    assert!(start.elapsed().as_secs() < 300);
    let m = manifest(&out);
    assert_eq!(m.stages.len(), 5);
    assert!(m.stages.iter().all(|s| s.verdict == entire_fronts::pipeline::Verdict::Pass));
    let sandwich: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("sandwich_report.json")).unwrap()).unwrap();
    assert!(sandwich["lower_margin"]["value"].as_f64().unwrap() >= -1e-3);
}
