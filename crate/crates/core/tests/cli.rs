use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kppfront::cli::RunManifest;

fn kppfront(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kppfront")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn speeds(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("speeds.json")).unwrap()).unwrap()
}

#[test]
fn list_presets_names_every_class() {
    let o = kppfront(&["list-presets"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    for want in [
        "homogeneous",
        "periodic",
        "compact_perturbation",
        "almost_periodic",
        "asymptotic_ap",
        "random_ergodic",
        "slow_oscillation_fast",
        "slow_oscillation_slow",
    ] {
        assert!(names.contains(&want), "{want} missing");
    }
    assert!(text.lines().all(|l| l.contains("medium")));
}

#[test]
fn homogeneous_run_passes_with_complete_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h");
    let o = kppfront(&["--quiet", "run", "--preset", "homogeneous", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = speeds(&out);
    assert!((s["report"]["w_under"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(s["verdict"], true);

    let m = RunManifest::load(&out).unwrap();
    assert!(m.finalized && m.exit_code == Some(0));
    m.verify().unwrap();
    let listed: Vec<&str> = m.outputs.iter().map(|o| o.path.as_str()).collect();
    for f in fs::read_dir(&out).unwrap() {
        let name = f.unwrap().file_name().into_string().unwrap();
        assert!(name == "manifest.json" || listed.contains(&name.as_str()), "{name} not in manifest");
    }
    for f in ["speeds.json", "hamiltonian.csv", "fronts.csv", "eigen.csv"] {
        assert!(listed.contains(&f), "{f}");
    }
    let header = fs::read_to_string(out.join("hamiltonian.csv")).unwrap();
    assert!(header.starts_with("medium_id,engine,p,H_under,H_over\n"));
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"preset": "random_ergodic", "seed": 5, "pde": {"t_final": 40}, "eigen": {"width": 300}}"#).unwrap();
    let mut hashes = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}"));
        let o = kppfront(&["--quiet", "run", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
        assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
        let m = RunManifest::load(&out).unwrap();
        let mut h: Vec<(String, String)> = m
            .outputs
            .iter()
            .filter(|o| o.path.ends_with(".csv"))
            .map(|o| (o.path.clone(), o.sha256.clone()))
            .collect();
        h.sort();
        hashes.push((m.config_hash.clone(), h));
    }
    assert_eq!(hashes[0].1, hashes[1].1);
    assert!(hashes[0].1.len() >= 3);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"preset\": \"homogeneous\",\n  \"seed\": \n}").unwrap();
    let o = kppfront(&["run", "--config", bad.to_str().unwrap(), "--out-dir", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));

    fs::write(&bad, r#"{"preset": "homogeneous", "speed": {"tolerence": 0.1}}"#).unwrap();
    let o = kppfront(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tolerence"));

    assert_eq!(code(&kppfront(&["run", "--preset", "nonexistent"])), 2);
    assert_eq!(code(&kppfront(&["run"])), 2);
    assert_eq!(code(&kppfront(&["run", "--preset", "homogeneous", "--seed", "x"])), 2);
}

#[test]
fn sweep_b0_gives_square_root_speeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"preset": "compact_perturbation", "medium": {"bump_amplitude": -0.05}, "pde": {"t_final": 60}}"#).unwrap();
    let out = dir.path().join("s");
    let o = kppfront(&[
        "--quiet",
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--param",
        "b0",
        "--values",
        "0.09,0.25,1.0",
        "--workers",
        "2",
    ]);
    assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for (row, want) in rows.iter().zip([0.6, 1.0, 2.0]) {
        let w: f64 = row[3].parse().unwrap();
        assert!((w - want).abs() < 1e-4, "{row:?}");
    }
    let m = RunManifest::load(&out).unwrap();
    m.verify().unwrap();
    assert!(m.outputs.iter().any(|o| o.path == "sweep.csv"));
    assert!(m.outputs.iter().any(|o| o.path == "item_002/speeds.json"));
}

#[test]
fn empty_sweep_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = kppfront(&[
        "sweep",
        "--preset",
        "homogeneous",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--param",
        "seed",
        "--values",
    ]);
    assert_eq!(code(&o), 2);
    let o = kppfront(&["sweep", "--preset", "homogeneous", "--param", "nonsense", "--values", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn slow_oscillation_alias_passes_with_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let o = kppfront(&["--quiet", "run", "--preset", "slow_oscillation_alpha_0.5", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = speeds(&out);
    assert_eq!(s["gap"]["passed"], true);
    assert!(s["report"]["w_star_emp"].as_f64().unwrap() < s["report"]["w_upper_emp"].as_f64().unwrap());
    assert_eq!(s["report"]["checks"]["lower_ok"], true);
    assert_eq!(s["report"]["checks"]["upper_ok"], true);
}
