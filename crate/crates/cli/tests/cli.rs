use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qutrit_floquet_cli::output::RunManifest;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qutrit-floquet"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn csv_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn evolve_rows_match_steps_and_stride() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ev");
    let o = run(&["evolve", "--L", "4", "--theta-x", "0.2", "--theta-z", "1.0", "--steps", "20", "--stride", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_rows(&out.join("series.csv")), 20 / 3 + 1);
    let m = manifest(&out);
    assert_eq!(m.files[0].rows, 7);
    assert_eq!(m.config["L"], 4);
    assert_eq!(m.config["tebd_tol"], 1e-6);
    assert!(m.diagnostics.max_norm_drift.unwrap() < 1e-10);
}

#[test]
fn config_file_and_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "L = 4\ntheta_x = 0.2\ntheta_z = 1.0\nsteps = 20\nobservables = [\"mean_Sz\", \"zz_1_2\"]\n").unwrap();
    let o = run(&["evolve", "--config", cfg.to_str().unwrap(), "--steps", "5"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("step,mean_Sz,zz_1_2"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn unknown_key_exits_with_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    fs::write(&cfg, r#"{"L": 4, "thetax": 0.2, "theta_z": 1.0, "steps": 20}"#).unwrap();
    let o = run(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("did you mean `theta_x`"));
}

#[test]
fn negative_sites_exit_with_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    fs::write(&cfg, r#"{"L": -4, "theta_x": 0.2, "theta_z": 1.0, "steps": 20}"#).unwrap();
    let o = run(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    assert_eq!(run(&["evolve", "--L", "1", "--theta-x", "0", "--theta-z", "0", "--steps", "1"]).status.code(), Some(2));
}

#[test]
fn reproduce_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = run(&["reproduce", "fig2", "--out", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let m = manifest(&a.join("fig2"));
    assert_eq!(m.files.len(), 3);
    for f in &m.files {
        let x = fs::read(a.join("fig2").join(&f.path)).unwrap();
        let y = fs::read(b.join("fig2").join(&f.path)).unwrap();
        assert_eq!(x, y, "{} differs", f.path);
        assert_eq!(csv_rows(&a.join("fig2").join(&f.path)), f.rows);
    }
    // 26 values of θ_z, 21 recorded steps each
    assert_eq!(m.files[0].rows, 26 * 21);
    assert_eq!(m.files[2].rows, 26);
}

#[test]
fn sweep_writes_row_major_grids_independent_of_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = tmp.path().join(format!("sweep{threads}"));
        let o = bin()
            .env("RAYON_NUM_THREADS", threads)
            .args(["sweep", "--grid-x", "0:0.4:3", "--grid-z", "0:3:4", "--L", "4", "--cycles", "12", "--observables", "overlap,qfi", "--matrix", "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(csv_rows(&out.join("overlap.csv")), 12);
        assert!(!out.join("entropy.csv").exists());
        let m = manifest(&out);
        assert_eq!(m.worker_threads.as_deref(), Some(threads));
        assert_eq!(m.files.len(), 4);
        outputs.push((fs::read(out.join("overlap.csv")).unwrap(), fs::read(out.join("fQ.csv")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn compile_check_reports_json() {
    let o = run(&["compile-check", "--axis", "z", "--theta", "1.3", "--ledger"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["ledger_residual"].as_f64().unwrap() < 1e-9);
    let o = run(&["compile-check", "--axis", "y", "--theta", "1.3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn predict_nt_grid_csv() {
    let o = run(&["predict-nt", "--theta-x", "0.1", "--grid-z", "0:3:7", "--L", "8"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 8);
}

#[test]
fn ops_dump_lists_every_operator() {
    let o = run(&["ops", "dump"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|d| d["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"gell-mann-8") && names.contains(&"ms"));
    assert_eq!(run(&["ops", "dump", "--name", "nope"]).status.code(), Some(2));
}
