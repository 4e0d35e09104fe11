use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn jm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jm")).args(args).arg("--out").arg(out).output().expect("run jm")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("jm-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn malformed_config_reports_line_and_column() {
    let d = scratch("bad");
    let cfg = d.join("bad.json");
    std::fs::write(&cfg, "{\n  \"name\": \"x\",\n  \"seed\": 1,,\n}\n").unwrap();
    let out = jm(&["solve", "--config", cfg.to_str().unwrap()], &d);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3, column 13"), "{err}");
}

#[test]
fn unknown_field_is_rejected() {
    let d = scratch("unknown");
    let cfg = d.join("c.json");
    std::fs::write(&cfg, "{\"name\": \"x\", \"mapp\": {}}").unwrap();
    let out = jm(&["solve", "--config", cfg.to_str().unwrap()], &d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn bad_thread_variable_is_an_error() {
    let d = scratch("threads");
    let out = Command::new(env!("CARGO_BIN_EXE_jm"))
        .args(["solve", "--config", "fixed", "--threads", "2", "--out"])
        .arg(&d)
        .env("JM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("JM_THREADS"));
}

#[test]
fn mate_reports_are_deterministic_across_thread_counts() {
    let (a, b) = (scratch("mate-a"), scratch("mate-b"));
    let run = |d: &Path, threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_jm"))
            .args(["mate", "--config", "z2f", "--out"])
            .arg(d)
            .env("JM_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&a, "1");
    run(&b, "4");
    assert_eq!(std::fs::read(a.join("mate.json")).unwrap(), std::fs::read(b.join("mate.json")).unwrap());
    assert_eq!(std::fs::read(a.join("interface.csv")).unwrap(), std::fs::read(b.join("interface.csv")).unwrap());
}

#[test]
fn render_writes_ppm_png_and_report() {
    let d = scratch("render");
    let out = jm(&["render", "--config", "z2z2"], &d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ppm = std::fs::read(d.join("render.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n512 512\n255\n"));
    assert_eq!(ppm.len(), 15 + 512 * 512 * 3);
    assert!(d.join("render.png").exists());
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("render.json")).unwrap()).unwrap();
    assert_eq!(rep["basin_pixels"].as_array().unwrap().len(), 2);
}

#[test]
fn glue_writes_correspondence_table() {
    let d = scratch("glue");
    let out = jm(&["glue", "--config", "z2f"], &d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(d.join("gluing.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2048 + 1);
}

#[test]
fn failing_property_gives_nonzero_exit() {
    // an 8-sample collar is far too coarse for the model checks
    let d = scratch("fail");
    let cfg = d.join("c.json");
    let mut text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/z2f.json")).unwrap();
    text = text.replacen("\"mate\"", "\"gluing\": {\"collar\": 8},\n  \"mate\"", 1);
    std::fs::write(&cfg, text).unwrap();
    let out = jm(&["glue", "--config", cfg.to_str().unwrap()], &d);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_requires_a_selection() {
    let d = scratch("verify");
    let out = jm(&["verify"], &d);
    assert_eq!(out.status.code(), Some(2));
    let out = jm(&["verify", "--check", "2"], &d);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("[PASS] 2"));
}
