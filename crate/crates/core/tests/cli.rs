use std::path::Path;
use std::process::{Command, Output};

fn cohproj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cohproj")).args(args).output().expect("binary runs")
}

#[test]
fn unknown_experiment_is_usage_error() {
    assert_eq!(cohproj(&["run", "--name", "no-such-thing"]).status.code(), Some(2));
    assert_eq!(cohproj(&["run", "su2-kernel", "--set", "bogus=1"]).status.code(), Some(2));
    assert_eq!(cohproj(&["verify", "--suite", "tiny"]).status.code(), Some(2));
}

#[test]
fn tiny_tolerance_is_numeric_failure() {
    let out = cohproj(&["run", "--name", "overlap-oracle", "--set", "tolerance_scale=1e-30"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn su2_run_reports_rank_three() {
    let out = cohproj(&["run", "su2-kernel", "s=1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("quantity,re,im,tolerance,residual,pass"));
    let rank = lines.find(|l| l.starts_with("rank")).expect("rank row");
    let re: f64 = rank.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(re, 3.0);
}

#[test]
fn output_is_deterministic() {
    let dir = std::env::temp_dir().join(format!("cohproj-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("run.cfg");
    std::fs::write(&config, "name = gauge-independence\nseed = 5\nformat = json\n[gauge-independence]\nseeds = 3\n").unwrap();
    let files: Vec<_> = (0..2).map(|k| dir.join(format!("out{k}.json"))).collect();
    for f in &files {
        let out = cohproj(&["run", "--config", config.to_str().unwrap(), "--out", f.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (a, b) = (std::fs::read(&files[0]).unwrap(), std::fs::read(&files[1]).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn list_anchors_resolve_to_public_functions() {
    let out = cohproj(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() >= 12);
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("src");
    for line in lines {
        let anchor = line.split('[').nth(1).and_then(|s| s.split(']').next()).expect("anchor in brackets");
        let mut parts: Vec<&str> = anchor.split("::").collect();
        let func = parts.pop().unwrap();
        let base = parts.iter().fold(src.clone(), |p, m| p.join(m));
        let file = [base.with_extension("rs"), base.join("mod.rs")].into_iter().find(|p| p.exists());
        let file = file.unwrap_or_else(|| panic!("no module file for {anchor}"));
        let body = std::fs::read_to_string(file).unwrap();
        assert!(body.contains(&format!("pub fn {func}(")), "{anchor} does not name a public function");
    }
}
