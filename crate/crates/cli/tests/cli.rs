use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use widthlab_cli::config;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn widthlab(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_widthlab"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("WIDTHLAB_THREADS", t),
        None => cmd.env_remove("WIDTHLAB_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn run_with(kind: &str, text: &str, dir: &Path) -> Output {
    let cfg = dir.join("config.toml");
    fs::write(&cfg, text).unwrap();
    widthlab(
        &[kind, "--config", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()],
        None,
    )
}

#[test]
fn riemann_recovers_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("riemann.toml");
    let out = widthlab(&["riemann", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("riemann.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("mu_true,mu_recovered,error"));
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cols[0] - cols[1]).abs() < 1e-10);
    }
    assert!(!csv.contains('\r'));
}

#[test]
fn missing_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("fixed-b.toml")).unwrap().replace("d = 2\n", "");
    let out = run_with("fixed-b", &text, dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`d`"));
}

#[test]
fn unknown_key_and_missing_section_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with("riemann", "[riemann]\nmus = [0.0]\nspeed = 3\n", dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("speed"));
    let out = run_with("fixed-b", "[riemann]\nmus = [0.0]\n", dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[fixed-b]"));
}

#[test]
fn invalid_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("fixed-b.toml"))
        .unwrap()
        .replace("hs = [0.1, 0.05, 0.025]", "hs = [0.2]");
    assert_eq!(run_with("fixed-b", &text, dir.path()).status.code(), Some(1));
    let text = fs::read_to_string(configs().join("fixed-b.toml")).unwrap().replace("s_minus = 1", "s_minus = 1.5");
    assert_eq!(run_with("fixed-b", &text, dir.path()).status.code(), Some(1));
}

#[test]
fn failed_assertion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("rb-elliptic.toml"))
        .unwrap()
        .replace("min_decay_ratio = 2.0", "min_decay_ratio = 1e6");
    let out = run_with("rb-elliptic", &text, dir.path());
    assert_eq!(out.status.code(), Some(2));
    let report = fs::read_to_string(dir.path().join("out/rb-elliptic_report.txt")).unwrap();
    assert!(report.contains("[FAIL] geometric qoi decay"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(widthlab(&["fixed-b"], None).status.code(), Some(1));
    assert_eq!(widthlab(&["no-such-experiment"], None).status.code(), Some(1));
    let bad = widthlab(&["riemann", "--config", "/nonexistent/config.toml"], None);
    assert_eq!(bad.status.code(), Some(1));
    let cfg = configs().join("riemann.toml");
    let threads = widthlab(&["riemann", "--config", cfg.to_str().unwrap(), "--out", "/tmp"], Some("zero"));
    assert_eq!(threads.status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = configs().join("riemann.toml");
    let out = widthlab(
        &["riemann", "--config", cfg.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let cfg = configs().join("fixed-b.toml");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        let out = widthlab(
            &["fixed-b", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()],
            Some(threads),
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["fixed-b.csv", "fixed-b_report.txt"] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
    let csv = fs::read_to_string(a.path().join("fixed-b.csv")).unwrap();
    assert!(csv.starts_with("h,n,epsilon,n_ent"));
    assert_eq!(csv.lines().count(), 4);
    let report = fs::read_to_string(a.path().join("fixed-b_report.txt")).unwrap();
    assert!(report.contains("implied (strict inequality, log factors omitted)"));
}

#[test]
fn shipped_configs_round_trip() {
    let mut count = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let parsed = config::parse(&text).unwrap();
        let again = config::serialize(&parsed).unwrap();
        assert_eq!(config::parse(&again).unwrap(), parsed, "{}", path.display());
        // key-by-key equality with the source text
        let original: toml::Table = text.parse().unwrap();
        let rewritten: toml::Table = again.parse().unwrap();
        assert_eq!(original, rewritten, "{}", path.display());
        count += 1;
    }
    assert_eq!(count, 8);
}
