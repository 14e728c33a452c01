use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hypnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypnet")).args(args).output().expect("binary runs")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL_CERTIFY: &str = r#"
schema_version = 1
[acoustics]
rho = { minus = 1.0, plus = 4.0 }
speed = { minus = 1.0, plus = 2.0 }
grid = 128
epsilon = 0.0625
samples_x = 16
samples_xi = 16
"#;

#[test]
fn list_is_alphabetical_and_names_sections() {
    let out = hypnet(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with(' '))
        .filter_map(|l| l.split_whitespace().next())
        .collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert_eq!(names.len(), 6);
    assert!(text.contains("[acoustics]"));
    assert!(text.contains("[problem]"));
}

#[test]
fn negative_epsilon_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL_CERTIFY.replace("epsilon = 0.0625", "epsilon = -0.5"));
    let out = hypnet(&[
        "certify-symmetriser",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("acoustics.epsilon"), "{err}");
    // Rejected before any output is created.
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL_CERTIFY}\nsurprise = 1\n"));
    let out = hypnet(&["certify-symmetriser", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_exits_1() {
    let out = hypnet(&["solve", "--config", "/nonexistent/hypnet.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn certify_small_run_meets_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CERTIFY);
    let out_dir = dir.path().join("out");
    let out = hypnet(&[
        "certify-symmetriser",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("certification.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "min_eig_r0").unwrap();
    let mut rows = 0;
    for l in lines {
        let v: f64 = l.split(',').nth(col).unwrap().parse().unwrap();
        assert!(v >= 0.25 - 1e-9, "min eigenvalue {v}");
        rows += 1;
    }
    assert_eq!(rows, 16 * 16);
    let manifest = std::fs::read_to_string(out_dir.join("manifest.toml")).unwrap();
    assert!(manifest.contains("certification.csv"));
}

#[test]
fn manifest_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("friedrichs.toml");
    let run = |sub: &str| {
        let o = dir.path().join(sub);
        let out = hypnet(&[
            "friedrichs-demo",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            o.to_str().unwrap(),
            "--seed",
            "5",
            "--jobs",
            "1",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(o.join("manifest.toml")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    assert!(a.contains("seed = 5"));
}

#[test]
fn shipped_configs_parse_and_validate() {
    for (file, experiment) in [
        ("certify.toml", "certify-symmetriser"),
        ("garding.toml", "garding-probe"),
        ("space_jump.toml", "associate"),
        ("space_jump.toml", "solve"),
        ("time_jump.toml", "solve"),
        ("reduce.toml", "reduce-roundtrip"),
        ("friedrichs.toml", "friedrichs-demo"),
    ] {
        let out = hypnet(&[experiment, "--config", config(file).to_str().unwrap(), "--check"]);
        assert!(out.status.success(), "{file} {experiment}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn time_jump_solve_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypnet(&[
        "solve",
        "--config",
        config("time_jump.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("snapshot_00.csv").exists());
    assert!(dir.path().join("snapshot_01.csv").exists());
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("L2 error"));
}
