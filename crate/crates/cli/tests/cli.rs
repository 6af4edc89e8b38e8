use std::path::PathBuf;
use std::process::{Command, Output};

fn udn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_udn")).args(args).output().expect("binary runs")
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const TOY: &str = r#"
seed = 1

[[hot_spots]]
center = [0.0, 0.0]
attraction = 40

[deployment]
per_spot = [2]
"#;

const PAIR: &str = r#"
seed = 2

[[hot_spots]]
center = [0.0, 0.0]
attraction = 3000

[[hot_spots]]
center = [4.0, 0.0]
attraction = 2000

[deployment]
theta = 15
"#;

#[test]
fn run_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(&dir, "toy.toml", TOY);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = udn(&["run", "--scenario", sc.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("spot,n_sbs,"));
    assert!(lines[2].starts_with("system,2,"));
}

#[test]
fn validate_reports_spot_count() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(&dir, "pair.toml", PAIR);
    let o = udn(&["validate", "--scenario", sc.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("2 hot spots"));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(&dir, "bad.toml", &TOY.replace("seed = 1", "seed = 1\nzeta = 1.5"));
    let o = udn(&["validate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("zeta"));

    let unknown = write(&dir, "unknown.toml", &format!("{TOY}\n[radio]\nbogus = 1\n"));
    assert_eq!(udn(&["validate", "--scenario", unknown.to_str().unwrap()]).status.code(), Some(2));

    let sc = write(&dir, "toy.toml", TOY);
    let o = udn(&["sweep", "--scenario", sc.to_str().unwrap(), "--gamma0", "5:1:1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = udn(&["simulate", "--scenario", sc.to_str().unwrap(), "--oracle", "weather"]);
    assert_eq!(o.status.code(), Some(2));

    assert_eq!(udn(&["validate", "--scenario", "/nonexistent.toml"]).status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{TOY}\n[euler]\nmax_iter = 1\nfp_tol = 1e-15\n");
    let sc = write(&dir, "stiff.toml", &text);
    let o = udn(&["run", "--scenario", sc.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn oracle_failures_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(&dir, "toy.toml", TOY);
    let o = udn(&["simulate", "--scenario", sc.to_str().unwrap(), "--oracle", "distance", "--samples", "50"]);
    assert_eq!(o.status.code(), Some(4));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.starts_with("check,analytic,simulated,stderr,tolerance,result"));
    assert!(out.contains(",fail"));
}

#[test]
fn sweep_follows_grid_order() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(&dir, "pair.toml", PAIR);
    let o = udn(&[
        "--jobs", "1", "sweep", "--scenario", sc.to_str().unwrap(), "--gamma0", "1:2:0.5", "--theta", "10,20",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let keys: Vec<(String, String)> = text
        .lines()
        .skip(1)
        .filter(|l| l.contains(",system,"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    let want: Vec<(String, String)> = ["1", "1.5", "2"]
        .iter()
        .flat_map(|g| ["10", "20"].iter().map(move |t| (g.to_string(), t.to_string())))
        .collect();
    assert_eq!(keys, want);
}

#[test]
fn seed_flag_changes_generated_spots() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(&dir, "gen.toml", "seed = 1\n[generator]\nn_p = 3\n[deployment]\ntheta = 15\n");
    let p = sc.to_str().unwrap();
    let run = |seed: &str| udn(&["run", "--scenario", p, "--seed", seed, "--force-n-int", "0"]).stdout;
    assert_eq!(run("4"), run("4"));
    assert_ne!(run("4"), run("5"));
}
