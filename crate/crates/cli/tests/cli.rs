use std::fs;
use std::path::Path;
use std::process::Command;

const CONFIG: &str = r#"
sets = 2
seed = 99

[photon]
duration = 2.0

[intensity]
frames = 2
rows = 6
cols = 51
"#;

fn sorkin(dir: &Path, args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_sorkin"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn simulate_then_analyze_raw_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("c.toml"), CONFIG).unwrap();

    let printed = sorkin(
        dir,
        &[
            "simulate",
            "--config",
            "c.toml",
            "--out",
            "a",
            "--write-raw",
        ],
    );
    assert!(printed.contains("photon regime, 2 sets"));
    sorkin(
        dir,
        &[
            "analyze", "--config", "c.toml", "--out", "b", "--raw", "a/raw",
        ],
    );
    for f in [
        "sets.csv",
        "kappa.csv",
        "summary.json",
        "hierarchy_curves.csv",
    ] {
        assert_eq!(
            fs::read(dir.join("a").join(f)).unwrap(),
            fs::read(dir.join("b").join(f)).unwrap(),
            "{f}"
        );
    }

    let check = sorkin(
        dir,
        &[
            "check-alignment",
            "--config",
            "c.toml",
            "--raw",
            "a/raw",
            "--set",
            "1",
        ],
    );
    assert_eq!(check.lines().count(), 2);
    let report = sorkin(dir, &["report", "--summary", "a/summary.json"]);
    assert!(report.contains("intensity regime"));
}

#[test]
fn theory_writes_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let printed = sorkin(tmp.path(), &["theory", "--out", "t", "--points", "11"]);
    assert!(printed.contains("I^(2)_5[ABCDE]"));
    let csv = fs::read_to_string(tmp.path().join("t/theory_curves.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8 * 11);
}

#[test]
fn bad_config_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.toml"), "sets = 0\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sorkin"))
        .current_dir(tmp.path())
        .args(["simulate", "--config", "bad.toml"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least one set"));
}
