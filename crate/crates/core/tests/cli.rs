use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use skipsense::reporting::{read_series_csv, read_summary_csv, SERIES_HEADER, SUMMARY_HEADER};

const SMALL: &str = "traffic = \"gpd\"\nchannels = 5\npolicy = \"proposed\"\nhorizon_ms = 5000\nruns = 3\nseed = 11\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skipsense"))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn binary")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn compare_writes_one_series_per_policy_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    ok(&run(&["compare", "--config", s(&cfg), "--out", s(&out_dir)]));

    for name in ["proposed", "ots", "sbla", "ql", "rand"] {
        let path = out_dir.join(format!("series_{name}.csv"));
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), SERIES_HEADER.join(","));
        let series = read_series_csv(&path).unwrap();
        assert_eq!(series.len(), 100);
    }
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next().unwrap(), SUMMARY_HEADER.join(","));
    let rows = read_summary_csv(&out_dir.join("summary.csv")).unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.n_runs == 3 && r.seed == 11 && r.n_channels == 5));
}

#[test]
fn run_writes_only_the_configured_policy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("proposed", "ql"));
    let out_dir = dir.path().join("out");
    ok(&run(&["run", "--config", s(&cfg), "--out", s(&out_dir)]));
    let mut names: Vec<_> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["series_ql.csv", "summary.csv"]);
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&run(&["compare", "--config", s(&cfg), "--out", s(&a)]));
    ok(&run(&["compare", "--config", s(&cfg), "--out", s(&b)]));
    for name in ["series_proposed.csv", "series_rand.csv", "summary.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn overrides_take_precedence_over_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    ok(&run(&["run", "--config", s(&cfg), "--out", s(&out_dir), "--seed", "5", "--runs", "2"]));
    let rows = read_summary_csv(&out_dir.join("summary.csv")).unwrap();
    assert_eq!((rows[0].seed, rows[0].n_runs), (5, 2));
}

#[test]
fn single_point_sweep_matches_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (cmp, sweep) = (dir.path().join("cmp"), dir.path().join("sweep"));
    ok(&run(&["compare", "--config", s(&cfg), "--out", s(&cmp)]));
    ok(&run(&["sweep-channels", "--config", s(&cfg), "--out", s(&sweep), "--channels", "5"]));
    for name in ["series_proposed.csv", "series_ots.csv", "summary.csv"] {
        assert_eq!(
            fs::read(cmp.join(name)).unwrap(),
            fs::read(sweep.join("ch5").join(name)).unwrap(),
            "{name}"
        );
    }
    assert_eq!(
        fs::read(cmp.join("summary.csv")).unwrap(),
        fs::read(sweep.join("summary.csv")).unwrap()
    );
}

#[test]
fn default_sweep_covers_four_to_ten_channels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("runs = 3", "runs = 1").replace("5000", "1000"));
    let out_dir = dir.path().join("out");
    ok(&run(&["sweep-channels", "--config", s(&cfg), "--out", s(&out_dir)]));
    let rows = read_summary_csv(&out_dir.join("summary.csv")).unwrap();
    assert_eq!(rows.len(), 35);
    for n in 4..=10 {
        assert_eq!(rows.iter().filter(|r| r.n_channels == n).count(), 5);
        assert!(out_dir.join(format!("ch{n}")).join("series_rand.csv").exists());
    }
}

#[test]
fn invalid_config_exits_nonzero_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("traffic = \"gpd\"\nchannels = 5\nsense_ms = 12\n", "sense_ms"),
        ("traffic = \"gpd\"\nchannels = 5\npd = 0.4\npf = 0.5\n", "pf"),
        ("traffic = \"gpd\"\nchannels = 5\nwhat = 1\n", "what"),
        ("channels = 5\n", "traffic"),
    ];
    for (text, key) in cases {
        let cfg = write_config(dir.path(), text);
        let out = run(&["run", "--config", s(&cfg), "--out", s(&dir.path().join("x"))]);
        assert!(!out.status.success(), "{text}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(key), "{key}: {err}");
    }
    let out = run(&["run", "--config", s(&dir.path().join("missing.toml"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.toml"));
}

#[test]
fn bad_channel_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = run(&["sweep-channels", "--config", s(&cfg), "--out", s(&dir.path().join("o")), "--channels", "9..4"]);
    assert!(!out.status.success());
}
