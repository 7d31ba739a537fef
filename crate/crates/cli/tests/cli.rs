use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SUBCOMMANDS: &[&str] = &[
    "sample",
    "kesten",
    "dist-check",
    "haagerup",
    "main-estimate",
    "moe",
    "product-bound",
    "certificate",
    "all",
];

fn moelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moelab"))
        .args(args)
        .env("MOELAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn help_matches_golden_files() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut names = vec![("moelab".to_owned(), vec!["--help"])];
    names.extend(
        SUBCOMMANDS
            .iter()
            .map(|s| (s.to_string(), vec![*s, "--help"])),
    );
    for (name, args) in names {
        let out = moelab(&args);
        assert!(out.status.success(), "{name} --help failed");
        let text = stdout(&out);
        let file = golden_dir().join(format!("{name}.txt"));
        if update {
            std::fs::create_dir_all(golden_dir()).unwrap();
            std::fs::write(&file, &text).unwrap();
            continue;
        }
        let expected = std::fs::read_to_string(&file)
            .unwrap_or_else(|_| panic!("missing {}; rerun with UPDATE_GOLDEN=1", file.display()));
        assert_eq!(text, expected, "help for {name} changed");
    }
}

#[test]
fn help_lists_defaults() {
    let text = stdout(&moelab(&["kesten", "--help"]));
    for needle in [
        "[default: 2]",
        "[default: 64,128,256,512]",
        "[default: 0..4]",
        "[default: json]",
    ] {
        assert!(text.contains(needle), "missing {needle}");
    }
}

#[test]
fn kesten_appends_one_record_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let args = [
        "kesten",
        "--k",
        "2",
        "--n",
        "16,24,32",
        "--seeds",
        "0..4",
        "--out",
        path_arg(&out),
    ];
    assert_eq!(moelab(&args).status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 15);
    assert_eq!(moelab(&args).status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 30);
}

#[test]
fn output_is_byte_identical_without_timestamps() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = moelab(&[
            "main-estimate",
            "--k",
            "3",
            "--n",
            "12",
            "--seeds",
            "0..1",
            "--starts",
            "3",
            "--max-iters",
            "40",
            "--no-timestamps",
            "--out",
            path_arg(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read(&out).unwrap()
    };
    let a = run("a.jsonl");
    let b = run("b.jsonl");
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let first: serde_json::Value =
        serde_json::from_slice(a.split(|&c| c == b'\n').next().unwrap()).unwrap();
    assert!(first["started_at"].is_null());
    assert_eq!(first["params"]["config"]["command"], "main-estimate");
}

#[test]
fn timestamps_are_written_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    assert!(moelab(&["sample", "--n", "4", "--out", path_arg(&out)])
        .status
        .success());
    let line = std::fs::read_to_string(&out).unwrap();
    let v: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert!(v["started_at"].is_string());
    assert!(v["finished_at"].is_string());
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["moe", "--k", "0"],
        vec!["frobnicate"],
        vec!["kesten", "--bogus"],
        vec!["kesten", "--n", "32,16"],
        vec!["kesten", "--seeds", "4..1"],
        vec!["dist-check", "--k", "2", "--words", "3"],
    ] {
        let o = moelab(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn certificate_example_prints_a_verdict() {
    let o = moelab(&[
        "certificate",
        "--k",
        "4",
        "--n",
        "16",
        "--seed",
        "0",
        "--starts",
        "2",
        "--max-iters",
        "30",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("== certificate =="));
    assert!(text.contains("violation"));
    assert!(text.contains("false"));
}

#[test]
fn failed_assertion_exits_1() {
    // A negative slack makes the triple-norm ceiling unreachable.
    let o = moelab(&[
        "haagerup",
        "--k",
        "3",
        "--n",
        "256",
        "--matrices",
        "1",
        "--seeds",
        "0",
        "--slack-256=-0.9",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let out = dir.path().join("r.jsonl");
    std::fs::write(
        &cfg,
        r#"{"k": 3, "n": 8, "seeds": "0..1", "colour": "red"}"#,
    )
    .unwrap();

    let o = moelab(&[
        "product-bound",
        "--config",
        path_arg(&cfg),
        "--out",
        path_arg(&out),
        "--no-timestamps",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("unknown config key `colour`"));
    let o = moelab(&[
        "product-bound",
        "--config",
        path_arg(&cfg),
        "--k",
        "2",
        "--out",
        path_arg(&out),
        "--no-timestamps",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let lines: Vec<serde_json::Value> = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0]["params"]["k"], 3);
    assert_eq!(lines[0]["params"]["n"], 8);
    assert_eq!(lines[2]["params"]["k"], 2);
    assert_eq!(
        lines[2]["params"]["config"]["seeds"],
        serde_json::json!([0, 1])
    );
}

#[test]
fn empty_config_keeps_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, "{}").unwrap();
    let o = moelab(&["sample", "--config", path_arg(&cfg)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("  64  "));
}

#[test]
fn malformed_config_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, "{\n  \"k\": 8,\n  oops\n}\n").unwrap();
    let o = moelab(&["sample", "--config", path_arg(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3, column 3"), "{}", stderr(&o));
}

#[test]
fn csv_export_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let o = moelab(&[
        "kesten",
        "--n",
        "8,16",
        "--seeds",
        "0..2",
        "--format",
        "both",
        "--out",
        path_arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("r.kesten.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    assert!(csv
        .lines()
        .next()
        .unwrap()
        .starts_with("experiment_name,param.config,param.k,param.n,param.seed"));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 6);
}

#[test]
fn invalid_thread_variable_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_moelab"))
        .args(["sample", "--n", "4"])
        .env("MOELAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
