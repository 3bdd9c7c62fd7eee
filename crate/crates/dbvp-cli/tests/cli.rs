use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dbvp"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn dbvp(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    fs::write(&p, text).unwrap();
    p
}

const SMALL_CYLINDER: &str = r#"
conditions = ["transmission", "maps"]

[geometry]
kind = "cylinder"
length = 6.0
cutoff = 5.0

[[geometry.fiber.lines]]
lambda = -1.5
mult = 1

[[geometry.fiber.lines]]
lambda = 1.5
mult = 1

[[geometry.fiber.lines]]
lambda = 0.0
mult = 2
"#;

#[test]
fn disk_intro_passes_every_check() {
    let o = dbvp(&["verify", "--config", config("disk_intro.toml").to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    let ladder: Vec<_> = rows.iter().filter(|x| &x[1] == "ladder").collect();
    assert_eq!(ladder.len(), 9);
    for (k, row) in ladder.iter().enumerate() {
        assert_eq!(row[5].parse::<i64>().unwrap(), k as i64);
        assert_eq!(&row[7], "true");
    }
    // the a = b shift is the trivial one
    let trivial = rows.iter().find(|x| &x[2] == "gaps:a=1.5;gaps:a=1.5").expect("a = b row");
    assert_eq!((&trivial[5], &trivial[6], &trivial[7]), ("0", "0", "true"));
}

#[test]
fn cap_run_records_the_gap_and_cobordism() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("artifacts");
    let o = dbvp(&["run", "--config", config("cap_gap.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let spec: Value = serde_json::from_str(&fs::read_to_string(out.join("spectrum.json")).unwrap()).unwrap();
    let aps = &spec["conditions"][0];
    assert_eq!(aps["classification"], "selfadjoint");
    assert!(aps["min_abs"].as_f64().unwrap() > 1.0);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("index_manifest.json")).unwrap()).unwrap();
    let checks = manifest["checks"].as_array().unwrap();
    for name in ["gap", "cobordism", "freed_half", "freed"] {
        assert!(checks.iter().any(|c| c["check"] == name && c["pass"] == true), "{name}");
    }
    assert!(out.join("results.csv").exists());

    let rep = dbvp(&["report", out.join("index_manifest.json").to_str().unwrap()]);
    assert_eq!(code(&rep), 0);
    assert!(stdout(&rep).contains("cobordism"));
}

#[test]
fn cylinder_reports_symmetric_not_selfadjoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CYLINDER);
    let o = dbvp(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("maps (maps): dim 2, elliptic, symmetric, not selfadjoint"), "{text}");
    assert!(text.contains("dim ker A = 4"));
}

#[test]
fn index_json_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CYLINDER);
    let run = || dbvp(&["index", "--config", cfg.to_str().unwrap(), "--format", "json"]).stdout;
    let a = run();
    assert_eq!(a, run());
    let v: Value = serde_json::from_slice(&a).unwrap();
    let maps = v["indices"].as_array().unwrap().iter().find(|r| r["condition"] == "maps").unwrap();
    assert_eq!(maps["index"], -2);
}

#[test]
fn report_of_an_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    for body in ["[]", r#"{"checks": []}"#] {
        let p = dir.path().join("m.json");
        fs::write(&p, body).unwrap();
        let o = dbvp(&["report", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{body}");
        assert_eq!(stdout(&o).lines().count(), 1, "header only");
    }
}

#[test]
fn failed_computation_exits_one() {
    // the ladder only exists on the disk
    let o = dbvp(&["verify", "--config", config("cap_gap.toml").to_str().unwrap(), "--check", "ladder"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("ladder"));
}

#[test]
fn bad_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "conditions = [\"aps\"]\ncolour = 3\n[geometry]\nkind = \"disk\"\ncutoff = 5.0\n",
        "conditions = [\"nope\"]\n[geometry]\nkind = \"disk\"\ncutoff = 5.0\n",
        "checks = [\"bogus\"]\n[geometry]\nkind = \"disk\"\ncutoff = 5.0\n",
        "[geometry]\nkind = \"disk\"\ncutoff = 5.0\n",
        "conditions = [\"aps\"]\n[geometry]\nkind = \"disk\"\ncutoff = 5.0\n[solver]\nrank_tol = -1.0\n",
    ];
    for text in cases {
        let cfg = write_config(dir.path(), text);
        let o = dbvp(&["spectrum", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{text}");
    }
    assert_eq!(code(&dbvp(&["spectrum", "--format", "yaml", "--config", "x.toml"])), 2);
}

#[test]
fn missing_files_exit_three() {
    let o = dbvp(&["spectrum", "--config", "/nonexistent/exp.toml"]);
    assert_eq!(code(&o), 3);
    let o = dbvp(&["report", "/nonexistent/manifest.json"]);
    assert_eq!(code(&o), 3);
}
