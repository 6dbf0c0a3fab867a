use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn semnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semnav"))
        .current_dir(root())
        .env_remove("XPLORER_PLATFORM_ID")
        .env_remove("CONTEXT_SERVER_URL")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn md5_line(text: &str) -> &str {
    text.lines().find(|l| l.starts_with("MD5: ")).expect("MD5 line")
}

#[test]
fn resolve_reports_node_and_step() {
    let o = semnav(&["resolve", "go to lab_cb204"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("node 5 / step 2"), "{}", stdout(&o));

    let o = semnav(&["--format", "json-lines", "resolve", "go to lab_cb204"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!((v["node_id"].as_i64(), v["step"].as_i64()), (Some(5), Some(2)));
    assert_eq!(v["method"], "L3a_deterministic");
}

#[test]
fn resolve_with_digest_uses_the_preference() {
    let o = semnav(&[
        "--digest",
        "fixtures/memory/post_session_a/digest.json",
        "resolve",
        "Take me somewhere I can sit and relax",
    ]);
    assert!(stdout(&o).starts_with("node 9 / step 0"), "{}", stdout(&o));
    let o = semnav(&["resolve", "Take me somewhere I can sit and relax"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("escalat"), "{}", stdout(&o));
}

#[test]
fn stats_print_the_reported_figures() {
    let o = semnav(&["stats", "clopper-pearson", "33", "33"]);
    assert_eq!(stdout(&o).trim(), "[0.894, 1.000]");
    let o = semnav(&["stats", "fisher", "28", "5", "8", "0"]);
    assert_eq!(stdout(&o).trim(), "p = 0.563");
}

#[test]
fn refresh_twice_reports_no_diff() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().join("logs");
    let mem = dir.path().join("mem");
    let (logs_s, mem_s) = (logs.to_str().unwrap(), mem.to_str().unwrap());
    let run = semnav(&["--frozen-clock", "--out-dir", logs_s, "run-session", "fixtures/scenarios/seed.json"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let refresh = || semnav(&["refresh-memory", "--logs", logs_s, "--memory-dir", mem_s, "--platforms", "xplorer-c"]);
    let first = stdout(&refresh());
    let second = stdout(&refresh());
    assert!(!first.contains("no diff"));
    assert!(second.contains("no diff"), "{second}");
    assert_eq!(md5_line(&first), md5_line(&second));
    let fixture = std::fs::read(root().join("fixtures/memory/initial/digest.json")).unwrap();
    assert_eq!(std::fs::read(mem.join("digest.json")).unwrap(), fixture);
}

#[test]
fn exit_codes_classify_failures() {
    assert_eq!(semnav(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(semnav(&["stats", "clopper-pearson", "3"]).status.code(), Some(2));
    assert_eq!(semnav(&["--graph", "/nonexistent/graph.geojson", "resolve", "x"]).status.code(), Some(3));
    assert_eq!(semnav(&["run-session", "/nonexistent/script.json"]).status.code(), Some(3));
    assert_eq!(semnav(&["stats", "clopper-pearson", "5", "3"]).status.code(), Some(3));

    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let o = semnav(&["serve-bridge", "--bind", &addr, "--duration-s", "1"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn session_output_as_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = semnav(&[
        "--frozen-clock",
        "--format",
        "json-lines",
        "--out-dir",
        out,
        "run-session",
        "fixtures/scenarios/session_c_c.json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).expect("each line is JSON"))
        .collect();
    assert!(lines.len() >= 3);
    assert!(dir.path().join("session_c_xplorer-c.jsonl").exists());
}

#[test]
fn concurrent_run_checks_integrity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = semnav(&[
        "--frozen-clock",
        "--out-dir",
        out,
        "run-concurrent",
        "fixtures/scenarios/session_c_b.json",
        "fixtures/scenarios/session_c_c.json",
        "--check-sequential",
    ]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    for needle in ["same digest: yes", "platform pure: yes", "all correct: yes", "sequential vs concurrent: identical"] {
        assert!(text.contains(needle), "{needle}\n{text}");
    }
}
