use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn amuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amuse")).args(args).env("RUST_BACKTRACE", "0").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = amuse(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_owned()
}

#[test]
fn simulate_and_report_write_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("traces");
    let run = dir.path().join("run");
    ok(&["generate", "--users", "4", "--days", "6", "--seed", "3", "--out", s(&traces)]);
    ok(&["simulate", "--trace", s(&traces), "--algorithm", "all", "--out", s(&run)]);
    ok(&["report", "--in", s(&run)]);

    assert!(header(&run.join("per_user.csv")).starts_with("algorithm,user,group,monthly_budget,utility,spend,offloaded"));
    for name in ["cdf_utility.csv", "cdf_spend.csv", "cdf_offload.csv"] {
        assert_eq!(header(&run.join(name)), "algorithm,ratio,fraction");
    }
    assert_eq!(header(&run.join("groups.csv")), "algorithm,group,users,utility,spend,offloaded");
    let per_user = std::fs::read_to_string(run.join("per_user.csv")).unwrap();
    assert_eq!(per_user.lines().count(), 1 + 3 * 4);
    for line in per_user.lines().skip(1).filter(|l| l.starts_with("amuse,")) {
        assert!(line.ends_with(",1,1,1"), "{line}");
    }
    // 6 significant digits at most
    for field in per_user.lines().skip(1).flat_map(|l| l.split(',').skip(3)) {
        let digits = field.chars().filter(char::is_ascii_digit).collect::<String>();
        assert!(digits.trim_start_matches('0').trim_end_matches('0').len() <= 6, "{field}");
    }
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["reference"], "amuse");
    assert_eq!(summary["algorithms"].as_array().unwrap().len(), 3);
    assert_eq!(summary["algorithms"][0]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("traces");
    ok(&["generate", "--users", "2", "--days", "5", "--out", s(&traces)]);
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        ok(&["simulate", "--trace", s(&traces), "--algorithm", "amuse", "--seed", "9", "--out", s(&out)]);
        reports.push(std::fs::read(out.join("amuse.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn delayed_deadline_and_extension_flags() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let trace = fixture("three_days.csv");
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "window = 2\nmonthly_budget = 20.0\n").unwrap();
    ok(&["simulate", "--trace", s(&trace), "--algorithm", "delayed", "--deadline", "3", "--config", s(&config), "--out", s(&run)]);
    ok(&["simulate", "--trace", s(&trace), "--algorithm", "amuse", "--extension", "--config", s(&config), "--out", s(&run)]);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.join("amuse.json")).unwrap()).unwrap();
    assert_eq!(report["users"][0]["user"], "three_days");
    assert_eq!(report["users"][0]["monthly_budget"], 20.0);
    assert_eq!(report["users"][0]["days"].as_array().unwrap().len(), 1);
}

#[test]
fn solve_reports_optimum_and_slack() {
    for solver in ["lagrange", "brute-force"] {
        let out: serde_json::Value = serde_json::from_str(&ok(&["solve", "--problem", s(&fixture("problem.json")), "--solver", solver])).unwrap();
        assert_eq!(out["objective"], 6.0);
        assert_eq!(out["feasible"], true);
        assert_eq!(out["assignment"][0]["item"], 1);
        assert_eq!(out["assignment"][1]["item"], 0);
        let slack: Vec<f64> = out["slack"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert!((slack[0] - 0.1).abs() < 1e-12 && slack[1].abs() < 1e-12, "{slack:?}");
    }
}

#[test]
fn predict_emits_one_row_per_period() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let run = amuse(&["predict", "--trace", s(&fixture("three_days.csv")), "--window", "2", "--out", s(&out)]);
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("accuracy"));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "day,period,w,realized,accurate");
    assert_eq!(text.lines().count(), 1 + 24);
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let w: f64 = f[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&w));
        assert_eq!(f[4] == "1", (w > 0.5) == (f[3] == "1"));
    }
}

#[test]
fn ratectl_series_settles_on_target() {
    let text = ok(&["ratectl", "--target-kbps", "200", "--link", "ethernet", "--duration", "20"]);
    assert_eq!(text.lines().next().unwrap(), "time,throughput_kbps,adv_win_bytes");
    let tail: Vec<f64> = text
        .lines()
        .skip(1)
        .filter_map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[0] > 10.0).then_some(f[1])
        })
        .collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    assert!((mean - 200.0).abs() < 20.0, "{mean}");
}

#[test]
fn malformed_trace_fails_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "day,period,location,wifi,app,usage\n0,0,home,1,email,-5\n").unwrap();
    let run = amuse(&["simulate", "--trace", s(&bad), "--algorithm", "amuse", "--out", s(dir.path())]);
    assert!(!run.status.success());
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("line 2") && err.contains("bad.csv"), "{err}");
    let run = amuse(&["simulate", "--trace", s(&bad), "--algorithm", "fastest", "--out", s(dir.path())]);
    assert!(!run.status.success());
}
