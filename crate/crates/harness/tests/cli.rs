use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mixtest_harness::distfile::read_json;
use mixtest_harness::trials::CSV_COLUMNS;
use mixtest_harness::{InstanceSpec, TrialRun};
use tempfile::TempDir;

fn mixtest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixtest"))
        .args(args)
        .env("MIXTEST_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Generates an instance and writes its components to separate files.
fn instance_files(dir: &TempDir, kind: &str, k: Option<usize>) -> (PathBuf, InstanceSpec) {
    let out = dir.path().join(format!("{kind}.json"));
    let mut args = vec!["gen", "--kind", kind, "--n", "200", "--eps", "0.3", "--seed", "4", "--out"];
    args.push(path_str(&out));
    let ks = k.map(|k| k.to_string());
    if let Some(ks) = &ks {
        args.extend(["--k", ks.as_str()]);
    }
    let o = mixtest(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let spec: InstanceSpec = read_json(&out).unwrap();
    for (name, d) in [("p", Some(&spec.p)), ("q1", spec.q1.as_ref()), ("q2", spec.q2.as_ref())] {
        let text = serde_json::to_string(d.unwrap()).unwrap();
        std::fs::write(dir.path().join(format!("{kind}_{name}.json")), text).unwrap();
    }
    (out, spec)
}

fn part(dir: &TempDir, kind: &str, name: &str) -> String {
    dir.path().join(format!("{kind}_{name}.json")).display().to_string()
}

#[test]
fn identity_exit_codes() {
    let dir = TempDir::new().unwrap();
    for (kind, code) in [("mixture", 0), ("far", 1)] {
        instance_files(&dir, kind, None);
        let (p, q1, q2) = (part(&dir, kind, "p"), part(&dir, kind, "q1"), part(&dir, kind, "q2"));
        let o = mixtest(&["identity", "--q1", &q1, "--q2", &q2, "--p", &p, "--eps", "0.3", "--seed", "9"]);
        assert_eq!(o.status.code(), Some(code), "{kind}");
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["accepted"], serde_json::Value::Bool(code == 0));
    }
}

#[test]
fn closeness_and_kflat_run() {
    let dir = TempDir::new().unwrap();
    instance_files(&dir, "mixture", Some(2));
    let (p, q1, q2) = (
        part(&dir, "mixture", "p"),
        part(&dir, "mixture", "q1"),
        part(&dir, "mixture", "q2"),
    );
    let o = mixtest(&["closeness", "--p", &p, "--q1", &q1, "--q2", &q2, "--eps", "0.3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    // The reference for the flat-noise tester is q1, the noise q2.
    let o = mixtest(&["kflat", "--q", &q1, "--p", &p, "--k", "2", "--eps", "0.45"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    let m = path_str(&missing);
    let o = mixtest(&["identity", "--q1", m, "--q2", m, "--p", m, "--eps", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.json"));

    instance_files(&dir, "mixture", None);
    let p = part(&dir, "mixture", "p");
    let o = mixtest(&["identity", "--q1", &p, "--q2", &p, "--p", &p, "--eps", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = mixtest(&["identity", "--q1", &p]);
    assert_eq!(o.status.code(), Some(2));
    let out = dir.path().join("x.csv");
    let o = mixtest(&[
        "bench", "--tester", "nope", "--config", &p, "--trials", "1", "--seed", "0", "--out", path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_writes_csv_and_json() {
    let dir = TempDir::new().unwrap();
    let (cfg, _) = instance_files(&dir, "mixture", None);
    let csv_out = dir.path().join("run.csv");
    let o = mixtest(&[
        "bench", "--tester", "identity", "--config", path_str(&cfg), "--trials", "8", "--seed", "3", "--out",
        path_str(&csv_out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv_out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), CSV_COLUMNS.len());
    assert_eq!(row[0], "identity");
    assert_eq!(row[1], "200");
    assert_eq!(row[2], "");
    assert_eq!(row[5], "8");
    assert_eq!(row[8], "3");

    let json_out = dir.path().join("run.json");
    let o = mixtest(&[
        "bench", "--tester", "identity", "--config", path_str(&cfg), "--trials", "8", "--seed", "3", "--out",
        path_str(&json_out),
    ]);
    assert!(o.status.success());
    let run: TrialRun = read_json(&json_out).unwrap();
    assert_eq!(run.records.len(), 8);
    assert!(run.records.iter().enumerate().all(|(i, r)| r.index == i));
    let total: u64 = run.records.iter().map(|r| r.samples_used).sum();
    assert_eq!(run.report.samples_used, total);
    assert_eq!(row[4], total.to_string());
}

#[test]
fn bench_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (cfg, _) = instance_files(&dir, "far", None);
    let runs: Vec<String> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("r{i}.json"));
            let o = mixtest(&[
                "bench", "--tester", "identity", "--config", path_str(&cfg), "--trials", "6", "--seed", "17",
                "--out", path_str(&out),
            ]);
            assert!(o.status.success());
            let mut run: TrialRun = read_json(&out).unwrap();
            run.report.wall_time = 0.0;
            serde_json::to_string(&run).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn gen_lower_bound_instance() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("lb.json");
    let o = mixtest(&["gen", "--kind", "lb", "--n", "10000", "--eps", "0.3", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let spec: InstanceSpec = read_json(&out).unwrap();
    let inst = spec.resolve().unwrap();
    assert_eq!(inst.n(), 10000);
    assert!(inst.q2.unwrap().pmf().iter().all(|&x| (x - 1e-4).abs() < 1e-15));
}
