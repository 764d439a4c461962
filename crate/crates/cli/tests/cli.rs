use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn zonoid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zonoid")).args(args).output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Short engine stream with its truth sidecar.
fn synth(dir: &Path, steps: usize) -> (PathBuf, PathBuf) {
    let cfg = dir.join("engine.json");
    fs::write(&cfg, json!({ "n_steps": steps, "seed": 7 }).to_string()).unwrap();
    let (data, truth) = (dir.join("data.jsonl"), dir.join("truth.jsonl"));
    ok(&zonoid(&["synth-engine", "--config", s(&cfg), "--out", s(&data), "--truth", s(&truth)]));
    (data, truth)
}

fn summary(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn synth_is_deterministic() {
    let dir = workdir("synth_det");
    let (a, _) = synth(&dir, 30);
    let first = fs::read(&a).unwrap();
    let (b, _) = synth(&dir, 30);
    assert_eq!(first, fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(first).unwrap().lines().count(), 30);
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = workdir("bad_inputs");
    let (data, _) = synth(&dir, 5);
    let cfg = dir.join("broken.json");
    fs::write(&cfg, "{ \"algorithm\": ").unwrap();
    let out = dir.join("t.jsonl");
    let r = zonoid(&["estimate", "--config", s(&cfg), "--data", s(&data), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let r = zonoid(&["estimate", "--data", s(&dir.join("missing.jsonl")), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let r = zonoid(&["estimate", "--data", s(&data), "--out", s(&out), "--algo", "nope"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn estimators_keep_truth_and_report_compares() {
    let dir = workdir("estimate_report");
    let (data, truth) = synth(&dir, 40);
    let mut traj = Vec::new();
    for algo in ["cazi", "pazi"] {
        let out = dir.join(format!("{algo}.jsonl"));
        let r = zonoid(&["estimate", "--data", s(&data), "--out", s(&out), "--algo", algo, "--truth", s(&truth)]);
        ok(&r);
        let sum = summary(&r);
        assert_eq!(sum["algorithm"], algo);
        assert_eq!(sum["steps"], 40);
        assert_eq!(sum["truth_contained"], true, "{algo}: {sum}");
        traj.push(out);
    }
    let fss = dir.join("fss.jsonl");
    ok(&zonoid(&["oracle", "--data", s(&data), "--out", s(&fss)]));
    let (csv, boundary) = (dir.join("report.csv"), dir.join("boundary.jsonl"));
    ok(&zonoid(&[
        "report", "--cazi", s(&traj[0]), "--pazi", s(&traj[1]), "--fss", s(&fss), "--truth", s(&truth), "--out", s(&csv),
        "--boundary", s(&boundary),
    ]));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,volume_cazi,volume_pazi,area_fss,fss_in_cazi,fss_in_pazi,truth_in_cazi,truth_in_pazi"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 40);
    for row in &rows {
        let area: f64 = row[3].parse().unwrap();
        assert!(row[1].parse::<f64>().unwrap() >= area);
        assert!(row[2].parse::<f64>().unwrap() >= area);
        assert!(row[4..].iter().all(|c| *c == "true"), "{row:?}");
    }
    assert_eq!(fs::read_to_string(&boundary).unwrap().lines().count(), 40);

    // A stream of a different length is rejected.
    let short = dir.join("short.jsonl");
    fs::write(&short, text_head(&fs::read_to_string(&fss).unwrap(), 10)).unwrap();
    let r = zonoid(&["report", "--cazi", s(&traj[0]), "--pazi", s(&traj[1]), "--fss", s(&short), "--out", s(&csv)]);
    assert_eq!(r.status.code(), Some(2));
}

fn text_head(text: &str, n: usize) -> String {
    text.lines().take(n).map(|l| format!("{l}\n")).collect()
}

#[test]
fn more_passes_never_grow_the_set() {
    let dir = workdir("passes");
    let (data, _) = synth(&dir, 40);
    let out = dir.join("t.jsonl");
    let r = zonoid(&["estimate", "--data", s(&data), "--out", s(&out), "--passes", "3"]);
    ok(&r);
    let sum = summary(&r);
    let v: Vec<f64> = sum["passes"].as_array().unwrap().iter().map(|p| p["final_volume"].as_f64().unwrap()).collect();
    assert_eq!(v.len(), 3);
    assert!(v[1] <= v[0] && v[2] <= v[1], "{v:?}");
}

fn record(k: usize, y: [f64; 2], phi: [[f64; 2]; 2], u: f64) -> Value {
    json!({
        "k": k,
        "y": y,
        "phi_l": phi,
        "phi_u": phi,
        "u_l": [-u, -u],
        "u_u": [u, u],
        "gamma": [0.0, 0.0],
    })
}

fn write_stream(path: &Path, records: &[Value]) {
    fs::write(path, records.iter().map(|r| format!("{r}\n")).collect::<String>()).unwrap();
}

#[test]
fn ill_conditioned_batch_is_skipped() {
    let dir = workdir("ill_conditioned");
    // Two nearly parallel regressors, θ = [1, 1]; rows of phi are parameters.
    let phi = [[1.0, 1.0], [1.0, 1.0 + 2e-7]];
    let data = dir.join("data.jsonl");
    write_stream(&data, &[record(0, [2.0, 2.0 + 2e-7], phi, 0.3)]);
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, json!({ "algorithm": "pazi", "empty_policy": "skip" }).to_string()).unwrap();
    let (out, lmi) = (dir.join("t.jsonl"), dir.join("lmi.jsonl"));
    let r = zonoid(&["estimate", "--config", s(&cfg), "--data", s(&data), "--out", s(&out), "--dump-lmi", s(&lmi)]);
    ok(&r);
    let sum = summary(&r);
    assert_eq!(sum["p2"]["infeasible"], 1, "{sum}");
    let step: Value = serde_json::from_str(fs::read_to_string(&out).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(step["status"], "fallback");
    assert_eq!(step["volume"].as_f64().unwrap(), 4.0);
}

#[test]
fn inconsistent_record_aborts_in_strict_mode() {
    let dir = workdir("strict");
    let phi = [[1.0, 0.0], [0.0, 1.0]];
    // y far outside anything the prior box [0, 2]² can produce.
    let data = dir.join("data.jsonl");
    write_stream(&data, &[record(0, [50.0, 50.0], phi, 0.1)]);
    let out = dir.join("t.jsonl");
    let r = zonoid(&["estimate", "--data", s(&data), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&r.stderr));

    let cfg = dir.join("cfg.json");
    fs::write(&cfg, json!({ "empty_policy": "skip" }).to_string()).unwrap();
    ok(&zonoid(&["estimate", "--config", s(&cfg), "--data", s(&data), "--out", s(&out)]));
}
