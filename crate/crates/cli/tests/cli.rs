use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use serde_json::Value;

fn pcx() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pcx"));
    c.env_remove("PCX_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    pcx().args(args).output().expect("spawn pcx")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const UNACCEPTABLE: &str = "1,3,5\n1/3,1,3\n1/5,1/3,1\n";
const ACCEPTABLE: &str = "1,2,3\n1/2,1,2\n1/3,1/2,1\n";

#[test]
fn solve_llsm_geometric_means() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.csv", UNACCEPTABLE);
    let o = run(&["solve", m.to_str().unwrap(), "--method", "llsm", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let w = &v["results"][0]["weights_product"]["w"];
    let expected = [15f64.cbrt(), 1.0, 1.0 / 15f64.cbrt()];
    for (k, e) in expected.iter().enumerate() {
        assert!((w[k].as_f64().unwrap() - e).abs() <= 1e-12);
    }
    assert!((expected[0] - 2.46621).abs() < 1e-5 && (expected[2] - 0.405480).abs() < 1e-6);
}

#[test]
fn solve_all_on_consistent_input() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(
        dir.path(),
        "c.json",
        r#"{"n": 3, "upper": [2, 8, 4], "labels": ["x", "y", "z"]}"#,
    );
    let o = run(&["solve", m.to_str().unwrap(), "--method", "all", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 4);
    let first: Vec<f64> = results[0]["weights"]["w"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    for r in results {
        for (k, x) in r["weights"]["w"].as_array().unwrap().iter().enumerate() {
            assert!((x.as_f64().unwrap() - first[k]).abs() <= 1e-8);
        }
    }
    let text = run(&["solve", m.to_str().unwrap(), "--method", "all"]);
    let text = stdout(&text);
    for name in ["LSM", "WLSM", "LLSM", "EVM", "x: 0.", "unique"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn reciprocity_violation_exits_1_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "bad.csv", "1,3,5\n0.5,1,3\n1/5,1/3,1\n");
    let o = run(&["solve", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.contains("line 2, column 1") && err.contains("reciprocal"),
        "{err}"
    );

    let o = run(&["solve", dir.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn non_convergence_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.csv", UNACCEPTABLE);
    let o = run(&["solve", m.to_str().unwrap(), "--max-iters", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn inconsistency_reports() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "u.csv", UNACCEPTABLE);
    let o = stdout(&run(&["inconsistency", bad.to_str().unwrap()]));
    assert!(
        o.contains("0.444444444444") && o.contains("unacceptable (> 1/3)"),
        "{o}"
    );
    assert!(o.contains("(1, 2, 3)"));

    let good = write(dir.path(), "a.csv", ACCEPTABLE);
    let o = stdout(&run(&[
        "inconsistency",
        good.to_str().unwrap(),
        "--all-triads",
    ]));
    assert!(
        o.contains("0.250000000000") && o.contains("verdict: acceptable"),
        "{o}"
    );
    assert!(o.contains("triads:"));

    let consistent = write(dir.path(), "c.csv", "1,2,4\n1/2,1,2\n1/4,1/2,1\n");
    let o = run(&["inconsistency", consistent.to_str().unwrap(), "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["global_value"].as_f64(), Some(0.0));
    assert_eq!(v["acceptable"].as_bool(), Some(true));
}

#[test]
fn csv_and_json_inputs_give_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "m.csv", UNACCEPTABLE);
    let json = write(dir.path(), "m.json", r#"{"n": 3, "upper": [3, 5, 3]}"#);
    for cmd in [
        vec!["solve", "--method", "all", "--json"],
        vec!["inconsistency", "--all-triads", "--json"],
        vec!["analyze", "--json"],
        vec!["verify", "--json"],
    ] {
        let with = |p: &Path| {
            let mut args = vec![cmd[0], p.to_str().unwrap()];
            args.extend(&cmd[1..]);
            run(&args).stdout
        };
        assert_eq!(with(&csv), with(&json), "{cmd:?}");
    }
}

#[test]
fn analyze_verdicts_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "a.csv", ACCEPTABLE);
    let o = stdout(&run(&["analyze", good.to_str().unwrap()]));
    assert!(
        o.contains("a0 = 3.330190676786") && o.contains("UNIQUE_GUARANTEED"),
        "{o}"
    );

    let bad = write(dir.path(), "u.csv", UNACCEPTABLE);
    let o = stdout(&run(&["analyze", bad.to_str().unwrap()]));
    assert!(
        o.contains("violation (1,3): 5 > 3.330191") && o.contains("UNKNOWN"),
        "{o}"
    );

    let o = stdout(&run(&["analyze", "--curves"]));
    let mut lines = o.lines();
    assert_eq!(lines.next(), Some("w,phi,psi"));
    let row = lines.find(|l| l.starts_with("1,")).expect("w = 1 row");
    let cols: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
    assert!((cols[1] - 0.267949).abs() < 5e-7 && (cols[2] - 3.732051).abs() < 5e-7);

    assert_eq!(run(&["analyze"]).status.code(), Some(1));
}

#[test]
fn verify_agrees_and_rejects_large_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.csv", UNACCEPTABLE);
    let o = run(&["verify", m.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("AGREE"));

    let c = write(
        dir.path(),
        "c.json",
        r#"{"n": 4, "upper": [2, 4, 8, 2, 4, 2]}"#,
    );
    let o = stdout(&run(&["verify", c.to_str().unwrap()]));
    assert!(o.contains("AGREE") && !o.contains("DISAGREE"), "{o}");

    let big = write(
        dir.path(),
        "b.json",
        r#"{"n": 5, "upper": [1,1,1,1,1,1,1,1,1,1]}"#,
    );
    let o = run(&["verify", big.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("4"), "{}", stderr(&o));
}

fn simulate(dir: &Path, tag: &str, extra: &[&str]) -> (Output, Vec<u8>, Vec<u8>) {
    let csv = dir.join(format!("{tag}.csv"));
    let json = dir.join(format!("{tag}.json"));
    let mut args = vec![
        "simulate",
        "--csv-out",
        csv.to_str().unwrap(),
        "--json-out",
        json.to_str().unwrap(),
    ];
    args.extend(extra);
    let o = run(&args);
    let read = |p: &Path| std::fs::read(p).unwrap_or_default();
    let (c, j) = (read(&csv), read(&json));
    (o, c, j)
}

#[test]
fn simulate_small_scale_is_unique_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--scale", "1-3", "--n", "4", "--trials", "100", "--seed", "1",
    ];
    let (o, csv1, json1) = simulate(dir.path(), "a", &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&json1).unwrap();
    assert_eq!(v["aggregate"]["fraction_unique"].as_f64(), Some(1.0));
    assert_eq!(String::from_utf8_lossy(&csv1).lines().count(), 101);

    let mut one = args.to_vec();
    one.extend(["--threads", "1"]);
    let (_, csv2, json2) = simulate(dir.path(), "b", &one);
    let mut four = args.to_vec();
    four.extend(["--threads", "4"]);
    let (_, csv3, json3) = simulate(dir.path(), "c", &four);
    assert_eq!(csv1, csv2);
    assert_eq!(csv2, csv3);
    assert_eq!(json1, json2);
    assert_eq!(json2, json3);
}

#[test]
fn simulate_config_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"scale": "1-5", "n": 3, "trials": 5, "seed": 9}"#,
    );
    let (o, csv, _) = simulate(
        dir.path(),
        "f",
        &["--config", cfg.to_str().unwrap(), "--trials", "7"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8_lossy(&csv).lines().count(), 8);
    assert!(stdout(&o).contains("scale 1-5, n = 3, trials = 7, seed = 9"));

    let (o, _, _) = simulate(dir.path(), "z", &["--trials", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let (o, _, _) = simulate(dir.path(), "s", &["--scale", "1-7"]);
    assert_eq!(o.status.code(), Some(1));
    let typo = write(dir.path(), "typo.json", r#"{"trails": 5}"#);
    let (o, _, _) = simulate(dir.path(), "t", &["--config", typo.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn seed_env_variable_is_the_default_seed() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["--scale", "1-9", "--n", "4", "--trials", "20"];
    let explicit = {
        let mut a = base.to_vec();
        a.extend(["--seed", "5"]);
        simulate(dir.path(), "x", &a).1
    };
    let csv = dir.path().join("e.csv");
    let json = dir.path().join("e.json");
    let o = pcx()
        .env("PCX_SEED", "5")
        .args([
            "simulate",
            "--csv-out",
            csv.to_str().unwrap(),
            "--json-out",
            json.to_str().unwrap(),
        ])
        .args(base)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read(&csv).unwrap(), explicit);
}

struct Server {
    child: Child,
    addr: String,
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn start_server(data_dir: &Path) -> Server {
    let mut child = pcx()
        .args([
            "serve",
            "--port",
            "0",
            "--data-dir",
            data_dir.to_str().unwrap(),
        ])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on http://")
        .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
        .to_string();
    Server { child, addr }
}

fn http(addr: &str, method: &str, path: &str, body: Option<&str>) -> (u16, String) {
    let mut s = TcpStream::connect(addr).unwrap();
    let body = body.unwrap_or("");
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut resp = String::new();
    s.read_to_string(&mut resp).unwrap();
    let status = resp[9..12].parse().unwrap();
    let body = resp
        .split_once("\r\n\r\n")
        .map(|x| x.1)
        .unwrap_or("")
        .to_string();
    (status, body)
}

#[test]
fn serve_full_session_flow() {
    let dir = tempfile::tempdir().unwrap();
    let server = start_server(dir.path());
    assert_eq!(
        http(&server.addr, "GET", "/health", None),
        (200, "ok".into())
    );

    let (status, body) = http(
        &server.addr,
        "POST",
        "/sessions",
        Some(r#"{"alternatives": ["a", "b", "c"], "scale": "1-3"}"#),
    );
    assert_eq!(status, 201, "{body}");
    let id = serde_json::from_str::<Value>(&body).unwrap()["id"]
        .as_str()
        .unwrap()
        .to_string();
    for (i, j, v) in [(0, 1, "2"), (0, 2, "3"), (1, 2, "\"2\"")] {
        let (status, _) = http(
            &server.addr,
            "PUT",
            &format!("/sessions/{id}/judgments/{i}/{j}"),
            Some(&format!(r#"{{"value": {v}}}"#)),
        );
        assert_eq!(status, 200);
    }
    let (status, body) = http(&server.addr, "GET", &format!("/sessions/{id}/report"), None);
    assert_eq!(status, 200);
    let r: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(r["complete"], Value::Bool(true));
    assert_eq!(r["inconsistency"]["global_value"].as_f64(), Some(0.25));
    assert!(r["weights"]["LSM"]["weights"]["w"].is_array());
    assert_eq!(r["certification"]["verdict"], "UNIQUE_GUARANTEED");
    drop(server);

    // the session is still there after a restart
    let server = start_server(dir.path());
    let (status, again) = http(&server.addr, "GET", &format!("/sessions/{id}/report"), None);
    assert_eq!(status, 200);
    assert_eq!(again, body);
}

#[test]
fn serve_on_occupied_port_exits_1() {
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let o = pcx()
        .args(["serve", "--in-memory", "--port", &port])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot bind"));
}
