mod common;

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use corrobe_core::store::DatasetManifest;

fn corrobe(data_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrobe"))
        .env("CORROBE_DATA_DIR", data_dir)
        .env("RUST_LOG", "warn")
        .env_remove("RUST_BACKTRACE")
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn discover_before_analysis_names_the_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(corrobe(&data, &["synth", "--out", dir.path().join("ds").to_str().unwrap()]));
    let out = corrobe(&data, &["discover", "--task", "color", "--key", "snow_4"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("analyze-tasks"), "{err}");

    ok(corrobe(&data, &["analyze-tasks", "--key", "snow_4"]));
    let out = ok(corrobe(&data, &["discover", "--task", "color", "--key", "snow_4"]));
    assert!(out.contains("clusters"), "{out}");
}

#[test]
fn commands_without_a_session_say_so() {
    let dir = tempfile::tempdir().unwrap();
    let out = corrobe(dir.path(), &["analyze-tasks"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no session"));
}

#[test]
fn standalone_evaluate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(corrobe(&data, &["synth", "--out", dir.path().join("ds").to_str().unwrap()]));
    let report = dir.path().join("report.jsonl");
    let manifest = dir.path().join("ds/manifest.jsonl");
    ok(corrobe(
        &data,
        &["evaluate", "--manifest", manifest.to_str().unwrap(), "--key", "snow_4", "--out", report.to_str().unwrap()],
    ));
    let text = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 21);
    assert_eq!(lines[0]["scope"], "corpus");
    assert_eq!(lines[0]["meteor_variant"], "lite");
    assert!(lines[1..].iter().all(|l| l["scope"] == "instance"));

    let out = corrobe(&data, &["evaluate", "--manifest", manifest.to_str().unwrap(), "--key", "fog_2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fog_2"));
}

#[test]
fn corrupt_isolates_unreadable_images_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let ds = dir.path().join("ds");
    ok(corrobe(&data, &["synth", "--out", ds.to_str().unwrap()]));
    std::fs::write(ds.join("images/img05.png"), b"not a png").unwrap();

    let out_a = dir.path().join("a");
    let manifest = ds.join("manifest.jsonl");
    ok(corrobe(&data, &["corrupt", "--manifest", manifest.to_str().unwrap(), "--out", out_a.to_str().unwrap(), "--seed", "3"]));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["failures"].as_array().unwrap().len(), 1);
    assert_eq!(report["failures"][0]["image_id"], "img05");
    assert_eq!(report["files_written"], 19 * 81);
    let pngs = walk(&out_a).into_iter().filter(|p| p.ends_with(".png")).count();
    assert_eq!(pngs, 19 * 81);

    let out_b = dir.path().join("b");
    ok(corrobe(
        &data,
        &["corrupt", "--manifest", manifest.to_str().unwrap(), "--out", out_b.to_str().unwrap(), "--seed", "3", "--specs", "snow_4,gaussian_noise_2,clean"],
    ));
    let m = DatasetManifest::load(&manifest).unwrap();
    for inst in m.instances().iter().filter(|i| i.image_id != "img05") {
        for key in ["snow_4", "gaussian_noise_2", "clean"] {
            let rel = format!("{key}/{}.png", inst.image_id);
            assert_eq!(std::fs::read(out_a.join(&rel)).unwrap(), std::fs::read(out_b.join(&rel)).unwrap(), "{rel}");
        }
    }
}

fn walk(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p.to_string_lossy().into_owned());
        }
    }
    out
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn http_get(port: u16, path: &str) -> Option<(u16, String)> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut buf = String::new();
    s.read_to_string(&mut buf).ok()?;
    let status = buf.split_whitespace().nth(1)?.parse().ok()?;
    let body = buf.split_once("\r\n\r\n")?.1.to_owned();
    Some((status, body))
}

/// Body of a possibly chunked response, decoded.
fn dechunk(body: &str) -> String {
    if serde_json::from_str::<serde_json::Value>(body).is_ok() {
        return body.to_owned();
    }
    let mut out = String::new();
    let mut rest = body;
    while let Some((size, tail)) = rest.split_once("\r\n") {
        let n = usize::from_str_radix(size.trim(), 16).unwrap_or(0);
        if n == 0 {
            break;
        }
        out.push_str(&tail[..n]);
        rest = &tail[n + 2..];
    }
    out
}

#[test]
fn serve_answers_corruptions_with_81_entries() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(corrobe(&data, &["synth", "--out", dir.path().join("ds").to_str().unwrap()]));
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let _server = Server(
        Command::new(env!("CARGO_BIN_EXE_corrobe"))
            .env("CORROBE_DATA_DIR", &data)
            .args(["serve", "--port", &port.to_string()])
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .unwrap(),
    );
    let deadline = Instant::now() + Duration::from_secs(30);
    let (status, body) = loop {
        if let Some(r) = http_get(port, "/corruptions") {
            break r;
        }
        assert!(Instant::now() < deadline, "server did not come up");
        std::thread::sleep(Duration::from_millis(100));
    };
    assert_eq!(status, 200);
    let v: serde_json::Value = serde_json::from_str(&dechunk(&body)).unwrap();
    assert_eq!(v["entries"].as_array().unwrap().len(), 81);
}
