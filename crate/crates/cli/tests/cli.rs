use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use serde_json::Value;

fn heartflock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heartflock"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_lists_the_profiles() {
    let out = heartflock(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for row in [
        "anger          0.01   0.1   0.1     0     0    10",
        "joy            0.05  0.05  0.05    60    30     2",
    ] {
        assert!(text.contains(row), "missing {row:?} in\n{text}");
    }
    assert!(String::from_utf8(heartflock(&["simulate", "--help"]).stdout)
        .unwrap()
        .contains("anticipation"));
}

#[test]
fn usage_errors_exit_1() {
    for args in [
        &["simulate", "--emotion", "boredom"][..],
        &["simulate", "--frobnicate"],
        &["render", "--traj", "x", "--outdir", "y", "--stroke-length", "101"],
        &["render", "--traj", "x", "--outdir", "y", "--stroke-width", "0"],
        &["simulate", "--n", "0"],
        &["serve", "--tick-rate", "0"],
        &["replay", "--log", "x", "--tick-rate", "nan"],
        &["classify", "--rr", "x", "--window", "0"],
        &["classify", "--rr", "x", "--hop", "-1"],
        &["frobnicate"],
        &[],
    ] {
        assert_eq!(code(&heartflock(args)), 1, "{args:?}");
    }
}

#[test]
fn simulate_writes_requested_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.ndjson");
    let run = heartflock(&[
        "simulate",
        "--emotion",
        "joy",
        "--frames",
        "10",
        "--seed",
        "1",
        "--n",
        "3",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let records = lines(&out);
    assert_eq!(records.len(), 10);
    for (k, r) in records.iter().enumerate() {
        assert_eq!(r["tick"], k as u64);
        let boids = r["boids"].as_array().unwrap();
        assert_eq!(boids.len(), 3);
        for b in boids {
            let (vx, vy) = (b[2].as_f64().unwrap(), b[3].as_f64().unwrap());
            assert!(vx.hypot(vy) <= 2.0 + 1e-12);
        }
    }

    let again = dir.path().join("u.ndjson");
    heartflock(&[
        "simulate",
        "--emotion",
        "joy",
        "--frames",
        "10",
        "--seed",
        "1",
        "--n",
        "3",
        "--out",
        p(&again),
    ]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());

    let empty = dir.path().join("e.ndjson");
    assert_eq!(code(&heartflock(&["simulate", "--frames", "0", "--out", p(&empty)])), 0);
    assert_eq!(fs::read(&empty).unwrap().len(), 0);

    let unwritable = dir.path().join("missing-dir").join("t.ndjson");
    assert_eq!(
        code(&heartflock(&["simulate", "--frames", "2", "--out", p(&unwritable)])),
        2
    );
}

#[test]
fn render_draws_one_frame_per_record() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("t.ndjson");
    heartflock(&[
        "simulate",
        "--frames",
        "6",
        "--n",
        "15",
        "--seed",
        "4",
        "--out",
        p(&traj),
    ]);
    let frames = dir.path().join("frames");
    let args = [
        "render",
        "--traj",
        p(&traj),
        "--stroke-length",
        "100",
        "--stroke-width",
        "30",
        "--bg",
        "dark",
        "--size",
        "160x120",
        "--outdir",
        p(&frames),
    ];
    assert_eq!(code(&heartflock(&args)), 0);
    let mut names: Vec<String> = fs::read_dir(&frames)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, (0..6).map(|k| format!("frame_{k:06}.ppm")).collect::<Vec<_>>());
    let first = fs::read(frames.join("frame_000000.ppm")).unwrap();
    assert!(first.starts_with(b"P6\n160 120\n255\n"));
    // top-left corner pixel is background unless a boid sits there
    let body = &first[first.len() - 160 * 120 * 3..];
    assert!(body.chunks(3).any(|px| px == [0x14, 0x21, 0x3D]));

    let frames2 = dir.path().join("frames2");
    let mut args2 = args;
    args2[args2.len() - 1] = p(&frames2);
    heartflock(&args2);
    assert_eq!(
        fs::read(frames.join("frame_000005.ppm")).unwrap(),
        fs::read(frames2.join("frame_000005.ppm")).unwrap()
    );

    let empty = dir.path().join("empty.ndjson");
    fs::write(&empty, "").unwrap();
    assert_eq!(
        code(&heartflock(&[
            "render",
            "--traj",
            p(&empty),
            "--outdir",
            p(&dir.path().join("none"))
        ])),
        0
    );

    let broken = dir.path().join("broken.ndjson");
    let good = fs::read_to_string(&traj).unwrap();
    fs::write(
        &broken,
        format!("{}{{\"tick\":", good.lines().next().unwrap().to_owned() + "\n"),
    )
    .unwrap();
    let out = heartflock(&["render", "--traj", p(&broken), "--outdir", p(&dir.path().join("b"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

fn write_rr(path: &Path, rows: &[(&str, i64, f64)]) {
    let mut text = String::from("person_id,timestamp_ms,rr_ms\n");
    for (person, t, rr) in rows {
        text.push_str(&format!("{person},{t},{rr}\n"));
    }
    fs::write(path, text).unwrap();
}

fn modulated(person: &'static str, t0: f64, secs: f64, mean: f64, amp: f64, hz: f64) -> Vec<(&'static str, i64, f64)> {
    let mut t = t0;
    let mut out = Vec::new();
    while t < t0 + secs * 1000.0 {
        let rr = mean + amp * (2.0 * PI * hz * t / 1000.0).sin();
        t += rr;
        out.push((person, t.round() as i64, rr));
    }
    out
}

#[test]
fn classify_finds_joy_in_an_excited_stream() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = modulated("p1", 0.0, 600.0, 1000.0, 40.0, 0.1);
    let t0 = rows.last().unwrap().1 as f64;
    rows.extend(modulated("p1", t0, 120.0, 700.0, 5.0, 0.3));
    let csv = dir.path().join("rr.csv");
    write_rr(&csv, &rows);
    let out = dir.path().join("a.ndjson");
    let run = heartflock(&["classify", "--rr", p(&csv), "--out", p(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let records = lines(&out);
    let last_match = records.iter().rev().find(|r| r["outcome"] == "matched").unwrap();
    assert_eq!(last_match["chosen"], "joy");
    assert_eq!(last_match["footprint"], "HLL");
}

#[test]
fn classify_constant_stream_records_no_match() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<_> = (1..=400).map(|k| ("flat", k * 1000, 1000.0)).collect();
    let csv = dir.path().join("rr.csv");
    write_rr(&csv, &rows);
    let run = heartflock(&["classify", "--rr", p(&csv), "--window", "60", "--hop", "5"]);
    assert_eq!(code(&run), 0);
    let outcomes: Vec<Value> = String::from_utf8(run.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["outcome"].clone())
        .collect();
    assert_eq!(&outcomes[..3], ["warming-up", "warming-up", "warming-up"]);
    assert!(outcomes[3..].iter().all(|o| o == "no-match"));
}

#[test]
fn classify_failures_leave_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.ndjson");
    let missing = heartflock(&["classify", "--rr", p(&dir.path().join("nope.csv")), "--out", p(&out)]);
    assert_eq!(code(&missing), 2);
    assert!(!out.exists());

    let csv = dir.path().join("junk.csv");
    write_rr(&csv, &[("x", 1000, 5.0), ("x", 2000, 9000.0)]);
    let junk = heartflock(&["classify", "--rr", p(&csv), "--out", p(&out)]);
    assert_eq!(code(&junk), 2);
    assert!(String::from_utf8_lossy(&junk.stderr).contains("no usable RR samples"));
    assert!(!out.exists());

    fs::write(&csv, "person_id,timestamp_ms,rr_ms\nx,abc,800\n").unwrap();
    assert_eq!(code(&heartflock(&["classify", "--rr", p(&csv)])), 2);
}

fn hashes(stderr: &[u8]) -> (String, String) {
    let text = String::from_utf8_lossy(stderr);
    let find = |key: &str| {
        text.lines()
            .find_map(|l| l.strip_prefix(key))
            .unwrap_or_else(|| panic!("{key} missing from {text}"))
            .trim()
            .to_string()
    };
    (find("stream-sha256"), find("trajectory-sha256"))
}

#[test]
fn replay_is_stable_and_counts_changes() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.ndjson");
    fs::write(
        &log,
        "{\"tick\":4,\"line\":\"{\\\"kind\\\":\\\"set_emotion\\\",\\\"emotion\\\":\\\"disgust\\\"}\"}\n",
    )
    .unwrap();
    let args = ["replay", "--log", p(&log), "--seed", "5", "--ticks", "30", "--n", "20"];
    let (a, b) = (heartflock(&args), heartflock(&args));
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(hashes(&a.stderr), hashes(&b.stderr));
    assert_eq!(a.stdout, b.stdout);
    let stdout = String::from_utf8(a.stdout).unwrap();
    // count with a plain scan of the raw text
    assert_eq!(stdout.matches("\"kind\":\"emotion_changed\"").count(), 1);
    assert_eq!(stdout.lines().count(), 31 + 2);

    let empty = dir.path().join("empty.ndjson");
    fs::write(&empty, "").unwrap();
    let pure = heartflock(&["replay", "--log", p(&empty), "--ticks", "10", "--n", "5"]);
    let text = String::from_utf8(pure.stdout).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.lines().all(|l| l.contains("\"kind\":\"state_snapshot\"")));

    let corrupt = dir.path().join("corrupt.ndjson");
    fs::write(&corrupt, "{\"tick\":0,\"line\":\"x\"}\n{oops\n").unwrap();
    let bad = heartflock(&["replay", "--log", p(&corrupt)]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));
}

#[test]
fn normalize_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("counts.csv");
    let names = [
        "joy",
        "sadness",
        "fear",
        "anger",
        "trust",
        "disgust",
        "surprise",
        "anticipation",
    ];
    let mut text = format!("shown,{}\n", names.join(","));
    for (r, name) in names.iter().enumerate() {
        let row: Vec<String> = (0..8).map(|c| if c == r { "2" } else { "1" }.to_string()).collect();
        text.push_str(&format!("{name},{}\n", row.join(",")));
    }
    fs::write(&input, text).unwrap();
    let output = dir.path().join("rates.csv");
    assert_eq!(
        code(&heartflock(&[
            "normalize",
            "--input",
            p(&input),
            "--output",
            p(&output)
        ])),
        0
    );
    let rates = fs::read_to_string(&output).unwrap();
    let joy_row: Vec<f64> = rates
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((joy_row[0] - 2.0 / 9.0).abs() < 1e-15);
    assert!((joy_row[1] - 1.0 / 9.0).abs() < 1e-15);

    let zeros = dir.path().join("zeros.csv");
    let mut text = format!("shown,{}\n", names.join(","));
    for name in names {
        text.push_str(&format!("{name},0,0,0,0,0,0,0,0\n"));
    }
    fs::write(&zeros, text).unwrap();
    assert_eq!(code(&heartflock(&["normalize", "--input", p(&zeros)])), 2);
}

#[test]
fn serve_streams_and_stops_cleanly_on_sigint() {
    let dir = tempfile::tempdir().unwrap();
    let record = dir.path().join("session.ndjson");
    let mut child = Command::new(env!("CARGO_BIN_EXE_heartflock"))
        .args([
            "serve",
            "--port",
            "0",
            "--emotion",
            "anger",
            "--seed",
            "3",
            "--record",
            p(&record),
        ])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let mut banner = String::new();
    stderr.read_line(&mut banner).unwrap();
    let addr = banner
        .trim()
        .strip_prefix("listening on ")
        .expect("listening banner")
        .to_string();

    let mut viewer = TcpStream::connect(&addr).unwrap();
    viewer.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let mut reader = BufReader::new(viewer.try_clone().unwrap());
    let mut first = String::new();
    reader.read_line(&mut first).unwrap();
    let snap: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(snap["emotion"], "anger");
    assert_eq!(snap["config"]["max_speed"], 10.0);
    writeln!(viewer, r#"{{"kind":"set_emotion","emotion":"joy"}}"#).unwrap();
    let mut line = String::new();
    loop {
        line.clear();
        reader.read_line(&mut line).unwrap();
        if line.contains("\"kind\":\"ack\"") {
            break;
        }
    }

    let sent = Instant::now();
    let status = Command::new("kill")
        .args(["-INT", &child.id().to_string()])
        .status()
        .unwrap();
    assert!(status.success());
    let exit = loop {
        if let Some(s) = child.try_wait().unwrap() {
            break s;
        }
        assert!(
            sent.elapsed() < Duration::from_secs(2),
            "server still running 2 s after SIGINT"
        );
        std::thread::sleep(Duration::from_millis(20));
    };
    assert_eq!(exit.code(), Some(0));
    let logged = fs::read_to_string(&record).unwrap();
    assert_eq!(logged.lines().count(), 1);
    assert!(logged.contains("set_emotion"));
}

#[test]
fn serve_refuses_a_busy_port() {
    let holder = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = holder.local_addr().unwrap().port().to_string();
    let out = heartflock(&["serve", "--port", &port]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot listen"));
}
