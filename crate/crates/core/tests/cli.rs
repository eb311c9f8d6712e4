use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qdifab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdifab"))
        .args(args)
        .current_dir(dir)
        .env_remove("QDIFAB_SEED")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const THREE_GATES: &str = "\
signal a proto=4ph arity=2
signal b proto=4ph arity=2
signal t proto=4ph arity=2
signal u proto=4ph arity=2
signal o proto=4ph arity=2
gate g1 fn=8 in=a,b out=t ack
gate g2 fn=6 in=a,b out=u ack
gate g3 fn=e in=t,u out=o ack
";

const AND_GATE: &str = "\
signal x proto=4ph arity=2
signal y proto=4ph arity=2
signal o proto=4ph arity=2
gate g fn=8 in=x,y out=o ack
";

#[test]
fn map_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "n.net", THREE_GATES);
    let out = qdifab(&["map", "n.net", "--out", "a.bit"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    qdifab(&["map", "n.net", "--out", "b.bit"], dir.path());
    let a = fs::read(dir.path().join("a.bit")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.bit")).unwrap());
    let hex_lines = String::from_utf8(a).unwrap().lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(hex_lines, 3);
}

#[test]
fn seven_wire_gate_is_named() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "n.net",
        "signal x proto=4ph arity=2\nsignal y proto=4ph arity=2\nsignal z proto=4ph arity=2\n\
         signal o proto=4ph arity=2\ngate wide fn=80 in=x,y,z out=o ack\n",
    );
    let out = qdifab(&["map", "n.net", "--out", "n.bit"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`wide`") && err.contains("7"), "{err}");
}

#[test]
fn parse_error_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "n.net", "signal x proto=4ph arity=2\ngate g fn=8 in=x,q out=x\n");
    let out = qdifab(&["map", "n.net", "--out", "n.bit"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2, column 13"));
}

#[test]
fn simulate_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "and.net", AND_GATE);
    qdifab(&["map", "and.net", "--out", "and.bit"], d);
    write(d, "s.txt", "x: 0,1,1,0\ny: 1,1,0,0\n");
    let out = qdifab(&["sim", "and.bit", "s.txt", "--trace", "t.csv"], d);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(d.join("t.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("# transaction o ")).count(), 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("o: 4 transactions, values [0, 1, 0, 0]"));

    for prop in ["single-toggle", "no-early-eval"] {
        let out = qdifab(&["check", "t.csv", "--property", prop], d);
        assert_eq!(out.status.code(), Some(0), "{prop}");
    }

    write(d, "bad.txt", "q: 1\n");
    assert_eq!(qdifab(&["sim", "and.bit", "bad.txt"], d).status.code(), Some(2));

    // unbalanced stimulus deadlocks
    write(d, "short.txt", "x: 1,1\ny: 1\n");
    let out = qdifab(&["sim", "and.bit", "short.txt"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("deadlock"));
}

#[test]
fn jitter_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "and.net", AND_GATE);
    qdifab(&["map", "and.net", "--out", "and.bit"], d);
    write(d, "s.txt", "x: 0,1,1,0\ny: 1,1,0,0\n");
    qdifab(&["sim", "and.bit", "s.txt", "--delays", "jitter:17", "--trace", "a.csv"], d);
    qdifab(&["sim", "and.bit", "s.txt", "--delays", "jitter:17", "--trace", "b.csv"], d);
    let a = fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(d.join("b.csv")).unwrap());

    let env = Command::new(env!("CARGO_BIN_EXE_qdifab"))
        .args(["sim", "and.bit", "s.txt", "--delays", "jitter", "--trace", "c.csv"])
        .current_dir(d)
        .env("QDIFAB_SEED", "17")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(0));
    assert_eq!(a, fs::read(d.join("c.csv")).unwrap());
}

#[test]
fn timing_and_side_channel_checks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "and.net", AND_GATE);
    qdifab(&["map", "and.net", "--out", "and.bit"], d);
    let mut uniform = Vec::new();
    let mut jitter = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            let s = format!("s{x}{y}.txt");
            write(d, &s, &format!("x: {x}\ny: {y}\n"));
            let u = format!("u{x}{y}.csv");
            let j = format!("j{x}{y}.csv");
            qdifab(&["sim", "and.bit", &s, "--trace", &u], d);
            qdifab(&["sim", "and.bit", &s, "--delays", "jitter:5", "--trace", &j], d);
            uniform.push(u);
            jitter.push(j);
        }
    }
    let args = |prop: &'static str, files: &[String]| {
        let mut a: Vec<String> = vec!["check".into()];
        a.extend(files.iter().cloned());
        a.extend(["--property".to_string(), prop.to_string(), "--report".into(), "r.csv".into()]);
        a
    };
    for prop in ["timing", "toggle-count", "dpa"] {
        let a = args(prop, &uniform);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        let out = qdifab(&refs, d);
        assert_eq!(out.status.code(), Some(0), "{prop}: {}", String::from_utf8_lossy(&out.stdout));
        assert!(d.join("r.csv").exists());
    }
    let a = args("timing", &jitter);
    let refs: Vec<&str> = a.iter().map(String::as_str).collect();
    let out = qdifab(&refs, d);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL (spread "), "{text}");
}

#[test]
fn usage_and_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "t.csv", "time,wire,old,new\n0,3,0,1\n");
    assert_eq!(qdifab(&["check", "t.csv"], d).status.code(), Some(2));
    assert_eq!(qdifab(&["check", "t.csv", "--property", "timing"], d).status.code(), Some(2));
    assert_eq!(qdifab(&["sim", "missing.bit", "s.txt"], d).status.code(), Some(2));
    assert_eq!(qdifab(&["--help"], d).status.code(), Some(0));
}
