use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn addmach(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_addmach"))
        .args(args)
        .env_remove("ADDMACH_STEP_LIMIT")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn gen(name: &str) -> String {
    let o = addmach(&["gen", name], None);
    assert!(o.status.success());
    stdout(&o)
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

#[test]
fn generated_multiply_runs_from_stdin() {
    let o = addmach(&["run", "--inputs", "13,33"], Some(&gen("multiply")));
    assert!(o.status.success());
    assert_eq!(stdout(&o), "429\n");
    let o = addmach(&["run", "-", "--inputs", "-13,33", "--model", "fk"], Some(&gen("multiply")));
    assert_eq!(stdout(&o), "-429\n");
}

#[test]
fn powers_of_two_writes_each_power() {
    let o = addmach(&["run", "--inputs", "13"], Some(&gen("powers-of-two")));
    assert!(o.status.success());
    let mut got: Vec<i64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    got.sort();
    assert_eq!(got, [1, 4, 8]);
}

#[test]
fn every_generated_and_compiled_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for name in ["multiply", "divide", "powers-of-two", "fib-multiply", "queue", "nonauto1", "nonauto2"] {
        files.push((name.to_string(), gen(name)));
    }
    for (cmd, spec) in [("compile-dfa", "octal_xor.dfa"), ("compile-dfa", "three_nonzero.dfa"), ("compile-tm", "binary_increment.tm")] {
        let o = addmach(&[cmd, &fixture(spec)], None);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        files.push((spec.to_string(), stdout(&o)));
    }
    for (name, src) in files {
        let path = dir.path().join(format!("{name}.amasm"));
        std::fs::write(&path, &src).unwrap();
        let o = addmach(&["asm", "--roundtrip", path.to_str().unwrap()], None);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let flat = addmach(&["asm", "--expand", path.to_str().unwrap()], None);
        let again = dir.path().join(format!("{name}.flat.amasm"));
        std::fs::write(&again, stdout(&flat)).unwrap();
        assert!(addmach(&["asm", "--roundtrip", again.to_str().unwrap()], None).status.success());
    }
}

#[test]
fn compiled_automata_answer() {
    let src = stdout(&addmach(&["compile-dfa", &fixture("three_nonzero.dfa")], None));
    assert_eq!(stdout(&addmach(&["run", "--inputs", "537"], Some(&src))), "1\n");
    assert_eq!(stdout(&addmach(&["run", "--inputs", "507"], Some(&src))), "0\n");
    let src = stdout(&addmach(&["compile-tm", &fixture("binary_increment.tm")], None));
    assert_eq!(stdout(&addmach(&["run", "--inputs", "13"], Some(&src))), "14\n");
}

#[test]
fn trace_goes_to_stderr_as_tsv() {
    let o = addmach(&["run", "--inputs", "2,3", "--trace", "tsv"], Some(&gen("multiply")));
    assert_eq!(stdout(&o), "6\n");
    let err = String::from_utf8(o.stderr).unwrap();
    let mut lines = err.lines();
    assert_eq!(lines.next(), Some("step\tpc\tmnemonic\tchanged\tvalue"));
    assert_eq!(lines.next(), Some("0\t0\tread\tx\t2"));
    assert!(lines.all(|l| l.split('\t').count() == 5));
}

#[test]
fn exit_codes() {
    assert_eq!(addmach(&["run", "--bogus"], None).status.code(), Some(2));
    assert_eq!(addmach(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(addmach(&["gen", "nope"], None).status.code(), Some(2));
    assert_eq!(addmach(&["run", "--inputs", "1,x"], Some(&gen("multiply"))).status.code(), Some(2));
    assert_eq!(addmach(&["run", "--inputs", "1"], Some("let x = ;")).status.code(), Some(2));
    // reading past the input and hitting the step limit are run failures
    assert_eq!(addmach(&["run", "--inputs", "1"], Some(&gen("multiply"))).status.code(), Some(1));
    assert_eq!(addmach(&["run", "--inputs", "13,33", "--limit", "5"], Some(&gen("multiply"))).status.code(), Some(1));
}

#[test]
fn step_limit_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_addmach"))
        .args(["run", "--inputs", "13"])
        .env("ADDMACH_STEP_LIMIT", "3")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .and_then(|mut c| {
            c.stdin.take().unwrap().write_all(gen("powers-of-two").as_bytes())?;
            c.wait_with_output()
        })
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step-limit"));
}

#[test]
fn bench_writes_csv_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let o = addmach(&["bench", "multiply", "--sizes", "64:4096:x2", "--csv", csv.to_str().unwrap()], None);
    assert!(o.status.success());
    assert!(stdout(&o).contains("pass=true"));
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("program,n,steps,status\n"));
    assert_eq!(text.lines().count(), 8);
    assert_eq!(addmach(&["bench", "multiply", "--sizes", "64:32:x2"], None).status.code(), Some(2));
}

#[test]
fn check_single_program() {
    let o = addmach(&["check", "divide", "--seed", "3"], None);
    assert!(o.status.success());
    assert!(stdout(&o).contains("mismatches=0"));
    assert_eq!(addmach(&["check", "12"], None).status.code(), Some(2));
}
