use std::path::Path;
use std::process::Command;

use sumtype_mpc::Protocol;
use sumtype_mpc_cli::{run, EXIT_ERROR, EXIT_OK, EXIT_VERIFICATION_FAILED};
use sumtype_mpc_testkit::SaltlessOtp;
use tempfile::TempDir;

struct Invocation {
    code: i32,
    stdout: String,
    stderr: String,
}

fn invoke_with(args: &[&str], extra: &[&dyn Protocol]) -> Invocation {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("sumtype-mpc").chain(args.iter().copied());
    let code = run(argv, extra, &mut out, &mut err);
    Invocation {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn invoke(args: &[&str]) -> Invocation {
    invoke_with(args, &[])
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn field<'a>(stdout: &'a str, key: &str) -> &'a str {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key).filter(|rest| rest.starts_with(' ')))
        .unwrap_or_else(|| panic!("no `{key}` line in\n{stdout}"))
        .trim()
}

/// CSV rows after `#` comment lines, parsed as RFC 4180.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn sequences(dir: &TempDir) -> (String, String) {
    (
        write(dir, "xa.txt", "0 1 1 0\n1 0 0 1\n"),
        write(dir, "yb.txt", "0 0 1 1\n1 1 0 0\n"),
    )
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let dir = TempDir::new().unwrap();
    let (x, y) = sequences(&dir);
    let t1 = dir.path().join("t1.txt").display().to_string();
    let t2 = dir.path().join("t2.txt").display().to_string();
    let base = [
        "run",
        "--protocol",
        "otp",
        "--f1",
        "hamming",
        "--x",
        &x,
        "--y",
        &y,
        "--m",
        "3",
        "--seed",
        "7",
    ];
    let a = invoke(&[&base[..], &["--transcript", &t1]].concat());
    let b = invoke(&[&base[..], &["--transcript", &t2]].concat());
    assert_eq!(a.code, EXIT_OK, "{}", a.stderr);
    assert_eq!(a.stdout.replace(&t1, ""), b.stdout.replace(&t2, ""));
    let (ta, tb) = (std::fs::read(&t1).unwrap(), std::fs::read(&t2).unwrap());
    assert_eq!(ta, tb);
    assert!(String::from_utf8(ta).unwrap().starts_with("# protocol=otp n=8 m=3"));
    assert_eq!(field(&a.stdout, "oracle"), "match");
    assert_eq!(field(&a.stdout, "f_n"), "1/2");
}

#[test]
fn full_sample_has_zero_error_for_every_protocol() {
    let dir = TempDir::new().unwrap();
    let (x, y) = sequences(&dir);
    for protocol in ["otp", "poly-l", "poly-direct"] {
        let r = invoke(&[
            "run",
            "--protocol",
            protocol,
            "--x",
            &x,
            "--y",
            &y,
            "--m",
            "equal-n",
            "--seed",
            "1",
        ]);
        assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
        assert_eq!(field(&r.stdout, "abs_error"), "0");
        assert_eq!(field(&r.stdout, "F_hat"), field(&r.stdout, "f_n"));
        assert_eq!(field(&r.stdout, "m"), "8");
    }
}

#[test]
fn run_reports_bits_and_rate() {
    let r = invoke(&[
        "run",
        "--protocol",
        "poly-direct",
        "--f1",
        "product",
        "--gen",
        "periodic",
        "--n",
        "16",
        "--m",
        "3",
        "--seed",
        "5",
        "--modulus",
        "101",
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(field(&r.stdout, "index_bits"), "12");
    assert_eq!(field(&r.stdout, "k"), "110");
    assert_eq!(field(&r.stdout, "R"), "55/8");
    assert!(r.stdout.contains("# gen = periodic@v1"));
}

#[test]
fn run_requires_seed() {
    let dir = TempDir::new().unwrap();
    let (x, y) = sequences(&dir);
    let r = invoke(&["run", "--x", &x, "--y", &y, "--m", "2"]);
    assert_eq!(r.code, EXIT_ERROR);
    assert!(r.stderr.contains("--seed"), "{}", r.stderr);
}

#[test]
fn sequence_errors_name_file_and_line() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.txt", "0 1\n1 1\n0 z 1\n");
    let y = write(&dir, "y.txt", "0 1 1 0 1 1 0\n");
    let r = invoke(&["run", "--x", &x, "--y", &y, "--m", "2", "--seed", "1"]);
    assert_eq!(r.code, EXIT_ERROR);
    assert!(r.stderr.contains(&format!("{x}:3: unknown symbol `z`")), "{}", r.stderr);
}

#[test]
fn mismatched_lengths_and_oversized_m_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.txt", "0 1 1\n");
    let y = write(&dir, "y.txt", "0 1\n");
    assert_eq!(
        invoke(&["run", "--x", &x, "--y", &y, "--m", "1", "--seed", "1"]).code,
        EXIT_ERROR
    );
    let r = invoke(&["run", "--x", &x, "--y", &x, "--m", "4", "--seed", "1"]);
    assert_eq!(r.code, EXIT_ERROR);
    assert!(r.stderr.contains("exceeds"), "{}", r.stderr);
}

#[test]
fn flags_override_config_file_and_config_is_echoed() {
    let dir = TempDir::new().unwrap();
    let (x, y) = sequences(&dir);
    let conf = write(
        &dir,
        "run.conf",
        &format!("# example\ncommand = run\nprotocol = poly-l\nx = {x}\ny = {y}\nm = 2\nseed = 9\n"),
    );
    let from_file = invoke(&["--config", &conf]);
    assert_eq!(from_file.code, EXIT_OK, "{}", from_file.stderr);
    assert!(from_file.stdout.contains("# seed = 9\n"));
    assert!(from_file.stdout.contains("# protocol = poly-l\n"));

    let overridden = invoke(&["run", "--config", &conf, "--seed", "7", "--protocol", "otp"]);
    assert_eq!(overridden.code, EXIT_OK, "{}", overridden.stderr);
    assert!(overridden.stdout.contains("# seed = 7\n"));
    assert!(overridden.stdout.contains("# protocol = otp\n"));
    assert!(overridden.stdout.contains("# m = 2\n"));
    assert_eq!(field(&overridden.stdout, "protocol"), "otp");
}

#[test]
fn malformed_config_reports_line() {
    let dir = TempDir::new().unwrap();
    let conf = write(&dir, "bad.conf", "protocol = otp\n\nseed: 4\n");
    let r = invoke(&["run", "--config", &conf]);
    assert_eq!(r.code, EXIT_ERROR);
    assert!(r.stderr.contains(&format!("{conf}:3:")), "{}", r.stderr);

    let unknown = write(&dir, "unknown.conf", "colour = blue\n");
    assert_eq!(
        invoke(&["run", "--config", &unknown, "--m", "1", "--seed", "1"]).code,
        EXIT_ERROR
    );
}

#[test]
fn audit_of_one_time_pad_passes() {
    let r = invoke(&[
        "audit",
        "--protocol",
        "otp",
        "--n",
        "2",
        "--m",
        "1",
        "--alphabets",
        "2,2",
    ]);
    assert_eq!(r.code, EXIT_OK, "{}\n{}", r.stdout, r.stderr);
    assert_eq!(r.stdout.lines().filter(|l| l.ends_with("PASS")).count(), 3);
    assert!(r.stdout.contains("# modulus = 3\n"));
}

#[test]
fn audit_of_poly_l_reports_charlie_leak() {
    let r = invoke(&[
        "audit",
        "--protocol",
        "poly-l",
        "--n",
        "2",
        "--m",
        "1",
        "--alphabets",
        "2,2",
    ]);
    assert_eq!(r.code, EXIT_VERIFICATION_FAILED, "{}\n{}", r.stdout, r.stderr);
    let charlie = r
        .stdout
        .lines()
        .find(|l| l.contains("against_charlie") && l.ends_with("FAIL"))
        .unwrap();
    assert!(charlie.contains("4/5"), "{charlie}");
    for definition in ["against_alice", "against_bob"] {
        let line = r.stdout.lines().find(|l| l.contains(definition)).unwrap();
        assert!(line.ends_with("PASS"), "{line}");
    }
}

#[test]
fn audit_of_saltless_control_fails() {
    let control = SaltlessOtp;
    let args = [
        "audit",
        "--protocol",
        "broken-otp",
        "--f1",
        "product",
        "--n",
        "2",
        "--m",
        "1",
    ];
    let r = invoke_with(&args, &[&control]);
    assert_eq!(r.code, EXIT_VERIFICATION_FAILED, "{}\n{}", r.stdout, r.stderr);
    assert!(r
        .stdout
        .lines()
        .any(|l| l.contains("against_charlie") && l.ends_with("FAIL")));

    let unregistered = invoke(&args);
    assert_eq!(unregistered.code, EXIT_ERROR);
    assert!(unregistered.stderr.contains("unknown protocol `broken-otp`"));
}

#[test]
fn oversized_audit_is_a_budget_error() {
    let r = invoke(&[
        "audit",
        "--protocol",
        "otp",
        "--n",
        "4",
        "--m",
        "2",
        "--alphabets",
        "3,3",
    ]);
    assert_eq!(r.code, EXIT_ERROR);
    assert!(r.stderr.contains("enumeration needs"), "{}", r.stderr);
    assert!(r.stdout.is_empty());
}

#[test]
fn audit_json_carries_config_and_reports() {
    let r = invoke(&["audit", "--protocol", "otp", "--format", "json"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["config"]["protocol"], "otp");
    assert_eq!(v["reports"].as_array().unwrap().len(), 3);
    assert_eq!(v["reports"][2]["definition"], "against_charlie");
    assert_eq!(v["reports"][2]["worst_distance"], "0");
}

#[test]
fn distortion_sweep_has_one_row_per_m() {
    let r = invoke(&[
        "distortion",
        "--f1",
        "hamming",
        "--n",
        "4",
        "--m",
        "1,2,3,4",
        "--mode",
        "exhaustive",
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let (header, rows) = csv_rows(&r.stdout);
    assert_eq!(header[..4], ["n", "m", "e_n", "bound"]);
    assert_eq!(rows.len(), 4);
    for (i, row) in rows.iter().enumerate() {
        let m = (i + 1) as f64;
        let bound: f64 = row[3].parse().unwrap();
        assert!((bound - (2.0 / m).sqrt()).abs() < 1e-6, "{row:?}");
    }
    let e_n: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(e_n, ["1/2", "1/4", "1/6", "0"]);
}

#[test]
fn comm_cost_rate_decreases_under_sqrt_rule() {
    let r = invoke(&[
        "comm-cost",
        "--protocol",
        "poly-direct",
        "--m-rule",
        "sqrt",
        "--n",
        "64,256,1024,4096",
        "--verify-live",
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let (header, rows) = csv_rows(&r.stdout);
    let rate = header.iter().position(|h| h == "R_decimal").unwrap();
    let live = header.iter().position(|h| h == "live_match").unwrap();
    let rates: Vec<f64> = rows.iter().map(|row| row[rate].parse().unwrap()).collect();
    assert_eq!(rates.len(), 4);
    assert!(rates.windows(2).all(|w| w[1] < w[0]), "{rates:?}");
    assert!(rows.iter().all(|row| row[live] == "true"));
}

#[test]
fn empty_grids_print_only_headers() {
    let d = invoke(&["distortion", "--n", "", "--m", "1,2"]);
    assert_eq!(d.code, EXIT_OK, "{}", d.stderr);
    let (header, rows) = csv_rows(&d.stdout);
    assert!(rows.is_empty());
    assert_eq!(header[0], "n");

    let c = invoke(&["comm-cost", "--protocol", "otp", "--n", ""]);
    assert_eq!(c.code, EXIT_OK, "{}", c.stderr);
    let (header, rows) = csv_rows(&c.stdout);
    assert!(rows.is_empty());
    assert_eq!(header[0], "protocol");
}

#[test]
fn sweeps_are_byte_stable_and_write_files() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    let out_arg = out.display().to_string();
    let args = [
        "distortion",
        "--n",
        "6,8",
        "--m",
        "2,3",
        "--mode",
        "monte-carlo",
        "--trials",
        "50",
        "--seed",
        "3",
        "--out",
        &out_arg,
    ];
    let first = invoke(&args);
    assert_eq!(first.code, EXIT_OK, "{}", first.stderr);
    assert!(first.stdout.is_empty());
    let a = std::fs::read(&out).unwrap();
    assert_eq!(invoke(&args).code, EXIT_OK);
    assert_eq!(a, std::fs::read(&out).unwrap());
    assert_eq!(csv_rows(std::str::from_utf8(&a).unwrap()).1.len(), 4);
}

#[test]
fn bad_values_are_config_errors() {
    for args in [
        &["comm-cost", "--protocol", "otp", "--n", "8", "--m-rule", "zero"][..],
        &["comm-cost", "--protocol", "nope", "--n", "8"][..],
        &["distortion", "--n", "4", "--m", "1", "--budget", "0"][..],
        &["distortion", "--n", "4,x", "--m", "1"][..],
        &["audit", "--protocol", "otp", "--m", "3", "--n", "2"][..],
        &["run", "--gen", "periodic", "--m", "1", "--seed", "1"][..],
        &["frobnicate"][..],
    ] {
        let r = invoke(args);
        assert_eq!(r.code, EXIT_ERROR, "{args:?}: {}", r.stdout);
        assert!(!r.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn binary_exit_codes() {
    let bin = Path::new(env!("CARGO_BIN_EXE_sumtype-mpc"));
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["comm-cost", "--protocol", "otp", "--n", "16"]), Some(EXIT_OK));
    assert_eq!(
        status(&["audit", "--protocol", "poly-direct", "--f1", "product"]),
        Some(EXIT_VERIFICATION_FAILED)
    );
    assert_eq!(status(&["run", "--m", "1"]), Some(EXIT_ERROR));
    assert_eq!(status(&["--help"]), Some(EXIT_OK));
}
