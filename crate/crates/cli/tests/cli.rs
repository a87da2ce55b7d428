use std::path::Path;
use std::process::{Command, Output};

fn entrobound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entrobound"))
        .args(args)
        .output()
        .unwrap()
}

fn entrobound_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entrobound"))
        .args(args)
        .env(key, value)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn summary_value(o: &Output, key: &str) -> f64 {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {}", stdout(o)))
        .parse()
        .unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn estimate_writes_csv_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = entrobound(&[
        "estimate", "--density", "tent", "--k", "1", "--l", "4", "--n", "100000", "--delta",
        "0.1", "--seed", "7", "--out", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("estimate,total_bound,quant_bias,stat_dev,emp_bias,M,N"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 7);
    let (est, total): (f64, f64) = (row[0].parse().unwrap(), row[1].parse().unwrap());
    assert!((est - (0.5 - std::f64::consts::LN_2)).abs() <= total);
    let meta = std::fs::read_to_string(dir.path().join("r.csv.meta")).unwrap();
    for key in ["command = estimate", "seed = 7", "version = ", "wall_clock_seconds = "] {
        assert!(meta.contains(key), "{key} missing from {meta}");
    }
}

#[test]
fn bound_prints_total() {
    let o = entrobound(&["bound", "--k", "1", "--l", "1", "--m", "100", "--n", "1000000", "--delta", "0.05"]);
    assert!(o.status.success());
    assert!((summary_value(&o, "total") - 0.064_116).abs() < 1e-5);
}

#[test]
fn validity_errors_exit_2() {
    let o = entrobound(&["bound", "--k", "1", "--l", "4", "--m", "8", "--n", "1000", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error kind=validity code=2:"), "{err}");

    let o = entrobound(&["bound", "--k", "1", "--l", "4", "--m", "10", "--n", "1000", "--delta", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = entrobound(&["estimate", "--density", "tent", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--n"));
}

#[test]
fn io_and_parse_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let o = entrobound(&["estimate", "--input", path_str(&missing), "--l", "4", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error kind=io code=1:"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "0.1,abc\n").unwrap();
    let o = entrobound(&["estimate", "--input", path_str(&bad), "--l", "4", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn out_of_support_input_is_validity_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("x.csv");
    std::fs::write(&f, "x\n0.2\n1.5\n").unwrap();
    let o = entrobound(&["estimate", "--input", path_str(&f), "--l", "4", "--delta", "0.1", "--m", "20"]);
    assert_eq!(o.status.code(), Some(2));
    // A wider box accepts the same file.
    let o = entrobound(&[
        "estimate", "--input", path_str(&f), "--l", "1", "--delta", "0.1", "--lo", "0", "--hi", "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = entrobound(&[
        "estimate", "--input", path_str(&f), "--l", "1", "--delta", "0.1", "--lo", "-1", "--hi", "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn binary_input_matches_csv_input() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<f64> = (0..5000).map(|i| ((i as f64) * 0.618_033_988_7).fract()).collect();
    let csv = dir.path().join("x.csv");
    let bin = dir.path().join("x.f64");
    let text: String = values.iter().map(|v| format!("{v:.17e}\n")).collect();
    std::fs::write(&csv, text).unwrap();
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(&bin, bytes).unwrap();
    let run = |p: &Path| {
        let o = entrobound(&["estimate", "--input", path_str(p), "--k", "1", "--l", "1", "--delta", "0.1"]);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    assert_eq!(run(&csv), run(&bin));
}

#[test]
fn mi_estimate_from_joint_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("xy.csv");
    let text: String = (0..4000)
        .map(|i| {
            let x = ((i as f64) * 0.618_033_988_7).fract();
            let y = ((i as f64) * 0.414_213_562_3).fract();
            format!("{x},{y}\n")
        })
        .collect();
    std::fs::write(&f, text).unwrap();
    let o = entrobound(&["mi-estimate", "--input", path_str(&f), "--split", "1", "--l", "1", "--delta", "0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(summary_value(&o, "estimate").abs() <= summary_value(&o, "total"));
    let o = entrobound(&["mi-estimate", "--input", path_str(&f), "--split", "2", "--l", "1", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# bound run\ncommand = bound\nk = 1\nl = 1\nm = 100\nn = 1000000\ndelta = 0.05\n").unwrap();
    let o = entrobound(&["bound", "--config", path_str(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let base = summary_value(&o, "total");
    assert!((base - 0.064_116).abs() < 1e-5);
    let o = entrobound(&["bound", "--config", path_str(&cfg), "--m", "200"]);
    assert_eq!(summary_value(&o, "M"), 200.0);
    let o = entrobound(&["estimate", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&cfg, "k = one\n").unwrap();
    let o = entrobound(&["bound", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_lemmas_all_hold() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lem.csv");
    let o = entrobound(&["verify-lemmas", "--k", "1", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let holds = header.iter().position(|h| *h == "holds").unwrap();
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.split(',').nth(holds) == Some("true")));
}

#[test]
fn coverage_single_trial() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = entrobound(&[
        "coverage", "--density", "tent", "--n", "1000", "--delta", "0.1", "--trials", "1", "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("summary,"));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let args = |p: &Path| {
        vec![
            "coverage".to_string(), "--density".into(), "tent".into(), "--k".into(), "2".into(),
            "--n".into(), "50000".into(), "--delta".into(), "0.1".into(), "--trials".into(),
            "8".into(), "--out".into(), path_str(p).to_string(),
        ]
    };
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let p = dir.path().join(format!("t{threads}.csv"));
        let a = args(&p);
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        let o = entrobound_env(&a, "ENTROBOUND_THREADS", threads);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(std::fs::read(&p).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let o = entrobound_env(&["bound", "--k", "1", "--l", "1", "--m", "10", "--n", "10", "--delta", "0.1"], "ENTROBOUND_THREADS", "0");
    assert_eq!(o.status.code(), Some(2));
}

#[cfg(unix)]
#[test]
fn external_estimator_is_driven() {
    // An estimator that always answers 0 fails the entropy demo.
    let o = entrobound(&[
        "prop1-demo", "--c", "1", "--delta", "0.1", "--n", "50", "--trials", "10", "--estimator",
        "sh -c 'cat >/dev/null; echo 0'",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(summary_value(&o, "failure_fraction") >= 0.9);

    let o = entrobound(&[
        "mi-demo", "--c", "1", "--delta", "0.1", "--n", "50", "--trials", "10", "--estimator",
        "sh -c 'cat >/dev/null; exit 3'",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error kind=external code=1:"));
}
