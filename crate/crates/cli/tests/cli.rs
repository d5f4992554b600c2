use std::fs;
use std::process::{Command, Output};

fn qualest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qualest"))
        .args(args)
        .env_remove("QUALEST_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn params_reports_sampling_factor() {
    let o = qualest(&["params", "--params"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("0.0659091"));

    let o = qualest(&["params", "--params", "--n", "20", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let f = v[0]["f"].as_f64().unwrap();
    assert!((f - (1.0 / 20.0 - 1.0 / 40.0)).abs() < 1e-15);
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let o = qualest(&["theory", "--params", "--preset", "t_X9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("t_X9"));
}

#[test]
fn conflicting_sources_are_rejected() {
    let o = qualest(&["params", "--params", "--synth"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qualest(&["verify", "--params", "--exact", "--preset", "p"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reproduce_flags_printed_discrepancies() {
    let o = qualest(&["reproduce", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 22);
    let flagged: Vec<&str> = rows
        .iter()
        .filter(|r| r["discrepancy"].as_bool().unwrap())
        .map(|r| r["estimator"].as_str().unwrap())
        .collect();
    for name in ["p", "t_s", "t_GS", "t_NQ8"] {
        assert!(flagged.contains(&name), "{name} not flagged: {flagged:?}");
    }
    let tn = rows.iter().find(|r| r["estimator"] == "t_N").unwrap();
    assert!((tn["formula_mse"].as_f64().unwrap() - 0.00329).abs() < 2e-5);
    assert!(!tn["discrepancy"].as_bool().unwrap());
}

#[test]
fn verify_is_deterministic_and_writes_under_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_qualest"))
            .args([
                "verify",
                "--synth",
                "--preset",
                "t_s",
                "--preset",
                "t_N",
                "--simulate",
                "--reps",
                "2000",
                "--seed",
                "9",
                "--format",
                "csv",
                "--out",
                name,
            ])
            .env("QUALEST_OUT_DIR", dir.path())
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read_to_string(dir.path().join(name)).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    assert!(a.starts_with("estimator,mode,"));
    assert_eq!(a.lines().count(), 3);
}

#[test]
fn exact_verification_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pop.csv");
    fs::write(&path, "phi,x\n1,3\n1,4\n0,1\n0,2\n1,5\n0,1.5\n").unwrap();
    let o = qualest(&[
        "verify",
        "--csv",
        path.to_str().unwrap(),
        "--n",
        "3",
        "--exact",
        "--preset",
        "p",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows[0]["samples"].as_u64(), Some(20));
    // Var(p) is exact under the first-order formula
    assert!(rows[0]["relative_gap"].as_f64().unwrap() < 1e-12);
}

#[test]
fn non_binary_attribute_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "phi,x\n1,3\n0,2\n2,4\n").unwrap();
    let o = qualest(&["params", "--csv", path.to_str().unwrap(), "--n", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn synth_emits_population_csv() {
    let o = qualest(&["synth", "--N", "20", "--P", "0.4", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("phi,x"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 20);
    assert_eq!(rows.iter().filter(|l| l.starts_with("1,")).count(), 8);
}
