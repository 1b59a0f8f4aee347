use std::fs;
use std::process::{Command, Output};

fn hopfscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hopfscope")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn analyze_multi2_reports_both_provenances() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = hopfscope(&["analyze", "--atlas", "multi2", "--a", "0.1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["schema_version"], "hopfscope-report/1");
    assert_eq!(r["pipeline"]["provenance"], "series-pipeline");
    assert_eq!(r["empirical"]["provenance"], "ode-empirical");
    assert!((r["pipeline"]["p3"].as_f64().unwrap() - 0.01).abs() < 1e-6);
    assert!((r["empirical"]["c3"].as_f64().unwrap() / 0.02 - 1.0).abs() < 0.02);
    let warnings = r["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().starts_with("pipeline/empirical ratio 0.50")));
    assert_eq!(r["classification"]["kind"], "DegenerateSecondKind");
}

#[test]
fn classify_persist1_is_first_kind() {
    let r = json(&hopfscope(&["classify", "--atlas", "persist1", "--tau-window", "1e-6:1e-3:8"]));
    assert_eq!(r["classification"]["kind"], "DegenerateFirstKind");
    assert_eq!(r["input"]["tau_window"].as_array().unwrap().len(), 16);
}

#[test]
fn sweep_multi2_writes_csv_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let plots = dir.path().join("plots");
    let r = json(&hopfscope(&[
        "sweep",
        "--atlas",
        "multi2",
        "--tau",
        "2e-6:2e-3:8",
        "--csv",
        csv.to_str().unwrap(),
        "--plot-data",
        plots.to_str().unwrap(),
    ]));
    assert!((r["fitted_radius_exponent"].as_f64().unwrap() - 1.0 / 6.0).abs() < 0.02);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,radius,period,stability,return_derivative"));
    assert_eq!(lines.count(), 16);
    for name in ["tau_radius.dat", "log_tau_log_radius.dat"] {
        let data = fs::read_to_string(plots.join(name)).unwrap();
        assert!(data.starts_with('#'));
        assert_eq!(data.lines().filter(|l| !l.starts_with('#')).count(), 8);
    }
}

#[test]
fn verify_csv_format() {
    let out = hopfscope(&["verify", "--atlas", "cubic-std", "--tau", "0.08", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "stable");
    assert!((row[1].parse::<f64>().unwrap() - 0.2).abs() < 1e-6);
}

#[test]
fn reports_are_byte_identical() {
    let args = ["analyze", "--atlas", "semistable2", "--a", "0.04"];
    let x = hopfscope(&args);
    let y = hopfscope(&args);
    assert!(x.status.success());
    assert_eq!(x.stdout, y.stdout);
}

#[test]
fn system_file_matches_atlas() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cubic.json");
    let terms: Vec<String> = [(1, 3, 0), (1, 1, 2), (2, 2, 1), (2, 0, 3)]
        .iter()
        .map(|(m, k, l)| format!(r#"{{"m":{m},"k":{k},"l":{l},"poly":{{"0":-1.0}}}}"#))
        .collect();
    let text = format!(
        r#"{{"degree":3,"a_star":0.0,"coefficients":[
            {{"m":1,"k":1,"l":0,"poly":{{"1":1.0}}}},{{"m":1,"k":0,"l":1,"poly":{{"0":-1.0}}}},
            {{"m":2,"k":1,"l":0,"poly":{{"0":1.0}}}},{{"m":2,"k":0,"l":1,"poly":{{"1":1.0}}}},{}]}}"#,
        terms.join(",")
    );
    fs::write(&path, text).unwrap();
    let from_file = json(&hopfscope(&["verify", "--system", path.to_str().unwrap(), "--a", "0.04"]));
    let from_atlas = json(&hopfscope(&["verify", "--atlas", "cubic-std", "--a", "0.04"]));
    assert_eq!(from_file["detected"], from_atlas["detected"]);
}

#[test]
fn atlas_list_names_every_system() {
    let r = json(&hopfscope(&["atlas-list"]));
    let names: Vec<&str> = r.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["multi2", "semistable2", "persist1", "persist-semi", "infinity", "cubic-std"]);
}

#[test]
fn malformed_json_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"degree\": 3,\n \"coefficients\": [}").unwrap();
    let out = hopfscope(&["classify", "--system", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2, column"), "{err}");
}

#[test]
fn input_errors_exit_2() {
    for args in [
        vec!["analyze", "--atlas", "nope", "--a", "0.1"],
        vec!["verify", "--atlas", "multi2", "--tau", "5"],
        vec!["sweep", "--atlas", "multi2", "--tau", "1e-3:1e-6:8"],
        vec!["verify", "--atlas", "multi2"],
        vec!["classify", "--atlas", "multi2", "--format", "csv"],
    ] {
        assert_eq!(hopfscope(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn numeric_errors_exit_3_with_name() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("saddle.json");
    fs::write(
        &path,
        r#"{"degree":1,"coefficients":[{"m":1,"k":1,"l":0,"poly":{"0":1.0}},{"m":2,"k":0,"l":1,"poly":{"0":-1.0}}]}"#,
    )
    .unwrap();
    let out = hopfscope(&["analyze", "--system", path.to_str().unwrap(), "--a", "0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("NotHopfRegion"));

    let out = hopfscope(&["classify", "--atlas", "cubic-std", "--r-grid", "0.1:0.11:4"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("InconclusiveFit"));
}
