use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const NL_A: &str = r#"{"x": [2, 7, 20, 20, 25], "y": [0, 4.5, 7.21, 4.21, 5.25]}"#;
const NL_B: &str = r#"{"x": [3, 6, 10, 19], "y": [3, 3, 10, 10]}"#;
const NL_FIG4: &str = r#"{"x": [2, 5, 5, 9, 9, 13, 19], "y": [0, 4, 2, 4, 6, 6, 8]}"#;

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture {
            dir: TempDir::new().unwrap(),
        }
    }

    fn file(&self, name: &str, body: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn plant_a(&self, k: f64) -> PathBuf {
        self.file(
            &format!("pa{k}.json"),
            &format!(r#"{{"num": [-1, 2], "den": [1, 1, 0], "k": {k}}}"#),
        )
    }

    fn plant_b(&self, k: f64) -> PathBuf {
        self.file(
            &format!("pb{k}.json"),
            &format!(r#"{{"num": [1], "den": [1, 4, 3, 0], "k": {k}}}"#),
        )
    }
}

fn dfkit(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfkit"))
        .args(args.iter().map(|a| a.as_ref()))
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_columns(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn analyze(nl: &Path, plant: &Path) -> (Output, Value) {
    let o = dfkit(&[&"analyze", &nl, &plant]);
    let v = serde_json::from_slice(&o.stdout).unwrap();
    (o, v)
}

fn assert_report_schema(r: &Value) {
    let obj = r.as_object().expect("report is an object");
    for key in [
        "schema",
        "nonlinearity",
        "plant",
        "describing_function",
        "realization",
        "omega",
        "gain_margin",
        "cycles",
        "ellipse",
        "crossovers",
    ] {
        assert!(obj.contains_key(key), "missing {key}");
    }
    assert_eq!(r["schema"], 1);
    assert!(r["nonlinearity"]["x"].is_array() && r["nonlinearity"]["y"].is_array());
    assert!(
        r["plant"]["num"].is_array() && r["plant"]["den"].is_array() && r["plant"]["k"].is_number()
    );
    assert!(matches!(
        r["describing_function"].as_str(),
        Some("exact" | "qualitative")
    ));
    assert!(r["omega"].is_number() || r["omega"].is_null());
    let order = r["realization"]["order"].as_u64().unwrap() as usize;
    let check_ellipse = |e: &Value| {
        assert_eq!(e["x0"].as_array().unwrap().len(), order);
        assert_eq!(e["xq"].as_array().unwrap().len(), order);
        assert!(e["omega"].as_f64().unwrap() > 0.0);
    };
    for c in r["crossovers"].as_array().unwrap() {
        assert!(c["omega"].as_f64().unwrap() > 0.0 && c["gain_margin"].as_f64().unwrap() > 0.0);
        for cy in c["cycles"].as_array().unwrap() {
            assert!(cy["X"].as_f64().unwrap() > 0.0);
            assert!(cy["Y1"].is_number());
            assert!(matches!(
                cy["stability"].as_str(),
                Some("stable" | "unstable")
            ));
            if !cy["ellipse"].is_null() {
                check_ellipse(&cy["ellipse"]);
            }
            if let Some(runs) = cy.get("simulation") {
                for run in runs.as_array().unwrap() {
                    let v = run["verdict"].as_str().unwrap();
                    assert!(matches!(
                        v,
                        "converged_to_origin" | "sustained_oscillation" | "diverged"
                    ));
                    if v == "sustained_oscillation" {
                        assert!(
                            run["amplitude"].as_f64().unwrap() > 0.0
                                && run["frequency"].as_f64().unwrap() > 0.0
                        );
                    }
                }
            }
        }
    }
    if !r["ellipse"].is_null() {
        check_ellipse(&r["ellipse"]);
    }
    assert_eq!(
        r["cycles"],
        r["crossovers"]
            .get(0)
            .map_or(Value::Array(vec![]), |c| c["cycles"].clone())
    );
}

#[test]
fn df_oracle_mode_matches_exact() {
    let f = Fixture::new();
    let nl = f.file("fig4.json", NL_FIG4);
    let exact = dfkit(&[&"df", &nl, &"--grid", &"0.105", &"21", &"--mode", &"exact"]);
    let oracle = dfkit(&[&"df", &nl, &"--grid", &"0.105", &"21", &"--mode", &"oracle"]);
    assert!(exact.status.success() && oracle.status.success());
    let (h, e) = csv_columns(&stdout(&exact));
    let (_, o) = csv_columns(&stdout(&oracle));
    assert_eq!(h, vec!["X", "F"]);
    assert_eq!(e.len(), 200);
    let max = e
        .iter()
        .zip(&o)
        .map(|(a, b)| (a[1] - b[1]).abs())
        .fold(0.0, f64::max);
    assert!(max <= 1e-6, "max deviation {max}");
    // plateau to X = 2, peak near 5
    assert!(e.iter().filter(|r| r[0] <= 2.0).all(|r| r[1] == 0.0));
    let peak = e.iter().max_by(|a, b| a[1].total_cmp(&b[1])).unwrap()[0];
    assert!((4.0..6.5).contains(&peak), "peak at {peak}");
}

#[test]
fn df_both_and_svg() {
    let f = Fixture::new();
    let nl = f.file("a.json", NL_A);
    let both = dfkit(&[&"df", &nl, &"--mode", &"both"]);
    let (h, rows) = csv_columns(&stdout(&both));
    assert_eq!(h, vec!["X", "F_exact", "F_qualitative"]);
    assert_eq!(rows.len(), 200);
    assert!((rows[199][0] - 27.5).abs() < 1e-12);
    let out = f.dir.path().join("df.svg");
    let svg = dfkit(&[
        &"df", &nl, &"--mode", &"both", &"--out", &"svg", &"-o", &out,
    ]);
    assert!(svg.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("<svg") && text.contains("stroke-dasharray"));
    assert_eq!(text.matches("<polyline").count(), 2);
}

#[test]
fn deterministic_output() {
    let f = Fixture::new();
    let nl = f.file("b.json", NL_B);
    let plant = f.plant_b(15.0);
    let a = dfkit(&[&"analyze", &nl, &plant, &"--unstable-ellipses"]);
    let b = dfkit(&[&"analyze", &nl, &plant, &"--unstable-ellipses"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = dfkit(&[&"df", &nl, &"--mode", &"both"]);
    let d = dfkit(&[&"df", &nl, &"--mode", &"both"]);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn analyze_case_studies() {
    let f = Fixture::new();
    let (nl_a, nl_b) = (f.file("a.json", NL_A), f.file("b.json", NL_B));

    let (o, r) = analyze(&nl_a, &f.plant_a(2.5));
    assert!(o.status.success());
    assert_report_schema(&r);
    assert!((r["omega"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-9);
    let labels: Vec<&str> = r["cycles"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["stability"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["unstable", "stable"]);

    let (o, r) = analyze(&nl_b, &f.plant_b(5.0));
    assert!(o.status.success());
    assert_report_schema(&r);
    assert_eq!(r["cycles"].as_array().unwrap().len(), 0);
    assert_eq!(r["note"], "origin globally asymptotically stable");

    let (_, r) = analyze(&nl_b, &f.plant_b(15.0));
    assert_report_schema(&r);
    assert_eq!(r["cycles"].as_array().unwrap().len(), 3);
}

#[test]
fn analyze_report_to_file_with_qualitative_curve() {
    let f = Fixture::new();
    let nl = f.file("b.json", NL_B);
    let out = f.dir.path().join("report.json");
    let o = dfkit(&[
        &"analyze",
        &nl,
        &f.plant_b(30.0),
        &"--qualitative",
        &"--out",
        &out,
    ]);
    assert!(o.status.success());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_report_schema(&r);
    assert_eq!(r["describing_function"], "qualitative");
    assert_eq!(r["cycles"][0]["stability"], "stable");
}

#[test]
fn exit_codes() {
    let f = Fixture::new();
    let nl = f.file("a.json", NL_A);
    // empty grid
    let o = dfkit(&[&"df", &nl, &"--grid", &"1", &"0.5"]);
    assert_eq!(o.status.code(), Some(2));
    // schema violations carry a position or the offending field
    let bad = f.file("bad.json", "{\"x\": [1, 2],\n \"y\": [1, 2], \"z\": 0}");
    let o = dfkit(&[&"df", &bad]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains('z'), "{err}");
    let uneven = f.file("uneven.json", r#"{"x": [1, 2], "y": [1]}"#);
    let o = dfkit(&[&"df", &uneven]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("y has 1"));
    let improper = f.file(
        "improper.json",
        r#"{"num": [1, 0, 0], "den": [1, 1], "k": 1}"#,
    );
    assert_eq!(dfkit(&[&"analyze", &nl, &improper]).status.code(), Some(2));
    assert_eq!(dfkit(&[&"nyquist", &bad]).status.code(), Some(2));
    assert_eq!(
        dfkit(&[&"df", &f.dir.path().join("missing.json")])
            .status
            .code(),
        Some(2)
    );
    // no crossover: exit 3, report still carries the describing function
    let lag = f.file("lag.json", r#"{"num": [1], "den": [1, 1], "k": 1}"#);
    let (o, r) = analyze(&nl, &lag);
    assert_eq!(o.status.code(), Some(3));
    assert_report_schema(&r);
    assert_eq!(r["df"]["X"].as_array().unwrap().len(), 200);
    assert!(r["omega"].is_null());
}

#[test]
fn nyquist_family_scales_with_gain() {
    let f = Fixture::new();
    let plant = f.plant_a(1.0);
    let o = dfkit(&[
        &"nyquist",
        &plant,
        &"--k",
        &"1",
        &"--k",
        &"2.5",
        &"--k",
        &"6",
        &"--points",
        &"50",
    ]);
    assert!(o.status.success());
    let (h, rows) = csv_columns(&stdout(&o));
    assert_eq!(h, vec!["k", "omega", "re", "im"]);
    assert_eq!(rows.len(), 150);
    for i in 0..50 {
        for (j, k) in [(50, 2.5), (100, 6.0)] {
            let (base, scaled) = (&rows[i], &rows[i + j]);
            assert_eq!(base[1], scaled[1]);
            assert!((scaled[2] - k * base[2]).abs() <= 1e-12 * scaled[2].abs().max(1.0));
            assert!((scaled[3] - k * base[3]).abs() <= 1e-12 * scaled[3].abs().max(1.0));
        }
    }
    let single = dfkit(&[&"nyquist", &plant, &"--points", &"10"]);
    assert!(stdout(&single).starts_with("omega,re,im\n"));
    let nl = f.file("a.json", NL_A);
    let svg = dfkit(&[
        &"nyquist",
        &plant,
        &"--omega-range",
        &"0.3",
        &"100",
        &"--mark-neg-axis",
        &"--nl",
        &nl,
        &"--out",
        &"svg",
    ]);
    let text = stdout(&svg);
    assert!(text.contains("<circle") && text.contains("-1/F(X)"));
}

#[test]
fn simulate_subcommand() {
    let f = Fixture::new();
    let nl = f.file("b.json", NL_B);
    let o = dfkit(&[
        &"simulate",
        &nl,
        &f.plant_b(30.0),
        &"--x0",
        &"0,-1,2",
        &"--t-end",
        &"5",
        &"--dt",
        &"0.01",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv_columns(&stdout(&o));
    assert_eq!(h, vec!["t", "x1", "x2", "x3", "x", "y"]);
    assert_eq!(rows.len(), 501);
    assert_eq!(&rows[0][1..4], &[0.0, -1.0, 2.0]);
    let verdict: Value = serde_json::from_slice(o.stderr.trim_ascii()).unwrap();
    assert!(verdict["verdict"].is_string());
    let wrong = dfkit(&[
        &"simulate",
        &nl,
        &f.plant_b(30.0),
        &"--x0",
        &"0,1",
        &"--t-end",
        &"5",
        &"--dt",
        &"0.01",
    ]);
    assert_eq!(wrong.status.code(), Some(2));
}
