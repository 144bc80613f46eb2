use std::io::Write;
use std::process::{Command, Output};

fn bbgkz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbgkz")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_a1_passes() {
    let o = bbgkz(&["verify", "--fixture", "a1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["schema_version"], 1);
    let worst = v["end_to_end"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["deviation"].as_f64().unwrap())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6);
}

#[test]
fn verify_report_is_deterministic() {
    let strip = |o: &Output| {
        let mut v: serde_json::Value = serde_json::from_str(&stdout(o)).unwrap();
        v.as_object_mut().unwrap().remove("runtimes");
        v.to_string()
    };
    let args = ["verify", "--fixture", "a1", "--no-contour", "--format", "json"];
    assert_eq!(strip(&bbgkz(&args)), strip(&bbgkz(&args)));
}

#[test]
fn box_a1_minus() {
    let o = bbgkz(&["box", "minus", "--fixture", "a1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let labels: Vec<&str> = v["box"][0]["sectors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["0", "(1/2,0,1/2)"]);
}

#[test]
fn missing_deg_line_is_an_input_error() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "2 3\n1 0\n1 1\n1 2\ntriangulation plus\n1 2\n2 3\ntriangulation minus\n1 3").unwrap();
    let o = bbgkz(&["inspect", "--fixture", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("deg"));
}

#[test]
fn fixture_file_round_trips() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(f, "{}", bbgkz_core::Fixture::a1().to_text()).unwrap();
    let o = bbgkz(&["essential", "--fixture", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("essential cones"));
}

#[test]
fn unknown_triangulation_label() {
    let o = bbgkz(&["fm", "--fixture", "a1", "--minus", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn transforms_agree_from_the_command_line() {
    let get = |cmd: &str| {
        let o = bbgkz(&[cmd, "--fixture", "conifold", "--eps", "0.0123", "--format", "json"]);
        assert_eq!(o.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        v["matrices"][0]["matrix"].clone()
    };
    let (fm, ac) = (get("fm"), get("ac"));
    for part in ["re", "im"] {
        let a = fm[part].as_array().unwrap();
        let b = ac[part].as_array().unwrap();
        for (ra, rb) in a.iter().zip(b) {
            for (x, y) in ra.as_array().unwrap().iter().zip(rb.as_array().unwrap()) {
                assert!((x.as_f64().unwrap() - y.as_f64().unwrap()).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn dual_status_reports_open_pairing() {
    let o = bbgkz(&["dual-status", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verified"], false);
    assert_eq!(v["implemented"].as_array().unwrap().len(), 3);
    assert_eq!(v["open_slots"].as_array().unwrap().len(), 1);
}
