use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use horomap_cli::config::Config;
use horomap_energy::{discrete_f, read_field_csv};
use horomap_solver::setup;

fn horomap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horomap")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const PROBLEM: &str = r#"
[target]
family = "R"
rank = 2

[domain]
lo = [-1.0, -1.0]
hi = [1.0, 1.0]
h = 0.125

[[singularities]]
kind = "point"
position = [0.0, 0.0]
offset = [0.0]
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn busemann_of_the_unit_height_point_is_log_two() {
    let o = horomap(&["geo", "busemann", "--family", "R", "--p", "0,1"]);
    assert!(o.status.success());
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 2f64.ln()).abs() < 1e-14);
}

#[test]
fn distance_to_itself_is_zero_and_geodesics_have_unit_speed() {
    let o = horomap(&["geo", "dist", "--family", "H", "--p", "0.3,1,-1,0,2,0,0.5,-0.2", "--q", "0.3,1,-1,0,2,0,0.5,-0.2"]);
    assert_eq!(stdout(&o).trim(), "0");
    let o = horomap(&["geo", "geodesic", "--family", "C", "--rank", "3", "--p", "0,0.2,0,0,0,0.1", "--dir", "1,0,-1,0,2,0", "--t", "2.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let end = lines.next().unwrap().replace(' ', ",");
    let d: f64 = lines.next().unwrap().strip_prefix("dist ").unwrap().parse().unwrap();
    assert!((d - 2.5).abs() < 1e-6);
    let o = horomap(&["geo", "dist", "--family", "C", "--rank", "3", "--p", "0,0.2,0,0,0,0.1", "--q", &end]);
    let d2: f64 = stdout(&o).trim().parse().unwrap();
    assert!((d2 - d).abs() < 1e-9);
}

#[test]
fn bad_input_exits_one() {
    assert_eq!(horomap(&["geo", "dist", "--family", "X", "--p", "0,0", "--q", "0,0"]).status.code(), Some(1));
    assert_eq!(horomap(&["geo", "dist", "--p", "0", "--q", "0,0"]).status.code(), Some(1));
    assert_eq!(horomap(&["verify", "--lemma", "lemma9.9"]).status.code(), Some(1));
    assert_eq!(horomap(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(horomap(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write(dir.path(), "bad.toml", &format!("{PROBLEM}\n[boundary]\nconstant = {{ u = 0.0 }}\ntable = \"x.csv\"\n"));
    let o = horomap(&["solve", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    assert!(!out.exists());
    let o = horomap(&["solve", dir.path().join("missing.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn trivial_problem_needs_no_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write(dir.path(), "c.toml", &format!("{PROBLEM}\n[boundary]\nconstant = {{ u = 0.0, v = [0.0] }}\n"));
    let o = horomap(&["solve", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("status converged"));
    assert!(text.contains("sweeps 0"));
    assert!(text.contains("geodesic_oracle_match true"));
    let f: f64 = text.lines().find_map(|l| l.strip_prefix("final_energy ")).unwrap().parse().unwrap();
    assert!(f <= 1e-12);
}

#[test]
fn saved_fields_reload_to_the_same_energy_and_runs_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_text = format!("{PROBLEM}\n[boundary]\naffine = {{ u = [0.1, 0.3, -0.2], v = [[0.2, 0.1, 0.0]] }}\n");
    let cfg = write(dir.path(), "a.toml", &cfg_text);
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let o = horomap(&["solve", &cfg, "--out", out.to_str().unwrap(), "--workers", workers]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a", "1");
    let b = run("b", "1");
    for name in ["field.csv", "field.json", "report.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let c = run("c", "3");
    assert_eq!(fs::read(a.join("field.csv")).unwrap(), fs::read(c.join("field.csv")).unwrap());

    let config = Config::parse(&cfg_text, dir.path()).unwrap();
    let s = setup(&config.problem).unwrap();
    let field = read_field_csv(fs::File::open(a.join("field.csv")).unwrap(), &s.grid).unwrap();
    let report: serde_json::Value = serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    let reported = report["final_energy"].as_f64().unwrap();
    let f = discrete_f(&s.energy, &field).unwrap();
    assert!((f - reported).abs() <= 1e-12 * reported.abs().max(1.0), "{f} vs {reported}");
}

#[test]
fn verify_prints_one_row_per_requested_check() {
    let o = horomap(&["verify", "--lemma", "lemma2.4", "--lemma", "isometry", "--samples", "20", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("lemma2.4") && rows[1].starts_with("isometry"));
    assert!(rows.iter().all(|r| r.split_whitespace().nth(1) == Some("PASS")));
}
