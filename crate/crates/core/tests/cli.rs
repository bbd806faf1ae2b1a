use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use seglab::io::{read_field_dump, CONVERGENCE_HEADER, FIELD_HEADER};

const TWO: &str = "populations.segments = 0:-1.37:1.37:1, 1:1.77:4.51:1\n";

fn seglab(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_seglab"));
    cmd.args(args);
    match out {
        Some(dir) => cmd.env("SEGLAB_OUTPUT_DIR", dir),
        None => cmd.env_remove("SEGLAB_OUTPUT_DIR"),
    };
    cmd.output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.conf");
    std::fs::write(&p, body).unwrap();
    p
}

fn run_config(body: &str) -> (tempfile::TempDir, PathBuf, Output) {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), body);
    let out = tmp.path().join("out");
    let res = seglab(&["run", cfg.to_str().unwrap()], Some(&out));
    (tmp, out, res)
}

#[test]
fn minimal_run_writes_one_dump_and_a_log() {
    let (_tmp, out, res) = run_config("domain.h = 0.0625\npopulations.segments = 0:0:3.14159:1\nepsilon.schedule = 1\n");
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let dump = read_field_dump(&out.join("field_e0_u0.csv")).unwrap();
    assert_eq!(dump.grid.nx(), dump.grid.ny());
    let log = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(log.lines().next(), Some(CONVERGENCE_HEADER));
    assert!(log.lines().count() > 1);
    let fields = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("field_"))
        .count();
    assert_eq!(fields, 1);
}

#[test]
fn summary_references_existing_artifacts() {
    let body = format!("domain.h = 0.0625\n{TWO}epsilon.schedule = 1, 0.3, 0.1\ndiagnostics.enabled = all\n");
    let (_tmp, out, res) = run_config(&body);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("file,kind,key,value,status"));
    let mut dumps = 0;
    for line in lines {
        let file = line.split(',').next().unwrap();
        let path = out.join(file);
        assert!(path.exists(), "{file} listed but missing");
        if file.starts_with("field_") {
            let d = read_field_dump(&path).unwrap();
            assert!(d.field.values().iter().all(|v| v.is_finite() && *v >= 0.0));
            dumps += 1;
        } else if file.starts_with("diag_") {
            let text = std::fs::read_to_string(&path).unwrap();
            assert!(text.starts_with("# "), "{file}");
        }
    }
    assert_eq!(dumps, 6);
    let first = std::fs::read_to_string(out.join("field_e0_u0.csv")).unwrap();
    assert_eq!(first.lines().next(), Some(FIELD_HEADER));
}

#[test]
fn overlapping_arcs_are_a_config_error_without_artifacts() {
    let (_tmp, out, res) =
        run_config("domain.h = 0.0625\npopulations.segments = 0:0:2:1, 1:1.5:3:1\nepsilon.schedule = 1\n");
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn config_errors_name_the_line() {
    let (_tmp, _out, res) = run_config("domain.h = 0.0625\nbogus.key = 1\n");
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 2"));
    let missing = seglab(&["run", "/nonexistent/seglab.conf"], None);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn starved_solver_reports_nonconvergence() {
    let body = format!("domain.h = 0.0625\n{TWO}epsilon.schedule = 0.01\nsolver.max_outer = 1\n");
    let (_tmp, out, res) = run_config(&body);
    assert_eq!(res.status.code(), Some(3));
    assert!(out.join("convergence.csv").exists());
}

#[test]
fn env_var_overrides_configured_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let configured = tmp.path().join("configured");
    let body = format!(
        "domain.h = 0.0625\npopulations.segments = 0:0:3:1\nepsilon.schedule = 1\noutput.dir = {}\n",
        configured.display()
    );
    let cfg = write_config(tmp.path(), &body);
    let env_dir = tmp.path().join("from_env");
    assert_eq!(seglab(&["run", cfg.to_str().unwrap()], Some(&env_dir)).status.code(), Some(0));
    assert!(env_dir.join("summary.csv").exists());
    assert!(!configured.exists());
    assert_eq!(seglab(&["run", cfg.to_str().unwrap()], None).status.code(), Some(0));
    assert!(configured.join("summary.csv").exists());
}

#[test]
fn verify_exit_codes() {
    assert_eq!(seglab(&["verify", "--samples", "500"], None).status.code(), Some(0));
    let bad = seglab(&["verify", "--lambda", "3", "--Lambda", "1"], None);
    assert_eq!(bad.status.code(), Some(2));
    let weak = seglab(&["verify", "--samples", "100", "--alpha-scale", "0.5"], None);
    assert_eq!(weak.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&weak.stdout).contains("FAIL"));
}

#[test]
fn dump_barrier_prints_one_record() {
    let ok = seglab(&["dump-barrier", "sub", "1", "2", "1", "1", "2", "2"], None);
    assert_eq!(ok.status.code(), Some(0));
    let text = String::from_utf8_lossy(&ok.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kind,a,b,alpha,lambda,Lambda,n,h,worst_violation,pass");
    assert!(lines[1].starts_with("sub,") && lines[1].ends_with(",true"));
    let low = seglab(&["dump-barrier", "super", "1", "2", "0.2", "1", "2", "2"], None);
    assert_eq!(low.status.code(), Some(4));
    let kind = seglab(&["dump-barrier", "sideways", "1", "2", "1", "1", "2", "2"], None);
    assert_eq!(kind.status.code(), Some(2));
}
