use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elongate"))
}

fn write_config(dir: &Path, density: &str, ells: &str) -> PathBuf {
    let path = dir.join("config.json");
    let text = format!(
        r#"{{
  "domain": {{"r": 1, "n": 2, "cross_section": "unit-box", "ell_list": {ells}, "vertical_halfwidths": [1.0]}},
  "grid": {{"target_h": 0.25}},
  "density": {density},
  "load": {{"kind": "constant", "value": 2.0}},
  "study": {{"audit_perturbations": 20, "audit_blended": 5}},
  "output": {{"directory": "{}", "formats": ["csv", "binary"]}}
}}"#,
        dir.join("out").display()
    );
    fs::write(&path, text).unwrap();
    path
}

fn quadratic() -> &'static str {
    r#"{"kind": "quadratic"}"#
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = run(bin().args(["solve", "--config", "/nonexistent/config.json"]));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
}

#[test]
fn solve_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), quadratic(), "[3]");
    let out = run(bin().args(["solve", "--config"]).arg(&cfg));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("out");
    for name in [
        "resolved-config.json",
        "field.csv",
        "field.csv.json",
        "field.bin",
        "field.bin.json",
        "limit.csv",
        "solve-report.json",
        "minimality-audit.json",
    ] {
        assert!(o.join(name).exists(), "{name} missing");
    }
    let audit: serde_json::Value = serde_json::from_str(&fs::read_to_string(o.join("minimality-audit.json")).unwrap()).unwrap();
    assert_eq!(audit["violations"], 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(o.join("solve-report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    let nodes = 25 * 9;
    assert_eq!(fs::metadata(o.join("field.bin")).unwrap().len(), 8 * nodes);
    assert_eq!(fs::read_to_string(o.join("field.csv")).unwrap().lines().count(), 1 + nodes as usize);
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), quadratic(), "[2]");
    assert_eq!(run(bin().args(["solve", "--config"]).arg(&cfg)).status.code(), Some(0));
    let first = fs::read_to_string(dir.path().join("out/resolved-config.json")).unwrap();
    let report1 = fs::read_to_string(dir.path().join("out/field.csv")).unwrap();
    let copy = dir.path().join("resolved.json");
    fs::write(&copy, &first).unwrap();
    assert_eq!(run(bin().args(["solve", "--config"]).arg(&copy)).status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.path().join("out/resolved-config.json")).unwrap(), first);
    assert_eq!(fs::read_to_string(dir.path().join("out/field.csv")).unwrap(), report1);
}

#[test]
fn dry_run_solves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), quadratic(), "[2, 3]");
    let out = run(bin().args(["--dry-run", "sweep", "--config"]).arg(&cfg));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("ell = 3: 225 nodes"), "{text}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn sweep_outputs_and_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), quadratic(), "[2, 3, 4, 5, 6, 7, 8]");
    let out = run(bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")));
    let o = dir.path().join("o");
    let csv = fs::read_to_string(o.join("sweep.csv")).unwrap();
    assert!(csv.starts_with(
        "ell,ell0,h_horiz,h_vert,nodes,iters,converged,J_ell,total_grad_energy,err_grad_p,err_w1p,hgrad_p,runtime_ms\n"
    ));
    assert_eq!(csv.lines().count(), 8);
    let verdicts: serde_json::Value = serde_json::from_str(&fs::read_to_string(o.join("verdicts.json")).unwrap()).unwrap();
    let exp_rate = verdicts.as_array().unwrap().iter().find(|v| v["claim"] == "exponential-rate").unwrap();
    assert_eq!(exp_rate["status"], "pass");
    let power_rate = verdicts.as_array().unwrap().iter().find(|v| v["claim"] == "power-rate").unwrap();
    assert_eq!(power_rate["status"], "skipped");
    assert!(o.join("plot-ell-vs-ln-err.dat").exists());
    assert!(o.join("plot-lnell-vs-ln-err.dat").exists());
    assert!(o.join("fits.json").exists());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn short_sweep_warns_about_fits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), quadratic(), "[2, 3]");
    let out = run(bin().args(["sweep", "--config"]).arg(&cfg));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient data"));
    let fits = fs::read_to_string(dir.path().join("out/fits.json")).unwrap();
    assert!(fits.contains("insufficient data"));
}

#[test]
fn unknown_density_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kind": "cubic", "p": 3}"#, "[2]");
    let out = run(bin().args(["sweep", "--config"]).arg(&cfg));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cubic"));
}

#[test]
fn density_audits() {
    let ok = run(bin().args(["audit-density", "--kind", "pdirichlet", "--p", "4", "--samples", "2000"]));
    assert_eq!(ok.status.code(), Some(0));
    let bad = run(bin().args(["audit-density", "--kind", "quadratic", "--lambda", "0.6", "--samples", "2000"]));
    assert_eq!(bad.status.code(), Some(3));
    let again = run(bin().args(["audit-density", "--kind", "pdirichlet", "--p", "4", "--samples", "2000"]));
    assert_eq!(ok.stdout, again.stdout);
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .args(["audit-density", "--kind", "quadratic", "--samples", "500", "--out"])
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("density-audit.json").exists());
}

#[test]
fn profile_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), quadratic(), "[2, 4]");
    let out = run(bin().args(["profile", "--config"]).arg(&cfg));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("out/profile.csv")).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (t, g) = l.split_once(',').unwrap();
            (t.parse().unwrap(), g.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 4);
    for w in rows.windows(2) {
        assert!(w[1].0 > w[0].0 && w[1].1 >= w[0].1);
    }
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = run(bin().env("ELONGATE_THREADS", "many").args(["audit-density", "--kind", "quadratic"]));
    assert_eq!(out.status.code(), Some(1));
}
