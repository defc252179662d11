use std::path::Path;
use std::process::Command;

use bargmann_cli::{run_pipeline, CheckSelection, PipelineConfig};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bargmann"));
    c.env("NO_COLOR", "1");
    c
}

/// Coarser than the reference grid; enough for σ and the tables.
fn quick() -> PipelineConfig {
    PipelineConfig { x_min: 1e-4, r_max: 60.0, intervals: 1500, per_decade: 15, ..PipelineConfig::default() }
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    v.sort();
    v
}

#[test]
fn default_config_reports_golden_sigma() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig { checks: CheckSelection::parse("AC-1").unwrap(), ..quick() };
    let report = run_pipeline(&cfg, dir.path()).unwrap();
    assert!((report.sigma.unwrap() - 0.2053483144).abs() < 1e-6);
    assert_eq!(report.checks.len(), 1);
    assert!(report.checks[0].passed);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!((json["sigma"].as_f64().unwrap() - 0.2053483144).abs() < 1e-6);
    assert_eq!(json["manifest"].as_array().unwrap().len(), 7);
}

#[test]
fn kappa_equal_phi_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let st = bin().args(["run", "--kappa", "0.944", "--out"]).arg(&out).output().unwrap().status;
    assert_eq!(st.code(), Some(3));
    assert!(!out.exists(), "nothing computed or written");
}

#[test]
fn single_output_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(
        &cfg_path,
        "# quick grid\nx_min = 1e-4\nr_max = 60\nintervals = 1500\nper_decade = 15\noutputs = [\"V0\"]\nchecks = none\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = bin().args(["run", "--config"]).arg(&cfg_path).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files(&out), vec!["V0.csv", "report.json"]);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["manifest"].as_array().unwrap().len(), 1);
    let head = std::fs::read_to_string(out.join("V0.csv")).unwrap();
    assert!(head.starts_with("x,V11,V12,V22\n"));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(!stdout.contains('\x1b'));
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        outputs: Some(vec!["V3".into(), "Phi3".into(), "asymptotic_D".into()]),
        checks: CheckSelection::None,
        ..quick()
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_pipeline(&cfg, &a).unwrap();
    run_pipeline(&cfg, &b).unwrap();
    for f in files(&a) {
        assert_eq!(std::fs::read(a.join(&f)).unwrap(), std::fs::read(b.join(&f)).unwrap(), "{f}");
    }
    let phi = std::fs::read_to_string(a.join("Phi3.csv")).unwrap();
    assert!(phi.starts_with("x,phi_S,phi_D\n"));
}

#[test]
fn raise_adds_v4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        PipelineConfig { raise: Some(bargmann::chain::RaiseVariant::Inverse), checks: CheckSelection::None, ..quick() };
    let r = run_pipeline(&cfg, dir.path()).unwrap();
    assert!(r.manifest.iter().any(|m| m.name == "V4"));
    assert_eq!(r.raise.as_deref(), Some("inverse"));
}

#[test]
fn argument_errors_exit_3() {
    for args in [
        &["run", "--checks", "AC-12"][..],
        &["run", "--raise", "sideways"],
        &["run", "--bogus"],
        &["run", "--golden", "--config", "x.cfg"],
    ] {
        let st =
            bin().args(args).arg("--out").arg(std::env::temp_dir().join("unused-bargmann")).output().unwrap().status;
        assert_eq!(st.code(), Some(3), "{args:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.cfg");
    assert_eq!(bin().args(["run", "--config"]).arg(&missing).output().unwrap().status.code(), Some(3));
}

#[test]
fn failing_check_exits_1() {
    // The stage-3 inversion criterion does not hold for the reference data.
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args([
            "run",
            "--x-min",
            "1e-4",
            "--r-max",
            "60",
            "--intervals",
            "1500",
            "--outputs",
            "V0",
            "--checks",
            "AC-1,AC-6",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("PASS AC-1") && s.contains("FAIL AC-6"), "{s}");
}

#[test]
fn computational_error_exits_2() {
    // A scan bound below the only σ root leaves the chain without σ.
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args([
            "run",
            "--x-min",
            "1e-4",
            "--r-max",
            "60",
            "--intervals",
            "1500",
            "--sigma-max",
            "0.1",
            "--checks",
            "none",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stage chain"));
}
