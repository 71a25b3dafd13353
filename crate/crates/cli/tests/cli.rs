use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lrinv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrinv")).args(args).output().expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

const SMALL: &str = r#"
name = "small"
kappa = 1.0
horizon = [0.0, 1.0]
states = [[0, 0], [1, 1], [2, -2]]
samples = 3

[grid]
points = 64

[profile]
mass = { kind = "constant", value = 1.0 }
omega = { kind = "sinusoid", mean = 1.0, amplitude = 0.2, frequency = 2.0 }
field = { kind = "constant", value = 0.5 }
"#;

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn no_arguments_prints_help() {
    let out = lrinv(&[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("Usage"));
}

#[test]
fn list_names_every_scenario() {
    let out = lrinv(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let s = text(&out.stdout);
    for name in ["landau-constant", "landau-quench", "oscillator-sinusoidal", "nc-landau", "nc-oscillator", "custom", "b-quench"] {
        assert!(s.contains(name), "{name} missing from:\n{s}");
    }
}

#[test]
fn unknown_scenario_suggests_close_names() {
    let out = lrinv(&["run", "landau-constnt"]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.contains("did you mean") && err.contains("landau-constant"), "{err}");
}

#[test]
fn missing_kappa_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace("kappa = 1.0\n", "");
    let path = write(dir.path(), "no-kappa.toml", &body);
    let out = lrinv(&["run", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("kappa"), "{}", text(&out.stderr));
}

#[test]
fn invalid_value_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.toml", &SMALL.replace("kappa = 1.0", "kappa = -1.0"));
    let out = lrinv(&["run", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("kappa"));
}

#[test]
fn negative_mass_aborts_numerically() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace(
        r#"mass = { kind = "constant", value = 1.0 }"#,
        r#"mass = { kind = "ramp", from = 1.0, to = -1.0, start = 0.2, end = 0.8 }"#,
    );
    let path = write(dir.path(), "neg.toml", &body);
    let out = lrinv(&["run", &path, "--out", &dir.path().join("o").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(3), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("non-positive mass"), "{}", text(&out.stderr));
}

#[test]
fn file_scenario_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "small.toml", SMALL);
    let out_dir = dir.path().join("out");
    let out = lrinv(&["run", &path, "--out", &out_dir.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    for f in ["sigma.csv", "residuals.csv", "report.json", "phases_0_0.csv", "phases_1_1.csv", "phases_2_-2.csv"] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
    let sigma = fs::read_to_string(out_dir.join("sigma.csv")).unwrap();
    assert!(sigma.starts_with("t,sigma,sigma_dot,mu,omega_sq,nu,alpha,beta,gamma,conservation\n"));
    let phases = fs::read_to_string(out_dir.join("phases_1_1.csv")).unwrap();
    assert!(phases.starts_with("t,alpha_total,alpha_dynamical,alpha_geometric,residual\n"));
    assert_eq!(phases.lines().count(), 4);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "small.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(lrinv(&["run", &path, "--out", &d.to_string_lossy()]).status.code(), Some(0));
    }
    for f in ["sigma.csv", "residuals.csv", "phases_0_0.csv", "phases_2_-2.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn coarse_grid_surfaces_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrinv(&["verify", "landau-constant", "--grid", "32", "--out", &dir.path().to_string_lossy()]);
    assert_eq!(out.status.code(), Some(1));
    let s = text(&out.stdout);
    assert!(s.contains("warning:") && s.contains("under-resolved"), "{s}");
    assert!(s.contains("FAIL"));
}

#[test]
fn built_in_scenario_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrinv(&["verify", "landau-constant", "--out", &dir.path().to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    assert!(text(&out.stdout).contains("0 failed"));
}
