use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_levyhomog");

const SMALL: &str = r#"
[problem]
alpha = 1
c = "2+cos(2*pi*y)"
g = "sin(2*pi*y)"
phi = "0"
far_field = 0

[discretization]
n_torus = 64

[sweep]
epsilons = 1/4, 1/8
refinement = 8
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.ini");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: Option<&Path>, out: Option<&Path>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("LEVYHOMOG_THREADS");
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn selftest_needs_no_config() {
    let o = run(&["selftest"], None, None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("checks passed"));
}

#[test]
fn missing_config_is_a_config_error() {
    assert_eq!(run(&["cell"], None, None).status.code(), Some(2));
    let o = run(&["cell"], Some(Path::new("/nonexistent/run.ini")), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("io error"));
}

#[test]
fn bad_alpha_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("alpha = 1", "alpha = 2.5"));
    let o = run(&["effective"], Some(&cfg), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`alpha`"), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_exits_2() {
    assert_eq!(run(&["frobnicate"], None, None).status.code(), Some(2));
}

#[test]
fn cell_and_effective_report_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = run(&["cell", "--method", "direct"], Some(&cfg), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("d=") && text.contains("rho="));

    let o = run(&["effective", "--method", "direct"], Some(&cfg), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout).into_owned();
    let c_bar: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("c_bar="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((c_bar - 3f64.sqrt()).abs() < 1e-2);
    assert!(text.contains("slope_check=true"));
}

#[test]
fn eikonal_requires_discounted_method() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("far_field = 0", "far_field = 0\na = \"1\"")
        + "\n[cell]\nhamiltonian = eikonal\n";
    let cfg = write_config(dir.path(), &text);
    let o = run(&["cell", "--method", "direct"], Some(&cfg), None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = run(&["cell"], Some(&cfg), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn solve_writes_solution_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &SMALL.replace("far_field = 0", "far_field = 0\nepsilon = 1/4"),
    );
    let out = dir.path().join("out");
    let o = run(&["solve"], Some(&cfg), Some(&out));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(csv.starts_with("x,u\n"));
    // closed domain at h = 1/32
    assert_eq!(csv.lines().count(), 1 + 33);
    assert!(out.join("solution.json").exists());
}

#[test]
fn homogenize_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["homogenize"], Some(&cfg), Some(out));
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for name in ["convergence.csv", "convergence.svg"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    assert!(a.join("convergence.json").exists());
}

#[test]
fn tampered_quadrature_fails_with_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = run(&["homogenize", "--debug-tamper"], Some(&cfg), Some(&out));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("comparison violated"), "{}", stderr(&o));
    assert!(!out.exists() || std::fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn invalid_thread_cap_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = Command::new(BIN)
        .args(["homogenize", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .env("LEVYHOMOG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("LEVYHOMOG_THREADS"));
}

#[test]
fn split_check_passes_on_reference_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = run(&["split-check"], Some(&cfg), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
