use std::path::Path;
use std::process::{Command, Output};

fn ppife(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppife"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_BACKTRACE", "0")
        .output()
        .expect("spawn ppife")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const PLANE: &str = r#"
n = [4, 6]
output = "res"
[domain]
lo = [-1, -1, -1]
hi = [1, 1, 1]
[interface]
kind = "plane"
normal = [1, 0, 1]
offset = 0.3
[coefficients]
beta_minus = 1
beta_plus = 10
"#;

#[test]
fn example1_writes_all_outputs_and_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let o = ppife(&["example", "1", "--n", "4,8", "--out", "o"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["errors.csv", "stats.csv", "tau.obj", "solution.vtk"] {
        assert!(dir.path().join("o").join(f).is_file(), "missing {f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("o/errors.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,h,e_inf,e_0,e_1,e_energy,assembly_s,solve_s,interface_element_pct"
    );
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[2..6].iter().all(|e| *e < 1e-10), "{line}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("plane.toml"), PLANE).unwrap();
    let a = ppife(&["run", "plane.toml"], dir.path());
    assert!(a.status.success(), "{}", stderr(&a));
    let first = std::fs::read(dir.path().join("res/errors.csv")).unwrap();
    let first_vtk = std::fs::read(dir.path().join("res/solution.vtk")).unwrap();
    let b = ppife(&["run", "plane.toml", "--threads", "1"], dir.path());
    assert!(b.status.success(), "{}", stderr(&b));
    assert_eq!(
        first,
        std::fs::read(dir.path().join("res/errors.csv")).unwrap()
    );
    assert_eq!(
        first_vtk,
        std::fs::read(dir.path().join("res/solution.vtk")).unwrap()
    );
}

#[test]
fn bad_epsilon_is_reported_by_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PLANE.to_string() + "[scheme]\nepsilon = 2\n";
    std::fs::write(dir.path().join("bad.toml"), cfg).unwrap();
    let o = ppife(&["run", "bad.toml"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("scheme.epsilon"), "{}", stderr(&o));
}

#[test]
fn unknown_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PLANE.replace("offset = 0.3", "offset = 0.3\nofset = 1");
    std::fs::write(dir.path().join("bad.toml"), cfg).unwrap();
    let o = ppife(&["run", "bad.toml"], dir.path());
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("ofset") && err.contains("bad.toml:"), "{err}");
}

#[test]
fn example4_without_cloud_explains_how() {
    let dir = tempfile::tempdir().unwrap();
    let o = ppife(&["example", "4"], dir.path());
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(
        err.contains("--cloud") && err.contains("--synthetic"),
        "{err}"
    );
}

#[test]
fn missing_cloud_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ppife(&["example", "4", "--cloud", "nope.xyz"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nope.xyz"), "{}", stderr(&o));
}

#[test]
fn stats_with_probes() {
    let dir = tempfile::tempdir().unwrap();
    let o = ppife(
        &[
            "stats",
            "2",
            "--n",
            "6,8",
            "--probes",
            "--samples",
            "10",
            "--probe-elements",
            "20",
            "--out",
            "s",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let probes = std::fs::read_to_string(dir.path().join("s/probes.csv")).unwrap();
    assert_eq!(probes.lines().count(), 3);
    let stats = std::fs::read_to_string(dir.path().join("s/stats.csv")).unwrap();
    assert_eq!(stats.lines().count(), 3);
}
