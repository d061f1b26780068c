use std::path::Path;
use std::process::{Command, Output};

fn santalo(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_santalo"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no line {key} in\n{text}"));
    line[key.len()..].split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn point_square_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = santalo(dir.path(), &["point", "--square"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let x = field(&text, "x ");
    assert!((x / (2.0 * std::f64::consts::PI.powi(2)) - 1.0).abs() < 1e-3, "x = {x}");
}

#[test]
fn point_regular_polygon_lies_near_vertex() {
    let dir = tempfile::tempdir().unwrap();
    let o = santalo(dir.path(), &["point", "--regular-ngon", "64"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let x = field(&text, "x ");
    let vertex_x = field(&text, "vertex ");
    assert!(x / vertex_x - 1.0 < 5e-3 && x >= vertex_x * (1.0 - 1e-3), "x = {x}, vertex {vertex_x}");
}

#[test]
fn point_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("tri.txt");
    std::fs::write(&file, "0 0\n1 0\n0 1\n").unwrap();
    let o = santalo(dir.path(), &["point", "--file", file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("lambda1"));
}

#[test]
fn bad_shape_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    assert_eq!(santalo(dir.path(), &["point", "--file", missing.to_str().unwrap()]).status.code(), Some(2));
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "0 0\n1 oops\n").unwrap();
    assert_eq!(santalo(dir.path(), &["point", "--file", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(santalo(dir.path(), &["point"]).status.code(), Some(2));
    assert_eq!(santalo(dir.path(), &["point", "--rect", "-1"]).status.code(), Some(2));
    assert_eq!(santalo(dir.path(), &["point", "--regular-ngon", "2"]).status.code(), Some(2));
}

#[test]
fn diagram_writes_outputs_and_is_thread_count_independent() {
    let one = tempfile::tempdir().unwrap();
    let two = tempfile::tempdir().unwrap();
    let args = ["diagram", "--families", "regular,random", "--count", "5", "--levels", "2"];
    let a = santalo(one.path(), &[&["--workers", "1"][..], &args[..]].concat());
    let b = santalo(two.path(), &[&["--workers", "2"][..], &args[..]].concat());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(b.status.success());
    let csv_a = std::fs::read_to_string(one.path().join("diagram.csv")).unwrap();
    let csv_b = std::fs::read_to_string(two.path().join("diagram.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let header = csv_a.lines().next().unwrap();
    assert!(header.starts_with("family,param1,param2,seed,area,lambda1,torsion,x,y"), "{header}");
    assert_eq!(csv_a.lines().count(), 11);
    let svg = std::fs::read_to_string(one.path().join("diagram.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains("kohler-jobin"));
}

#[test]
fn diagram_rejects_unknown_or_empty_families() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(santalo(dir.path(), &["diagram", "--families", ""]).status.code(), Some(2));
    assert_eq!(santalo(dir.path(), &["diagram", "--families", "hexagon"]).status.code(), Some(2));
    assert_eq!(santalo(dir.path(), &["diagram", "--families", "regular", "--count", "20"]).status.code(), Some(2));
}

#[test]
fn slopes_prints_constants() {
    let dir = tempfile::tempdir().unwrap();
    let o = santalo(dir.path(), &["slopes", "--max-m", "5", "--levels", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    for s in ["2.40482", "2.7666", "1.46259", "1.078", "0.076"] {
        assert!(text.contains(s), "missing {s} in\n{text}");
    }
    assert!(dir.path().join("slopes_fd.csv").exists());
}

#[test]
fn verify_passes_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let ok = santalo(dir.path(), &["verify", "--n", "5"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("verify.csv").exists());
    assert!(santalo(dir.path(), &["verify", "--disk"]).status.success());
    let bad = santalo(dir.path(), &["verify", "--n", "5", "--tamper-lambda", "0.9"]);
    assert_eq!(bad.status.code(), Some(5));
}

#[test]
fn css_path_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let o = santalo(dir.path(), &["path", "css", "--rect", "3", "--steps", "8", "--levels", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("monotonicity violations: 0"));
    let csv = std::fs::read_to_string(dir.path().join("path.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
    assert!(dir.path().join("path.svg").exists());
}

#[test]
fn homothety_and_minkowski_paths() {
    let dir = tempfile::tempdir().unwrap();
    assert!(santalo(dir.path(), &["path", "homothety", "--square"]).status.success());
    let o = santalo(dir.path(), &["path", "minkowski", "--square", "--rect", "2", "--steps", "4", "--levels", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("violations: 0"));
    assert_eq!(santalo(dir.path(), &["path", "minkowski", "--square"]).status.code(), Some(2));
}

#[test]
fn loop_certifies_interior_points() {
    let dir = tempfile::tempdir().unwrap();
    let o = santalo(
        dir.path(),
        &["path", "loop", "--rect", "2", "--square", "--grid", "20", "--steps", "8", "--levels", "1"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("certified.csv")).unwrap();
    assert!(csv.lines().count() > 1, "{csv}");
}

#[test]
fn envelope_gamma_search_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = santalo(dir.path(), &["envelope", "--gamma", "0", "--budget", "100", "--restarts", "1", "--levels", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("F_gamma best"));
    assert!(dir.path().join("trace.csv").exists());
    assert!(dir.path().join("shape.txt").exists());
    assert_eq!(santalo(dir.path(), &["envelope", "--gamma", "0", "--budget", "5"]).status.code(), Some(2));
}
