use std::path::Path;
use std::process::{Command, Output};

fn lll(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lll-phase")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String { String::from_utf8_lossy(&o.stdout).into_owned() }

fn stderr(o: &Output) -> String { String::from_utf8_lossy(&o.stderr).into_owned() }

fn field(summary: &str, key: &str) -> f64 {
    summary
        .split_whitespace()
        .find_map(|w| w.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {summary}"))
        .parse()
        .unwrap()
}

#[test]
fn help_exits_zero() {
    let o = lll(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("scatter"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [&["evolve", "--dt", "-1"][..], &["nodes", "--colour", "red"], &["warp"], &["nodes", "--N", "1"]] {
        let o = lll(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    assert!(stderr(&lll(&["evolve", "--dt", "-1"])).starts_with("UsageError"));
}

#[test]
fn module_errors_exit_one() {
    let o = lll(&["scatter", "--X", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("InvalidArgument"), "{}", stderr(&o));
}

#[test]
fn malformed_samples_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2\n3\n").unwrap();
    let o = lll(&["spectrum", "--N", "2", "--model", "custom", "--samples", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let missing = dir.path().join("absent.csv");
    let o = lll(&["spectrum", "--N", "2", "--model", "custom", "--samples", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn custom_samples_match_the_named_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("free.csv");
    let g = lll_phase::hilbert::TorusGeometry::periodic(6).unwrap();
    let (eps, v) = lll_phase::fixtures::free(&g).samples(&g).unwrap();
    let text: String = eps.iter().zip(&v).map(|(e, v)| format!("{e:.17e},{v:.17e}\n")).collect();
    std::fs::write(&samples, text).unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let o = lll(&["spectrum", "--N", "6", "--model", "free", "--output", a.to_str().unwrap()]);
    assert!(o.status.success());
    let o = lll(&[
        "spectrum", "--N", "6", "--model", "custom", "--samples", samples.to_str().unwrap(), "--output", b.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ea: serde_json::Value = serde_json::from_slice(&std::fs::read(a).unwrap()).unwrap();
    let eb: serde_json::Value = serde_json::from_slice(&std::fs::read(b).unwrap()).unwrap();
    assert_eq!(ea["eigenvalues"], eb["eigenvalues"]);
}

#[test]
fn nodes_json_has_sixteen_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nodes.json");
    let o = lll(&["nodes", "--N", "16", "--model", "harper", "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["N"], 16);
    assert_eq!(v["nodes"].as_array().unwrap().len(), 16);
    assert_eq!(field(&stdout(&o), "count"), 16.0);
}

#[test]
fn scatter_summary_reports_half_transmission() {
    let o = lll(&["scatter", "--E", "0", "--X", "8", "--h", "1e-3"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!((field(&s, "T") - 0.5).abs() < 0.01, "{s}");
    assert!((field(&s, "T") + field(&s, "R") - 1.0).abs() < 1e-10);
}

#[test]
fn duality_norms() {
    let s = stdout(&lll(&["duality", "--N", "8", "--model", "harper"]));
    assert!(field(&s, "symmetry_norm") < 1e-12, "{s}");
    let s = stdout(&lll(&["duality", "--N", "9", "--model", "saddle"]));
    assert!(field(&s, "symmetry_norm") < 1e-12, "{s}");
    assert!(s.contains("sign=-1"), "{s}");
}

fn artifact(dir: &Path, name: &str, args: &[&str]) -> Vec<u8> {
    let out = dir.join(name);
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--output", out.to_str().unwrap()]);
    let o = lll(&all);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    std::fs::read(out).unwrap()
}

#[test]
fn artifacts_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for (i, args) in [
        &["evolve", "--N", "6", "--steps", "20", "--dt", "1e-2", "--state", "random", "--seed", "7"][..],
        &["nodes", "--N", "8", "--state", "random", "--seed", "3"],
        &["density", "--N", "6", "--steps", "10", "--dt", "1e-2"],
        &["scatter", "--E", "0.5"],
    ]
    .iter()
    .enumerate()
    {
        let a = artifact(dir.path(), &format!("a{i}"), args);
        let b = artifact(dir.path(), &format!("b{i}"), args);
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn evolve_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    let text = artifact(dir.path(), "t.csv", &["evolve", "--N", "4", "--steps", "3", "--dt", "1e-2"]);
    let text = String::from_utf8(text).unwrap();
    assert_eq!(text.lines().next(), Some("t,node_index,x,p,vx,vp"));
    assert_eq!(text.lines().count(), 1 + 4 * 4);
}

#[test]
fn failed_run_leaves_existing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("keep.csv");
    std::fs::write(&out, "previous").unwrap();
    let o = lll(&["scatter", "--X", "2", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "previous");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}
