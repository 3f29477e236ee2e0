use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use wgpca::cli::{ingest_histograms, ingest_many, ingest_many_2d, SCHEMA};

fn wgpca(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgpca"))
        .args(args)
        .current_dir(dir)
        .env_remove("WGPCA_OUT_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

/// Every artifact carries the schema tag and the config it was made from.
fn check_embedded(dir: &Path, command: &str) -> usize {
    let mut count = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let text = fs::read_to_string(&p).unwrap();
        match p.extension().and_then(|s| s.to_str()) {
            Some("json") => {
                let v: Value = serde_json::from_str(&text).unwrap();
                assert_eq!(v["schema"], SCHEMA, "{}", p.display());
                assert_eq!(v["config"]["command"], command, "{}", p.display());
            }
            Some("csv") => {
                let mut lines = text.lines();
                assert_eq!(lines.next().unwrap(), format!("# schema={SCHEMA}"));
                let cfg: Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# config=").unwrap()).unwrap();
                assert_eq!(cfg["command"], command);
            }
            _ => panic!("unexpected artifact {}", p.display()),
        }
        count += 1;
    }
    count
}

#[test]
fn help_and_version_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["--version"], &["compare", "--help"]] {
        assert_eq!(code(&wgpca(args, tmp.path())), 0);
    }
}

#[test]
fn usage_and_validation_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(code(&wgpca(&["frobnicate"], d)), 1);
    assert_eq!(code(&wgpca(&["logpca", "--n-grid", "many"], d)), 1);
    assert_eq!(code(&wgpca(&["synth", "--omega=5"], d)), 1);
    let o = wgpca(&["logpca", "-k", "0", "-n", "5"], d);
    assert_eq!(code(&o), 1);
    let o = wgpca(&["logpca", "-i", "missing.csv"], d);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("missing.csv"));
    let o = wgpca(&["gpca-iter", "--t0", "1.5", "-n", "5"], d);
    assert_eq!(code(&o), 1);
    // nothing computed, nothing written
    assert!(!d.join("wgpca-out").join("logpca.json").exists());
}

#[test]
fn compute_failure_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    // 21 x 21 uniform measures: 441 support points exceed the exact OT cap
    let mut body = String::from("i,j,weight\n");
    for i in 0..21 {
        for j in 0..21 {
            body.push_str(&format!("{i},{j},1\n"));
        }
    }
    let a = write(d, "a.csv", &body);
    let b = write(d, "b.csv", &body);
    let o = wgpca(&["gpca-2d", "-i", a.to_str().unwrap(), "-i", b.to_str().unwrap(), "-k", "1"], d);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("400"));
}

#[test]
fn synth_then_logpca_writes_only_logpca_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = wgpca(&["synth", "-n", "8", "--n-grid", "64", "-o", "data"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(check_embedded(&d.join("data"), "synth"), 2);
    let set = ingest_histograms(&d.join("data/data.csv"), None).unwrap();
    assert_eq!(set.measures.len(), 8);
    assert_eq!(set.grid.len(), 64);

    let o = wgpca(&["logpca", "-i", "data/data.csv", "-k", "2", "--q", "1000", "-o", "lp"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let names: Vec<String> = fs::read_dir(d.join("lp"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.contains(&"logpca.json".to_string()));
    assert!(names.iter().all(|n| !n.starts_with("gpca") && !n.starts_with("t0_")), "{names:?}");
    check_embedded(&d.join("lp"), "logpca");
    let v: Value = serde_json::from_str(&fs::read_to_string(d.join("lp/logpca.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["k"], 2);
}

#[test]
fn synth_is_deterministic_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for (seed, dir) in [("3", "a"), ("3", "b"), ("4", "c")] {
        assert_eq!(code(&wgpca(&["synth", "-n", "5", "--n-grid", "50", "--seed", seed, "-o", dir], d)), 0);
    }
    let read = |dir: &str| fs::read_to_string(d.join(dir).join("data.csv")).unwrap();
    // configs differ only in out_dir
    let body = |s: String| s.lines().skip(2).collect::<Vec<_>>().join("\n");
    assert_eq!(body(read("a")), body(read("b")));
    assert_ne!(body(read("a")), body(read("c")));
}

#[test]
fn out_dir_defaults_to_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_wgpca"))
        .args(["synth", "-n", "3", "--n-grid", "20"])
        .current_dir(tmp.path())
        .env("WGPCA_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(tmp.path().join("from-env/data.csv").exists());
}

#[test]
fn omega_sets_the_synthetic_domain() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wgpca(&["synth", "-n", "2", "--n-grid", "11", "--omega=-5,5"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let set = ingest_histograms(&tmp.path().join("wgpca-out/data.csv"), None).unwrap();
    assert_eq!((set.grid.a(), set.grid.b()), (-5.0, 5.0));
}

#[test]
fn compare_reports_every_method() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = wgpca(
        &["compare", "-n", "20", "--n-grid", "128", "--t0=-0.5,-0.25,0,0.25,0.5", "--max-outer", "200", "--q", "2000"],
        d,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = d.join("wgpca-out");
    check_embedded(&out, "compare");
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("errors.json")).unwrap()).unwrap();
    let err = |method: &str, k: u64| {
        v["errors"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["method"] == method && r["k"] == k)
            .unwrap_or_else(|| panic!("no row {method} k={k}"))["error"]
            .as_f64()
            .unwrap()
    };
    let (lp, it) = (err("logpca", 1), err("gpca-iter", 1));
    // r >= r~ holds exactly; the best midpoint ties log-PCA to round-off
    assert!(it <= lp * (1.0 + 1e-9), "gpca {it} vs log-PCA {lp}");
    assert!(err("gpca-iter", 2) <= it && err("gpca-surface", 2) <= it);
    let curve = fs::read_to_string(out.join("t0_curve.csv")).unwrap();
    assert_eq!(curve.lines().filter(|l| l.starts_with("1,")).count(), 5);
}

#[test]
fn gpca_2d_writes_its_table() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = wgpca(&["gpca-2d", "-n", "6", "--rows", "8", "--cols", "8", "-k", "1", "--max-outer", "20"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = d.join("wgpca-out");
    check_embedded(&out, "gpca-2d");
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("errors.json")).unwrap()).unwrap();
    let methods: Vec<&str> = v["errors"].as_array().unwrap().iter().map(|r| r["method"].as_str().unwrap()).collect();
    assert_eq!(methods.len(), 2, "{methods:?}");
}

#[test]
fn ingest_normalizes_and_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let p = write(d, "u.csv", "x,flat\n0,1\n0.5,1\n1,1\n");
    let set = ingest_histograms(&p, None).unwrap();
    assert_eq!(set.measures.len(), 1);
    assert!(set.measures[0].density().iter().all(|f| (f - 1.0).abs() < 1e-12));

    let p = write(d, "two.csv", "x,a\n0,2\n0.5,2\n1,2\n");
    let set = ingest_histograms(&p, None).unwrap();
    assert!((set.raw_mass[0] - 2.0).abs() < 1e-12);
    assert!(set.measures[0].density().iter().all(|f| (f - 1.0).abs() < 1e-12));
    let o = wgpca(&["barycenter", "-i", "two.csv", "--q", "100"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("renormalized"));
}

#[test]
fn ingest_errors_name_the_row() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let msg = |body: &str| ingest_histograms(&write(d, "bad.csv", body), None).unwrap_err().to_string();
    let m = msg("x,a\n0,1\n1,1\n0.5,1\n");
    assert!(m.contains("row 4") && m.contains("not increasing"), "{m}");
    let m = msg("x,a\n0,1\n1,-1\n");
    assert!(m.contains("row 3") && m.contains("negative"), "{m}");
    let m = msg("x,a,b\n0,1,0\n1,1,0\n");
    assert!(m.contains("'b'") && m.contains("empty"), "{m}");
    let m = msg("x,a\n0,1\n1,oops\n");
    assert!(m.contains("row 3"), "{m}");

    let a = write(d, "a.csv", "x,a\n0,1\n1,1\n");
    let b = write(d, "b.csv", "x,b\n0,1\n0.5,1\n1,1\n");
    let m = ingest_many(&[a, b], None).unwrap_err().to_string();
    assert!(m.contains("differs"), "{m}");

    let a = write(d, "a2.csv", "0,0,1\n1,1,1\n");
    let b = write(d, "b2.csv", "0,0,1\n2,2,1\n");
    let m = ingest_many_2d(&[a, b]).unwrap_err().to_string();
    assert!(m.contains("lattice"), "{m}");
    let c = write(d, "c2.csv", "0,0,1\n0,0,2\n1,1,1\n");
    let m = ingest_many_2d(&[c]).unwrap_err().to_string();
    assert!(m.contains("given twice"), "{m}");
}
