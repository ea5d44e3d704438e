use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/graph7c.g6");

fn qscale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qscale"))
        .args(args)
        .env_remove("QSCALE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = qscale(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn lattice_exports() {
    let tmp = TempDir::new().unwrap();
    let out = path(tmp.path(), "o");
    ok(&["lattice", "--lattice", "square", "--rows", "3", "--cols", "3", "--out", &out]);
    let edges = read(&PathBuf::from(&out), "lattice.txt");
    assert_eq!(edges.lines().filter(|l| !l.starts_with('#')).count(), 12);
    ok(&["lattice", "--lattice", "fully_connected", "--n", "5", "--out", &out]);
    let edges = read(&PathBuf::from(&out), "lattice.txt");
    assert_eq!(edges.lines().filter(|l| !l.starts_with('#')).count(), 10);
    let bad = qscale(&["lattice", "--lattice", "pentagon", "--n", "5", "--out", &out]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("pentagon"));
    assert!(bad.stdout.is_empty());
}

#[test]
fn route_rows_and_replay() {
    let tmp = TempDir::new().unwrap();
    let a = path(tmp.path(), "a");
    ok(&["route", CORPUS, "--lattice", "hexagon", "--shuffles", "3", "--iterations", "3", "--limit", "25", "--p-layers", "4", "--out", &a]);
    let csv = read(Path::new(&a), "route.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "graph_id,lattice,n,d_G,d_H,n_swap,sigma,n0,n_u,depth,cnot_total,seed");
    assert_eq!(lines.count(), 25);
    let b = path(tmp.path(), "b");
    ok(&["replay", &path(Path::new(&a), "route.manifest.json"), "--out", &b]);
    assert_eq!(read(Path::new(&b), "route.csv"), csv);
    assert_eq!(read(Path::new(&a), "route.jsonl"), read(Path::new(&b), "route.jsonl"));
}

#[test]
fn route_is_independent_of_job_count() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (path(tmp.path(), "a"), path(tmp.path(), "b"));
    let common = ["route", CORPUS, "--lattice", "square", "--shuffles", "4", "--iterations", "4", "--limit", "15", "--seed", "3"];
    ok(&[&["--jobs", "1"], &common[..], &["--out", &a]].concat());
    ok(&[&["--jobs", "3"], &common[..], &["--out", &b]].concat());
    assert_eq!(read(Path::new(&a), "route.csv"), read(Path::new(&b), "route.csv"));
}

#[test]
fn route_edge_cases() {
    let tmp = TempDir::new().unwrap();
    let empty = path(tmp.path(), "empty.g6");
    fs::write(&empty, "").unwrap();
    let out = path(tmp.path(), "o");
    ok(&["route", &empty, "--lattice", "square", "--out", &out]);
    assert_eq!(read(Path::new(&out), "route.csv").lines().count(), 1);

    let bad = path(tmp.path(), "bad.g6");
    fs::write(&bad, "A_\nC~\nC\n").unwrap();
    let res = qscale(&["route", &bad, "--lattice", "square", "--out", &out]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 3"));

    let ising = path(tmp.path(), "tri.ising");
    fs::write(&ising, "# triangle\n3\n0 1 1.0\n1 2 -0.5\n0 2 1.0\n1 0.3\n").unwrap();
    ok(&["route", &ising, "--ising", "--lattice", "square", "--shuffles", "2", "--iterations", "2", "--out", &out]);
    let csv = read(Path::new(&out), "route.csv");
    assert!(csv.lines().nth(1).unwrap().starts_with("tri,square,3,"));

    let small = qscale(&["route", CORPUS, "--lattice", "square", "--rows", "2", "--cols", "2", "--out", &out]);
    assert!(!small.status.success());
    assert!(String::from_utf8_lossy(&small.stderr).contains("too small"));
}

#[test]
fn estimate_sweeps() {
    let tmp = TempDir::new().unwrap();
    let out = path(tmp.path(), "o");
    ok(&["estimate", "--out", &out]);
    let csv = read(Path::new(&out), "estimate.csv");
    assert_eq!(csv.lines().count(), 51);
    assert!(csv.lines().any(|l| l.starts_with("500,20,fully_connected,")));
    ok(&["estimate", "--n", "500", "--lattice", "triangle", "--out", &out]);
    assert_eq!(read(Path::new(&out), "estimate.csv").lines().count(), 2);
    assert!(!qscale(&["estimate", "--p-target", "1.5", "--out", &out]).status.success());
    let b = path(tmp.path(), "b");
    ok(&["replay", &path(Path::new(&out), "estimate.manifest.json"), "--out", &b]);
    assert_eq!(read(Path::new(&b), "estimate.csv"), read(Path::new(&out), "estimate.csv"));
}

#[test]
fn fits_from_csv() {
    let tmp = TempDir::new().unwrap();
    let out = path(tmp.path(), "o");
    // Exact size-law data: mu = 0.73.
    let mut csv = String::from("graph_id,lattice,n,d_G,d_H,n_swap,sigma,n0,n_u,depth,cnot_total,seed\n");
    for (lattice, d_h, n0) in [("square", 4.0, 2usize), ("triangle", 6.0, 3), ("hexagon", 3.0, 2)] {
        for n in [7usize, 20, 40, 60] {
            let y = 0.73 * (n - n0) as f64 * (n as f64).sqrt() / d_h;
            let u = 1.71 * (n - n0) as f64 / f64::sqrt(d_h);
            csv.push_str(&format!("0,{lattice},{n},3,{d_h},{y},,0,{u},0,0,0\n"));
        }
    }
    let data = path(tmp.path(), "synthetic.csv");
    fs::write(&data, &csv).unwrap();
    ok(&["fit", &data, "--model", "size", "--out", &out]);
    let fit: serde_json::Value = serde_json::from_str(&read(Path::new(&out), "fit.json")).unwrap();
    assert!((fit[0]["params"][0].as_f64().unwrap() - 0.73).abs() < 1e-9);
    ok(&["fit", &data, "--model", "unsat-per-lattice", "--out", &out]);
    let fit: serde_json::Value = serde_json::from_str(&read(Path::new(&out), "fit.json")).unwrap();
    assert_eq!(fit.as_array().unwrap().len(), 3);
    assert!((fit[1]["params"][0].as_f64().unwrap() - 1.71).abs() < 1e-9);

    let missing = path(tmp.path(), "missing.csv");
    fs::write(&missing, "graph_id,lattice,n\n0,square,7\n").unwrap();
    let res = qscale(&["fit", &missing, "--model", "degree", "--out", &out]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("schema error"));
}

#[test]
fn degree_fit_on_routed_output_is_finite() {
    let tmp = TempDir::new().unwrap();
    let mut rows = String::new();
    for lattice in ["square", "triangle"] {
        let out = path(tmp.path(), lattice);
        ok(&["route", CORPUS, "--lattice", lattice, "--shuffles", "2", "--iterations", "2", "--limit", "120", "--out", &out]);
        let csv = read(Path::new(&out), "route.csv");
        if rows.is_empty() {
            rows.push_str(csv.lines().next().unwrap());
            rows.push('\n');
        }
        for l in csv.lines().skip(1) {
            rows.push_str(l);
            rows.push('\n');
        }
    }
    let data = path(tmp.path(), "all.csv");
    fs::write(&data, rows).unwrap();
    let out = path(tmp.path(), "fit");
    ok(&["fit", &data, "--model", "degree", "--out", &out]);
    let fit: serde_json::Value = serde_json::from_str(&read(Path::new(&out), "fit.json")).unwrap();
    assert!(fit[0]["params"].as_array().unwrap().iter().all(|v| v.as_f64().unwrap().is_finite()));
    assert!(fit[0]["rmse"].as_f64().unwrap().is_finite());
}

#[test]
fn out_dir_from_environment_and_lower_bound() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qscale"))
        .args(["lower-bound", CORPUS, "--lattice", "square"])
        .env("QSCALE_OUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = read(tmp.path(), "lower_bound.csv");
    assert_eq!(csv.lines().count(), 854);
    // K7 is the last atlas graph: bound 4 on square.
    assert!(csv.lines().last().unwrap().ends_with(",4"));
    assert!(tmp.path().join("lower-bound.manifest.json").exists());
}

#[test]
fn route_random_regular_ensemble() {
    let tmp = TempDir::new().unwrap();
    let out = path(tmp.path(), "o");
    ok(&["route", "--random-regular", "12", "--count", "4", "--lattice", "triangle", "--shuffles", "2", "--iterations", "2", "--out", &out]);
    let csv = read(Path::new(&out), "route.csv");
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().skip(1).all(|l| l.contains(",triangle,12,3.0000000000000000e0,")));
    assert!(!qscale(&["route", "--random-regular", "7", "--count", "1", "--lattice", "square", "--out", &out]).status.success());
}
