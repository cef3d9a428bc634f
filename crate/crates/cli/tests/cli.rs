use std::path::Path;
use std::process::{Command, Output};

use graphonlab::functionals::{read_profile_csv, read_profile_json, EmpiricalDistribution};
use graphonlab::graphon::{discretize, Discretization, GraphonHandle, GridGraphon};
use graphonlab::sample::SampledGraph;
use graphonlab::transform::MeasurePreservingMap;
use graphonlab::verify::{Verdict, VerificationReport};
use serde_json::Value;

/// First recorded run of `diverge --graphon counterexample --n 128,256,512,1024`.
const DIVERGE_BASELINE: [f64; 3] = [
    0.14146884741192617,
    0.14145973176992915,
    0.14145589089235322,
];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphonlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut full = args.to_vec();
    let out = dir.to_str().unwrap();
    full.extend(["--out", out]);
    run(&full)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn run_config(dir: &Path, name: &str) -> Value {
    let v: Value = serde_json::from_str(&read(dir, name)).unwrap();
    v["run_config"].clone()
}

#[test]
fn verify_counterexample_contradicts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["verify", "--graphon", "counterexample", "--m", "65536"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("CONTRADICTION"));
    assert!(!text.contains("FAIL"));

    let report: VerificationReport = serde_json::from_str(&read(dir.path(), "verify.json")).unwrap();
    assert!(report.success());
    assert_eq!(report.steps.len(), 6);
    assert_eq!(report.certificate.verdict, Verdict::Contradiction);
    assert!((report.certificate.recompute_tv().unwrap() - report.certificate.tv).abs() < 1e-12);

    let doc: Value = serde_json::from_str(&read(dir.path(), "verify.json")).unwrap();
    assert!(doc["steps"].is_array());
    assert_eq!(doc["certificate"]["verdict"], "CONTRADICTION");
    assert_eq!(doc["run_config"]["args"]["seed"], 20240001);
    assert_eq!(doc["run_config"]["args"]["m"], 65536);
}

#[test]
fn verify_controls_exit_zero_without_contradiction() {
    let dir = tempfile::tempdir().unwrap();
    for family in [&["product"][..], &["constant", "--p", "0.25"], &["threshold", "--t", "0.3"]] {
        let mut args = vec!["verify", "--m", "16384", "--graphon"];
        args.extend_from_slice(family);
        let o = run_in(dir.path(), &args);
        assert_eq!(o.status.code(), Some(0), "{family:?}");
        assert!(stdout(&o).contains("NO-CONTRADICTION"), "{family:?}");
    }
}

#[test]
fn constant_degree_profile() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["degrees", "--graphon", "constant", "--p", "0.3", "--m", "512"]);
    assert_eq!(o.status.code(), Some(0));
    let (kind, m, values) = read_profile_json(&read(dir.path(), "degrees.json")).unwrap();
    assert_eq!((kind.as_str(), m), ("degree", 512));
    assert!(values.iter().all(|&v| v == 0.3));
    assert_eq!(run_config(dir.path(), "degrees.json")["args"]["p"], 0.3);

    let o = run_in(
        dir.path(),
        &["degrees", "--graphon", "constant", "--p", "0.3", "--m", "512", "--format", "csv"],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = read(dir.path(), "degrees.csv");
    assert!(csv.starts_with("# run_config: {"));
    let rows = read_profile_csv(&csv).unwrap();
    assert_eq!(rows.len(), 512);
    assert!(rows.iter().all(|&(_, v)| v == 0.3));
}

#[test]
fn diverge_matches_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["diverge", "--graphon", "counterexample", "--n", "128,256,512,1024"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&read(dir.path(), "diverge.json")).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for (row, want) in rows.iter().zip(DIVERGE_BASELINE) {
        let got = row["l1"].as_f64().unwrap();
        assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["verify", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["degrees", "--graphon", "nope"]).status.code(), Some(1));
    assert_eq!(run(&["degrees", "--graphon", "constant"]).status.code(), Some(1));
    assert_eq!(run(&["diverge", "--n", "12,x"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["verify", "--help"]).status.code(), Some(0));
}

#[test]
fn bad_thread_setting_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_graphonlab"))
        .args(["degrees", "--m", "8", "--out"])
        .arg(tempfile::tempdir().unwrap().path())
        .env("GRAPHONLAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn capacity_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["build", "--n", "8192"]).status.code(), Some(3));
    assert_eq!(run_in(dir.path(), &["degrees", "--m", "100000000"]).status.code(), Some(3));
    assert_eq!(
        run_in(dir.path(), &["cutnorm", "--n", "32", "--method", "exhaustive"]).status.code(),
        Some(3)
    );
}

#[test]
fn validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run_in(dir.path(), &["degrees", "--graphon", "constant", "--p", "1.5"]).status.code(),
        Some(2)
    );
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"format":"gridgraphon-v1","n":2,"values":[0.1,0.2,0.3,0.1]}"#).unwrap();
    let o = run_in(dir.path(), &["degrees", "--graphon", "grid", "--grid-file", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    // verification needs a closed form
    let grid = dir.path().join("g.json");
    GridGraphon::constant(4, 0.2).unwrap().save(&grid).unwrap();
    let o = run_in(dir.path(), &["verify", "--graphon", "grid", "--grid-file", grid.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn build_round_trips_through_grid_loader() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["build", "--n", "64"]);
    assert_eq!(o.status.code(), Some(0));
    let loaded = GridGraphon::load(dir.path().join("grid.json")).unwrap();
    let direct = discretize(&GraphonHandle::counterexample(), 64, Discretization::CellAverage).unwrap();
    assert_eq!(loaded, direct);
    assert_eq!(run_config(dir.path(), "grid.json")["subcommand"], "build");

    // a built grid feeds back in as --graphon grid
    let path = dir.path().join("grid.json");
    let o = run_in(dir.path(), &["sort", "--graphon", "grid", "--grid-file", path.to_str().unwrap(), "--n", "64"]);
    assert_eq!(o.status.code(), Some(0));
    let sorted = GridGraphon::load(dir.path().join("sorted.json")).unwrap();
    let degrees = sorted.block_degrees();
    assert!(degrees.windows(2).all(|p| p[0] <= p[1]));
}

#[test]
fn laws_round_trip_through_distribution_loaders() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["laws", "--m", "4096"]).status.code(), Some(0));
    let d = EmpiricalDistribution::from_json(&read(dir.path(), "degree_law.json")).unwrap();
    let h = EmpiricalDistribution::from_json(&read(dir.path(), "level_law.json")).unwrap();
    assert!((d.mean() - 0.125).abs() < 1e-12);
    assert_eq!(h.mean(), 0.25);
    let doc: Value = serde_json::from_str(&read(dir.path(), "conditional.json")).unwrap();
    for bin in doc["report"]["bins"].as_array().unwrap() {
        assert!((bin["mean_h"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    }

    assert_eq!(run_in(dir.path(), &["laws", "--m", "4096", "--format", "csv"]).status.code(), Some(0));
    let d_csv = EmpiricalDistribution::from_csv(&read(dir.path(), "degree_law.csv")).unwrap();
    assert_eq!(d_csv, d);
}

#[test]
fn pullback_writes_loadable_grid_and_map() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["pullback", "--n", "64", "--m", "4096"]);
    assert_eq!(o.status.code(), Some(0));
    let map = MeasurePreservingMap::load(dir.path().join("map.json")).unwrap();
    assert_eq!(map, MeasurePreservingMap::swap_halves());
    let g = GridGraphon::load(dir.path().join("pullback.json")).unwrap();
    // swapping halves moves the 4xy patch to the lower-right corner
    assert_eq!(g.get(0, 0), 0.0);
    assert!(g.get(63, 63) > 0.9);
    let doc: Value = serde_json::from_str(&read(dir.path(), "pullback_summary.json")).unwrap();
    assert_eq!(doc["joint_law_ks"], 0.0);
}

#[test]
fn sample_round_trips_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(run_in(d.path(), &["sample", "--n", "300", "--seed", "5"]).status.code(), Some(0));
    }
    let g = SampledGraph::load(a.path(), "sample").unwrap();
    assert_eq!((g.n(), g.seed()), (300, 5));
    assert_eq!(read(a.path(), "sample.edges"), read(b.path(), "sample.edges"));
    // run_config records the output directory, so compare without it
    let strip = |dir: &Path| {
        let mut v: Value = serde_json::from_str(&read(dir, "sample.json")).unwrap();
        v["run_config"]["args"]["out"] = Value::Null;
        v
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let outputs: Vec<String> = ["1", "3"]
        .iter()
        .map(|threads| {
            let dir = tempfile::tempdir().unwrap();
            let o = Command::new(env!("CARGO_BIN_EXE_graphonlab"))
                .args(["diverge", "--n", "32,64,128", "--format", "csv", "--out"])
                .arg(dir.path())
                .env("GRAPHONLAB_THREADS", threads)
                .output()
                .unwrap();
            assert_eq!(o.status.code(), Some(0));
            let text = read(dir.path(), "diverge.csv");
            text.lines().skip(1).collect::<Vec<_>>().join("\n")
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn cutnorm_and_distance_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["cutnorm", "--graphon", "constant", "--p", "0.25", "--n", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&read(dir.path(), "cutnorm.json")).unwrap();
    assert_eq!(doc["result"]["value"], 0.25);

    // the swap-halves pull-back is a block permutation at n = 8
    let map = dir.path().join("swap.json");
    MeasurePreservingMap::swap_halves().save(&map).unwrap();
    let o = run_in(dir.path(), &["distance", "--n", "8", "--other-map-file", map.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&read(dir.path(), "distance.json")).unwrap();
    assert_eq!(doc["cut_distance_upper"]["value"], 0.0);
    assert_eq!(doc["invariant_lower_bound"]["inequivalent"], false);
    // different as labelled grids, equal up to relabelling
    assert!(doc["l1"].as_f64().unwrap() > 0.01);

    assert_eq!(run_in(dir.path(), &["distance", "--n", "8"]).status.code(), Some(1));
}
