use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smallworld"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn smallworld")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run_in(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

/// Lines that are neither comments nor blank.
fn body(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).collect()
}

fn count_of(text: &str) -> usize {
    body(text)[0].split_whitespace().nth(1).unwrap().parse().unwrap()
}

fn coords(text: &str) -> Vec<(f64, f64)> {
    body(text)[1..]
        .iter()
        .map(|l| {
            let mut it = l.split_whitespace().map(|v| v.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

fn edges(graph: &str) -> Vec<(usize, usize)> {
    let b = body(graph);
    let skip = if b[1].starts_with("lattice") { 2 } else { 1 + count_of(graph) };
    b[skip..]
        .iter()
        .map(|l| {
            let mut it = l.split_whitespace().map(|v| v.parse::<usize>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

fn shortcut_pairs(text: &str) -> Vec<(usize, usize)> {
    body(text)[1..]
        .iter()
        .map(|l| {
            let mut it = l.split_whitespace().map(|v| v.parse::<usize>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

fn write_points(dir: &Path, name: &str, pts: &[(f64, f64)]) -> PathBuf {
    let mut s = format!("n {}\n", pts.len());
    for (x, y) in pts {
        s.push_str(&format!("{x} {y}\n"));
    }
    let p = dir.join(name);
    fs::write(&p, s).unwrap();
    p
}

#[test]
fn gen_is_deterministic_and_headed() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["--seed", "7", "gen", "--model", "metropolis", "--n", "300", "-o", "a.txt"]);
    ok(d, &["--seed", "7", "gen", "--model", "metropolis", "--n", "300", "-o", "b.txt"]);
    let a = read(d, "a.txt");
    assert_eq!(a, read(d, "b.txt"));
    let mut lines = a.lines();
    assert!(lines.next().unwrap().starts_with("# smallworld "));
    assert_eq!(lines.next().unwrap(), "# command: gen --model metropolis --n 300 --seed 7");
    let n = count_of(&a);
    assert_eq!(coords(&a).len(), n);

    ok(d, &["--seed", "8", "gen", "--model", "metropolis", "--n", "300", "-o", "c.txt"]);
    assert_ne!(body(&a), body(&read(d, "c.txt")));
}

#[test]
fn gen_to_stdout_matches_file_output() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let out = ok(d, &["--seed", "3", "gen", "--n", "50"]);
    ok(d, &["--seed", "3", "gen", "--n", "50", "-o", "p.txt"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), read(d, "p.txt"));
}

#[test]
fn random_zone_points_feed_build() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["--seed", "11", "gen", "--model", "random-zones", "--k", "100", "--gamma", "1.2", "--n", "375", "-o", "z.txt"]);
    let z = read(d, "z.txt");
    assert!(z.lines().nth(1).unwrap().contains("--label-seed"));
    assert!(coords(&z).iter().all(|&(x, y)| (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)));
    ok(d, &["build", "z.txt", "-o", "g.txt"]);
    let g = read(d, "g.txt");
    assert_eq!(count_of(&g), count_of(&z));
    assert!(edges(&g).len() >= count_of(&g) - 1);
}

#[test]
fn one_hot_raster_keeps_points_in_its_cell() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    fs::write(d.join("r.txt"), "ncols 4\nnrows 2\n0 0 0 0\n0 9 0 0\n").unwrap();
    ok(d, &["--seed", "2", "gen", "--model", "raster", "--file", "r.txt", "--n", "400", "-o", "p.txt"]);
    let pts = coords(&read(d, "p.txt"));
    assert!(pts.len() > 300);
    assert!(pts.iter().all(|&(x, y)| (0.25..=0.5).contains(&x) && (0.0..=0.5).contains(&y)), "point outside cell");
}

#[test]
fn build_small_cases() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    write_points(d, "tri.txt", &[(0.1, 0.1), (0.9, 0.2), (0.4, 0.8)]);
    ok(d, &["build", "tri.txt", "-o", "tri.g"]);
    let mut e = edges(&read(d, "tri.g"));
    e.sort_unstable();
    assert_eq!(e, vec![(0, 1), (0, 2), (1, 2)]);

    // Cocircular corners: one diagonal, chosen deterministically.
    write_points(d, "sq.txt", &[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
    ok(d, &["build", "sq.txt", "-o", "sq1.g"]);
    ok(d, &["build", "sq.txt", "-o", "sq2.g"]);
    assert_eq!(edges(&read(d, "sq1.g")).len(), 5);
    assert_eq!(read(d, "sq1.g"), read(d, "sq2.g"));

    write_points(d, "one.txt", &[(0.5, 0.5)]);
    assert_eq!(run_in(d, &["build", "one.txt"]).status.code(), Some(2));
}

#[test]
fn build_lattice() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["build", "--lattice", "4x5", "-o", "torus.g"]);
    let g = read(d, "torus.g");
    assert_eq!(count_of(&g), 20);
    assert!(g.contains("lattice 4c 5c"));
    assert_eq!(edges(&g).len(), 40);
    ok(d, &["build", "--lattice", "4x5", "--open", "-o", "grid.g"]);
    assert_eq!(edges(&read(d, "grid.g")).len(), 3 * 5 + 4 * 4);
    assert_eq!(run_in(d, &["build", "--lattice", "4xq"]).status.code(), Some(1));
}

#[test]
fn augment_forced_edge_and_out_degree() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    write_points(d, "two.txt", &[(0.2, 0.2), (0.7, 0.6)]);
    ok(d, &["build", "two.txt", "-o", "two.g"]);
    ok(d, &["--seed", "1", "augment", "two.g", "--method", "uniform", "-o", "two.s"]);
    assert_eq!(shortcut_pairs(&read(d, "two.s")), vec![(0, 1), (1, 0)]);

    ok(d, &["--seed", "5", "gen", "--n", "200", "-o", "p.txt"]);
    ok(d, &["build", "p.txt", "-o", "g.txt"]);
    let n = count_of(&read(d, "g.txt"));
    for method in ["distance", "rank", "uniform"] {
        ok(d, &["--seed", "9", "augment", "g.txt", "--method", method, "--out-degree", "3", "-o", "s.txt"]);
        let s = read(d, "s.txt");
        assert!(body(&s)[0].ends_with("outdeg 3"));
        let pairs = shortcut_pairs(&s);
        assert_eq!(pairs.len(), 3 * n);
        assert!(pairs.iter().all(|&(a, b)| a != b && a < n && b < n));
    }
}

#[test]
fn distance_zero_is_uniform() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["--seed", "21", "gen", "--n", "30", "-o", "p.txt"]);
    ok(d, &["build", "p.txt", "-o", "g.txt"]);
    let n = count_of(&read(d, "g.txt"));
    let deg = 200;
    ok(d, &["--seed", "22", "augment", "g.txt", "--method", "distance", "--alpha", "0", "--out-degree", &deg.to_string(), "-o", "s.txt"]);
    let mut counts = vec![0f64; n];
    for (_, b) in shortcut_pairs(&read(d, "s.txt")) {
        counts[b] += 1.0;
    }
    // Each target expects `deg` arrivals.
    let expected = deg as f64;
    let chi: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    // Generous bound: mean n - 1, stddev sqrt(2(n - 1)).
    let bound = (n - 1) as f64 + 6.0 * (2.0 * (n - 1) as f64).sqrt();
    assert!(chi < bound, "chi-square {chi} over {bound} with n = {n}");
}

#[test]
fn rewire_reports_and_is_reproducible() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["--seed", "5", "gen", "--n", "150", "-o", "p.txt"]);
    ok(d, &["build", "p.txt", "-o", "g.txt"]);
    let n = count_of(&read(d, "g.txt"));

    ok(d, &["--seed", "4", "rewire", "g.txt", "-o", "r1.txt"]);
    ok(d, &["--seed", "4", "rewire", "g.txt", "-o", "r2.txt"]);
    assert_eq!(read(d, "r1.txt"), read(d, "r2.txt"));
    let report = read(d, "r1.txt.report");
    assert!(report.contains("p = 0.1\n"));
    assert!(report.contains("factor = 10\n"));
    assert!(report.contains(&format!("iterations = {}\n", 10 * n)));
    assert!(report.contains("walk_length_trace = ["));

    ok(d, &["--seed", "4", "rewire", "g.txt", "--factor", "0", "-o", "z.txt"]);
    let pairs = shortcut_pairs(&read(d, "z.txt"));
    assert_eq!(pairs.len(), n);
    assert!(pairs.iter().all(|&(a, b)| a == b));
    assert!(read(d, "z.txt.report").contains(&format!("self_loops = {n}\n")));
}

#[test]
fn rewire_snapshots() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["build", "--lattice", "30", "-o", "ring.g"]);
    ok(d, &["--seed", "1", "rewire", "ring.g", "--factor", "2", "--snapshot-every", "20", "--snapshot-dir", "snaps", "-o", "r.txt"]);
    let snaps = fs::read_dir(d.join("snaps")).unwrap().count();
    assert_eq!(snaps, 3);
}

#[test]
fn route_single_and_batch() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["--seed", "5", "gen", "--n", "120", "-o", "p.txt"]);
    ok(d, &["build", "p.txt", "-o", "g.txt"]);
    ok(d, &["--seed", "6", "augment", "g.txt", "--method", "rank", "-o", "s.txt"]);

    let out = String::from_utf8(ok(d, &["route", "g.txt", "s.txt", "--source", "0", "--target", "7"]).stdout).unwrap();
    let b = body(&out);
    let hops: usize = b[0].strip_prefix("hops ").unwrap().parse().unwrap();
    assert_eq!(b[1], "outcome Arrived");
    let path: Vec<usize> = b[2].split_whitespace().skip(1).map(|v| v.parse().unwrap()).collect();
    assert_eq!(path.len(), hops + 1);
    assert_eq!((path[0], *path.last().unwrap()), (0, 7));

    let out = String::from_utf8(ok(d, &["--seed", "3", "route", "g.txt", "s.txt", "--queries", "40", "--beta", "1"]).stdout).unwrap();
    let b = body(&out);
    assert_eq!(b[0], "source,target,hops,outcome");
    assert_eq!(b.len(), 41);
    assert!(b[1..].iter().all(|l| l.ends_with(",Arrived")));

    assert_eq!(run_in(d, &["route", "g.txt", "s.txt", "--source", "0", "--target", "100000"]).status.code(), Some(1));
    assert_eq!(run_in(d, &["route", "g.txt", "s.txt"]).status.code(), Some(1));
}

#[test]
fn degrees_histogram() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["build", "--lattice", "50", "-o", "ring.g"]);
    ok(d, &["--seed", "2", "augment", "ring.g", "--method", "uniform", "-o", "s.txt"]);
    let out = String::from_utf8(ok(d, &["degrees", "s.txt"]).stdout).unwrap();
    let b = body(&out);
    assert_eq!(b[0], "bucket,fraction");
    let total: f64 = b[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);

    let out = String::from_utf8(ok(d, &["degrees", "s.txt", "--ccdf"]).stdout).unwrap();
    assert_eq!(body(&out)[1], "10,1");
}

const SPEC: &str = r#"
base_seed = 5
sizes = [150, 300]
replicates = 2
queries_per_size = 50

[base]
kind = "uniform"

[[methods]]
kind = "distance"
alpha = 2.0

[[methods]]
kind = "uniform"
"#;

#[test]
fn experiment_rows_and_manifest_replay() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    fs::write(d.join("spec.toml"), SPEC).unwrap();
    ok(d, &["experiment", "spec.toml", "--fits", "fits.csv", "-o", "out.csv"]);
    let out = read(d, "out.csv");
    let rows = body(&out);
    assert!(rows[0].starts_with("model,method,"));
    assert_eq!(rows.len(), 1 + 2 * 2 * 2);
    assert!(rows[1..].iter().all(|r| r.starts_with("uniform,")));
    assert_eq!(body(&read(d, "fits.csv")).len(), 3);

    let manifest = read(d, "out.csv.manifest.toml");
    assert_eq!(manifest.matches("[[cells]]").count(), 4);
    ok(d, &["experiment", "out.csv.manifest.toml", "--workers", "1", "-o", "replay.csv"]);
    assert_eq!(read(d, "replay.csv"), out);

    ok(d, &["--seed", "6", "experiment", "spec.toml", "-o", "other.csv"]);
    assert_ne!(read(d, "other.csv"), out);
}

#[test]
fn exit_codes() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    assert_eq!(run_in(d, &["--help"]).status.code(), Some(0));
    assert_eq!(run_in(d, &["bogus"]).status.code(), Some(1));
    assert_eq!(run_in(d, &["gen", "--model", "raster", "--n", "5"]).status.code(), Some(1));
    assert_eq!(run_in(d, &["gen", "--model", "raster", "--file", "missing.txt", "--n", "5"]).status.code(), Some(2));

    fs::write(d.join("bad.txt"), "n 2\n0.1 0.1\n0.2 x\n").unwrap();
    let out = run_in(d, &["build", "bad.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    fs::write(d.join("spec.toml"), "sizes = [10]\nbase_seed = 1\n[base]\nkind = \"nowhere\"\n").unwrap();
    assert_eq!(run_in(d, &["experiment", "spec.toml"]).status.code(), Some(2));

    let out = run_in(d, &["--seed", "1", "gen", "--n", "5", "-o", "no/such/dir/x.txt"]);
    assert_eq!(out.status.code(), Some(3));

    let out = run_in(d, &["gen", "--n", "5"]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("seed: "));
}
