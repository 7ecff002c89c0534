//! Independent oracles shared by the integration and acceptance targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use smallworld::augment::{augment_distance, augment_rank, augment_uniform, PopularityDist, ShortcutTable};
use smallworld::population::{sample_points, DensityModel, RasterGrid};
use smallworld::rewire::run_destination_sampling;
use smallworld::{basegraph, RewireConfig};
use smallworld::routing::greedy_route;
use smallworld::{BaseGraph, Geometry, Outcome};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub type Pt = [u32; 2];

pub fn test_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn det3(m: [[i128; 3]; 3]) -> i128 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Rows `(x, y, 1)` of the three points other than `skip`.
fn minor_xy1(p: &[Pt; 4], skip: usize) -> i128 {
    let mut rows = [[0i128; 3]; 3];
    let mut r = 0;
    for (i, q) in p.iter().enumerate() {
        if i != skip {
            rows[r] = [q[0] as i128, q[1] as i128, 1];
            r += 1;
        }
    }
    det3(rows)
}

/// Sign-of-the-perturbed-lifted-determinant test, written from scratch: the
/// 4x4 determinant with rows `(x, y, x² + y², 1)`, each lifted entry raised
/// by an infinitesimal that dominates for smaller ids. Positive means `d`
/// is inside the circle through counter-clockwise `a, b, c`.
pub fn oracle_inside(p: [Pt; 4], ids: [u32; 4]) -> bool {
    // Translate by d so the determinant stays within i128.
    let o = p[3];
    let rel = |q: Pt| [q[0] as i128 - o[0] as i128, q[1] as i128 - o[1] as i128];
    let mut rows = [[0i128; 3]; 3];
    for i in 0..3 {
        let [x, y] = rel(p[i]);
        rows[i] = [x, y, x * x + y * y];
    }
    let det = det3(rows);
    if det != 0 {
        return det > 0;
    }
    // Cofactor of the lifted entry in row i: (-1)^(i + 2) times the minor
    // over columns (x, y, 1).
    let mut order = [0usize, 1, 2, 3];
    order.sort_by_key(|&i| ids[i]);
    for i in order {
        let sign = if i % 2 == 0 { 1 } else { -1 };
        let c = sign * minor_xy1(&p, i);
        if c != 0 {
            return c > 0;
        }
    }
    false
}

pub fn orient(a: Pt, b: Pt, c: Pt) -> i128 {
    (b[0] as i128 - a[0] as i128) * (c[1] as i128 - a[1] as i128)
        - (b[1] as i128 - a[1] as i128) * (c[0] as i128 - a[0] as i128)
}

/// Brute-force Delaunay: every non-degenerate triple whose perturbed
/// circumcircle is empty. Returns sorted triangles (sorted vertex triples)
/// and sorted edges.
pub fn brute_delaunay(pts: &[Pt]) -> (Vec<[u32; 3]>, Vec<(u32, u32)>) {
    let n = pts.len();
    let mut tris = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let o = orient(pts[i], pts[j], pts[k]);
                if o == 0 {
                    continue;
                }
                let (a, b, c) = if o > 0 { (i, j, k) } else { (i, k, j) };
                let empty = (0..n).filter(|&l| l != i && l != j && l != k).all(|l| {
                    !oracle_inside([pts[a], pts[b], pts[c], pts[l]], [a as u32, b as u32, c as u32, l as u32])
                });
                if empty {
                    tris.push([i as u32, j as u32, k as u32]);
                }
            }
        }
    }
    let mut edges: Vec<(u32, u32)> = if tris.is_empty() {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by_key(|&i| pts[i]);
        idx.windows(2).map(|w| (w[0].min(w[1]) as u32, w[0].max(w[1]) as u32)).collect()
    } else {
        tris.iter().flat_map(|&[a, b, c]| [(a, b), (a, c), (b, c)]).collect()
    };
    edges.sort_unstable();
    edges.dedup();
    (tris, edges)
}

pub fn normalize_triangles(tris: &[[u32; 3]]) -> Vec<[u32; 3]> {
    let mut out: Vec<[u32; 3]> = tris
        .iter()
        .map(|t| {
            let mut t = *t;
            t.sort_unstable();
            t
        })
        .collect();
    out.sort_unstable();
    out
}

const G: u32 = 1 << 30;

/// Random point sets with many degeneracies: generic positions, small
/// integer lattices (collinear and cocircular quadruples), Pythagorean
/// circles and fully collinear sets.
pub fn random_point_set(rng: &mut impl Rng, n: usize) -> Vec<Pt> {
    let mut pts: Vec<Pt> = Vec::with_capacity(n);
    let kind = rng.random_range(0..4);
    let push = |pts: &mut Vec<Pt>, p: Pt| {
        if !pts.contains(&p) {
            pts.push(p);
        }
    };
    let mut guard = 0;
    while pts.len() < n && guard < 100_000 {
        guard += 1;
        let p = match kind {
            0 => [rng.random_range(0..=G), rng.random_range(0..=G)],
            1 => {
                let step = G / 8;
                [rng.random_range(0..=8) * step, rng.random_range(0..=8) * step]
            }
            2 => {
                // Points on circles of radius 5 and 25 around a center.
                const R5: [(i32, i32); 12] =
                    [(5, 0), (-5, 0), (0, 5), (0, -5), (3, 4), (-3, 4), (3, -4), (-3, -4), (4, 3), (-4, 3), (4, -3), (-4, -3)];
                let scale = rng.random_range(1..=5) * (1 << 20);
                let (dx, dy) = R5[rng.random_range(0..12)];
                let c = (G / 2) as i64;
                [(c + dx as i64 * scale) as u32, (c + dy as i64 * scale) as u32]
            }
            _ => {
                let t = rng.random_range(0..=1000u32);
                [t * (1 << 18), 1000 * (1 << 18) - t * (1 << 17)]
            }
        };
        push(&mut pts, p);
    }
    pts
}

/// Upper-tail p-value of Pearson's chi-square statistic. Cells with zero
/// expected count must be empty and do not add degrees of freedom.
pub fn chi_square_p(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    let mut stat = 0.0;
    let mut cells = 0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e == 0.0 {
            assert_eq!(o, 0, "draw in a zero-probability cell");
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    assert!(cells >= 2);
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

/// Exact integer key: squared grid distance (continuum) or wrapped L1
/// distance (lattice), computed from the geometry directly.
pub fn oracle_key(g: &BaseGraph, x: usize, y: usize) -> u128 {
    match g.geometry() {
        Geometry::Continuum(p) => {
            let (a, b) = (p.grid()[x], p.grid()[y]);
            let dx = a[0].abs_diff(b[0]) as u128;
            let dy = a[1].abs_diff(b[1]) as u128;
            dx * dx + dy * dy
        }
        Geometry::Lattice { dims, cyclic } => {
            let (mut x, mut y, mut d) = (x, y, 0usize);
            for (&side, &wrap) in dims.iter().zip(cyclic) {
                let (a, b) = (x % side, y % side);
                let diff = a.abs_diff(b);
                d += if wrap { diff.min(side - diff) } else { diff };
                x /= side;
                y /= side;
            }
            d as u128
        }
    }
}

/// Metric distance from the exact key.
pub fn oracle_distance(g: &BaseGraph, x: usize, y: usize) -> f64 {
    let k = oracle_key(g, x, y) as f64;
    match g.geometry() {
        Geometry::Continuum(_) => k.sqrt() / G as f64,
        Geometry::Lattice { .. } => k,
    }
}

/// Direct-summation law of distance augmentation from `x`.
pub fn oracle_distance_law(g: &BaseGraph, x: usize, alpha: f64) -> Vec<f64> {
    let w: Vec<f64> =
        (0..g.len()).map(|y| if y == x { 0.0 } else { oracle_distance(g, x, y).powf(-alpha) }).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// Direct-summation law of rank augmentation from `x`.
pub fn oracle_rank_law(g: &BaseGraph, x: usize) -> Vec<f64> {
    let n = g.len();
    let mut others: Vec<usize> = (0..n).filter(|&y| y != x).collect();
    others.sort_by_key(|&y| (oracle_key(g, x, y), y));
    let h: f64 = (1..n).map(|k| 1.0 / k as f64).sum();
    let mut p = vec![0.0; n];
    for (r, &y) in others.iter().enumerate() {
        p[y] = 1.0 / (h * (r + 1) as f64);
    }
    p
}

/// Chi-square p-value of a whole table against per-source laws.
pub fn table_p_value(table: &ShortcutTable, law: impl Fn(usize) -> Vec<f64>) -> f64 {
    let n = table.len();
    let d = table.out_degree() as f64;
    let mut observed = vec![0u64; n * n];
    let mut expected = vec![0.0; n * n];
    for x in 0..n {
        for &y in table.shortcuts(x) {
            observed[x * n + y as usize] += 1;
        }
        for (y, p) in law(x).into_iter().enumerate() {
            expected[x * n + y] = p * d;
        }
    }
    chi_square_p(&observed, &expected)
}

/// Greedy routing between every ordered pair must arrive along a path that
/// strictly decreases the distance to the target and never revisits.
pub fn check_all_pairs(g: &BaseGraph, s: &ShortcutTable) -> Result<(), String> {
    let n = g.len();
    for src in 0..n {
        for dst in 0..n {
            let r = greedy_route(g, s, src, dst, n);
            if r.outcome != Outcome::Arrived {
                return Err(format!("{src}->{dst}: {:?}", r.outcome));
            }
            let mut seen = std::collections::HashSet::new();
            for w in r.path.windows(2) {
                let (a, b) = (w[0] as usize, w[1] as usize);
                if g.distance_key(b, dst) >= g.distance_key(a, dst) {
                    return Err(format!("{src}->{dst}: step {a}->{b} not closer"));
                }
            }
            for &v in &r.path {
                if !seen.insert(v) {
                    return Err(format!("{src}->{dst}: vertex {v} revisited"));
                }
            }
        }
    }
    Ok(())
}

/// Delaunay graphs and cyclic lattices with at most 200 vertices.
pub fn small_instances() -> Vec<(String, BaseGraph)> {
    let mut out = Vec::new();
    let models = [
        DensityModel::Uniform,
        DensityModel::Metropolis,
        DensityModel::random_zones(10, 1.2, 3).unwrap(),
        DensityModel::Raster(RasterGrid::synthetic_country(2)),
    ];
    for (i, m) in models.iter().enumerate() {
        for n in [20, 120, 190] {
            let p = sample_points(m, n, 31 * i as u64 + n as u64).unwrap();
            if p.len() <= 200 {
                out.push((format!("{}-{n}", m.name()), basegraph::delaunay(p).unwrap()));
            }
        }
    }
    out.push(("ring-200".into(), basegraph::lattice(&[200], true).unwrap()));
    out.push(("ring-3".into(), basegraph::lattice(&[3], true).unwrap()));
    out.push(("torus-14".into(), basegraph::lattice(&[14, 14], true).unwrap()));
    out.push(("torus-5x8".into(), basegraph::lattice(&[5, 8], true).unwrap()));
    out
}

pub fn small_tables(g: &BaseGraph) -> Vec<(&'static str, ShortcutTable)> {
    let n = g.len();
    let mut cfg = RewireConfig::new(n, 4);
    cfg.target_dist = PopularityDist::power_law_shuffled(n, 1.0, 5).unwrap();
    vec![
        ("none", ShortcutTable::self_loops(n, 1)),
        ("distance", augment_distance(g, 2.0, 1, 1).unwrap()),
        ("rank", augment_rank(g, 2, 2).unwrap()),
        ("uniform", augment_uniform(g, 1, 3).unwrap()),
        ("ds", run_destination_sampling(g, &cfg).unwrap().0),
    ]
}

