mod common;

use common::chi_square_p;
use smallworld::population::{sample_points, zone_weights, DensityModel, RasterGrid, METROPOLIS_CORE_MASS};

#[test]
fn uniform_counts_are_poisson() {
    let counts: Vec<f64> = (0..100).map(|s| sample_points(&DensityModel::Uniform, 1000, s).unwrap().len() as f64).collect();
    let mean = counts.iter().sum::<f64>() / 100.0;
    assert!((900.0..=1100.0).contains(&mean), "mean {mean}");
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / 99.0;
    // Poisson variance equals the mean; allow generous sampling error.
    assert!(var > 500.0 && var < 1600.0, "var {var}");
}

#[test]
fn tiny_targets_still_produce_points() {
    for s in 0..50 {
        assert!(sample_points(&DensityModel::Uniform, 1, s).unwrap().len() >= 1);
    }
}

#[test]
fn same_seed_same_points() {
    let m = DensityModel::random_zones(100, 1.2, 9).unwrap();
    assert_eq!(sample_points(&m, 375, 4).unwrap(), sample_points(&m, 375, 4).unwrap());
    assert_ne!(sample_points(&m, 375, 4).unwrap(), sample_points(&m, 375, 5).unwrap());
}

#[test]
fn zone_occupancy_follows_weights() {
    let m = DensityModel::random_zones(3, 1.2, 2).unwrap();
    let zones = zone_weights(&m);
    let p = sample_points(&m, 200_000, 8).unwrap();
    let mut observed = vec![0u64; zones.len()];
    for (x, y) in p.positions() {
        let z = zones.iter().position(|(r, _)| r.contains(x, y)).unwrap();
        observed[z] += 1;
    }
    let expected: Vec<f64> = zones.iter().map(|z| z.1 * p.len() as f64).collect();
    let pv = chi_square_p(&observed, &expected);
    assert!(pv > 0.001, "p = {pv}");
}

#[test]
fn gamma_zero_zones_are_uniform() {
    let m = DensityModel::random_zones(2, 0.0, 1).unwrap();
    for (r, w) in zone_weights(&m) {
        assert_eq!(w, 0.25);
        assert!((r.area() - 0.25).abs() < 1e-15);
    }
}

#[test]
fn metropolis_core_holds_most_points() {
    let p = sample_points(&DensityModel::Metropolis, 50_000, 3).unwrap();
    let r = smallworld::population::metropolis_core_radius();
    let inside = p.positions().filter(|(x, y)| (x - 0.5).powi(2) + (y - 0.5).powi(2) <= r * r).count() as f64;
    let frac = inside / p.len() as f64;
    // The outer intensity lives on the complement of the disc.
    let expected = METROPOLIS_CORE_MASS;
    assert!((frac - expected).abs() < 0.01, "core fraction {frac} vs {expected}");
}

#[test]
fn raster_parsing_and_weights() {
    let g = RasterGrid::read("ncols 2\nnrows 1\n1 3\n".as_bytes()).unwrap();
    let w: Vec<f64> = zone_weights(&DensityModel::Raster(g)).into_iter().map(|z| z.1).collect();
    assert_eq!(w, vec![0.25, 0.75]);

    let flat = RasterGrid::read("ncols 3\nnrows 2\n5 5 5\n5 5 5\n".as_bytes()).unwrap();
    let w: Vec<f64> = zone_weights(&DensityModel::Raster(flat)).into_iter().map(|z| z.1).collect();
    assert!(w.iter().all(|&v| v == w[0]));
}

#[test]
fn one_hot_raster_confines_points() {
    let g = RasterGrid::read("ncols 3\nnrows 3\n0 0 0\n0 0 7\n0 0 0\n".as_bytes()).unwrap();
    let rect = g.cell_rect(1, 2);
    let p = sample_points(&DensityModel::Raster(g), 500, 6).unwrap();
    assert!(p.len() > 300);
    assert!(p.positions().all(|(x, y)| rect.contains(x, y)));
}

#[test]
fn raster_errors_carry_line_numbers() {
    use smallworld::Error;
    let cases = [
        ("ncols 2\nnrows 1\n1 x\n", 3),
        ("ncols 2\nnrows 2\n1 1\n", 3),
        ("nrows 1\nncols 2\n1 1\n", 1),
        ("ncols 2\nnrows 1\n0 0\n", 3),
        ("ncols 2\nnrows 1\n1 -1\n", 3),
    ];
    for (text, line) in cases {
        match RasterGrid::read(text.as_bytes()) {
            Err(Error::Format { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn synthetic_raster_is_clustered() {
    let g = RasterGrid::synthetic_country(1);
    let mut cells: Vec<f64> = g.cells().to_vec();
    let total: f64 = cells.iter().sum();
    cells.sort_by(|a, b| b.total_cmp(a));
    let top: f64 = cells[..cells.len() / 100].iter().sum();
    assert!(top / total > 0.2, "top 1% of cells hold {}", top / total);
    assert!(cells.iter().filter(|&&c| c == 0.0).count() > cells.len() / 10);
}
