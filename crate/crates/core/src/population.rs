//! Population-density models over the unit square and Poisson point sampling.
//!
//! Positions are stored on a fixed-point grid of spacing 2^-30 so that the
//! geometric predicates used downstream can be evaluated exactly in integer
//! arithmetic. Every sampled position is snapped to that grid before the
//! distinctness check.

use std::collections::HashSet;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::rng;

/// Bits of fixed-point resolution per coordinate.
pub const GRID_BITS: u32 = 30;
/// Number of grid steps across the unit interval.
pub const GRID_SCALE: u32 = 1 << GRID_BITS;

const GRID_SCALE_F: f64 = GRID_SCALE as f64;

/// Snaps a unit-interval coordinate to the fixed-point grid.
pub fn snap(v: f64) -> u32 {
    (v.clamp(0.0, 1.0) * GRID_SCALE_F).round() as u32
}

pub fn unsnap(v: u32) -> f64 {
    v as f64 / GRID_SCALE_F
}

/// Radius of the metropolis core: 20% of the centre-to-corner distance.
pub fn metropolis_core_radius() -> f64 {
    0.2 * std::f64::consts::SQRT_2 / 2.0
}

/// Fraction of metropolis intensity inside the core disc.
pub const METROPOLIS_CORE_MASS: f64 = 0.9;

/// Cells per side of the rectangular discretization used to report the
/// metropolis model as zones.
const METROPOLIS_ZONE_SIDE: usize = 64;
const METROPOLIS_SUBSAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let x = self.x0 + rng.random::<f64>() * (self.x1 - self.x0);
        let y = self.y0 + rng.random::<f64>() * (self.y1 - self.y0);
        (x, y)
    }
}

/// Relative densities on a rectangular grid, row 0 at the top of the map.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    ncols: usize,
    nrows: usize,
    cells: Vec<f64>,
}

impl RasterGrid {
    pub fn new(ncols: usize, nrows: usize, cells: Vec<f64>) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::InvalidModel("raster dimensions must be positive".into()));
        }
        if cells.len() != ncols * nrows {
            return Err(Error::InvalidModel(format!(
                "raster has {} cells, expected {}",
                cells.len(),
                ncols * nrows
            )));
        }
        if let Some(bad) = cells.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidModel(format!("raster cell value {bad} is not a nonnegative number")));
        }
        if !cells.iter().any(|v| *v > 0.0) {
            return Err(Error::InvalidModel("raster has no positive cell".into()));
        }
        Ok(Self { ncols, nrows, cells })
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.ncols + col]
    }

    /// Region of the unit square covered by a cell. The grid is stretched to
    /// fill the square; row 0 is the top edge.
    pub fn cell_rect(&self, row: usize, col: usize) -> Rect {
        let w = 1.0 / self.ncols as f64;
        let h = 1.0 / self.nrows as f64;
        Rect {
            x0: col as f64 * w,
            x1: if col + 1 == self.ncols { 1.0 } else { (col + 1) as f64 * w },
            y0: if row + 1 == self.nrows { 0.0 } else { 1.0 - (row + 1) as f64 * h },
            y1: 1.0 - row as f64 * h,
        }
    }

    /// Parses the plain-text grid format: `ncols <int>`, `nrows <int>`, then
    /// one line per row. Lines starting with `#` and blank lines are skipped.
    pub fn read<R: BufRead>(source: R) -> Result<Self> {
        let mut ncols = None;
        let mut nrows = None;
        let mut cells = Vec::new();
        let mut rows_seen = 0usize;
        let mut last_line = 0;

        for (idx, line) in source.lines().enumerate() {
            let lineno = idx + 1;
            last_line = lineno;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (Some(nc), Some(nr)) = (ncols, nrows) else {
                let mut it = trimmed.split_whitespace();
                let key = it.next().unwrap_or_default().to_ascii_lowercase();
                let value = it.next();
                if it.next().is_some() {
                    return Err(Error::format(lineno, format!("malformed header line {trimmed:?}")));
                }
                let expected = if ncols.is_none() { "ncols" } else { "nrows" };
                if key != expected {
                    return Err(Error::format(lineno, format!("expected `{expected} <int>` header, found {trimmed:?}")));
                }
                let value: usize = value
                    .and_then(|v| v.parse().ok())
                    .filter(|v| *v > 0)
                    .ok_or_else(|| Error::format(lineno, format!("`{expected}` needs a positive integer")))?;
                if ncols.is_none() {
                    ncols = Some(value);
                } else {
                    nrows = Some(value);
                    cells.reserve(ncols.unwrap_or(0).saturating_mul(value));
                }
                continue;
            };
            if rows_seen == nr {
                return Err(Error::format(lineno, format!("more than {nr} data rows")));
            }
            let before = cells.len();
            for tok in trimmed.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::format(lineno, format!("non-numeric cell {tok:?}")))?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::format(lineno, format!("cell {tok:?} is not a nonnegative number")));
                }
                cells.push(v);
            }
            let got = cells.len() - before;
            if got != nc {
                return Err(Error::format(lineno, format!("row has {got} values, expected {nc}")));
            }
            rows_seen += 1;
        }

        let (Some(ncols), Some(nrows)) = (ncols, nrows) else {
            return Err(Error::format(last_line.max(1), "missing ncols/nrows header"));
        };
        if rows_seen != nrows {
            return Err(Error::format(last_line, format!("found {rows_seen} data rows, expected {nrows}")));
        }
        if !cells.iter().any(|v| *v > 0.0) {
            return Err(Error::format(last_line, "grid has no positive cell"));
        }
        Ok(Self { ncols, nrows, cells })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("ncols {}\nnrows {}\n", self.ncols, self.nrows);
        for row in self.cells.chunks(self.ncols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// A synthetic stand-in for a national population raster: an elongated
    /// land mask with sparse rural population and Zipf-sized towns, quantized
    /// to a handful of density classes.
    pub fn synthetic_country(seed: u64) -> Self {
        const NCOLS: usize = 90;
        const NROWS: usize = 200;
        const TOWNS: usize = 80;
        let mut rng = rng::from_seed(seed);

        // Land occupies a wavy band whose centre and width drift along rows.
        let phase_a = rng.random::<f64>() * std::f64::consts::TAU;
        let phase_b = rng.random::<f64>() * std::f64::consts::TAU;
        let band: Vec<(f64, f64)> = (0..NROWS)
            .map(|r| {
                let t = r as f64 / NROWS as f64;
                let centre = 0.5 + 0.18 * (3.0 * t + phase_a).sin() + 0.06 * (11.0 * t + phase_b).sin();
                let half = 0.12 + 0.16 * (1.0 - t) * (1.0 - t) + 0.03 * (7.0 * t + phase_b).cos();
                (centre * NCOLS as f64, half * NCOLS as f64)
            })
            .collect();
        let on_land = |r: usize, c: usize| {
            let (centre, half) = band[r];
            (c as f64 + 0.5 - centre).abs() <= half
        };

        let mut raw = vec![0.0f64; NCOLS * NROWS];
        for r in 0..NROWS {
            for c in 0..NCOLS {
                if on_land(r, c) {
                    // Rural background, denser in the south (bottom rows).
                    let south = r as f64 / NROWS as f64;
                    raw[r * NCOLS + c] = if rng.random::<f64>() < 0.25 + 0.5 * south { 2.0 } else { 0.0 };
                }
            }
        }
        let mut town_rank: Vec<usize> = (1..=TOWNS).collect();
        town_rank.shuffle(&mut rng);
        for rank in town_rank {
            let (r, c) = loop {
                // Towns favour the southern half.
                let r = ((1.0 - rng.random::<f64>().powf(1.8)) * NROWS as f64) as usize;
                let c = rng.random_range(0..NCOLS);
                if r < NROWS && on_land(r, c) {
                    break (r, c);
                }
            };
            let size = 20_000.0 / (rank as f64).powf(1.2);
            let spread = 0.6 + 0.4 * (size.ln() / 20_000f64.ln()) * 3.0;
            let reach = (3.0 * spread).ceil() as isize;
            for dr in -reach..=reach {
                for dc in -reach..=reach {
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    if rr < 0 || cc < 0 || rr >= NROWS as isize || cc >= NCOLS as isize {
                        continue;
                    }
                    let (rr, cc) = (rr as usize, cc as usize);
                    if !on_land(rr, cc) {
                        continue;
                    }
                    let d2 = (dr * dr + dc * dc) as f64;
                    raw[rr * NCOLS + cc] += size * (-d2 / (2.0 * spread * spread)).exp();
                }
            }
        }

        // Density classes, represented by a typical value of each class.
        let cells = raw
            .into_iter()
            .map(|v| match v {
                v if v < 1.0 => 0.0,
                v if v < 5.0 => 2.5,
                v if v < 30.0 => 17.0,
                v if v < 150.0 => 90.0,
                v if v < 5000.0 => 1500.0,
                _ => 8000.0,
            })
            .collect();
        Self::new(NCOLS, NROWS, cells).expect("synthetic raster has populated cells")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomZones {
    k: usize,
    gamma: f64,
    seed: u64,
    /// Label of each zone, row-major from the bottom-left zone.
    labels: Vec<u32>,
}

impl RandomZones {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn zone_rect(&self, zone: usize) -> Rect {
        let k = self.k;
        let (row, col) = (zone / k, zone % k);
        let side = 1.0 / k as f64;
        let edge = |i: usize| if i == k { 1.0 } else { i as f64 * side };
        Rect { x0: edge(col), x1: edge(col + 1), y0: edge(row), y1: edge(row + 1) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityModel {
    Uniform,
    Metropolis,
    RandomZones(RandomZones),
    Raster(RasterGrid),
}

impl DensityModel {
    /// `k × k` zones with a random labelling drawn from `seed`.
    pub fn random_zones(k: usize, gamma: f64, seed: u64) -> Result<Self> {
        Self::check_zones(k, gamma)?;
        let mut labels: Vec<u32> = (1..=(k * k) as u32).collect();
        labels.shuffle(&mut rng::from_seed(seed));
        Ok(DensityModel::RandomZones(RandomZones { k, gamma, seed, labels }))
    }

    /// `k × k` zones with an explicit labelling (a permutation of `1..=k²`).
    pub fn random_zones_with_labels(k: usize, gamma: f64, labels: Vec<u32>) -> Result<Self> {
        Self::check_zones(k, gamma)?;
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        if sorted.len() != k * k || sorted.iter().enumerate().any(|(i, &l)| l as usize != i + 1) {
            return Err(Error::InvalidModel(format!("zone labels must be a permutation of 1..={}", k * k)));
        }
        Ok(DensityModel::RandomZones(RandomZones { k, gamma, seed: 0, labels }))
    }

    fn check_zones(k: usize, gamma: f64) -> Result<()> {
        if k == 0 || k > 4096 {
            return Err(Error::InvalidModel(format!("zone side count {k} out of range")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidModel(format!("zone decay exponent {gamma} must be >= 0")));
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            DensityModel::Uniform => "uniform",
            DensityModel::Metropolis => "metropolis",
            DensityModel::RandomZones(_) => "random-zones",
            DensityModel::Raster(_) => "raster",
        }
    }
}

/// Partition of the unit square into rectangles with normalized weights.
pub fn zone_weights(model: &DensityModel) -> Vec<(Rect, f64)> {
    let mut zones: Vec<(Rect, f64)> = match model {
        DensityModel::Uniform => vec![(Rect::UNIT, 1.0)],
        DensityModel::RandomZones(z) => z
            .labels
            .iter()
            .enumerate()
            .map(|(i, &s)| (z.zone_rect(i), (s as f64).powf(-z.gamma)))
            .collect(),
        DensityModel::Raster(g) => (0..g.nrows)
            .flat_map(|r| (0..g.ncols).map(move |c| (r, c)))
            .map(|(r, c)| (g.cell_rect(r, c), g.get(r, c)))
            .collect(),
        DensityModel::Metropolis => metropolis_zones(),
    };
    let total: f64 = zones.iter().map(|z| z.1).sum();
    for z in &mut zones {
        z.1 /= total;
    }
    zones
}

/// Grid discretization of the metropolis intensity: each cell carries the core
/// mass in proportion to its (subsampled) overlap with the disc and the rest in
/// proportion to the remaining area.
fn metropolis_zones() -> Vec<(Rect, f64)> {
    let m = METROPOLIS_ZONE_SIDE;
    let s = METROPOLIS_SUBSAMPLES;
    let r2 = metropolis_core_radius().powi(2);
    let side = 1.0 / m as f64;
    let mut cells = Vec::with_capacity(m * m);
    let (mut in_total, mut out_total) = (0.0, 0.0);
    for row in 0..m {
        for col in 0..m {
            let rect = Rect {
                x0: col as f64 * side,
                x1: if col + 1 == m { 1.0 } else { (col + 1) as f64 * side },
                y0: row as f64 * side,
                y1: if row + 1 == m { 1.0 } else { (row + 1) as f64 * side },
            };
            let mut inside = 0usize;
            for i in 0..s {
                for j in 0..s {
                    let x = rect.x0 + (i as f64 + 0.5) / s as f64 * side - 0.5;
                    let y = rect.y0 + (j as f64 + 0.5) / s as f64 * side - 0.5;
                    if x * x + y * y <= r2 {
                        inside += 1;
                    }
                }
            }
            let frac_in = inside as f64 / (s * s) as f64;
            let a_in = frac_in * rect.area();
            let a_out = rect.area() - a_in;
            in_total += a_in;
            out_total += a_out;
            cells.push((rect, a_in, a_out));
        }
    }
    cells
        .into_iter()
        .map(|(rect, a_in, a_out)| {
            let w = METROPOLIS_CORE_MASS * a_in / in_total + (1.0 - METROPOLIS_CORE_MASS) * a_out / out_total;
            (rect, w)
        })
        .collect()
}

/// Positions of vertices in the unit square, on the fixed-point grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    coords: Vec<[u32; 2]>,
}

impl PointSet {
    /// Snaps positions onto the grid and checks they are in range and distinct.
    pub fn from_positions(positions: &[(f64, f64)]) -> Result<Self> {
        let mut coords = Vec::with_capacity(positions.len());
        for (i, &(x, y)) in positions.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                return Err(Error::InvalidParameter(format!("point {i} ({x}, {y}) lies outside the unit square")));
            }
            coords.push([snap(x), snap(y)]);
        }
        Self::from_grid(coords)
    }

    pub fn from_grid(coords: Vec<[u32; 2]>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(coords.len());
        for (i, c) in coords.iter().enumerate() {
            if c[0] > GRID_SCALE || c[1] > GRID_SCALE {
                return Err(Error::InvalidParameter(format!("grid point {i} outside the unit square")));
            }
            if !seen.insert(*c) {
                return Err(Error::DuplicatePoint(i));
            }
        }
        Ok(Self { coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn position(&self, i: usize) -> (f64, f64) {
        let [x, y] = self.coords[i];
        (unsnap(x), unsnap(y))
    }

    pub fn positions(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.coords.iter().map(|&[x, y]| (unsnap(x), unsnap(y)))
    }

    pub fn grid(&self) -> &[[u32; 2]] {
        &self.coords
    }
}

/// Default ceiling on the realized population, as a multiple of the target.
pub const DEFAULT_CAP_FACTOR: usize = 4;

/// Samples a non-homogeneous Poisson process with expected size `target_n`.
pub fn sample_points(model: &DensityModel, target_n: usize, seed: u64) -> Result<PointSet> {
    sample_points_capped(model, target_n, seed, DEFAULT_CAP_FACTOR * target_n)
}

pub fn sample_points_capped(model: &DensityModel, target_n: usize, seed: u64, cap: usize) -> Result<PointSet> {
    if target_n == 0 {
        return Err(Error::InvalidParameter("target population must be at least 1".into()));
    }
    let mut rng = rng::from_seed(seed);
    let mut sampler = Sampler::new(target_n);
    loop {
        match model {
            DensityModel::Metropolis => sampler.metropolis(&mut rng),
            other => {
                for (rect, w) in zone_weights(other) {
                    sampler.fill_rect(&mut rng, rect, w);
                }
            }
        }
        let realized = sampler.coords.len();
        if realized > cap {
            return Err(Error::PopulationSize { realized, cap });
        }
        if realized > 0 {
            return Ok(PointSet { coords: sampler.coords });
        }
        // An empty realization is redrawn from the continuing stream.
    }
}

struct Sampler {
    target_n: f64,
    seen: HashSet<[u32; 2]>,
    coords: Vec<[u32; 2]>,
}

impl Sampler {
    fn new(target_n: usize) -> Self {
        Self {
            target_n: target_n as f64,
            seen: HashSet::with_capacity(target_n + target_n / 8),
            coords: Vec::with_capacity(target_n + target_n / 8),
        }
    }

    fn count<R: Rng + ?Sized>(&self, rng: &mut R, weight: f64) -> usize {
        let mean = self.target_n * weight;
        if mean <= 0.0 {
            return 0;
        }
        Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
    }

    /// Adds a point drawn by `draw`, redrawing on grid collisions.
    fn push_with<R: Rng + ?Sized>(&mut self, rng: &mut R, mut draw: impl FnMut(&mut R) -> (f64, f64)) {
        loop {
            let (x, y) = draw(rng);
            let c = [snap(x), snap(y)];
            if self.seen.insert(c) {
                self.coords.push(c);
                return;
            }
        }
    }

    fn fill_rect<R: Rng + ?Sized>(&mut self, rng: &mut R, rect: Rect, weight: f64) {
        for _ in 0..self.count(rng, weight) {
            self.push_with(rng, |r| rect.sample(r));
        }
    }

    fn metropolis<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let radius = metropolis_core_radius();
        let r2 = radius * radius;
        let inside = |(x, y): (f64, f64)| (x - 0.5).powi(2) + (y - 0.5).powi(2) <= r2;
        let core_box = Rect { x0: 0.5 - radius, x1: 0.5 + radius, y0: 0.5 - radius, y1: 0.5 + radius };

        let n_core = self.count(rng, METROPOLIS_CORE_MASS);
        for _ in 0..n_core {
            self.push_with(rng, |r| loop {
                let p = core_box.sample(r);
                if inside(p) {
                    break p;
                }
            });
        }
        let n_outer = self.count(rng, 1.0 - METROPOLIS_CORE_MASS);
        for _ in 0..n_outer {
            self.push_with(rng, |r| loop {
                let p = Rect::UNIT.sample(r);
                if !inside(p) {
                    break p;
                }
            });
        }
    }
}
