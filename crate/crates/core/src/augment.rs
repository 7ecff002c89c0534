//! Static shortcut augmentation and query-target popularity laws.
//!
//! Each source draws its shortcuts from its own random substream, so tables
//! are reproducible per source and sources can be processed in parallel.
//! Per-source laws that depend on the source (distance, rank) are realized
//! transiently and dropped once the source's shortcuts are drawn.

use rand::Rng;
use rayon::prelude::*;

use crate::alias::AliasTable;
use crate::basegraph::{BaseGraph, Geometry};
use crate::error::{Error, Result};
use crate::population::GRID_BITS;
use crate::rng::{self, Rng as SimRng};

/// Outgoing long-range links, `out_degree` slots per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortcutTable {
    out_degree: usize,
    targets: Vec<u32>,
}

impl ShortcutTable {
    pub fn from_targets(n: usize, out_degree: usize, targets: Vec<u32>) -> Result<Self> {
        if out_degree == 0 {
            return Err(Error::InvalidParameter("shortcut out-degree must be positive".into()));
        }
        if targets.len() != n * out_degree {
            return Err(Error::InvalidParameter(format!(
                "{} shortcut targets for {n} vertices of out-degree {out_degree}",
                targets.len()
            )));
        }
        if let Some(t) = targets.iter().find(|&&t| t as usize >= n) {
            return Err(Error::InvalidParameter(format!("shortcut target {t} out of range")));
        }
        Ok(Self { out_degree, targets })
    }

    /// Every slot points back at its own vertex: no usable shortcut.
    pub fn self_loops(n: usize, out_degree: usize) -> Self {
        let targets = (0..n as u32).flat_map(|v| std::iter::repeat_n(v, out_degree)).collect();
        Self { out_degree, targets }
    }

    pub fn len(&self) -> usize {
        self.targets.len() / self.out_degree
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn out_degree(&self) -> usize {
        self.out_degree
    }

    #[inline]
    pub fn shortcuts(&self, v: usize) -> &[u32] {
        &self.targets[v * self.out_degree..(v + 1) * self.out_degree]
    }

    pub fn set(&mut self, v: usize, slot: usize, target: u32) {
        self.targets[v * self.out_degree + slot] = target;
    }

    /// `(source, target)` for every slot, in source order.
    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.targets.iter().enumerate().map(|(k, &t)| ((k / self.out_degree) as u32, t))
    }

    pub fn self_loop_count(&self) -> usize {
        self.pairs().filter(|(s, t)| s == t).count()
    }

    /// Shortcut in-degree of each vertex. A self-loop counts toward its own
    /// vertex.
    pub fn in_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.len()];
        for &t in &self.targets {
            deg[t as usize] += 1;
        }
        deg
    }
}

fn check_source_count(g: &BaseGraph, out_degree: usize) -> Result<usize> {
    let n = g.len();
    if n < 2 {
        return Err(Error::TooFewVertices { needed: 2, got: n });
    }
    if out_degree == 0 {
        return Err(Error::InvalidParameter("shortcut out-degree must be positive".into()));
    }
    Ok(n)
}

/// Fills every source's slots with `draw(source, rng, slots)`.
fn fill_per_source<B, I, F>(n: usize, out_degree: usize, seed: u64, init: I, draw: F) -> Result<ShortcutTable>
where
    B: Send,
    I: Fn() -> B + Sync + Send,
    F: Fn(&mut B, usize, &mut SimRng, &mut [u32]) -> Result<()> + Sync + Send,
{
    let mut targets = vec![0u32; n * out_degree];
    targets
        .par_chunks_mut(out_degree)
        .enumerate()
        .try_for_each_init(init, |buf, (x, slots)| {
            let mut rng = rng::substream(seed, x as u64);
            draw(buf, x, &mut rng, slots)
        })?;
    Ok(ShortcutTable { out_degree, targets })
}

/// Weight `d^-alpha` computed from the exact distance key.
fn distance_weight(geometry: &Geometry, key: u64, alpha: f64) -> f64 {
    let base = match geometry {
        // key is a squared distance in grid units.
        Geometry::Continuum(_) => {
            let d2 = key as f64 * f64::powi(2.0, -2 * GRID_BITS as i32);
            return if alpha == 0.0 {
                1.0
            } else if alpha == 2.0 {
                1.0 / d2
            } else {
                d2.powf(-alpha / 2.0)
            };
        }
        Geometry::Lattice { .. } => key as f64,
    };
    if alpha == 0.0 {
        1.0
    } else if alpha == 1.0 {
        1.0 / base
    } else {
        base.powf(-alpha)
    }
}

/// Exact probability of `x -> y` under distance augmentation, by direct
/// summation of the normalizer.
pub fn distance_probabilities(g: &BaseGraph, x: usize, alpha: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..g.len())
        .map(|y| if y == x { 0.0 } else { distance_weight(g.geometry(), g.distance_key(x, y), alpha) })
        .collect();
    let h: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= h);
    w
}

/// Shortcuts with `P(x -> y) ∝ d(x, y)^-alpha` over `y ≠ x`.
pub fn augment_distance(g: &BaseGraph, alpha: f64, out_degree: usize, seed: u64) -> Result<ShortcutTable> {
    let n = check_source_count(g, out_degree)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("distance exponent {alpha} must be >= 0")));
    }
    let geometry = g.geometry();
    fill_per_source(
        n,
        out_degree,
        seed,
        || vec![0f64; n],
        |cum, x, rng, slots| {
            let mut total = 0.0;
            for (y, c) in cum.iter_mut().enumerate() {
                if y != x {
                    let key = g.distance_key(x, y);
                    if key == 0 {
                        return Err(Error::ZeroDistance(x, y));
                    }
                    total += distance_weight(geometry, key, alpha);
                }
                *c = total;
            }
            for slot in slots.iter_mut() {
                *slot = loop {
                    let u = rng.random::<f64>() * total;
                    let y = cum.partition_point(|&c| c <= u);
                    if y < n && y != x {
                        break y as u32;
                    }
                };
            }
            Ok(())
        },
    )
}

/// 1-based rank of `y` among `V \ {x}` ordered by distance from `x`, ties
/// broken by ascending vertex id.
pub fn rank_of(g: &BaseGraph, x: usize, y: usize) -> usize {
    assert_ne!(x, y, "rank of a vertex relative to itself is undefined");
    let key_y = (g.distance_key(x, y), y);
    1 + (0..g.len()).filter(|&z| z != x && (g.distance_key(x, z), z) < key_y).count()
}

/// Harmonic number `h = sum_{k=1}^{m} 1/k`.
pub fn harmonic(m: usize) -> f64 {
    (1..=m).rev().map(|k| 1.0 / k as f64).sum()
}

fn rank_table(n: usize) -> Result<AliasTable> {
    let weights: Vec<f64> = (1..n).map(|k| 1.0 / k as f64).collect();
    AliasTable::new(&weights)
}

/// Shortcuts with `P(x -> y) = 1 / (h · rank_x(y))`, normalized over the
/// `n - 1` ranks of the other vertices.
pub fn augment_rank(g: &BaseGraph, out_degree: usize, seed: u64) -> Result<ShortcutTable> {
    let n = check_source_count(g, out_degree)?;
    // The rank law is the same for every source; only the rank-to-vertex
    // mapping depends on x.
    let ranks = rank_table(n)?;
    fill_per_source(
        n,
        out_degree,
        seed,
        || Vec::<(u64, u32)>::with_capacity(n),
        |keyed, x, rng, slots| {
            keyed.clear();
            keyed.extend((0..n).filter(|&y| y != x).map(|y| (g.distance_key(x, y), y as u32)));
            for slot in slots.iter_mut() {
                let k = ranks.sample(rng);
                let (_, &mut (_, y), _) = keyed.select_nth_unstable(k);
                *slot = y;
            }
            Ok(())
        },
    )
}

/// Shortcuts uniform over the other vertices.
pub fn augment_uniform(g: &BaseGraph, out_degree: usize, seed: u64) -> Result<ShortcutTable> {
    let n = check_source_count(g, out_degree)?;
    fill_per_source(
        n,
        out_degree,
        seed,
        || (),
        |_, x, rng, slots| {
            for slot in slots.iter_mut() {
                let y = rng.random_range(0..n - 1);
                *slot = if y >= x { y + 1 } else { y } as u32;
            }
            Ok(())
        },
    )
}

/// How query targets are chosen.
#[derive(Debug, Clone)]
pub enum PopularityDist {
    UniformTargets { n: usize },
    /// `P(x) ∝ p(x)^-beta` where `p(x)` is the 1-based position of `x` in
    /// `ranking`.
    PowerLaw { beta: f64, ranking: Vec<u32>, table: AliasTable },
}

impl PopularityDist {
    pub fn uniform(n: usize) -> Self {
        PopularityDist::UniformTargets { n }
    }

    /// Power law over an explicit ranking. `beta = 0` yields the uniform law.
    pub fn power_law(beta: f64, ranking: Vec<u32>) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("popularity exponent {beta} must be >= 0")));
        }
        let n = ranking.len();
        let mut seen = vec![false; n];
        for &v in &ranking {
            if v as usize >= n || std::mem::replace(&mut seen[v as usize], true) {
                return Err(Error::InvalidParameter("popularity ranking must be a permutation".into()));
            }
        }
        if beta == 0.0 {
            return Ok(Self::uniform(n));
        }
        let weights: Vec<f64> = (1..=n).map(|p| (p as f64).powf(-beta)).collect();
        let table = AliasTable::new(&weights)?;
        Ok(PopularityDist::PowerLaw { beta, ranking, table })
    }

    /// Power law over a ranking shuffled from `seed`.
    pub fn power_law_shuffled(n: usize, beta: f64, seed: u64) -> Result<Self> {
        use rand::seq::SliceRandom;
        let mut ranking: Vec<u32> = (0..n as u32).collect();
        ranking.shuffle(&mut rng::from_seed(seed));
        Self::power_law(beta, ranking)
    }

    pub fn len(&self) -> usize {
        match self {
            PopularityDist::UniformTargets { n } => *n,
            PopularityDist::PowerLaw { ranking, .. } => ranking.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn beta(&self) -> f64 {
        match self {
            PopularityDist::UniformTargets { .. } => 0.0,
            PopularityDist::PowerLaw { beta, .. } => *beta,
        }
    }

    /// Exact probability of each vertex.
    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            PopularityDist::UniformTargets { n } => vec![1.0 / *n as f64; *n],
            PopularityDist::PowerLaw { beta, ranking, .. } => {
                let z: f64 = (1..=ranking.len()).map(|p| (p as f64).powf(-beta)).sum();
                let mut out = vec![0.0; ranking.len()];
                for (pos, &v) in ranking.iter().enumerate() {
                    out[v as usize] = ((pos + 1) as f64).powf(-beta) / z;
                }
                out
            }
        }
    }
}

/// Draws a query target in constant time.
#[inline]
pub fn sample_target<R: Rng + ?Sized>(dist: &PopularityDist, rng: &mut R) -> usize {
    match dist {
        PopularityDist::UniformTargets { n } => rng.random_range(0..*n),
        PopularityDist::PowerLaw { ranking, table, .. } => ranking[table.sample(rng)] as usize,
    }
}
