//! Destination sampling: shortcuts are resampled from the destinations of
//! the greedy searches that pass through their owners.
//!
//! Each step picks a source and a destination, walks greedily between them
//! over the current shortcuts, and then, independently with probability `p`,
//! repoints one random shortcut slot of every walk vertex short of the
//! destination at the destination. The loop is inherently sequential: every
//! walk sees all earlier mutations.

use rand::Rng;

use crate::augment::{sample_target, PopularityDist, ShortcutTable};
use crate::basegraph::BaseGraph;
use crate::error::{Error, Result};
use crate::rng::{self, Rng as SimRng};
use crate::routing::{greedy_walk_into, Outcome};

pub const DEFAULT_P: f64 = 0.1;
pub const DEFAULT_ITERATION_FACTOR: f64 = 10.0;

/// Maximum number of points kept in [`RewireReport::walk_length_trace`].
const TRACE_POINTS: usize = 1000;

#[derive(Debug, Clone)]
pub struct RewireConfig {
    /// Replacement probability per walk vertex, in `(0, 1)`.
    pub p: f64,
    /// Steps run = `round(iteration_factor * n)`.
    pub iteration_factor: f64,
    pub source_dist: PopularityDist,
    pub target_dist: PopularityDist,
    pub rng_seed: u64,
    /// Walk length limit; `None` means the graph size.
    pub step_cap: Option<usize>,
    pub out_degree: usize,
}

impl RewireConfig {
    /// Defaults: `p = 0.1`, `10 n` steps, uniform sources and targets, one
    /// shortcut per vertex.
    pub fn new(n: usize, rng_seed: u64) -> Self {
        Self {
            p: DEFAULT_P,
            iteration_factor: DEFAULT_ITERATION_FACTOR,
            source_dist: PopularityDist::uniform(n),
            target_dist: PopularityDist::uniform(n),
            rng_seed,
            step_cap: None,
            out_degree: 1,
        }
    }

    pub fn iterations(&self, n: usize) -> usize {
        (self.iteration_factor * n as f64).round() as usize
    }

    fn validate(&self, g: &BaseGraph) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidParameter(format!("replacement probability {} not in (0, 1)", self.p)));
        }
        if !(self.iteration_factor >= 0.0 && self.iteration_factor.is_finite()) {
            return Err(Error::InvalidParameter(format!("iteration factor {} must be >= 0", self.iteration_factor)));
        }
        if self.out_degree == 0 || self.step_cap == Some(0) {
            return Err(Error::InvalidParameter("out-degree and step cap must be positive".into()));
        }
        if self.source_dist.len() != g.len() || self.target_dist.len() != g.len() {
            return Err(Error::InvalidParameter("popularity laws must cover the graph's vertices".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RewireReport {
    pub iterations_run: usize,
    /// Steps whose source and destination differed.
    pub walks: usize,
    pub replacements_made: usize,
    /// Sum of hop counts over all walks.
    pub total_hops: usize,
    /// Mean walk length over consecutive blocks of steps.
    pub walk_length_trace: Vec<f64>,
    pub truncated_walks: usize,
    pub dead_end_walks: usize,
    /// Median walk length over the first and last 10% of walks.
    pub early_median_hops: f64,
    pub late_median_hops: f64,
}

/// What a single step did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub source: usize,
    pub destination: usize,
    /// Visited vertices; empty when source and destination coincided.
    pub walk: Vec<u32>,
    pub outcome: Option<Outcome>,
    pub replacements: usize,
}

impl StepRecord {
    pub fn hops(&self) -> usize {
        self.walk.len().saturating_sub(1)
    }
}

/// One destination-sampling step, mutating `table` in place.
pub fn destination_sampling_step<R: Rng + ?Sized>(
    g: &BaseGraph,
    table: &mut ShortcutTable,
    cfg: &RewireConfig,
    rng: &mut R,
) -> StepRecord {
    let mut walk = Vec::new();
    let (source, destination, outcome, replacements) = step_into(g, table, cfg, rng, &mut walk);
    StepRecord { source, destination, walk, outcome, replacements }
}

fn step_into<R: Rng + ?Sized>(
    g: &BaseGraph,
    table: &mut ShortcutTable,
    cfg: &RewireConfig,
    rng: &mut R,
    walk: &mut Vec<u32>,
) -> (usize, usize, Option<Outcome>, usize) {
    let y = sample_target(&cfg.source_dist, rng);
    let z = sample_target(&cfg.target_dist, rng);
    if y == z {
        walk.clear();
        return (y, z, None, 0);
    }
    let cap = cfg.step_cap.unwrap_or(g.len());
    let outcome = greedy_walk_into(g, table, y, z, cap, walk);
    let d = table.out_degree();
    let mut replaced = 0;
    // Every vertex but the last visited one; on arrival the last is z itself.
    for &x in &walk[..walk.len() - 1] {
        if rng.random::<f64>() < cfg.p {
            let slot = if d == 1 { 0 } else { rng.random_range(0..d) };
            table.set(x as usize, slot, z as u32);
            replaced += 1;
        }
    }
    (y, z, Some(outcome), replaced)
}

/// Runs the dynamic from the self-loop table.
pub fn run_destination_sampling(g: &BaseGraph, cfg: &RewireConfig) -> Result<(ShortcutTable, RewireReport)> {
    run_destination_sampling_with(g, cfg, 0, |_, _| Ok(()))
}

/// As [`run_destination_sampling`], calling `snapshot(step, table)` after
/// every `every` steps when `every > 0`.
pub fn run_destination_sampling_with<F>(
    g: &BaseGraph,
    cfg: &RewireConfig,
    every: usize,
    mut snapshot: F,
) -> Result<(ShortcutTable, RewireReport)>
where
    F: FnMut(usize, &ShortcutTable) -> Result<()>,
{
    cfg.validate(g)?;
    let n = g.len();
    let iterations = cfg.iterations(n);
    let mut table = ShortcutTable::self_loops(n, cfg.out_degree);
    let mut rng: SimRng = rng::from_seed(cfg.rng_seed);
    let mut report = RewireReport { iterations_run: iterations, ..Default::default() };

    let block = iterations.div_ceil(TRACE_POINTS).max(1);
    let (mut block_hops, mut block_walks) = (0usize, 0usize);
    let mut lengths: Vec<u32> = Vec::with_capacity(iterations);
    let mut walk = Vec::new();
    let limit = iterations / 100;

    for step in 0..iterations {
        let (y, z, outcome, replaced) = step_into(g, &mut table, cfg, &mut rng, &mut walk);
        if let Some(outcome) = outcome {
            let hops = walk.len() - 1;
            report.walks += 1;
            report.total_hops += hops;
            report.replacements_made += replaced;
            lengths.push(hops as u32);
            block_hops += hops;
            block_walks += 1;
            match outcome {
                Outcome::Arrived => {}
                Outcome::StepCapExceeded => report.truncated_walks += 1,
                Outcome::DeadEnd => report.dead_end_walks += 1,
            }
            if report.truncated_walks + report.dead_end_walks > limit {
                return Err(if outcome == Outcome::DeadEnd {
                    Error::DeadEnd { source_vertex: y, target: z }
                } else {
                    Error::TruncationAbort { truncated: report.truncated_walks, iterations }
                });
            }
        }
        if (step + 1) % block == 0 || step + 1 == iterations {
            report.walk_length_trace.push(if block_walks > 0 { block_hops as f64 / block_walks as f64 } else { 0.0 });
            block_hops = 0;
            block_walks = 0;
        }
        if every > 0 && (step + 1) % every == 0 {
            snapshot(step + 1, &table)?;
        }
    }

    let decile = lengths.len() / 10;
    if decile > 0 {
        report.early_median_hops = median_u32(&mut lengths[..decile].to_vec());
        let tail = lengths.len() - decile;
        report.late_median_hops = median_u32(&mut lengths[tail..].to_vec());
    }
    Ok((table, report))
}

fn median_u32(v: &mut [u32]) -> f64 {
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m] as f64
    } else {
        (v[m - 1] as f64 + v[m] as f64) / 2.0
    }
}
