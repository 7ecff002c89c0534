//! Experiment harness: size sweeps over density models or lattices, paired
//! comparisons of augmentation methods, scaling fits and degree histograms.
//!
//! A cell is one `(size, replicate)` pair. Every method evaluated in a cell
//! shares the cell's point set, base graph, popularity ranking and query
//! list; only the shortcut table differs. Cells draw from disjoint seed
//! substreams and are independent, so they may run in parallel while the
//! output stays byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_distance, augment_rank, augment_uniform, sample_target, PopularityDist, ShortcutTable};
use crate::basegraph::{self, BaseGraph};
use crate::error::{Error, Result};
use crate::population::{sample_points, DensityModel, RasterGrid};
use crate::rewire::{run_destination_sampling, RewireConfig, RewireReport, DEFAULT_ITERATION_FACTOR, DEFAULT_P};
use crate::rng;
use crate::routing::{greedy_hops, Outcome};
use crate::stats::{self, ScalingFit, Summary};

pub const RESULTS_HEADER: &str =
    "model,method,alpha,beta,size_target,size_realized,replicate,mean_hops,median_hops,stddev_hops,stderr_hops,success_rate,seed";

fn default_queries() -> usize {
    10_000
}
fn default_replicates() -> usize {
    5
}
fn default_out_degree() -> usize {
    1
}
fn default_p() -> f64 {
    DEFAULT_P
}
fn default_factor() -> f64 {
    DEFAULT_ITERATION_FACTOR
}
fn default_true() -> bool {
    true
}

/// Where vertices live.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaseSpec {
    Uniform,
    Metropolis,
    RandomZones { k: usize, gamma: f64, label_seed: u64 },
    /// Raster grid file, relative paths resolved against the spec's directory.
    Raster { path: PathBuf },
    /// The built-in synthetic national raster.
    SyntheticRaster { seed: u64 },
    /// Lattice with `side^dimensions ≈ n` vertices.
    Lattice {
        dimensions: usize,
        #[serde(default = "default_true")]
        cyclic: bool,
    },
}

impl BaseSpec {
    pub fn name(&self) -> &'static str {
        match self {
            BaseSpec::Uniform => "uniform",
            BaseSpec::Metropolis => "metropolis",
            BaseSpec::RandomZones { .. } => "random-zones",
            BaseSpec::Raster { .. } => "raster",
            BaseSpec::SyntheticRaster { .. } => "synthetic-raster",
            BaseSpec::Lattice { dimensions: 1, cyclic: true } => "ring",
            BaseSpec::Lattice { .. } => "lattice",
        }
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self, BaseSpec::Lattice { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MethodSpec {
    Distance {
        alpha: f64,
    },
    Rank,
    Uniform,
    DestinationSampling {
        #[serde(default = "default_p")]
        p: f64,
        #[serde(default = "default_factor")]
        factor: f64,
    },
}

impl MethodSpec {
    pub fn destination_sampling() -> Self {
        MethodSpec::DestinationSampling { p: DEFAULT_P, factor: DEFAULT_ITERATION_FACTOR }
    }

    pub fn label(&self) -> &'static str {
        match self {
            MethodSpec::Distance { .. } => "distance",
            MethodSpec::Rank => "rank",
            MethodSpec::Uniform => "uniform",
            MethodSpec::DestinationSampling { .. } => "destination-sampling",
        }
    }

    fn alpha_column(&self) -> String {
        match self {
            MethodSpec::Distance { alpha } => alpha.to_string(),
            _ => String::new(),
        }
    }
}

/// Which target law post-rewiring evaluation queries follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalWorkload {
    /// The same popularity law used while rewiring.
    #[default]
    Workload,
    /// Uniform targets regardless of popularity.
    Uniform,
    /// Both; uniform-target records carry the method suffix `@uniform`.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub base: BaseSpec,
    /// Target population sizes, strictly increasing.
    pub sizes: Vec<usize>,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_queries")]
    pub queries_per_size: usize,
    /// Popularity exponent for query targets; 0 means uniform.
    #[serde(default)]
    pub popularity_beta: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub base_seed: u64,
    #[serde(default = "default_out_degree")]
    pub out_degree: usize,
    /// Draw query (and rewiring) sources from the popularity law too.
    #[serde(default)]
    pub popular_sources: bool,
    #[serde(default)]
    pub eval: EvalWorkload,
}

impl ExperimentSpec {
    pub fn new(base: BaseSpec, sizes: Vec<usize>, methods: Vec<MethodSpec>, base_seed: u64) -> Self {
        Self {
            base,
            sizes,
            methods,
            queries_per_size: default_queries(),
            popularity_beta: 0.0,
            replicates: default_replicates(),
            base_seed,
            out_degree: 1,
            popular_sources: false,
            eval: EvalWorkload::Workload,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.sizes.is_empty() || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("sizes {:?} must be nonempty and strictly increasing", self.sizes));
        }
        if self.sizes[0] < 2 {
            return bad("sizes must be at least 2".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.queries_per_size == 0 || self.replicates == 0 || self.out_degree == 0 {
            return bad("queries_per_size, replicates and out_degree must be positive".into());
        }
        if !(self.popularity_beta >= 0.0 && self.popularity_beta.is_finite()) {
            return bad(format!("popularity_beta {} must be >= 0", self.popularity_beta));
        }
        for m in &self.methods {
            match *m {
                MethodSpec::Distance { alpha } if !(alpha >= 0.0 && alpha.is_finite()) => {
                    return bad(format!("distance alpha {alpha} must be >= 0"));
                }
                MethodSpec::DestinationSampling { p, factor } if !(p > 0.0 && p < 1.0 && factor >= 0.0) => {
                    return bad(format!("destination sampling p={p} factor={factor} out of range"));
                }
                _ => {}
            }
        }
        if self.base_seed > i64::MAX as u64 {
            return bad(format!("base_seed {} exceeds {}", self.base_seed, i64::MAX));
        }
        if let BaseSpec::Lattice { dimensions, .. } = self.base {
            if dimensions == 0 || dimensions > 4 {
                return bad(format!("lattice dimension {dimensions} unsupported"));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::format(toml_line(text, &e), e.message().to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment spec serializes")
    }

    pub fn cell_seed(&self, size_index: usize, replicate: usize) -> u64 {
        rng::derive(rng::derive(self.base_seed, size_index as u64), replicate as u64)
    }
}

fn toml_line(text: &str, e: &toml::de::Error) -> usize {
    e.span().map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1)
}

/// Density model or lattice, with any file inputs loaded.
#[derive(Debug, Clone)]
pub enum ResolvedBase {
    Density(DensityModel),
    Lattice { dimensions: usize, cyclic: bool },
}

impl ResolvedBase {
    pub fn resolve(spec: &BaseSpec, dir: &Path) -> Result<Self> {
        Ok(match spec {
            BaseSpec::Uniform => ResolvedBase::Density(DensityModel::Uniform),
            BaseSpec::Metropolis => ResolvedBase::Density(DensityModel::Metropolis),
            BaseSpec::RandomZones { k, gamma, label_seed } => {
                ResolvedBase::Density(DensityModel::random_zones(*k, *gamma, *label_seed)?)
            }
            BaseSpec::Raster { path } => {
                let full = if path.is_absolute() { path.clone() } else { dir.join(path) };
                let file = std::fs::File::open(&full)?;
                ResolvedBase::Density(DensityModel::Raster(RasterGrid::read(std::io::BufReader::new(file))?))
            }
            BaseSpec::SyntheticRaster { seed } => {
                ResolvedBase::Density(DensityModel::Raster(RasterGrid::synthetic_country(*seed)))
            }
            BaseSpec::Lattice { dimensions, cyclic } => {
                ResolvedBase::Lattice { dimensions: *dimensions, cyclic: *cyclic }
            }
        })
    }
}

/// Everything shared by the methods of one cell.
#[derive(Debug, Clone)]
pub struct Instance {
    pub size_target: usize,
    pub replicate: usize,
    pub seed: u64,
    pub graph: BaseGraph,
    pub popularity: PopularityDist,
    pub source_law: PopularityDist,
    /// Evaluation queries under the workload law.
    pub queries: Vec<(u32, u32)>,
    /// Evaluation queries with uniform targets, when requested.
    pub uniform_queries: Vec<(u32, u32)>,
}

const TAG_POINTS: u64 = 1;
const TAG_RANKING: u64 = 2;
const TAG_QUERIES: u64 = 3;
const TAG_UNIFORM_QUERIES: u64 = 4;
const TAG_METHOD: u64 = 100;

fn lattice_side(n: usize, dimensions: usize) -> usize {
    let side = (n as f64).powf(1.0 / dimensions as f64).round() as usize;
    side.max(2)
}

/// Builds the base graph, popularity law and query lists of a cell.
pub fn build_instance(spec: &ExperimentSpec, base: &ResolvedBase, size_index: usize, replicate: usize) -> Result<Instance> {
    let size_target = spec.sizes[size_index];
    let seed = spec.cell_seed(size_index, replicate);
    let graph = match base {
        ResolvedBase::Density(model) => {
            let points = sample_points(model, size_target, rng::derive(seed, TAG_POINTS))?;
            if points.len() < 2 {
                return Err(Error::TooFewVertices { needed: 2, got: points.len() });
            }
            basegraph::delaunay(points)?
        }
        ResolvedBase::Lattice { dimensions, cyclic } => {
            let dims = vec![lattice_side(size_target, *dimensions); *dimensions];
            basegraph::lattice(&dims, *cyclic)?
        }
    };
    let n = graph.len();
    let popularity = PopularityDist::power_law_shuffled(n, spec.popularity_beta, rng::derive(seed, TAG_RANKING))?;
    let source_law = if spec.popular_sources { popularity.clone() } else { PopularityDist::uniform(n) };
    let queries = draw_queries(&source_law, &popularity, spec.queries_per_size, rng::derive(seed, TAG_QUERIES));
    let uniform_queries = if spec.eval == EvalWorkload::Workload {
        Vec::new()
    } else {
        draw_queries(&source_law, &PopularityDist::uniform(n), spec.queries_per_size, rng::derive(seed, TAG_UNIFORM_QUERIES))
    };
    Ok(Instance { size_target, replicate, seed, graph, popularity, source_law, queries, uniform_queries })
}

/// Query pairs with distinct endpoints; a source equal to its target is
/// redrawn.
pub fn draw_queries(sources: &PopularityDist, targets: &PopularityDist, count: usize, seed: u64) -> Vec<(u32, u32)> {
    let mut rng = rng::from_seed(seed);
    (0..count)
        .map(|_| {
            let t = sample_target(targets, &mut rng);
            let s = loop {
                let s = sample_target(sources, &mut rng);
                if s != t {
                    break s;
                }
                if sources.len() == 1 {
                    break s;
                }
                // Keep the stream moving when both laws are concentrated.
                let _: u32 = rng.random();
            };
            (s as u32, t as u32)
        })
        .collect()
}

/// Shortcut table produced by one method on an instance. The rewiring
/// report is returned for destination sampling.
pub fn build_shortcuts(
    spec: &ExperimentSpec,
    inst: &Instance,
    method_index: usize,
) -> Result<(ShortcutTable, Option<RewireReport>)> {
    let method = &spec.methods[method_index];
    let seed = rng::derive(inst.seed, TAG_METHOD + method_index as u64);
    let g = &inst.graph;
    let d = spec.out_degree;
    Ok(match *method {
        MethodSpec::Distance { alpha } => (augment_distance(g, alpha, d, seed)?, None),
        MethodSpec::Rank => (augment_rank(g, d, seed)?, None),
        MethodSpec::Uniform => (augment_uniform(g, d, seed)?, None),
        MethodSpec::DestinationSampling { p, factor } => {
            let cfg = RewireConfig {
                p,
                iteration_factor: factor,
                source_dist: inst.source_law.clone(),
                target_dist: inst.popularity.clone(),
                rng_seed: seed,
                step_cap: None,
                out_degree: d,
            };
            let (table, report) = run_destination_sampling(g, &cfg)?;
            (table, Some(report))
        }
    })
}

/// Routes every query and summarizes hop counts over arrived walks.
pub fn evaluate(g: &BaseGraph, table: &ShortcutTable, queries: &[(u32, u32)]) -> Result<(Summary, f64)> {
    let mut hops = Vec::with_capacity(queries.len());
    for &(s, t) in queries {
        let (h, outcome) = greedy_hops(g, table, s as usize, t as usize, g.len());
        match outcome {
            Outcome::Arrived => hops.push(h as f64),
            // Impossible on Delaunay graphs and lattices.
            Outcome::DeadEnd => return Err(Error::DeadEnd { source_vertex: s as usize, target: t as usize }),
            Outcome::StepCapExceeded => {}
        }
    }
    let success = hops.len() as f64 / queries.len() as f64;
    Ok((Summary::of(&hops), success))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub model: String,
    pub method: String,
    pub alpha: String,
    pub beta: f64,
    pub size_target: usize,
    pub size_realized: usize,
    pub replicate: usize,
    pub hops: Summary,
    pub success_rate: f64,
    pub seed: u64,
}

impl CellRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.model,
            self.method,
            self.alpha,
            self.beta,
            self.size_target,
            self.size_realized,
            self.replicate,
            self.hops.mean,
            self.hops.median,
            self.hops.stddev,
            self.hops.stderr,
            self.success_rate,
            self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodFit {
    pub method: String,
    /// `(mean realized n, median over replicates of mean hops)` per size.
    pub points: Vec<(f64, f64)>,
    pub fit: Option<ScalingFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub records: Vec<CellRecord>,
    pub fits: Vec<MethodFit>,
}

impl RunResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(RESULTS_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn records_for<'a>(&'a self, method: &'a str, size_target: usize) -> impl Iterator<Item = &'a CellRecord> + 'a {
        self.records.iter().filter(move |r| r.method == method && r.size_target == size_target)
    }

    pub fn fit_for(&self, method: &str) -> Option<&MethodFit> {
        self.fits.iter().find(|f| f.method == method)
    }
}

fn cell_error(spec: &ExperimentSpec, si: usize, r: usize, method: &str, e: Error) -> Error {
    Error::Cell { size: spec.sizes[si], method: method.to_string(), replicate: r, seed: spec.cell_seed(si, r), source: Box::new(e) }
}

fn run_cell(spec: &ExperimentSpec, base: &ResolvedBase, si: usize, r: usize) -> Result<Vec<CellRecord>> {
    let inst = build_instance(spec, base, si, r).map_err(|e| cell_error(spec, si, r, "instance", e))?;
    let mut out = Vec::new();
    for (mi, method) in spec.methods.iter().enumerate() {
        let (table, _) = build_shortcuts(spec, &inst, mi).map_err(|e| cell_error(spec, si, r, method.label(), e))?;
        let mut push = |label: String, queries: &[(u32, u32)], beta: f64| -> Result<()> {
            let (hops, success_rate) =
                evaluate(&inst.graph, &table, queries).map_err(|e| cell_error(spec, si, r, method.label(), e))?;
            out.push(CellRecord {
                model: spec.base.name().to_string(),
                method: label,
                alpha: method.alpha_column(),
                beta,
                size_target: inst.size_target,
                size_realized: inst.graph.len(),
                replicate: r,
                hops,
                success_rate,
                seed: inst.seed,
            });
            Ok(())
        };
        match spec.eval {
            EvalWorkload::Workload => push(method.label().to_string(), &inst.queries, spec.popularity_beta)?,
            EvalWorkload::Uniform => push(method.label().to_string(), &inst.uniform_queries, 0.0)?,
            EvalWorkload::Both => {
                push(method.label().to_string(), &inst.queries, spec.popularity_beta)?;
                push(format!("{}@uniform", method.label()), &inst.uniform_queries, 0.0)?;
            }
        }
    }
    Ok(out)
}

fn run_resolved(spec: &ExperimentSpec, base: &ResolvedBase) -> Result<RunResult> {
    spec.validate()?;
    let cells: Vec<(usize, usize)> =
        (0..spec.sizes.len()).flat_map(|si| (0..spec.replicates).map(move |r| (si, r))).collect();
    let per_cell: Vec<Vec<CellRecord>> =
        cells.par_iter().map(|&(si, r)| run_cell(spec, base, si, r)).collect::<Result<_>>()?;

    // Cells are ordered by (size, replicate); list methods within size.
    let mut records = Vec::new();
    for si in 0..spec.sizes.len() {
        let group: Vec<&CellRecord> = per_cell[si * spec.replicates..(si + 1) * spec.replicates].iter().flatten().collect();
        let mut labels: Vec<&str> = Vec::new();
        for rec in &group {
            if !labels.contains(&rec.method.as_str()) {
                labels.push(&rec.method);
            }
        }
        for label in labels {
            records.extend(group.iter().filter(|rec| rec.method == label).map(|rec| (*rec).clone()));
        }
    }
    let fits = fit_methods(spec, &records);
    Ok(RunResult { records, fits })
}

fn fit_methods(spec: &ExperimentSpec, records: &[CellRecord]) -> Vec<MethodFit> {
    let mut labels: Vec<String> = Vec::new();
    for r in records {
        if !labels.contains(&r.method) {
            labels.push(r.method.clone());
        }
    }
    labels
        .into_iter()
        .map(|method| {
            let points: Vec<(f64, f64)> = spec
                .sizes
                .iter()
                .filter_map(|&size| {
                    let cell: Vec<&CellRecord> = records.iter().filter(|r| r.method == method && r.size_target == size).collect();
                    if cell.is_empty() {
                        return None;
                    }
                    let n = cell.iter().map(|r| r.size_realized as f64).sum::<f64>() / cell.len() as f64;
                    let means: Vec<f64> = cell.iter().map(|r| r.hops.mean).collect();
                    Some((n, stats::median(&means)))
                })
                .collect();
            let fit = stats::fit_scaling(&points).ok();
            MethodFit { method, points, fit }
        })
        .collect()
}

/// Size sweep on a density model or lattice.
pub fn run_scaling(spec: &ExperimentSpec) -> Result<RunResult> {
    run_scaling_in(spec, Path::new("."))
}

pub fn run_scaling_in(spec: &ExperimentSpec, dir: &Path) -> Result<RunResult> {
    let base = ResolvedBase::resolve(&spec.base, dir)?;
    run_resolved(spec, &base)
}

/// Density model combined with a popularity law: destination sampling is
/// trained on, and every method evaluated under, the biased targets.
pub fn run_combined(spec: &ExperimentSpec) -> Result<RunResult> {
    run_combined_in(spec, Path::new("."))
}

pub fn run_combined_in(spec: &ExperimentSpec, dir: &Path) -> Result<RunResult> {
    if spec.base.is_lattice() {
        return Err(Error::InvalidParameter("combined experiments need a density model, not a lattice".into()));
    }
    run_scaling_in(spec, dir)
}

/// Fits for each method; fails unless the run has at least three sizes.
pub fn fit_scaling(result: &RunResult) -> Result<Vec<(String, ScalingFit)>> {
    result
        .fits
        .iter()
        .map(|f| stats::fit_scaling(&f.points).map(|fit| (f.method.clone(), fit)))
        .collect()
}

/// Run manifest: the full spec plus every cell seed.
pub fn manifest(spec: &ExperimentSpec, subcommand: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# smallworld {} run manifest", crate::VERSION);
    let _ = writeln!(out, "tool_version = {:?}", crate::VERSION);
    let _ = writeln!(out, "subcommand = {subcommand:?}");
    out.push('\n');
    let spec_toml = toml::to_string(&ManifestSpec { spec: spec.clone() }).expect("spec serializes");
    out.push_str(&spec_toml);
    for (si, &size) in spec.sizes.iter().enumerate() {
        for r in 0..spec.replicates {
            let _ = writeln!(out, "\n[[cells]]\nsize_target = {size}\nreplicate = {r}\nseed = \"{}\"", spec.cell_seed(si, r));
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct ManifestSpec {
    spec: ExperimentSpec,
}

/// Reads either a bare spec or a manifest (whose `[spec]` table is used).
pub fn read_spec(text: &str) -> Result<ExperimentSpec> {
    let value: toml::Table = toml::from_str(text).map_err(|e| Error::format(toml_line(text, &e), e.message().to_string()))?;
    if value.contains_key("spec") {
        let m: ManifestSpec = toml::from_str(text).map_err(|e| Error::format(toml_line(text, &e), e.message().to_string()))?;
        m.spec.validate()?;
        Ok(m.spec)
    } else {
        ExperimentSpec::from_toml(text)
    }
}

/// Fractions of vertices per shortcut in-degree bucket; degrees are rounded
/// up to the next multiple of ten, with zero joining the first bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeHistogram {
    pub buckets: BTreeMap<u64, f64>,
}

impl DegreeHistogram {
    pub fn from_degrees(degrees: &[u32]) -> Self {
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for &d in degrees {
            *counts.entry(bucket_of(d)).or_default() += 1;
        }
        let n = degrees.len() as f64;
        Self { buckets: counts.into_iter().map(|(b, c)| (b, c as f64 / n)).collect() }
    }

    /// Fraction of vertices in buckets at or above each bucket bound.
    pub fn ccdf(&self) -> Vec<(u64, f64)> {
        let mut tail = 0.0;
        let mut out: Vec<(u64, f64)> = self
            .buckets
            .iter()
            .rev()
            .map(|(&b, &f)| {
                tail += f;
                (b, tail)
            })
            .collect();
        out.reverse();
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket,fraction\n");
        for (b, f) in &self.buckets {
            let _ = writeln!(out, "{b},{f}");
        }
        out
    }
}

pub fn bucket_of(degree: u32) -> u64 {
    (degree.max(1) as u64).div_ceil(10) * 10
}

/// Histogram of shortcut in-degrees; base-graph edges are not counted.
pub fn degree_histogram(table: &ShortcutTable, base: &BaseGraph) -> DegreeHistogram {
    debug_assert_eq!(table.len(), base.len());
    DegreeHistogram::from_degrees(&table.in_degrees())
}
