//! `smallworld` command-line driver.
//!
//! Exit codes: 0 success, 1 usage error, 2 input-format error, 3 runtime
//! failure.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use smallworld::augment::{augment_distance, augment_rank, augment_uniform, PopularityDist, ShortcutTable};
use smallworld::experiment::{self, BaseSpec, DegreeHistogram};
use smallworld::format::{graph_to_text, points_to_text, read_graph, read_points, read_shortcuts, shortcuts_to_text};
use smallworld::population::{sample_points, DensityModel, RasterGrid};
use smallworld::rewire::{run_destination_sampling_with, DEFAULT_ITERATION_FACTOR, DEFAULT_P};
use smallworld::routing::greedy_route;
use smallworld::{basegraph, rng, BaseGraph, Error, RewireConfig, VERSION};

#[derive(Parser, Debug)]
#[command(name = "smallworld", version, about = "Navigable small-world simulation")]
struct Cli {
    /// Random seed; chosen from the clock and reported when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// Print progress details to standard error.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a point set from a density model.
    Gen(GenArgs),
    /// Build a base graph: Delaunay over a point file, or a lattice.
    Build(BuildArgs),
    /// Add shortcuts to a graph by an explicit distribution.
    Augment(AugmentArgs),
    /// Grow shortcuts by destination sampling.
    Rewire(RewireArgs),
    /// Route greedily over a graph and shortcut table.
    Route(RouteArgs),
    /// Run an experiment spec or replay a manifest.
    Experiment(ExperimentArgs),
    /// Shortcut in-degree histogram of a shortcut table.
    Degrees(DegreesArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum ModelKind {
    Uniform,
    Metropolis,
    RandomZones,
    Raster,
    SyntheticRaster,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    model: ModelKind,
    /// Expected number of points.
    #[arg(long)]
    n: usize,
    /// Zones per side for random-zones.
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Zone density exponent for random-zones.
    #[arg(long, default_value_t = 1.2)]
    gamma: f64,
    /// Seed of the zone labels; derived from --seed when omitted.
    #[arg(long)]
    label_seed: Option<u64>,
    /// Raster grid file for the raster model.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Seed of the synthetic raster.
    #[arg(long, default_value_t = 1)]
    raster_seed: u64,
}

#[derive(Args, Debug)]
struct BuildArgs {
    /// Point file; omit when building a lattice.
    points: Option<PathBuf>,
    /// Lattice side lengths, e.g. `1000` or `64x64`.
    #[arg(long, conflicts_with = "points")]
    lattice: Option<String>,
    /// Build an open lattice instead of a torus.
    #[arg(long, requires = "lattice")]
    open: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Method {
    Distance,
    Rank,
    Uniform,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    graph: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Distance exponent.
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    out_degree: usize,
}

#[derive(Args, Debug)]
struct RewireArgs {
    graph: PathBuf,
    /// Replacement probability per walk vertex.
    #[arg(long, default_value_t = DEFAULT_P)]
    p: f64,
    /// Steps per vertex.
    #[arg(long, default_value_t = DEFAULT_ITERATION_FACTOR)]
    factor: f64,
    /// Popularity exponent of destinations.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Draw sources from the popularity law too.
    #[arg(long)]
    popular_sources: bool,
    #[arg(long, default_value_t = 1)]
    out_degree: usize,
    /// Walk length limit; defaults to the vertex count.
    #[arg(long)]
    step_cap: Option<usize>,
    /// Write the table every K steps into --snapshot-dir.
    #[arg(long, requires = "snapshot_dir")]
    snapshot_every: Option<usize>,
    #[arg(long)]
    snapshot_dir: Option<PathBuf>,
    /// Report file; `<out>.report` when --out is given, else standard error.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RouteArgs {
    graph: PathBuf,
    shortcuts: PathBuf,
    #[arg(long, requires = "target", conflicts_with = "queries")]
    source: Option<usize>,
    #[arg(long, requires = "source")]
    target: Option<usize>,
    /// Route this many random queries and emit one CSV row each.
    #[arg(long)]
    queries: Option<usize>,
    /// Popularity exponent of random query targets.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Experiment spec or run manifest (TOML).
    spec: PathBuf,
    /// Manifest file; `<out>.manifest.toml` when --out is given.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Scaling fits per method as CSV.
    #[arg(long)]
    fits: Option<PathBuf>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct DegreesArgs {
    shortcuts: PathBuf,
    /// Emit the complementary cumulative fractions instead.
    #[arg(long)]
    ccdf: bool,
}

enum Failure {
    Usage(anyhow::Error),
    Input(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        classify(e, "")
    }
}

fn classify(e: Error, context: &str) -> Failure {
    let wrap = |e: Error| {
        if context.is_empty() {
            anyhow!(e)
        } else {
            anyhow!(e).context(context.to_string())
        }
    };
    match e {
        Error::InvalidParameter(_) | Error::InvalidModel(_) => Failure::Usage(wrap(e)),
        Error::Format { .. } | Error::DuplicatePoint(_) => Failure::Input(wrap(e)),
        _ => Failure::Runtime(wrap(e)),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

/// Reads an input file, treating every problem with it as an input error.
fn open_input(path: &Path) -> CliResult<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Input)
}

fn load<T>(path: &Path, read: impl FnOnce(BufReader<fs::File>) -> smallworld::Result<T>) -> CliResult<T> {
    let source = open_input(path)?;
    read(source).map_err(|e| match e {
        Error::Io(_) | Error::Format { .. } | Error::DuplicatePoint(_) => {
            Failure::Input(anyhow!(e).context(format!("in {}", path.display())))
        }
        other => classify(other, &format!("in {}", path.display())),
    })
}

struct Ctx {
    seed: u64,
    out: Option<PathBuf>,
    verbose: u8,
}

impl Ctx {
    fn header(&self, subcommand: &str, flags: &str) -> String {
        format!("# smallworld {VERSION}\n# command: {subcommand}{}{flags}\n", if flags.is_empty() { "" } else { " " })
    }

    fn emit(&self, body: &str) -> CliResult<()> {
        write_output(self.out.as_deref(), body)
    }

    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn write_output(path: Option<&Path>, body: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, body).with_context(|| format!("cannot write {}", p.display())).map_err(Failure::Runtime),
        None => io::stdout().write_all(body.as_bytes()).context("cannot write to standard output").map_err(Failure::Runtime),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_gen(ctx: &Ctx, a: &GenArgs) -> CliResult<()> {
    let label_seed = a.label_seed.unwrap_or_else(|| rng::derive(ctx.seed, 1));
    let mut flags = format!("--model {} --n {}", a.model.to_possible_value().unwrap().get_name(), a.n);
    let model = match a.model {
        ModelKind::Uniform => DensityModel::Uniform,
        ModelKind::Metropolis => DensityModel::Metropolis,
        ModelKind::RandomZones => {
            let _ = write!(flags, " --k {} --gamma {} --label-seed {label_seed}", a.k, a.gamma);
            DensityModel::random_zones(a.k, a.gamma, label_seed)?
        }
        ModelKind::Raster => {
            let file = a.file.as_ref().ok_or_else(|| usage("--model raster needs --file"))?;
            let _ = write!(flags, " --file {}", file.display());
            DensityModel::Raster(load(file, RasterGrid::read)?)
        }
        ModelKind::SyntheticRaster => {
            let _ = write!(flags, " --raster-seed {}", a.raster_seed);
            DensityModel::Raster(RasterGrid::synthetic_country(a.raster_seed))
        }
    };
    let _ = write!(flags, " --seed {}", ctx.seed);
    let points = sample_points(&model, a.n, ctx.seed)?;
    ctx.note(format!("sampled {} points", points.len()));
    ctx.emit(&(ctx.header("gen", &flags) + &points_to_text(&points)))
}

fn parse_sides(spec: &str) -> CliResult<Vec<usize>> {
    spec.split('x')
        .map(|s| s.trim().parse::<usize>().map_err(|_| usage(format!("bad lattice side {s:?} in {spec:?}"))))
        .collect()
}

fn cmd_build(ctx: &Ctx, a: &BuildArgs) -> CliResult<()> {
    let (g, flags) = match (&a.points, &a.lattice) {
        (Some(p), None) => {
            let points = load(p, read_points)?;
            if points.len() < 2 {
                return Err(Failure::Input(anyhow!("{}: need at least 2 points, got {}", p.display(), points.len())));
            }
            (basegraph::delaunay(points)?, p.display().to_string())
        }
        (None, Some(l)) => {
            let sides = parse_sides(l)?;
            (basegraph::lattice(&sides, !a.open)?, format!("--lattice {l}{}", if a.open { " --open" } else { "" }))
        }
        _ => return Err(usage("build needs a point file or --lattice")),
    };
    ctx.note(format!("{} vertices, {} edges", g.len(), g.edge_count()));
    ctx.emit(&(ctx.header("build", &flags) + &graph_to_text(&g)))
}

fn cmd_augment(ctx: &Ctx, a: &AugmentArgs) -> CliResult<()> {
    let g = load(&a.graph, read_graph)?;
    let name = a.method.to_possible_value().unwrap().get_name().to_string();
    let table = match a.method {
        Method::Distance => augment_distance(&g, a.alpha, a.out_degree, ctx.seed)?,
        Method::Rank => augment_rank(&g, a.out_degree, ctx.seed)?,
        Method::Uniform => augment_uniform(&g, a.out_degree, ctx.seed)?,
    };
    let alpha = if a.method == Method::Distance { format!(" --alpha {}", a.alpha) } else { String::new() };
    let flags = format!("{} --method {name}{alpha} --out-degree {} --seed {}", a.graph.display(), a.out_degree, ctx.seed);
    ctx.emit(&(ctx.header("augment", &flags) + &shortcuts_to_text(&table)))
}

fn popularity(n: usize, beta: f64, seed: u64) -> CliResult<PopularityDist> {
    Ok(PopularityDist::power_law_shuffled(n, beta, rng::derive(seed, 2))?)
}

fn cmd_rewire(ctx: &Ctx, a: &RewireArgs) -> CliResult<()> {
    let g = load(&a.graph, read_graph)?;
    let n = g.len();
    let target_dist = popularity(n, a.beta, ctx.seed)?;
    let source_dist = if a.popular_sources { target_dist.clone() } else { PopularityDist::uniform(n) };
    let cfg = RewireConfig {
        p: a.p,
        iteration_factor: a.factor,
        source_dist,
        target_dist,
        rng_seed: ctx.seed,
        step_cap: a.step_cap,
        out_degree: a.out_degree,
    };
    let mut flags = format!(
        "{} --p {} --factor {} --beta {}{} --out-degree {}",
        a.graph.display(),
        a.p,
        a.factor,
        a.beta,
        if a.popular_sources { " --popular-sources" } else { "" },
        a.out_degree
    );
    if let Some(c) = a.step_cap {
        let _ = write!(flags, " --step-cap {c}");
    }
    let _ = write!(flags, " --seed {}", ctx.seed);
    let header = ctx.header("rewire", &flags);

    let every = a.snapshot_every.unwrap_or(0);
    if let Some(dir) = &a.snapshot_dir {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display())).map_err(Failure::Runtime)?;
    }
    let (table, report) = run_destination_sampling_with(&g, &cfg, every, |step, t| {
        let dir = a.snapshot_dir.as_ref().expect("snapshot dir required by clap");
        let path = dir.join(format!("shortcuts-{step:010}.txt"));
        let body = format!("{header}# snapshot after step {step}\n{}", shortcuts_to_text(t));
        fs::write(&path, body).map_err(Error::Io)
    })?;

    let mut text = header.clone();
    let _ = writeln!(text, "p = {}", cfg.p);
    let _ = writeln!(text, "factor = {}", cfg.iteration_factor);
    let _ = writeln!(text, "beta = {}", a.beta);
    let _ = writeln!(text, "seed = {}", ctx.seed);
    let _ = writeln!(text, "iterations = {}", report.iterations_run);
    let _ = writeln!(text, "walks = {}", report.walks);
    let _ = writeln!(text, "replacements = {}", report.replacements_made);
    let _ = writeln!(text, "total_hops = {}", report.total_hops);
    let _ = writeln!(text, "truncated_walks = {}", report.truncated_walks);
    let _ = writeln!(text, "dead_end_walks = {}", report.dead_end_walks);
    let _ = writeln!(text, "self_loops = {}", table.self_loop_count());
    let _ = writeln!(text, "early_median_hops = {}", report.early_median_hops);
    let _ = writeln!(text, "late_median_hops = {}", report.late_median_hops);
    let trace: Vec<String> = report.walk_length_trace.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(text, "walk_length_trace = [{}]", trace.join(", "));
    let report_path = a.report.clone().or_else(|| ctx.out.as_deref().map(|o| with_suffix(o, ".report")));
    match report_path {
        Some(p) => write_output(Some(&p), &text)?,
        None => eprint!("{text}"),
    }
    ctx.emit(&(header + &shortcuts_to_text(&table)))
}

fn check_vertex(g: &BaseGraph, v: usize, what: &str) -> CliResult<()> {
    if v >= g.len() {
        return Err(usage(format!("{what} {v} out of range (graph has {} vertices)", g.len())));
    }
    Ok(())
}

fn cmd_route(ctx: &Ctx, a: &RouteArgs) -> CliResult<()> {
    let g = load(&a.graph, read_graph)?;
    let s: ShortcutTable = load(&a.shortcuts, read_shortcuts)?;
    if s.len() != g.len() {
        return Err(Failure::Input(anyhow!("shortcut table covers {} vertices, graph has {}", s.len(), g.len())));
    }
    let base = format!("{} {}", a.graph.display(), a.shortcuts.display());
    match (a.source, a.target, a.queries) {
        (Some(src), Some(dst), None) => {
            check_vertex(&g, src, "source")?;
            check_vertex(&g, dst, "target")?;
            let r = greedy_route(&g, &s, src, dst, g.len());
            let path: Vec<String> = r.path.iter().map(|v| v.to_string()).collect();
            let body = format!("hops {}\noutcome {:?}\npath {}\n", r.hops(), r.outcome, path.join(" "));
            ctx.emit(&(ctx.header("route", &format!("{base} --source {src} --target {dst}")) + &body))
        }
        (None, None, Some(q)) => {
            let targets = popularity(g.len(), a.beta, ctx.seed)?;
            let sources = PopularityDist::uniform(g.len());
            let pairs = experiment::draw_queries(&sources, &targets, q, rng::derive(ctx.seed, 3));
            let mut body = String::from("source,target,hops,outcome\n");
            let mut hops = Vec::with_capacity(q);
            for (src, dst) in pairs {
                let r = greedy_route(&g, &s, src as usize, dst as usize, g.len());
                hops.push(r.hops() as f64);
                let _ = writeln!(body, "{src},{dst},{},{:?}", r.hops(), r.outcome);
            }
            let summary = smallworld::stats::Summary::of(&hops);
            ctx.note(format!("mean hops {} (stderr {})", summary.mean, summary.stderr));
            let flags = format!("{base} --queries {q} --beta {} --seed {}", a.beta, ctx.seed);
            ctx.emit(&(ctx.header("route", &flags) + &body))
        }
        _ => Err(usage("route needs --source and --target, or --queries")),
    }
}

fn cmd_experiment(ctx: &Ctx, a: &ExperimentArgs, seed_given: bool) -> CliResult<()> {
    let text = fs::read_to_string(&a.spec)
        .with_context(|| format!("cannot read {}", a.spec.display()))
        .map_err(Failure::Input)?;
    let mut spec = experiment::read_spec(&text).map_err(|e| match e {
        Error::Format { .. } => Failure::Input(anyhow!(e).context(format!("in {}", a.spec.display()))),
        other => classify(other, &format!("in {}", a.spec.display())),
    })?;
    if seed_given {
        spec.base_seed = ctx.seed;
        spec.validate()?;
    }
    let dir = a.spec.parent().map(Path::to_path_buf).unwrap_or_default();
    let run = || {
        if spec.popularity_beta > 0.0 && !spec.base.is_lattice() {
            experiment::run_combined_in(&spec, &dir)
        } else {
            experiment::run_scaling_in(&spec, &dir)
        }
    };
    let result = match a.workers {
        Some(0) => return Err(usage("--workers must be positive")),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Failure::Runtime(anyhow!(e)))?
            .install(run),
        None => run(),
    };
    let result = result.map_err(|e| match e {
        Error::Io(_) if matches!(spec.base, BaseSpec::Raster { .. }) => Failure::Input(anyhow!(e).context("raster grid")),
        Error::Format { .. } => Failure::Input(anyhow!(e).context("raster grid")),
        other => Failure::Runtime(anyhow!(other)),
    })?;

    // The header depends only on the spec so that manifest replays match.
    let flags = format!("model={} sizes={:?} base_seed={}", spec.base.name(), spec.sizes, spec.base_seed);
    let header = ctx.header("experiment", &flags);
    let manifest_path = a.manifest.clone().or_else(|| ctx.out.as_deref().map(|o| with_suffix(o, ".manifest.toml")));
    match manifest_path {
        Some(p) => write_output(Some(&p), &experiment::manifest(&spec, "experiment"))?,
        None => ctx.note(experiment::manifest(&spec, "experiment")),
    }
    if let Some(p) = &a.fits {
        let mut body = header.clone() + "method,log2_coefficient,log2_residual,loglog_slope,power_exponent,power_residual\n";
        for f in &result.fits {
            match f.fit {
                Some(fit) => {
                    let _ = writeln!(
                        body,
                        "{},{},{},{},{},{}",
                        f.method, fit.log2_coefficient, fit.log2_residual, fit.loglog_slope, fit.power_exponent, fit.power_residual
                    );
                }
                None => {
                    let _ = writeln!(body, "{},,,,,", f.method);
                }
            }
        }
        write_output(Some(p), &body)?;
    }
    for f in &result.fits {
        if let Some(fit) = f.fit {
            ctx.note(format!("{}: c = {:.4}, log-log slope = {:.4}", f.method, fit.log2_coefficient, fit.loglog_slope));
        }
    }
    ctx.emit(&(header + &result.to_csv()))
}

fn cmd_degrees(ctx: &Ctx, a: &DegreesArgs) -> CliResult<()> {
    let table = load(&a.shortcuts, read_shortcuts)?;
    let hist = DegreeHistogram::from_degrees(&table.in_degrees());
    let flags = format!("{}{}", a.shortcuts.display(), if a.ccdf { " --ccdf" } else { "" });
    let body = if a.ccdf {
        let mut s = String::from("bucket,fraction_at_least\n");
        for (b, f) in hist.ccdf() {
            let _ = writeln!(s, "{b},{f}");
        }
        s
    } else {
        hist.to_csv()
    };
    ctx.emit(&(ctx.header("degrees", &flags) + &body))
}

fn clock_seed() -> u64 {
    let nanos = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    // Kept below 2^53 so the seed survives any numeric round trip.
    rng::mix64(nanos as u64) & ((1 << 53) - 1)
}

fn run(cli: Cli) -> CliResult<()> {
    let seed_given = cli.seed.is_some();
    let seed = cli.seed.unwrap_or_else(clock_seed);
    let uses_seed = matches!(cli.command, Command::Gen(_) | Command::Augment(_) | Command::Rewire(_))
        || matches!(&cli.command, Command::Route(r) if r.queries.is_some());
    if !seed_given && uses_seed {
        eprintln!("seed: {seed}");
    }
    let ctx = Ctx { seed, out: cli.out, verbose: cli.verbose };
    match &cli.command {
        Command::Gen(a) => cmd_gen(&ctx, a),
        Command::Build(a) => cmd_build(&ctx, a),
        Command::Augment(a) => cmd_augment(&ctx, a),
        Command::Rewire(a) => cmd_rewire(&ctx, a),
        Command::Route(a) => cmd_route(&ctx, a),
        Command::Experiment(a) => cmd_experiment(&ctx, a, seed_given),
        Command::Degrees(a) => cmd_degrees(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            let (Failure::Usage(e) | Failure::Input(e) | Failure::Runtime(e)) = f;
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
