//! Command-line front end for the landing engine.
//!
//! Exit codes: 0 ok, 1 numeric failure or verification violation, 2 usage.
//! `DREADLOCK_THREADS` caps the worker-pool size; reports are byte-identical
//! across runs and thread counts.

mod json;
mod render;
mod spec;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use dreadlock::{
    build_hyperbolic_set, count_colanding, land, rays_to_point, scan_periodic, trace_ray,
    uniform_landing_check, verify_landing_theorem, Classification, EntireMap, ExternalAddress,
    LandOptions, LandingReport, PortraitParams, RayPolyline, ScanOutcome, Window,
};

use spec::{parse_complex, parse_grid, parse_window, resolve_map, usage, CliError, FileConfig};

#[derive(Parser)]
#[command(
    name = "dreadlock",
    version,
    about = "External addresses, ray tracing by inverse iteration, and landing diagnostics for entire maps"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run pullbacks along addresses, detect landing, classify the limit
    Land(LandArgs),
    /// Trace a ray polyline by iterated pullback of a base arc
    TraceRay(TraceArgs),
    /// Locate periodic points on a seed grid by damped Newton iteration
    ScanPeriodic(ScanArgs),
    /// Two-sided landing verification over a truncated alphabet
    Portrait(PortraitArgs),
    /// Assemble a hyperbolic set from repelling points and check uniform landing
    Hyperbolic(HyperbolicArgs),
    /// Escape-time raster (PPM) with ray overlays and periodic-point marks
    Render(RenderArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Map spec: exp:<re>[,<im>] or cos:<a_re>,<a_im>,<b_re>,<b_im>
    #[arg(long)]
    map: Option<String>,
    /// TOML or JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reference disc radius override (skips the sampled normalization)
    #[arg(long)]
    disc_radius: Option<f64>,
    /// Cut-ray angle override in radians
    #[arg(long)]
    cut_angle: Option<f64>,
}

impl CommonArgs {
    fn load(&self) -> Result<(EntireMap, FileConfig), CliError> {
        let cfg = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let map = resolve_map(self.map.as_deref(), &cfg, self.disc_radius, self.cut_angle)?;
        Ok((map, cfg))
    }
}

#[derive(Args)]
struct LandArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Address, e.g. "(0)" or "[5] (1,2,3)"; repeatable
    #[arg(long = "address")]
    addresses: Vec<String>,
    /// Base point re[,im]; defaults to the map's base point
    #[arg(long, allow_hyphen_values = true)]
    base: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Parabolic slow mode (tol 1e-8, n_max 10^6)
    #[arg(long)]
    slow: bool,
    /// Write the pullback orbit as CSV (n,re,im,gap); needs exactly one address
    #[arg(long)]
    orbit_csv: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long = "address")]
    address: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    base: Option<String>,
    #[arg(long)]
    n_pull: Option<usize>,
    #[arg(long)]
    samples_per_unit: Option<usize>,
    /// Also write the polyline as CSV (n,re,im,gap)
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    period: Option<usize>,
    /// re_min,re_max,im_min,im_max
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// NxM seeds
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct PortraitArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    period: Option<usize>,
    /// Alphabet bound |k| <= K
    #[arg(long = "K", visible_alias = "k-bound")]
    k_bound: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    match_tol: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Print a human-readable table to stderr as well
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct HyperbolicArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    period: Option<usize>,
    #[arg(long = "K", visible_alias = "k-bound")]
    k_bound: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    /// Uniform-landing distance threshold
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    n0_max: Option<usize>,
    /// Depths checked past each n0 candidate
    #[arg(long)]
    uniform_window: Option<usize>,
    /// Iterate k in the expansion witness |(f^k)'| >= eta
    #[arg(long)]
    expansion_iterate: Option<usize>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    escape_radius: Option<f64>,
    /// Ray to overlay; repeatable
    #[arg(long = "overlay-address")]
    overlay_addresses: Vec<String>,
    #[arg(long)]
    overlay_n_pull: Option<usize>,
    #[arg(long)]
    overlay_samples: Option<usize>,
    /// Mark periodic points of this period found in the window
    #[arg(long)]
    mark_period: Option<usize>,
    /// Output PPM path (required)
    #[arg(long)]
    ppm: PathBuf,
    /// Optional SVG with the overlays alone
    #[arg(long)]
    svg: Option<PathBuf>,
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(clean) => {
            if clean {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{}", json::to_json(&ErrorReport::new(&e)).trim_end());
            ExitCode::from(1)
        }
    }
}

fn init_threads() {
    if let Ok(v) = std::env::var("DREADLOCK_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

#[derive(Serialize)]
struct ErrorReport {
    error: String,
}

impl ErrorReport {
    fn new(e: &CliError) -> Self {
        ErrorReport {
            error: e.to_string(),
        }
    }
}

fn emit(out: &Option<PathBuf>, body: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn positive(v: f64, name: &str) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(usage(format!("{name} must be positive, got {v}")))
    }
}

fn parse_addresses(flags: &[String], cfg: &FileConfig) -> Result<Vec<ExternalAddress>, CliError> {
    let raw: Vec<String> = if !flags.is_empty() {
        flags.to_vec()
    } else {
        cfg.addresses.clone().unwrap_or_default()
    };
    if raw.is_empty() {
        return Err(usage("no addresses given; use --address"));
    }
    raw.iter()
        .map(|s| s.parse::<ExternalAddress>().map_err(CliError::from))
        .collect()
}

fn resolve_base(
    flag: Option<&str>,
    cfg: &FileConfig,
    map: &EntireMap,
) -> Result<Complex64, CliError> {
    match flag.map(str::to_owned).or_else(|| cfg.base.clone()) {
        Some(s) => parse_complex(&s),
        None => Ok(map.base_point()),
    }
}

fn run(cmd: Cmd) -> Result<bool, CliError> {
    match cmd {
        Cmd::Land(a) => cmd_land(a),
        Cmd::TraceRay(a) => cmd_trace(a),
        Cmd::ScanPeriodic(a) => cmd_scan(a),
        Cmd::Portrait(a) => cmd_portrait(a),
        Cmd::Hyperbolic(a) => cmd_hyperbolic(a),
        Cmd::Render(a) => cmd_render(a),
    }
}

#[derive(Serialize)]
struct LandRecord {
    address: String,
    #[serde(flatten)]
    report: LandingReport,
}

#[derive(Serialize)]
struct LandReport {
    command: &'static str,
    map: String,
    base: [f64; 2],
    tol: f64,
    n_max: usize,
    results: Vec<LandRecord>,
}

fn cmd_land(a: LandArgs) -> Result<bool, CliError> {
    let (map, cfg) = a.common.load()?;
    let addresses = parse_addresses(&a.addresses, &cfg)?;
    let base = resolve_base(a.base.as_deref(), &cfg, &map)?;
    let mut opts = if a.slow {
        LandOptions::slow()
    } else {
        LandOptions::default()
    };
    if let Some(t) = a.tol.or(cfg.tol) {
        opts.tol = positive(t, "tol")?;
    }
    if let Some(n) = a.n_max.or(cfg.n_max) {
        opts.n_max = n;
    }
    if a.orbit_csv.is_some() && addresses.len() != 1 {
        return Err(usage("--orbit-csv needs exactly one --address"));
    }
    let mut results = Vec::with_capacity(addresses.len());
    for s in &addresses {
        let report = match &a.orbit_csv {
            Some(path) => {
                let (report, orbit) = dreadlock::land_with_orbit(&map, s, base, &opts)?;
                std::fs::write(path, orbit.to_csv())?;
                report
            }
            None => land(&map, s, base, &opts)?,
        };
        results.push(LandRecord {
            address: s.to_string(),
            report,
        });
    }
    let body = json::to_json(&LandReport {
        command: "land",
        map: map.id_string(),
        base: [base.re, base.im],
        tol: opts.tol,
        n_max: opts.n_max,
        results,
    });
    emit(&a.common.out, &body)?;
    Ok(true)
}

#[derive(Serialize)]
struct TraceReport {
    command: &'static str,
    map: String,
    base: [f64; 2],
    n_pull: usize,
    samples_per_unit: usize,
    ray: RayPolyline,
}

fn cmd_trace(a: TraceArgs) -> Result<bool, CliError> {
    let (map, cfg) = a.common.load()?;
    let address_str = a
        .address
        .or_else(|| cfg.addresses.as_ref().and_then(|v| v.first().cloned()))
        .ok_or_else(|| usage("no address given; use --address"))?;
    let s: ExternalAddress = address_str.parse()?;
    let base = match a.base.as_deref().map(str::to_owned).or_else(|| cfg.base.clone()) {
        Some(b) => Some(parse_complex(&b)?),
        None => None,
    };
    let n_pull = a.n_pull.or(cfg.n_pull).unwrap_or(30);
    let spu = a.samples_per_unit.or(cfg.samples_per_unit).unwrap_or(16);
    let ray = trace_ray(&map, &s, base, n_pull, spu)?;
    if let Some(csv_path) = &a.csv {
        std::fs::write(csv_path, ray.to_csv())?;
    }
    let base_used = ray
        .vertex_at(0.0)
        .unwrap_or_else(|| Complex64::new(0.0, 0.0));
    let body = json::to_json(&TraceReport {
        command: "trace-ray",
        map: map.id_string(),
        base: [base_used.re, base_used.im],
        n_pull,
        samples_per_unit: spu,
        ray,
    });
    emit(&a.common.out, &body)?;
    Ok(true)
}

#[derive(Serialize)]
struct ScanReport {
    command: &'static str,
    map: String,
    period: usize,
    window: Window,
    grid: [usize; 2],
    tol: f64,
    #[serde(flatten)]
    outcome: ScanOutcome,
}

fn cmd_scan(a: ScanArgs) -> Result<bool, CliError> {
    let (map, cfg) = a.common.load()?;
    let period = a.period.or(cfg.period).unwrap_or(1);
    let window = parse_window(
        a.window
            .as_deref()
            .or(cfg.window.as_deref())
            .unwrap_or("-5,5,-8,8"),
    )?;
    let grid = parse_grid(a.grid.as_deref().or(cfg.grid.as_deref()).unwrap_or("40x40"))?;
    let tol = positive(a.tol.or(cfg.tol).unwrap_or(1e-11), "tol")?;
    let outcome = scan_periodic(&map, period, window, grid, tol);
    let body = json::to_json(&ScanReport {
        command: "scan-periodic",
        map: map.id_string(),
        period,
        window,
        grid: [grid.0, grid.1],
        tol,
        outcome,
    });
    emit(&a.common.out, &body)?;
    Ok(true)
}

#[derive(Serialize)]
struct PortraitOut {
    command: &'static str,
    #[serde(flatten)]
    report: dreadlock::PortraitReport,
    colanding_counts: BTreeMap<String, usize>,
}

fn cmd_portrait(a: PortraitArgs) -> Result<bool, CliError> {
    let (map, cfg) = a.common.load()?;
    let period = a.period.or(cfg.period).unwrap_or(1);
    let k_bound = a.k_bound.or(cfg.k_bound).unwrap_or(3);
    let window = parse_window(
        a.window
            .as_deref()
            .or(cfg.window.as_deref())
            .unwrap_or("-5,5,-8,8"),
    )?;
    let grid = parse_grid(a.grid.as_deref().or(cfg.grid.as_deref()).unwrap_or("40x40"))?;
    let mut params = PortraitParams::new(period, k_bound, window);
    params.grid = grid;
    if let Some(t) = a.match_tol.or(cfg.match_tol) {
        params.match_tol = positive(t, "match-tol")?;
    }
    if let Some(t) = a.tol.or(cfg.tol) {
        params.land.tol = positive(t, "tol")?;
    }
    if let Some(n) = a.n_max.or(cfg.n_max) {
        params.land.n_max = n;
    }
    let report = verify_landing_theorem(&map, &params);
    let clean = report.violations.is_empty();
    if a.table {
        eprintln!(
            "{:<14} {:>24} {:>24} {:>9} classification",
            "address", "re", "im", "period"
        );
        for pair in &report.pairs {
            eprintln!(
                "{:<14} {:>24.16} {:>24.16} {:>9} {}",
                pair.address.to_string(),
                pair.point.point.re,
                pair.point.point.im,
                pair.point.period,
                pair.point.classification
            );
        }
        for v in &report.violations {
            eprintln!("VIOLATION: {v}");
        }
    }
    let counts = count_colanding(&report);
    let body = json::to_json(&PortraitOut {
        command: "portrait",
        report,
        colanding_counts: counts,
    });
    emit(&a.common.out, &body)?;
    Ok(clean)
}

#[derive(Serialize)]
struct HyperbolicReport {
    command: &'static str,
    map: String,
    period: usize,
    k_bound: i64,
    expansion_iterate: usize,
    eta: f64,
    cycles: Vec<Vec<[f64; 2]>>,
    rays: BTreeMap<String, Vec<String>>,
    uniform: dreadlock::UniformLandingReport,
}

fn cmd_hyperbolic(a: HyperbolicArgs) -> Result<bool, CliError> {
    let (map, cfg) = a.common.load()?;
    let period = a.period.or(cfg.period).unwrap_or(1);
    let k_bound = a.k_bound.or(cfg.k_bound).unwrap_or(3);
    let window = parse_window(
        a.window
            .as_deref()
            .or(cfg.window.as_deref())
            .unwrap_or("-5,5,-8,8"),
    )?;
    let grid = parse_grid(a.grid.as_deref().or(cfg.grid.as_deref()).unwrap_or("40x40"))?;
    let epsilon = positive(a.epsilon.or(cfg.epsilon).unwrap_or(1e-3), "epsilon")?;
    let n0_max = a.n0_max.or(cfg.n0_max).unwrap_or(60);
    let uniform_window = a.uniform_window.or(cfg.uniform_window).unwrap_or(10);
    let k_iter = a.expansion_iterate.unwrap_or(period);

    let scan = scan_periodic(&map, period, window, grid, 1e-11);
    let repelling: Vec<_> = scan
        .points
        .iter()
        .copied()
        .filter(|p| p.classification == Classification::Repelling)
        .collect();
    if repelling.is_empty() {
        return Err(CliError::Numeric(
            "no repelling periodic points found in the window".into(),
        ));
    }
    let set = build_hyperbolic_set(&map, &repelling, k_iter)?;
    let base = map.base_point();
    let opts = LandOptions::default();
    let mut rays = BTreeMap::new();
    let mut all_addresses = Vec::new();
    for pt in &repelling {
        let r = rays_to_point(&map, pt, period, k_bound, base, &opts, 1e-7);
        all_addresses.extend(r.addresses.iter().cloned());
        rays.insert(
            dreadlock::portrait::point_key(pt.point),
            r.addresses.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        );
    }
    all_addresses.sort();
    all_addresses.dedup();
    if all_addresses.is_empty() {
        return Err(CliError::Numeric(
            "no addresses land on the hyperbolic set within the alphabet bound".into(),
        ));
    }
    let uniform =
        uniform_landing_check(&map, &set, &all_addresses, base, epsilon, n0_max, uniform_window)?;
    let clean = uniform.n0.is_some();
    let body = json::to_json(&HyperbolicReport {
        command: "hyperbolic",
        map: map.id_string(),
        period,
        k_bound,
        expansion_iterate: set.expansion_iterate,
        eta: set.eta,
        cycles: set.cycles.clone(),
        rays,
        uniform,
    });
    emit(&a.common.out, &body)?;
    Ok(clean)
}

#[derive(Serialize)]
struct RenderReport {
    command: &'static str,
    map: String,
    ppm: String,
    width: usize,
    height: usize,
    max_iter: usize,
    escape_radius: f64,
    overlays: usize,
    marks: usize,
    svg: Option<String>,
}

fn cmd_render(a: RenderArgs) -> Result<bool, CliError> {
    let (map, cfg) = a.common.load()?;
    let window = parse_window(
        a.window
            .as_deref()
            .or(cfg.window.as_deref())
            .unwrap_or("-5,5,-5,5"),
    )?;
    let width = a.width.or(cfg.width).unwrap_or(512);
    let height = a.height.or(cfg.height).unwrap_or(512);
    let max_iter = a.max_iter.or(cfg.max_iter).unwrap_or(64);
    let escape_radius = positive(a.escape_radius.or(cfg.escape_radius).unwrap_or(100.0), "escape-radius")?;

    let mut overlays = Vec::new();
    for addr in &a.overlay_addresses {
        let s: ExternalAddress = addr.parse()?;
        let ray = trace_ray(
            &map,
            &s,
            None,
            a.overlay_n_pull.unwrap_or(30),
            a.overlay_samples.unwrap_or(16),
        )?;
        overlays.push(ray);
    }
    let marks = match a.mark_period {
        Some(p) => scan_periodic(&map, p, window, (24, 24), 1e-11).points,
        None => Vec::new(),
    };

    let spec = render::RenderSpec {
        window,
        width,
        height,
        max_iter,
        escape_radius,
        overlays,
        marks,
    };
    let ppm = render::render_ppm(&map, &spec)?;
    std::fs::write(&a.ppm, &ppm)?;
    let svg_path = match &a.svg {
        Some(p) => {
            std::fs::write(p, render::overlays_svg(&spec))?;
            Some(p.display().to_string())
        }
        None => None,
    };
    let body = json::to_json(&RenderReport {
        command: "render",
        map: map.id_string(),
        ppm: a.ppm.display().to_string(),
        width,
        height,
        max_iter,
        escape_radius,
        overlays: spec.overlays.len(),
        marks: spec.marks.len(),
        svg: svg_path,
    });
    emit(&a.common.out, &body)?;
    Ok(true)
}
