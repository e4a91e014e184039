//! Command-line front end: single points, sweeps, distribution export,
//! heatmaps, and the built-in invariant suite.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 config error, 3 partial
//! sweep failure.

mod config;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use hubwork::check::{run_checks, CheckLevel};
use hubwork::experiment::{extract_heatmap, run_sweep, u_series, Manifest, QUANTITIES};
use hubwork::heatmap::locate_extrema;
use hubwork::pipeline::{run_point, PointResult};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_INVARIANT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

/// Work statistics of finite-time driven Hubbard chains.
///
/// Units: energies in J, times in 1/J, beta in 1/J.
#[derive(Parser)]
#[command(name = "hubwork", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one (L, U, tau) point and write its record and distribution
    Single(PointArgs),
    /// Run an (L, U, tau) sweep and write records, distributions, manifest
    Sweep(PointArgs),
    /// Compute one point and export its work distribution stems
    Dist(DistArgs),
    /// Pivot a sweep manifest into a (U, tau) heatmap matrix
    Heatmap(HeatmapArgs),
    /// Run the built-in invariant suite
    Check(CheckArgs),
}

/// Flags mirror config-file keys one to one; a flag overrides the file.
#[derive(Args, Clone, Default)]
struct PointArgs {
    /// config file, JSON (.json) or flat key=value
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    j: Option<f64>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// commutator-free-4th | midpoint-exponential | rk4
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tol_unitary: Option<f64>,
    #[arg(long)]
    tol_observable: Option<f64>,
    #[arg(long)]
    weight_cutoff: Option<f64>,
    #[arg(long)]
    max_refinements: Option<u32>,
    #[arg(long)]
    panel_width: Option<usize>,
    #[arg(long)]
    merge_tol: Option<f64>,
    #[arg(long)]
    prob_floor: Option<f64>,
    #[arg(long)]
    trace_distances: Option<bool>,
    #[arg(long)]
    gap_samples: Option<usize>,
    /// sweep: chain lengths, comma separated
    #[arg(long, value_delimiter = ',')]
    l_list: Option<Vec<usize>>,
    #[arg(long)]
    u_min: Option<f64>,
    #[arg(long)]
    u_max: Option<f64>,
    #[arg(long)]
    u_points: Option<usize>,
    /// sweep: tau values, comma separated
    #[arg(long, value_delimiter = ',')]
    tau_list: Option<Vec<f64>>,
    /// run L = 8 on the dense axes instead of the coarse default
    #[arg(long)]
    dense_l8: Option<bool>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    export_distributions: Option<bool>,
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    verbose: Option<bool>,
}

#[derive(Args)]
struct DistArgs {
    #[command(flatten)]
    point: PointArgs,
    /// csv | json
    #[arg(long, default_value = "csv")]
    format: String,
    /// output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HeatmapArgs {
    /// manifest.json of a finished sweep
    #[arg(long)]
    manifest: PathBuf,
    /// record quantity, e.g. skew3, sigma, d_eq
    #[arg(long)]
    quantity: String,
    /// chain length to extract
    #[arg(long)]
    l: usize,
    /// CSV matrix output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// also render a self-contained SVG
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// quick | full
    #[arg(long, default_value = "quick")]
    level: String,
}

impl PointArgs {
    fn into_config(self) -> Result<RunConfig, String> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! over {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        over!(
            l, j, u, a, beta, tau, dt, tol_unitary, tol_observable, weight_cutoff,
            max_refinements, panel_width, merge_tol, prob_floor, trace_distances, gap_samples,
            u_min, u_max, u_points, dense_l8, workers, export_distributions, verbose
        );
        if let Some(v) = self.scheme {
            cfg.scheme = v;
        }
        if let Some(v) = self.l_list {
            cfg.l_list = v;
        }
        if let Some(v) = self.tau_list {
            cfg.tau_list = v;
        }
        if let Some(v) = self.out_dir {
            cfg.out_dir = v;
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Single(args) => cmd_single(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Dist(args) => cmd_dist(args),
        Command::Heatmap(args) => cmd_heatmap(args),
        Command::Check(args) => cmd_check(args),
    }
}

fn config_err(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("config error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn compute_point(cfg: &RunConfig) -> Result<PointResult, ExitCode> {
    let prop = cfg.propagation().map_err(|e| config_err(e))?;
    let res = run_point(&cfg.params(), &prop, &cfg.point_options()).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_INVARIANT)
    })?;
    Ok(res)
}

fn cmd_single(args: PointArgs) -> ExitCode {
    let cfg = match args.into_config() {
        Ok(c) => c,
        Err(e) => return config_err(e),
    };
    if cfg.verbose {
        eprint!("effective config:\n{}", cfg.to_key_values());
    }
    let res = match compute_point(&cfg) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let r = &res.record;
    let d = &res.diagnostics;
    println!("# single point (energies in J, times in 1/J)");
    println!(
        "L = {}   U = {}   tau = {}   beta = {}   A = {}",
        cfg.l, cfg.u, cfg.tau, cfg.beta, cfg.a
    );
    println!(
        "dim = {}   retained = {}   discarded weight = {:.3e}   steps = {}",
        d.sector_dim, d.retained, d.discarded_weight, d.propagation.steps
    );
    println!("<W>                = {:+.9}", r.mean_work);
    println!("Var W              = {:+.9}", r.variance);
    println!("skew^3 (raw, J^3)  = {:+.9}", r.skew3);
    println!("dF                 = {:+.9}", r.delta_f);
    println!("<Sigma>            = {:+.9}", r.sigma);
    println!("<Sigma>/beta       = {:+.9}", r.sigma_over_beta);
    match (r.d_eq, r.d_adiab) {
        (Some(de), Some(da)) => {
            println!("D_eq               = {de:.9}");
            println!("D_adiab            = {da:.9}");
        }
        _ => println!("trace distances    = (skipped)"),
    }
    match r.fdr_ratio {
        Some(fdr) => println!("FDR ratio          = {fdr:.9}"),
        None => println!("FDR ratio          = undefined (degenerate variance)"),
    }
    println!("LR gap             = {:+.9}", r.lr_gap);
    println!("Jarzynski residual = {:.3e}", r.jarzynski_residual);

    if let Err(e) = write_point_files(&cfg, &res) {
        eprintln!("error writing outputs: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }

    if r.jarzynski_residual > 1e-6 {
        eprintln!(
            "invariant failure: Jarzynski residual {:.3e} > 1e-6 \
             (steps = {}, observable delta = {:.3e}, norm defect = {:.3e})",
            r.jarzynski_residual,
            d.propagation.steps,
            d.propagation.observable_delta,
            d.propagation.norm_defect
        );
        return ExitCode::from(EXIT_INVARIANT);
    }
    if let Err(e) = r.validate() {
        eprintln!("invariant failure: {e}");
        return ExitCode::from(EXIT_INVARIANT);
    }
    ExitCode::SUCCESS
}

fn write_point_files(cfg: &RunConfig, res: &PointResult) -> std::io::Result<()> {
    let dir = Path::new(&cfg.out_dir);
    std::fs::create_dir_all(dir)?;
    let record = serde_json::json!({
        "params": res.params,
        "record": res.record,
        "diagnostics": res.diagnostics,
    });
    std::fs::write(
        dir.join("record.json"),
        serde_json::to_string_pretty(&record)? + "\n",
    )?;
    std::fs::write(
        dir.join("distribution.csv"),
        hubwork::experiment::distribution_csv(res),
    )?;
    Ok(())
}

fn cmd_dist(args: DistArgs) -> ExitCode {
    let cfg = match args.point.into_config() {
        Ok(c) => c,
        Err(e) => return config_err(e),
    };
    let res = match compute_point(&cfg) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let body = match args.format.as_str() {
        "csv" => hubwork::experiment::distribution_csv(&res),
        "json" => {
            let records: Vec<_> = res
                .distribution
                .support
                .iter()
                .zip(&res.distribution.probs)
                .map(|(w, p)| serde_json::json!({"W_J": w, "P": p}))
                .collect();
            match serde_json::to_string_pretty(&records) {
                Ok(s) => s + "\n",
                Err(e) => return config_err(e),
            }
        }
        other => return config_err(format!("unknown format '{other}' (csv or json)")),
    };
    match args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, body) {
                return config_err(format!("{}: {e}", path.display()));
            }
        }
        None => print!("{body}"),
    }
    ExitCode::SUCCESS
}

fn cmd_sweep(args: PointArgs) -> ExitCode {
    let cfg = match args.into_config() {
        Ok(c) => c,
        Err(e) => return config_err(e),
    };
    let sweep_cfg = match cfg.sweep() {
        Ok(s) => s,
        Err(e) => return config_err(e),
    };
    let out_dir = PathBuf::from(&cfg.out_dir);
    let n_points = sweep_cfg.grid.points().len();
    if cfg.verbose {
        eprintln!("sweep: {n_points} grid points -> {}", out_dir.display());
    }
    let manifest = match run_sweep(&sweep_cfg, &out_dir) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("sweep error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    println!(
        "sweep finished: {} points, {} failed -> {}",
        manifest.points.len(),
        manifest.failed_count,
        out_dir.display()
    );
    // extrema summary per quantity per L at the slowest ramp
    for &l in &sweep_cfg.grid.l_values {
        let (_, taus) = sweep_cfg.grid.axes_for(l);
        let tau = taus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !tau.is_finite() {
            continue;
        }
        for quantity in ["skew3", "sigma", "d_eq"] {
            let series = match u_series(&manifest, quantity, l, tau) {
                Ok(s) if s.len() >= 3 => s,
                _ => continue,
            };
            if let Ok(ex) = locate_extrema(&series) {
                let fmt = |v: &[(f64, f64)]| {
                    v.iter()
                        .map(|(x, _)| format!("{x:.3}"))
                        .collect::<Vec<_>>()
                        .join(" ")
                };
                println!(
                    "L={l} tau={tau} {quantity}: minima at U = [{}], maxima at U = [{}], \
                     zero crossings at U = [{}]",
                    fmt(&ex.minima),
                    fmt(&ex.maxima),
                    ex.zero_crossings
                        .iter()
                        .map(|x| format!("{x:.3}"))
                        .collect::<Vec<_>>()
                        .join(" ")
                );
            }
        }
    }
    if manifest.failed_count > 0 {
        eprintln!(
            "{} grid points failed; see manifest.json",
            manifest.failed_count
        );
        return ExitCode::from(EXIT_PARTIAL);
    }
    ExitCode::SUCCESS
}

fn cmd_heatmap(args: HeatmapArgs) -> ExitCode {
    let manifest = match Manifest::load(&args.manifest) {
        Ok(m) => m,
        Err(e) => return config_err(format!("{}: {e}", args.manifest.display())),
    };
    if !QUANTITIES.contains(&args.quantity.as_str()) {
        return config_err(format!(
            "unknown quantity '{}' (expected one of {QUANTITIES:?})",
            args.quantity
        ));
    }
    let hm = match extract_heatmap(&manifest, &args.quantity, args.l) {
        Ok(h) => h,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let csv = hm.to_csv();
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, csv) {
                return config_err(format!("{}: {e}", path.display()));
            }
        }
        None => print!("{csv}"),
    }
    if let Some(svg_path) = &args.svg {
        if let Err(e) = std::fs::write(svg_path, hm.to_svg()) {
            return config_err(format!("{}: {e}", svg_path.display()));
        }
    }
    ExitCode::SUCCESS
}

fn cmd_check(args: CheckArgs) -> ExitCode {
    let level = match args.level.as_str() {
        "quick" => CheckLevel::Quick,
        "full" => CheckLevel::Full,
        other => return config_err(format!("unknown level '{other}' (quick or full)")),
    };
    let mut first_failure: Option<String> = None;
    let failures = run_checks(level, |o| match &o.result {
        Ok(()) => println!("PASS {}", o.name),
        Err(e) => {
            println!("FAIL {}: {e}", o.name);
            if first_failure.is_none() {
                first_failure = Some(o.name.to_string());
            }
        }
    });
    if failures > 0 {
        eprintln!(
            "{failures} invariant(s) failed, first: {}",
            first_failure.unwrap_or_default()
        );
        return ExitCode::from(EXIT_INVARIANT);
    }
    println!("all checks passed");
    ExitCode::SUCCESS
}
