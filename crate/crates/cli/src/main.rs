//! `kelo`: run, check and analyze kinetic Elo experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod presets;
mod run;

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::error;

use kinetic_elo::analysis::{
    check_energy_decay, compression_metric, micro_macro_distance, regression_slope, theorem_rate,
    EnergySeries, EnergyVerdict,
};
use kinetic_elo::io::{
    read_moments, read_scatter, read_snapshot, read_trajectory, terminal_scatter_from_trajectory,
};
use kinetic_elo::model::{
    check_b_prime_monotone, lipschitz_estimates, InteractionKernel, RatingFunction,
};
use kinetic_elo::{Error, Result};

use config::{ExperimentConfig, Lineup, Mode, PopulationKind, Preset};
use run::Check;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "kelo",
    version,
    about = "Elo rating dynamics for teams with fluctuating strength"
)]
struct Cli {
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an engine or a named preset and write its artifacts.
    Run(RunArgs),
    /// Check monotonicity of b + sigma^2 b'' and print the decay constants.
    Check(CheckArgs),
    /// Analyze files written by `run`.
    Analyze(AnalyzeArgs),
}

/// Accepts `10000` as well as `1e4`.
fn parse_count(s: &str) -> std::result::Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("not a count: {s}"))?;
    if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 * 1e3 {
        Ok(x as usize)
    } else {
        Err(format!("not a whole count: {s}"))
    }
}

#[derive(Args, Default)]
struct RunArgs {
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Flat TOML config (or a manifest written by a previous run).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    n_teams: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    steps: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    realizations: Option<usize>,
    /// `all`, `bump` or `indicator:<c>`.
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long, value_enum)]
    lineup: Option<Lineup>,
    #[arg(long, value_enum)]
    population: Option<PopulationKind>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Restore the published problem sizes (long runs).
    #[arg(long)]
    paper_scale: bool,
}

impl RunArgs {
    fn as_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            mode: self.mode,
            preset: self.preset,
            seed: self.seed,
            out_dir: self.out.clone(),
            paper_scale: self.paper_scale.then_some(true),
            nu: self.nu,
            sigma_rating: self.sigma,
            gamma: self.gamma,
            dt_time: self.dt,
            n_teams: self.n_teams,
            steps: self.steps,
            realizations: self.realizations,
            kernel: self.kernel.clone(),
            lineup: self.lineup,
            population: self.population,
            t_end_time: self.t_end,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    nu: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    z_min: f64,
    #[arg(long, default_value_t = 10.0)]
    z_max: f64,
    #[arg(long, default_value_t = 10_001)]
    samples: usize,
    #[arg(long, default_value = "all")]
    kernel: String,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Terminal scatter CSV.
    #[arg(long)]
    scatter: Option<PathBuf>,
    /// Trajectory CSV; its last time is used as the scatter.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Moment series CSV (energy decay and second-moment checks).
    #[arg(long)]
    moments: Option<PathBuf>,
    /// Macro snapshot CSV to compare the scatter against.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Largest theta and rating gap on the support (energy bound).
    #[arg(long, default_value_t = 6.0)]
    gap: f64,
    #[arg(long, default_value = "all")]
    kernel: String,
    #[arg(long, default_value = "analysis")]
    out: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Cfl { .. } | Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn report(checks: &[Check]) -> u8 {
    for c in checks {
        println!("{}", c.line());
    }
    if checks.iter().any(|c| c.passed == Some(false)) {
        EXIT_CHECK_FAILED
    } else {
        0
    }
}

fn cmd_run(args: &RunArgs) -> Result<u8> {
    let start = Instant::now();
    let flags = args.as_config();
    let file = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let preset = flags.preset.or(file.preset);
    let paper = flags.paper_scale.or(file.paper_scale).unwrap_or(false);
    let base = preset
        .map(|p| presets::defaults(p, paper))
        .unwrap_or_default();
    let user = file.overlay(&flags);
    let layered = base.overlay(&user);
    let resolved = layered.resolve()?;

    let out = run::execute(&resolved, user.nu.is_some(), user.sigma_rating.is_some())?;
    let code = report(&out.checks);

    let mut meta = toml::Table::new();
    meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    meta.insert("wall_time_s".into(), start.elapsed().as_secs_f64().into());
    meta.insert("seed".into(), (resolved.seed as i64).into());
    if let Some(p) = preset {
        meta.insert("scale".into(), presets::scale_note(p, paper).into());
    }
    let outputs: Vec<toml::Value> = out
        .files
        .iter()
        .filter_map(|f| f.strip_prefix(&resolved.out_dir).ok())
        .map(|f| f.display().to_string().into())
        .collect();
    meta.insert("outputs".into(), toml::Value::Array(outputs));
    meta.insert(
        "checks_failed".into(),
        (out.checks
            .iter()
            .filter(|c| c.passed == Some(false))
            .count() as i64)
            .into(),
    );
    // seed pinned so that the manifest reproduces the run on its own
    let pinned = layered.overlay(&ExperimentConfig {
        seed: Some(resolved.seed),
        ..Default::default()
    });
    let text = format!(
        "{}\n[manifest]\n{}",
        pinned.to_toml(),
        toml::to_string(&meta).expect("plain data")
    );
    fs::write(resolved.out_dir.join("manifest.toml"), text)?;
    Ok(code)
}

fn cmd_check(args: &CheckArgs) -> Result<u8> {
    if !(args.z_min < args.z_max) || args.samples < 2 {
        return Err(Error::Config(
            "need z_min < z_max and at least two samples".into(),
        ));
    }
    let b = RatingFunction::try_new(args.nu)?;
    let kernel: InteractionKernel = args.kernel.parse()?;
    let check = check_b_prime_monotone(&b, args.sigma, args.z_min, args.z_max, args.samples);
    let est = lipschitz_estimates(&b, args.z_min, args.z_max);
    let gap = args.z_max.abs().max(args.z_min.abs());
    let (rate, _) = theorem_rate(&b, kernel, gap, args.sigma);
    if check.holds {
        println!(
            "(B′) holds for nu = {}, sigma = {} on [{}, {}]: min g′ = {:.6e} at z = {:.4}",
            args.nu, args.sigma, args.z_min, args.z_max, check.min_slope, check.argmin
        );
    } else {
        println!(
            "(B′) fails for nu = {}, sigma = {}: g′ < 0 from z = {:.4}; min g′ = {:.6e} at z = {:.4}",
            args.nu,
            args.sigma,
            check.fails_at.unwrap_or(f64::NAN),
            check.min_slope,
            check.argmin
        );
    }
    println!(
        "L = {:.6e}, L2 = {:.6e}, Lmin = {:.6e}, L2min = {:.6e}",
        est.l, est.l2, est.l_min, est.l2_min
    );
    println!("energy decay rate bound 2 w_min (Lmin + sigma^2 L2min) = {rate:.6e}");
    Ok(if check.holds { 0 } else { EXIT_CHECK_FAILED })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<u8> {
    let mut checks = Vec::new();
    let scatter = match (&args.scatter, &args.trajectory) {
        (Some(p), _) => Some(read_scatter(open(p)?)?),
        (None, Some(p)) => Some(terminal_scatter_from_trajectory(&read_trajectory(open(
            p,
        )?)?)?),
        (None, None) => None,
    };
    if let Some(rows) = &scatter {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.theta, r.rating_mean)).collect();
        let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len().max(1) as f64;
        checks.push(Check {
            name: "mean_rating".into(),
            passed: None,
            detail: format!("{mean}"),
        });
        let slope = regression_slope(&pts).map_or("undefined".into(), |s| s.to_string());
        checks.push(Check {
            name: "slope".into(),
            passed: None,
            detail: slope,
        });
        checks.push(Check {
            name: "compression_metric".into(),
            passed: None,
            detail: compression_metric(&pts)?.to_string(),
        });
        if let Some(p) = &args.snapshot {
            let f = read_snapshot(open(p)?, Some(args.sigma.unwrap_or(0.0)))?;
            let f = if f.is_reduced() {
                f
            } else {
                f.theta_r_marginal(args.sigma.unwrap_or(0.0))?
            };
            let d = micro_macro_distance(&pts, &f)?;
            checks.push(Check {
                name: "micro_macro_distance".into(),
                passed: Some(d <= 0.5),
                detail: format!("{d}"),
            });
        }
    } else if args.snapshot.is_some() {
        return Err(Error::Usage(
            "a snapshot is compared against --scatter or --trajectory".into(),
        ));
    }
    if let Some(p) = &args.moments {
        let rows = read_moments(open(p)?)?;
        if rows.is_empty() {
            return Err(Error::Config("empty moment file".into()));
        }
        let centered: Vec<f64> = rows
            .iter()
            .map(|r| r.m2_r - r.m1_r * r.m1_r / r.mass)
            .collect();
        let ups = centered.windows(2).filter(|w| w[1] > w[0] + 1e-12).count();
        checks.push(Check {
            name: "second_moment_nonincreasing".into(),
            passed: Some(ups == 0),
            detail: format!("{ups} increases over {} samples", rows.len()),
        });
        let energy: Option<Vec<(f64, f64)>> =
            rows.iter().map(|r| r.energy.map(|e| (r.t, e))).collect();
        if let (Some(samples), Some(nu)) = (energy, args.nu) {
            let b = RatingFunction::try_new(nu)?;
            let kernel: InteractionKernel = args.kernel.parse()?;
            let series = EnergySeries::new(samples)?;
            let r = check_energy_decay(
                &series,
                &b,
                kernel,
                args.gap,
                args.sigma.unwrap_or(0.0),
                0.05,
            )?;
            let passed = match r.verdict {
                EnergyVerdict::Checked {
                    monotone,
                    bound_satisfied,
                    ..
                } => Some(monotone && bound_satisfied),
                EnergyVerdict::AssumptionViolated { .. } => None,
            };
            checks.push(Check {
                name: "energy_decay".into(),
                passed,
                detail: r.summary(),
            });
        }
    }
    if checks.is_empty() {
        return Err(Error::Usage(
            "nothing to analyze: pass --scatter, --trajectory or --moments".into(),
        ));
    }
    fs::create_dir_all(&args.out)?;
    let rows: Vec<kinetic_elo::io::ReportRow> = checks
        .iter()
        .map(|c| kinetic_elo::io::ReportRow {
            check: c.name.clone(),
            quantity: match c.passed {
                Some(true) => "pass".into(),
                Some(false) => "fail".into(),
                None => "value".into(),
            },
            value: c.detail.clone(),
        })
        .collect();
    kinetic_elo::io::write_report(File::create(args.out.join("report.csv"))?, &rows)?;
    fs::write(
        args.out.join("verdict.txt"),
        checks.iter().map(|c| c.line() + "\n").collect::<String>(),
    )?;
    Ok(report(&checks))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            error!("cannot set thread count: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Check(a) => cmd_check(a),
        Command::Analyze(a) => cmd_analyze(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
