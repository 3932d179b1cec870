//! Engine runs, artifact files and the checks attached to each experiment.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::info;

use kinetic_elo::analysis::{
    check_energy_decay, compression_metric, convergence_time, micro_macro_distance,
    regression_slope, EnergySeries, EnergyVerdict,
};
use kinetic_elo::fokker_planck::{run_macro, Axis, DensityGrid, MacroConfig, MacroRun, SigmaAxis};
use kinetic_elo::io::{
    write_marginal, write_moments, write_report, write_scatter, write_snapshot, write_trajectory,
    ReportRow,
};
use kinetic_elo::micro::{
    build_setup_r1, build_setup_r2, run_micro, MicroConfig, MicroRun, Population, PAPER_SQUAD_SIZE,
};
use kinetic_elo::model::{check_b_prime_monotone, RatingFunction};
use kinetic_elo::{Error, Result};

use crate::config::{Mode, PopulationKind, Preset, Resolved};
use crate::presets::{FIG5_SIGMAS, FIG7_NUS};

/// A verdict or a reported quantity.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    /// `None` for informational entries.
    pub passed: Option<bool>,
    pub detail: String,
}

impl Check {
    fn verdict(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: Some(passed),
            detail: detail.into(),
        }
    }

    fn info(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: None,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        let tag = match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "INFO",
        };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl RunOutput {
    fn absorb(&mut self, prefix: &str, other: RunOutput) {
        for mut c in other.checks {
            c.name = format!("{prefix}/{}", c.name);
            self.checks.push(c);
        }
        self.files.extend(other.files);
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn evenly_spaced(n: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn population(cfg: &Resolved) -> Result<Population> {
    let pop = match cfg.population {
        PopulationKind::Gaussian => Population::gaussian(
            &evenly_spaced(cfg.n_teams, cfg.theta_range),
            cfg.sigma,
            cfg.initial_rating,
        )?,
        PopulationKind::R1 => build_setup_r1(cfg.n_teams, cfg.seed)?,
        PopulationKind::R2 => build_setup_r2(cfg.n_teams, cfg.seed, cfg.special_sigma)?,
    };
    match (cfg.population, cfg.initial_rating) {
        (PopulationKind::Gaussian, _) | (_, None) => Ok(pop),
        (_, Some(r)) => Population::new(pop.teams().to_vec(), vec![r; pop.len()]),
    }
}

pub fn micro_config(cfg: &Resolved) -> MicroConfig {
    MicroConfig {
        dt: cfg.dt,
        matches_per_step: cfg.matches_per_step,
        n_steps: cfg.steps,
        realizations: cfg.realizations,
        gamma: cfg.gamma,
        nu: cfg.nu,
        kernel: cfg.kernel,
        lineup_mode: cfg.lineup.into(),
        seed: cfg.seed,
        record_stride: cfg.record_stride(),
    }
}

fn scatter_checks(run: &MicroRun) -> Result<Vec<Check>> {
    let pts = run.terminal_points();
    let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let mut checks = vec![Check::info("mean_rating", format!("{mean}"))];
    match regression_slope(&pts) {
        Ok(s) => checks.push(Check::info("slope", format!("{s}"))),
        Err(_) => checks.push(Check::info("slope", "undefined (all theta equal)")),
    }
    checks.push(Check::info(
        "compression_metric",
        format!("{}", compression_metric(&pts)?),
    ));
    if let Ok(series) = run.slope_series() {
        let t = convergence_time(&series, 0.9).map_or("none".to_string(), |t| t.to_string());
        checks.push(Check::info("convergence_time", t));
    }
    Ok(checks)
}

fn find<'a>(checks: &'a [Check], name: &str) -> Option<&'a Check> {
    checks.iter().find(|c| c.name == name)
}

fn parse_value(checks: &[Check], name: &str) -> Option<f64> {
    find(checks, name).and_then(|c| c.detail.parse().ok())
}

/// Micro run with trajectory and terminal scatter files.
pub fn micro(cfg: &Resolved, dir: &Path) -> Result<(MicroRun, RunOutput)> {
    let pop = population(cfg)?;
    let mcfg = micro_config(cfg);
    info!(
        "micro run: {} teams, {} steps, {} realizations",
        pop.len(),
        mcfg.n_steps,
        mcfg.realizations
    );
    let run = run_micro(&pop, &mcfg)?;
    let mut out = RunOutput::default();
    let traj = dir.join("trajectory.csv");
    write_trajectory(create(&traj)?, &run)?;
    let scatter = dir.join("scatter.csv");
    write_scatter(create(&scatter)?, &run.terminal_scatter())?;
    out.files.extend([traj, scatter]);
    out.checks = scatter_checks(&run)?;
    out.checks.push(Check::info(
        "kinetic_time",
        format!(
            "{}",
            mcfg.n_steps as f64 * mcfg.kinetic_time_per_step(pop.len())
        ),
    ));
    Ok((run, out))
}

pub fn initial_density(cfg: &Resolved) -> Result<DensityGrid> {
    let (lo, hi) = cfg.theta_range;
    let theta = Axis::with_spacing(lo, hi, cfg.dtheta)?;
    let (rlo, rhi) = cfg.r_range();
    let r = Axis::with_spacing(rlo, rhi, cfg.dr)?;
    let sigma = match cfg.mode {
        Mode::Macro => SigmaAxis::Grid(Axis::with_spacing(0.0, cfg.sigma_max, cfg.dsigma)?),
        _ => SigmaAxis::Constant(cfg.sigma),
    };
    match cfg.initial_rating {
        Some(r0) => {
            // split the mass between the two nearest centers so the mean is exactly r0
            let p = (r0 - r.center(0)) / r.spacing();
            if !(p >= 0.0 && p <= (r.len() - 1) as f64) {
                return Err(Error::Config(format!(
                    "initial rating {r0} outside the r domain"
                )));
            }
            let j = (p.floor() as usize).min(r.len().saturating_sub(2));
            let frac = p - j as f64;
            let mut values = Vec::with_capacity(theta.len() * sigma.len() * r.len());
            for _ in 0..theta.len() * sigma.len() {
                for k in 0..r.len() {
                    values.push(if k == j {
                        1.0 - frac
                    } else if k == j + 1 {
                        frac
                    } else {
                        0.0
                    });
                }
            }
            let mut f = DensityGrid::from_values(theta, sigma, r, values)?;
            f.normalize()?;
            Ok(f)
        }
        None => DensityGrid::uniform_box(theta, sigma, r, (lo, hi), (lo.max(rlo), hi.min(rhi))),
    }
}

pub fn macro_config(cfg: &Resolved, t_end: f64) -> MacroConfig {
    MacroConfig {
        dt: cfg.dt,
        t_end,
        nu: cfg.nu,
        sigma_const: None,
        kernel: cfg.kernel,
        cfl_safety: cfg.cfl_safety,
        snapshot_stride: if cfg.snapshot_stride == 0 {
            usize::MAX
        } else {
            cfg.snapshot_stride
        },
        velocity_refresh: cfg.velocity_refresh,
    }
}

fn conditional_mean_checks(f: &DensityGrid, window: (f64, f64)) -> Check {
    let axis = f.theta_axis();
    let means: Vec<(f64, f64)> = f
        .conditional_mean_r()
        .into_iter()
        .enumerate()
        .filter_map(|(l, m)| m.map(|m| (axis.center(l), m)))
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .collect();
    let increasing = means.len() >= 2 && means.windows(2).all(|w| w[1].1 > w[0].1);
    Check::verdict(
        "conditional_mean_increasing",
        increasing,
        format!(
            "E[r|theta] on theta in [{}, {}] over {} cells",
            window.0,
            window.1,
            means.len()
        ),
    )
}

/// Macro run with snapshot, marginal and moment files.
pub fn macro_run(
    cfg: &Resolved,
    f0: &DensityGrid,
    t_end: f64,
    dir: &Path,
) -> Result<(MacroRun, RunOutput)> {
    let mcfg = macro_config(cfg, t_end);
    info!(
        "macro run: {} x {} x {} cells to t = {t_end}",
        f0.theta_axis().len(),
        f0.sigma_axis().len(),
        f0.r_axis().len()
    );
    let run = run_macro(f0, &mcfg)?;
    let mut out = RunOutput::default();
    let f = run.final_density();

    let moments_path = dir.join("moments.csv");
    write_moments(create(&moments_path)?, &run.moments)?;
    out.files.push(moments_path);
    for (k, (_, snap)) in run.snapshots.iter().enumerate() {
        let p = dir.join(format!("snapshot_{k:04}.csv"));
        write_snapshot(create(&p)?, snap)?;
        out.files.push(p);
    }
    let final_path = dir.join("snapshot_final.csv");
    write_snapshot(create(&final_path)?, f)?;
    out.files.push(final_path);
    let mut marginals = vec![
        ("theta", f.theta_axis().centers(), f.theta_marginal()),
        ("r", f.r_axis().centers(), f.r_marginal()),
    ];
    if let SigmaAxis::Grid(a) = f.sigma_axis() {
        marginals.push(("sigma", a.centers(), f.sigma_marginal()));
    }
    for (name, centers, density) in marginals {
        let p = dir.join(format!("marginal_{name}.csv"));
        write_marginal(create(&p)?, name, &centers, &density)?;
        out.files.push(p);
    }
    let cm_path = dir.join("conditional_mean_r.csv");
    let cm: Vec<f64> = f
        .conditional_mean_r()
        .into_iter()
        .map(|m| m.unwrap_or(f64::NAN))
        .collect();
    write_marginal(create(&cm_path)?, "theta", &f.theta_axis().centers(), &cm)?;
    out.files.push(cm_path);

    out.checks
        .push(Check::info("steps", format!("{}", run.steps)));
    if run.clipped_steps > 0 {
        out.checks.push(Check::info(
            "cfl_clipped_steps",
            format!("{}", run.clipped_steps),
        ));
    }
    let m0 = run.moments[0];
    let mass_drift = run
        .moments
        .iter()
        .map(|m| (m.mass - m0.mass).abs() / m0.mass)
        .fold(0.0, f64::max);
    out.checks.push(Check::verdict(
        "mass_conservation",
        mass_drift <= 1e-9,
        format!("relative drift {mass_drift:e}"),
    ));
    let m2: Vec<f64> = run.moments.iter().map(|m| m.m2_r_centered).collect();
    let violations = m2.windows(2).filter(|w| w[1] > w[0] + 1e-12).count();
    let detail = format!(
        "centered m2_r {} -> {}, {violations} increases",
        m2[0],
        m2[m2.len() - 1]
    );
    // the theta-driven term only cancels when theta and r start independent and symmetric
    if cfg.initial_rating.is_none() {
        out.checks.push(Check::verdict(
            "second_moment_nonincreasing",
            violations == 0,
            detail,
        ));
    } else {
        out.checks
            .push(Check::info("second_moment_nonincreasing", detail));
    }
    if let SigmaAxis::Constant(sigma) = f.sigma_axis() {
        let series = EnergySeries::from_moments(&run.moments)?;
        if series.samples.len() >= 3 {
            let (rlo, rhi) = (f.r_axis().lo(), f.r_axis().hi());
            let (tlo, thi) = (f.theta_axis().lo(), f.theta_axis().hi());
            let gap = (thi - tlo).max(rhi - rlo);
            let b = RatingFunction::try_new(cfg.nu)?;
            let report = check_energy_decay(&series, &b, cfg.kernel, gap, *sigma, 0.05)?;
            let passed = match report.verdict {
                EnergyVerdict::Checked {
                    monotone,
                    bound_satisfied,
                    ..
                } => Some(monotone && bound_satisfied),
                EnergyVerdict::AssumptionViolated { .. } => None,
            };
            out.checks.push(Check {
                name: "energy_decay".into(),
                passed,
                detail: report.summary(),
            });
        }
    }
    Ok((run, out))
}

fn write_checks(dir: &Path, checks: &[Check]) -> Result<PathBuf> {
    let rows: Vec<ReportRow> = checks
        .iter()
        .map(|c| ReportRow {
            check: c.name.clone(),
            quantity: match c.passed {
                Some(true) => "pass".into(),
                Some(false) => "fail".into(),
                None => "value".into(),
            },
            value: c.detail.clone(),
        })
        .collect();
    let path = dir.join("report.csv");
    write_report(create(&path)?, &rows)?;
    let text: String = checks.iter().map(|c| c.line() + "\n").collect();
    fs::write(dir.join("verdict.txt"), text)?;
    Ok(path)
}

fn subdir(dir: &Path, name: &str) -> Result<PathBuf> {
    let d = dir.join(name);
    fs::create_dir_all(&d)?;
    Ok(d)
}

fn label(x: f64) -> String {
    format!("{x}").replace('.', "p")
}

/// Runs the configured experiment into `cfg.out_dir`.
///
/// A sweep preset runs only the pinned value when the user set the swept
/// parameter (`pinned_nu`, `pinned_sigma`) explicitly.
pub fn execute(cfg: &Resolved, pinned_nu: bool, pinned_sigma: bool) -> Result<RunOutput> {
    let dir = cfg.out_dir.clone();
    fs::create_dir_all(&dir)?;
    let mut out = match cfg.preset {
        Some(Preset::Fig5Sweep) => fig5(cfg, &dir, pinned_sigma)?,
        Some(Preset::Fig7NuSweep) => fig7(cfg, &dir, pinned_nu)?,
        _ => single(cfg, &dir)?,
    };
    let report = write_checks(&dir, &out.checks)?;
    out.files.push(report);
    out.files.push(dir.join("verdict.txt"));
    Ok(out)
}

fn single(cfg: &Resolved, dir: &Path) -> Result<RunOutput> {
    match cfg.mode {
        Mode::Micro => {
            let (run, mut out) = micro(cfg, dir)?;
            if matches!(cfg.preset, Some(Preset::R1) | Some(Preset::R2)) {
                let metric = parse_value(&out.checks, "compression_metric").unwrap_or(f64::NAN);
                out.checks.push(Check::verdict(
                    "compression",
                    metric < 0.0,
                    format!("metric {metric} < 0"),
                ));
            }
            if cfg.preset == Some(Preset::R2) {
                // the two high-variance teams are appended last
                let scatter = run.terminal_scatter();
                let n = scatter.len();
                for row in &scatter[n - 2..] {
                    out.checks.push(Check::info(
                        format!("outlier_{}", row.team_id),
                        format!(
                            "theta {} sigma {} rating {} (squad of {PAPER_SQUAD_SIZE})",
                            row.theta, row.sigma_est, row.rating_mean
                        ),
                    ));
                }
            }
            Ok(out)
        }
        Mode::Macro | Mode::Macro2d => {
            let f0 = initial_density(cfg)?;
            let (run, mut out) = macro_run(cfg, &f0, cfg.t_end, dir)?;
            if cfg.preset == Some(Preset::Fig4Uniform) {
                out.checks
                    .push(conditional_mean_checks(run.final_density(), (6.0, 8.0)));
            }
            Ok(out)
        }
    }
}

fn fig5(cfg: &Resolved, dir: &Path, pinned_sigma: bool) -> Result<RunOutput> {
    let sigmas: Vec<f64> = if pinned_sigma {
        vec![cfg.sigma]
    } else {
        FIG5_SIGMAS.to_vec()
    };
    let mut out = RunOutput::default();
    let mut metrics = Vec::new();
    for &sigma in &sigmas {
        let name = format!("sigma_{}", label(sigma));
        let sub = subdir(dir, &name)?;
        let mut c = cfg.clone();
        c.sigma = sigma;
        c.mode = Mode::Micro;
        let (micro_run, micro_out) = micro(&c, &sub)?;
        let t_end = micro_out
            .checks
            .iter()
            .find(|x| x.name == "kinetic_time")
            .and_then(|x| x.detail.parse().ok())
            .unwrap_or(0.0);
        c.mode = Mode::Macro2d;
        c.dt = 1e-2;
        let f0 = initial_density(&c)?;
        let (macro_result, macro_out) = macro_run(&c, &f0, t_end, &sub)?;
        let d = micro_macro_distance(&micro_run.terminal_points(), macro_result.final_density())?;
        let metric = parse_value(&micro_out.checks, "compression_metric").unwrap_or(f64::NAN);
        metrics.push((sigma, metric));
        let mut sub_out = RunOutput::default();
        sub_out.absorb("micro", micro_out);
        sub_out.absorb("macro", macro_out);
        let detail = format!("{d} at kinetic time {t_end}");
        let (lo, hi) = c.theta_range;
        let b = RatingFunction::try_new(c.nu)?;
        // agreement is only claimed where the macro model is well posed
        if check_b_prime_monotone(&b, sigma, lo - hi, hi - lo, 10_001).holds {
            sub_out
                .checks
                .push(Check::verdict("micro_macro_distance", d <= 0.5, detail));
        } else {
            sub_out.checks.push(Check::info(
                "micro_macro_distance",
                detail + "; b + sigma^2 b'' not monotone",
            ));
        }
        write_checks(&sub, &sub_out.checks)?;
        out.absorb(&name, sub_out);
    }
    if let Some(&(sigma, metric)) = metrics
        .iter()
        .filter(|m| m.0 > 0.0)
        .max_by(|a, b| a.0.total_cmp(&b.0))
    {
        out.checks.push(Check::verdict(
            "compression_at_largest_sigma",
            metric < 0.0,
            format!("sigma {sigma}: metric {metric} < 0"),
        ));
    }
    Ok(out)
}

fn fig7(cfg: &Resolved, dir: &Path, pinned_nu: bool) -> Result<RunOutput> {
    let nus: Vec<f64> = if pinned_nu {
        vec![cfg.nu]
    } else {
        FIG7_NUS.to_vec()
    };
    let mut out = RunOutput::default();
    let mut slopes = Vec::new();
    for &nu in &nus {
        let name = format!("nu_{}", label(nu));
        let sub = subdir(dir, &name)?;
        let mut c = cfg.clone();
        c.nu = nu;
        let (_, sub_out) = micro(&c, &sub)?;
        write_checks(&sub, &sub_out.checks)?;
        slopes.push((
            nu,
            parse_value(&sub_out.checks, "slope").unwrap_or(f64::NAN),
        ));
        out.absorb(&name, sub_out);
    }
    // larger nu compresses more: slopes should increase as nu decreases
    let mut by_nu = slopes.clone();
    by_nu.sort_by(|a, b| b.0.total_cmp(&a.0));
    if by_nu.len() >= 2 {
        // strict for the first pair, ties allowed once slopes saturate near 1
        let ordered = by_nu.windows(2).enumerate().all(|(k, w)| {
            if k == 0 {
                w[0].1 < w[1].1
            } else {
                w[0].1 <= w[1].1
            }
        });
        let text = by_nu
            .iter()
            .map(|(n, s)| format!("slope(nu={n}) = {s:.4}"))
            .collect::<Vec<_>>()
            .join(", ");
        out.checks
            .push(Check::verdict("slope_ordering", ordered, text));
    }
    Ok(out)
}
