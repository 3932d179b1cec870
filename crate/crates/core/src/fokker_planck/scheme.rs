use log::warn;

use super::grid::{DensityGrid, SigmaAxis};
use super::velocity::{Velocity, VelocityOperator};
use crate::analysis::{moments, MomentReport};
use crate::model::{InteractionKernel, RatingFunction};
use crate::{Error, Result};

/// Boundary mass above which a run logs a warning.
pub const BOUNDARY_MASS_WARNING: f64 = 1e-6;

/// One explicit upwind step in `r`, in place.
///
/// The flux through face `k` is `a_k f_{k-1}` when `a_k >= 0` and `a_k f_k`
/// otherwise; boundary faces carry no flux, so mass changes only by rounding.
/// The step is refused when `dt max|a| / dr > cfl_safety`. With
/// `cfl_safety <= 1/2` the update is monotone and keeps `f >= 0`.
pub fn godunov_step_in_place(
    f: &mut DensityGrid,
    a: &Velocity,
    dt: f64,
    cfl_safety: f64,
) -> Result<()> {
    let nr = f.r_axis().len();
    if a.n_faces() != nr + 1 || a.values().len() != (nr + 1) * f.values().len() / nr {
        return Err(Error::Usage(
            "velocity field does not match the grid".into(),
        ));
    }
    let dr = f.r_axis().spacing();
    let max_speed = a.max_abs();
    if !max_speed.is_finite() {
        return Err(Error::Numerical("non-finite velocity".into()));
    }
    if dt * max_speed > cfl_safety * dr {
        return Err(Error::Cfl {
            max_speed,
            dt,
            admissible_dt: cfl_safety * dr / max_speed,
        });
    }
    let c = dt / dr;
    let mut flux = vec![0.0; nr + 1];
    for (col, speeds) in f.values_mut().chunks_mut(nr).zip(a.values().chunks(nr + 1)) {
        for k in 1..nr {
            let s = speeds[k];
            flux[k] = if s >= 0.0 { s * col[k - 1] } else { s * col[k] };
        }
        for j in 0..nr {
            col[j] -= c * (flux[j + 1] - flux[j]);
        }
    }
    Ok(())
}

/// One explicit upwind step returning the new density.
pub fn godunov_step(
    f: &DensityGrid,
    a: &Velocity,
    dt: f64,
    cfl_safety: f64,
) -> Result<DensityGrid> {
    let mut g = f.clone();
    godunov_step_in_place(&mut g, a, dt, cfl_safety)?;
    Ok(g)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MacroConfig {
    pub dt: f64,
    pub t_end: f64,
    pub nu: f64,
    /// Overrides the deviation of a reduced density; must be `None` for a
    /// density with a sigma grid.
    pub sigma_const: Option<f64>,
    pub kernel: InteractionKernel,
    /// Largest admissible `dt max|a| / dr`.
    pub cfl_safety: f64,
    /// Keep a density snapshot every this many steps (and the last one).
    pub snapshot_stride: usize,
    /// Reassemble the velocity every this many steps. `1` is the exact
    /// explicit scheme; larger values trade accuracy for speed.
    pub velocity_refresh: usize,
}

impl Default for MacroConfig {
    fn default() -> Self {
        Self {
            dt: 1e-5,
            t_end: 1.0,
            nu: 1.0,
            sigma_const: None,
            kernel: InteractionKernel::AllPlayAll,
            cfl_safety: 0.5,
            snapshot_stride: 1000,
            velocity_refresh: 1,
        }
    }
}

impl MacroConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad(format!("t_end must be >= 0, got {}", self.t_end));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return bad(format!("nu must be positive, got {}", self.nu));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!(
                "cfl_safety must be in (0, 1], got {}",
                self.cfl_safety
            ));
        }
        if let Some(s) = self.sigma_const {
            if !(s.is_finite() && s >= 0.0) {
                return bad(format!("sigma must be >= 0, got {s}"));
            }
        }
        if self.snapshot_stride == 0 || self.velocity_refresh == 0 {
            return bad("snapshot_stride and velocity_refresh must be >= 1".into());
        }
        Ok(())
    }
}

/// Result of a macroscopic run.
#[derive(Clone, Debug)]
pub struct MacroRun {
    /// `(t, f)` at the initial time, every `snapshot_stride` steps and the end.
    pub snapshots: Vec<(f64, DensityGrid)>,
    /// Moments after every step, starting with the initial density.
    pub moments: Vec<MomentReport>,
    pub steps: usize,
    /// Number of steps whose `dt` had to be shortened for stability.
    pub clipped_steps: usize,
    /// Largest boundary-cell mass seen during the run.
    pub max_boundary_mass: f64,
}

impl MacroRun {
    pub fn final_density(&self) -> &DensityGrid {
        &self
            .snapshots
            .last()
            .expect("a run has at least one snapshot")
            .1
    }

    pub fn final_time(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.0)
    }
}

/// Integrate the transport equation from `f0` to `t_end`.
///
/// The configured `dt` is shortened to `cfl_safety * dr / max|a|` whenever
/// it would violate the stability limit, and the last step ends exactly at
/// `t_end`.
pub fn run_macro(f0: &DensityGrid, cfg: &MacroConfig) -> Result<MacroRun> {
    cfg.validate()?;
    let mut f = f0.clone();
    if let Some(s) = cfg.sigma_const {
        if !f.is_reduced() {
            return Err(Error::Config(
                "a constant sigma applies to (theta, r) densities; reduce the grid first".into(),
            ));
        }
        f = DensityGrid::from_values(
            *f.theta_axis(),
            SigmaAxis::Constant(s),
            *f.r_axis(),
            f.values().to_vec(),
        )?;
    }
    let mass0 = f.mass();
    if !(mass0 > 0.0) {
        return Err(Error::Degenerate("initial density has no mass".into()));
    }
    let b = RatingFunction::try_new(cfg.nu)?;
    let op = VelocityOperator::new(&f, &b, cfg.kernel);
    let dr = f.r_axis().spacing();

    let mut t = 0.0;
    let mut snapshots = vec![(0.0, f.clone())];
    let mut reports = vec![moments(&f, 0.0)];
    let mut steps = 0;
    let mut clipped_steps = 0;
    let mut max_boundary_mass = f.boundary_mass();
    let mut velocity: Option<Velocity> = None;
    // stop when the remainder is rounding noise relative to t_end
    let t_tol = 1e-12 * cfg.t_end.max(1.0);

    while cfg.t_end - t > t_tol {
        if velocity.is_none() || steps % cfg.velocity_refresh == 0 {
            velocity = Some(op.assemble(&f)?);
        }
        let a = velocity.as_ref().expect("assembled above");
        let max_speed = a.max_abs();
        let mut dt = cfg.dt.min(cfg.t_end - t);
        if dt * max_speed > cfg.cfl_safety * dr {
            let limit = cfg.cfl_safety * dr / max_speed;
            if clipped_steps == 0 {
                warn!(
                    "dt = {:e} violates the CFL limit; using dt = {limit:e}",
                    cfg.dt
                );
            }
            clipped_steps += 1;
            dt = limit;
        }
        godunov_step_in_place(&mut f, a, dt, cfg.cfl_safety)?;
        steps += 1;
        t = if cfg.t_end - (t + dt) <= t_tol {
            cfg.t_end
        } else {
            t + dt
        };

        let report = moments(&f, t);
        if !report.mass.is_finite() {
            return Err(Error::Numerical(format!("density blew up at t = {t}")));
        }
        reports.push(report);
        let edge = f.boundary_mass();
        if edge > BOUNDARY_MASS_WARNING && max_boundary_mass <= BOUNDARY_MASS_WARNING {
            warn!("boundary cells hold mass {edge:e} at t = {t}; widen the r domain");
        }
        max_boundary_mass = max_boundary_mass.max(edge);
        if steps % cfg.snapshot_stride == 0 || t >= cfg.t_end {
            snapshots.push((t, f.clone()));
        }
    }
    Ok(MacroRun {
        snapshots,
        moments: reports,
        steps,
        clipped_steps,
        max_boundary_mass,
    })
}
