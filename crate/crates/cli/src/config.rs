//! Flat experiment configuration. Keys carry their unit where one applies
//! (`dt_time`, `dr_rating`); unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use kinetic_elo::micro::LineupMode;
use kinetic_elo::model::InteractionKernel;
use kinetic_elo::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Micro,
    Macro,
    Macro2d,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    R1,
    R2,
    Fig4Uniform,
    Fig5Sweep,
    Fig7NuSweep,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::R1 => "r1",
            Self::R2 => "r2",
            Self::Fig4Uniform => "fig4-uniform",
            Self::Fig5Sweep => "fig5-sweep",
            Self::Fig7NuSweep => "fig7-nu-sweep",
        };
        f.write_str(s)
    }
}

/// Team population of a micro run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PopulationKind {
    /// Fixed mean strengths evenly spaced on the theta range, normal match strength.
    Gaussian,
    R1,
    R2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Lineup {
    Uniform,
    Proportional,
    Gaussian,
}

impl From<Lineup> for LineupMode {
    fn from(l: Lineup) -> Self {
        match l {
            Lineup::Uniform => LineupMode::UniformSubset,
            Lineup::Proportional => LineupMode::StrengthProportional,
            Lineup::Gaussian => LineupMode::GaussianDraw,
        }
    }
}

/// Every setting is optional here; presets, the config file and flags are
/// layered with [`ExperimentConfig::overlay`] and the gaps are filled by
/// [`ExperimentConfig::resolve`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub paper_scale: Option<bool>,
    pub nu: Option<f64>,
    pub sigma_rating: Option<f64>,
    pub gamma: Option<f64>,
    pub dt_time: Option<f64>,
    pub n_teams: Option<usize>,
    pub steps: Option<usize>,
    pub realizations: Option<usize>,
    pub matches_per_step: Option<usize>,
    pub record_stride: Option<usize>,
    pub kernel: Option<String>,
    pub lineup: Option<Lineup>,
    pub population: Option<PopulationKind>,
    pub special_sigma_rating: Option<f64>,
    pub initial_rating: Option<f64>,
    pub theta_min_rating: Option<f64>,
    pub theta_max_rating: Option<f64>,
    pub r_min_rating: Option<f64>,
    pub r_max_rating: Option<f64>,
    pub sigma_max_rating: Option<f64>,
    pub dtheta_rating: Option<f64>,
    pub dr_rating: Option<f64>,
    pub dsigma_rating: Option<f64>,
    pub t_end_time: Option<f64>,
    pub cfl_safety: Option<f64>,
    pub snapshot_stride: Option<usize>,
    pub velocity_refresh: Option<usize>,
    /// Run metadata written by the tool itself; ignored on input so that a
    /// manifest can be fed back as a config.
    #[serde(skip_serializing)]
    pub manifest: Option<toml::Table>,
}

macro_rules! overlay_fields {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Values set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &Self) -> Self {
        overlay_fields!(self, top;
            mode, preset, seed, out_dir, paper_scale, nu, sigma_rating, gamma, dt_time, n_teams,
            steps, realizations, matches_per_step, record_stride, kernel, lineup, population,
            special_sigma_rating, initial_rating, theta_min_rating, theta_max_rating, r_min_rating,
            r_max_rating, sigma_max_rating, dtheta_rating, dr_rating, dsigma_rating, t_end_time,
            cfl_safety, snapshot_stride, velocity_refresh);
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    /// Fill every gap with the mode defaults and check ranges.
    pub fn resolve(&self) -> Result<Resolved> {
        let mode = self
            .mode
            .ok_or_else(|| Error::Config("no mode: pass --mode or --preset".into()))?;
        let paper = self.paper_scale.unwrap_or(false);
        let macro_mode = mode != Mode::Micro;
        let kernel = match &self.kernel {
            Some(k) => InteractionKernel::from_str(k)?,
            None => InteractionKernel::AllPlayAll,
        };
        let population = self.population.unwrap_or(PopulationKind::Gaussian);
        let r = Resolved {
            mode,
            preset: self.preset,
            seed: self.seed.unwrap_or(0),
            out_dir: self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
            paper_scale: paper,
            nu: self.nu.unwrap_or(1.0),
            sigma: self.sigma_rating.unwrap_or(0.0),
            gamma: self.gamma.unwrap_or(0.01),
            dt: self.dt_time.unwrap_or(if macro_mode { 1e-3 } else { 0.1 }),
            n_teams: self.n_teams.unwrap_or(if paper { 200 } else { 50 }),
            steps: self.steps.unwrap_or(if paper { 2_000_000 } else { 10_000 }),
            realizations: self.realizations.unwrap_or(if paper { 50 } else { 10 }),
            matches_per_step: self.matches_per_step.unwrap_or(25),
            record_stride: self.record_stride.unwrap_or(0),
            kernel,
            lineup: self.lineup.unwrap_or(match population {
                PopulationKind::Gaussian => Lineup::Gaussian,
                _ => Lineup::Uniform,
            }),
            population,
            special_sigma: self.special_sigma_rating.unwrap_or(2.0),
            initial_rating: self.initial_rating,
            theta_range: (
                self.theta_min_rating.unwrap_or(4.0),
                self.theta_max_rating.unwrap_or(10.0),
            ),
            r_range: (self.r_min_rating, self.r_max_rating),
            sigma_max: self.sigma_max_rating.unwrap_or(1.0),
            dtheta: self.dtheta_rating.unwrap_or(if paper { 0.05 } else { 0.1 }),
            dr: self.dr_rating.unwrap_or(if paper { 0.05 } else { 0.1 }),
            dsigma: self.dsigma_rating.unwrap_or(if paper { 0.05 } else { 0.1 }),
            t_end: self.t_end_time.unwrap_or(1.0),
            cfl_safety: self.cfl_safety.unwrap_or(0.5),
            snapshot_stride: self.snapshot_stride.unwrap_or(0),
            velocity_refresh: self.velocity_refresh.unwrap_or(1),
        };
        r.validate()?;
        Ok(r)
    }
}

/// Fully specified run settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub mode: Mode,
    pub preset: Option<Preset>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub paper_scale: bool,
    pub nu: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub dt: f64,
    pub n_teams: usize,
    pub steps: usize,
    pub realizations: usize,
    pub matches_per_step: usize,
    /// `0` picks about 100 records per run.
    pub record_stride: usize,
    pub kernel: InteractionKernel,
    pub lineup: Lineup,
    pub population: PopulationKind,
    pub special_sigma: f64,
    pub initial_rating: Option<f64>,
    pub theta_range: (f64, f64),
    /// Defaults to the theta range padded by one cell on each side.
    pub r_range: (Option<f64>, Option<f64>),
    pub sigma_max: f64,
    pub dtheta: f64,
    pub dr: f64,
    pub dsigma: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    /// `0` keeps only the initial and final snapshots.
    pub snapshot_stride: usize,
    pub velocity_refresh: usize,
}

impl Resolved {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("nu", self.nu),
            ("gamma", self.gamma),
            ("dt_time", self.dt),
            ("dtheta_rating", self.dtheta),
            ("dr_rating", self.dr),
            ("dsigma_rating", self.dsigma),
            ("sigma_max_rating", self.sigma_max),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("sigma_rating", self.sigma),
            ("special_sigma_rating", self.special_sigma),
            ("t_end_time", self.t_end),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        let (lo, hi) = self.theta_range;
        if !(lo < hi) {
            return Err(Error::Config(format!("empty theta range [{lo}, {hi}]")));
        }
        if self.n_teams < 2
            || self.steps == 0
            || self.realizations == 0
            || self.matches_per_step == 0
        {
            return Err(Error::Config(
                "n_teams >= 2 and steps, realizations, matches_per_step >= 1 required".into(),
            ));
        }
        Ok(())
    }

    pub fn record_stride(&self) -> usize {
        if self.record_stride > 0 {
            self.record_stride
        } else {
            (self.steps / 100).max(1)
        }
    }

    pub fn r_range(&self) -> (f64, f64) {
        (
            self.r_range.0.unwrap_or(self.theta_range.0 - self.dr),
            self.r_range.1.unwrap_or(self.theta_range.1 + self.dr),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<ExperimentConfig>("nu = 1.0\ndt = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("dt"));
        let ok: ExperimentConfig =
            toml::from_str("nu = 1.0\ndt_time = 0.1\nmode = \"macro2d\"\n").unwrap();
        assert_eq!(ok.mode, Some(Mode::Macro2d));
    }

    #[test]
    fn overlay_prefers_top() {
        let base = ExperimentConfig {
            nu: Some(1.0),
            gamma: Some(0.1),
            ..Default::default()
        };
        let top = ExperimentConfig {
            nu: Some(0.5),
            ..Default::default()
        };
        let c = base.overlay(&top);
        assert_eq!((c.nu, c.gamma), (Some(0.5), Some(0.1)));
    }

    #[test]
    fn round_trip_through_toml() {
        let c = ExperimentConfig {
            mode: Some(Mode::Micro),
            preset: Some(Preset::Fig7NuSweep),
            kernel: Some("indicator:2".into()),
            out_dir: Some("x".into()),
            ..Default::default()
        };
        let back: ExperimentConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert!(c.to_toml().contains("preset = \"fig7-nu-sweep\""));
    }

    #[test]
    fn resolve_checks_ranges() {
        let c = ExperimentConfig {
            mode: Some(Mode::Micro),
            nu: Some(-1.0),
            ..Default::default()
        };
        assert!(c.resolve().is_err());
        assert!(ExperimentConfig::default().resolve().is_err());
        let c = ExperimentConfig {
            mode: Some(Mode::Micro),
            kernel: Some("nope".into()),
            ..Default::default()
        };
        assert!(c.resolve().is_err());
    }
}
