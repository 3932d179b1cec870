//! Named experiments. Desk-scale values keep each preset within minutes on
//! a laptop; `--paper-scale` restores the published sizes.

use crate::config::{ExperimentConfig, Mode, PopulationKind, Preset};

/// Settings a preset contributes below the config file and the flags.
pub fn defaults(preset: Preset, paper: bool) -> ExperimentConfig {
    fn choose<T>(paper: bool, desk: T, full: T) -> T {
        if paper {
            full
        } else {
            desk
        }
    }
    let base = ExperimentConfig {
        preset: Some(preset),
        paper_scale: Some(paper),
        ..Default::default()
    };
    match preset {
        Preset::R1 | Preset::R2 => ExperimentConfig {
            mode: Some(Mode::Micro),
            population: Some(if preset == Preset::R1 {
                PopulationKind::R1
            } else {
                PopulationKind::R2
            }),
            nu: Some(1.0),
            gamma: Some(0.01),
            dt_time: Some(0.1),
            n_teams: Some(choose(paper, 50, 200)),
            steps: Some(choose(paper, 10_000, 2_000_000)),
            realizations: Some(choose(paper, 10, 50)),
            special_sigma_rating: Some(2.0),
            ..base
        },
        Preset::Fig4Uniform => ExperimentConfig {
            mode: Some(Mode::Macro),
            nu: Some(1.0),
            theta_min_rating: Some(0.0),
            theta_max_rating: Some(10.0),
            r_min_rating: Some(0.0),
            r_max_rating: Some(10.0),
            sigma_max_rating: Some(1.0),
            dtheta_rating: Some(choose(paper, 0.25, 0.05)),
            dr_rating: Some(choose(paper, 0.25, 0.05)),
            dsigma_rating: Some(choose(paper, 0.1, 0.05)),
            dt_time: Some(choose(paper, 1e-3, 1e-5)),
            t_end_time: Some(5.0),
            snapshot_stride: Some(choose(paper, 1000, 100_000)),
            ..base
        },
        Preset::Fig5Sweep => ExperimentConfig {
            mode: Some(Mode::Micro),
            population: Some(PopulationKind::Gaussian),
            nu: Some(0.5),
            gamma: Some(0.01),
            dt_time: Some(0.1),
            n_teams: Some(choose(paper, 100, 500)),
            steps: Some(choose(paper, 4_000, 1_000_000)),
            realizations: Some(choose(paper, 20, 50)),
            initial_rating: Some(7.0),
            dtheta_rating: Some(0.1),
            dr_rating: Some(0.1),
            ..base
        },
        Preset::Fig7NuSweep => ExperimentConfig {
            mode: Some(Mode::Micro),
            population: Some(PopulationKind::Gaussian),
            sigma_rating: Some(2.0),
            gamma: Some(0.01),
            dt_time: Some(0.1),
            n_teams: Some(choose(paper, 100, 500)),
            steps: Some(choose(paper, 100_000, 1_000_000)),
            realizations: Some(choose(paper, 20, 50)),
            ..base
        },
    }
}

/// Human-readable note on how the desk scale differs from the full one.
pub fn scale_note(preset: Preset, paper: bool) -> &'static str {
    if paper {
        return "full scale";
    }
    match preset {
        Preset::R1 | Preset::R2 => {
            "desk scale: 50 teams (full 200), 1e4 steps (full 2e6), 10 realizations (full 50)"
        }
        Preset::Fig4Uniform => {
            "desk scale: cells 0.25 x 0.1 x 0.25 (full 0.05), dt 1e-3 (full 1e-5)"
        }
        Preset::Fig5Sweep => {
            "desk scale: 100 teams (full 500), 4e3 steps (full 1e6), 20 realizations (full 50)"
        }
        Preset::Fig7NuSweep => {
            "desk scale: 100 teams (full 500), 1e5 steps (full 1e6), 20 realizations (full 50)"
        }
    }
}

/// Deviations swept by the fig5 preset.
pub const FIG5_SIGMAS: [f64; 3] = [0.0, 1.0, 2.0];
/// Response scales swept by the fig7 preset.
pub const FIG7_NUS: [f64; 3] = [1.0, 0.1, 0.01];
