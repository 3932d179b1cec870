//! Agent-based match simulation.

mod engine;
mod population;

pub use engine::{
    run_micro, run_micro_gaussian, LineupMode, MicroConfig, MicroRun, ScatterRow, TrajectoryRecord,
};
pub use population::{
    build_setup_r1, build_setup_r2, estimate_team_moments, sample_team_moments, special_roster,
    Population, StrengthModel, Team, PAPER_LINEUP_SIZE, PAPER_SQUAD_SIZE,
};
