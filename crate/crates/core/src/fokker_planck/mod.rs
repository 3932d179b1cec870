//! Mean-field transport of the team density in the rating direction.

mod grid;
mod scheme;
mod velocity;

pub use grid::{reduce_to_2d, Axis, DensityGrid, SigmaAxis};
pub use scheme::{
    godunov_step, godunov_step_in_place, run_macro, MacroConfig, MacroRun, BOUNDARY_MASS_WARNING,
};
pub use velocity::{assemble_velocity, velocity_at, Velocity, VelocityOperator};
