//! Post-processing shared by both engines: moments and marginals, the
//! relative energy and its decay bound, scatter statistics and micro/macro
//! agreement.

mod agreement;
mod energy;
mod moments;
mod scatter;

pub use agreement::micro_macro_distance;
pub use energy::{
    check_energy_decay, theorem_rate, EnergyDecayReport, EnergySeries, EnergyVerdict,
};
pub use moments::{empirical_moments, moments, relative_energy, MomentReport};
pub use scatter::{compression_metric, convergence_time, regression_slope};
