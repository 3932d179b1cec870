//! Mathematical primitives shared by the microscopic and kinetic engines.

mod checks;
mod kernel;
mod outcome;
mod response;
mod team;

pub use checks::{check_b_prime_monotone, lipschitz_estimates, BPrimeCheck, LipschitzEstimates};
pub use kernel::InteractionKernel;
pub use outcome::{
    binned_expected_outcome, exact_expected_outcome, rating_update, sample_outcome,
    taylor_expected_outcome, taylor_outcome_variance, win_probability, MatchOutcome,
    DEFAULT_ENUMERATION_CAP,
};
pub use response::{FnResponse, RatingFunction, Response};
pub use team::{binomial, TeamRoster, TeamState};
