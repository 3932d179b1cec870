//! Elo rating dynamics for teams whose match strength fluctuates with the line-up.
//!
//! Two engines share the primitives in [`model`]:
//!
//! * [`micro`]: an agent-based match simulator (Bird-type direct Monte Carlo),
//!   where each time step samples a fixed number of candidate pairings, accepts
//!   them with probability proportional to the interaction kernel, draws a
//!   line-up for both teams and applies the Elo update.
//! * [`fokker_planck`]: a first-order upwind (Godunov) finite-difference solver
//!   for the mean-field transport equation of the team density
//!   `f(t, theta, sigma, r)`, and its reduced `(theta, r)` form for a common
//!   strength deviation.
//!
//! [`analysis`] post-processes both: moments, relative energy and its decay
//! rate, regression slopes, and micro/macro agreement. [`io`] holds the CSV
//! formats exchanged with the command-line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod fokker_planck;
pub mod io;
pub mod micro;
pub mod model;

pub use error::{Error, Result};
