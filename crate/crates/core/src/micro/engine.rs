use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::population::{Population, StrengthModel, Team};
use crate::analysis::regression_slope;
use crate::model::{
    rating_update, sample_outcome, win_probability, InteractionKernel, RatingFunction,
};
use crate::{Error, Result};

/// How a team's strength for a single match is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineupMode {
    /// `m` of the `M` players, every subset equally likely.
    UniformSubset,
    /// Players picked one by one with probability proportional to strength.
    StrengthProportional,
    /// Strength drawn from `N(theta, sigma^2)` of the team.
    GaussianDraw,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MicroConfig {
    /// Time represented by one step of `matches_per_step` candidate pairings.
    pub dt: f64,
    pub matches_per_step: usize,
    pub n_steps: usize,
    pub realizations: usize,
    /// Elo adjustment speed.
    pub gamma: f64,
    pub nu: f64,
    pub kernel: InteractionKernel,
    pub lineup_mode: LineupMode,
    pub seed: u64,
    /// Ratings are recorded every `record_stride` steps (and after the last).
    pub record_stride: usize,
}

impl Default for MicroConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            matches_per_step: 25,
            n_steps: 10_000,
            realizations: 50,
            gamma: 0.01,
            nu: 1.0,
            kernel: InteractionKernel::AllPlayAll,
            lineup_mode: LineupMode::UniformSubset,
            seed: 0,
            record_stride: 100,
        }
    }
}

impl MicroConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return bad(format!("nu must be positive, got {}", self.nu));
        }
        if self.matches_per_step == 0 || self.realizations == 0 || self.record_stride == 0 {
            return bad("matches_per_step, realizations and record_stride must be >= 1".into());
        }
        if !(self.kernel.max() > 0.0) {
            return bad(format!("kernel {} has zero maximum", self.kernel));
        }
        Ok(())
    }

    /// Kinetic time advanced per step: the mean-field drift of a team is
    /// `2 K gamma / ((N - 1) w_max)` times `a[f]` per step.
    pub fn kinetic_time_per_step(&self, n_teams: usize) -> f64 {
        2.0 * self.matches_per_step as f64 * self.gamma
            / ((n_teams.max(2) - 1) as f64 * self.kernel.max())
    }
}

/// One recorded state of one realization.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryRecord<'a> {
    pub realization: usize,
    pub time: f64,
    pub thetas: &'a [f64],
    pub sigmas: &'a [f64],
    pub ratings: &'a [f64],
}

/// Terminal per-team summary across realizations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterRow {
    pub team_id: usize,
    pub theta: f64,
    pub sigma_est: f64,
    pub rating_mean: f64,
    pub rating_std: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Trace {
    snapshots: Vec<Vec<f64>>,
    played: u64,
    rejected: u64,
}

/// All recorded ratings of a run, `[realization][snapshot][team]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MicroRun {
    times: Vec<f64>,
    thetas: Vec<f64>,
    sigmas: Vec<f64>,
    traces: Vec<Trace>,
}

impl MicroRun {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn realizations(&self) -> usize {
        self.traces.len()
    }

    pub fn ratings(&self, realization: usize, snapshot: usize) -> &[f64] {
        &self.traces[realization].snapshots[snapshot]
    }

    /// Matches played and candidate pairings rejected by the kernel, summed
    /// over realizations.
    pub fn match_counts(&self) -> (u64, u64) {
        self.traces
            .iter()
            .fold((0, 0), |(p, r), t| (p + t.played, r + t.rejected))
    }

    pub fn records(&self) -> impl Iterator<Item = TrajectoryRecord<'_>> + '_ {
        self.traces.iter().enumerate().flat_map(move |(k, trace)| {
            trace
                .snapshots
                .iter()
                .zip(&self.times)
                .map(move |(ratings, &time)| TrajectoryRecord {
                    realization: k,
                    time,
                    thetas: &self.thetas,
                    sigmas: &self.sigmas,
                    ratings,
                })
        })
    }

    /// Per-team rating averaged over realizations at one snapshot.
    pub fn mean_ratings(&self, snapshot: usize) -> Vec<f64> {
        let n = self.traces.len() as f64;
        let mut acc = vec![0.0; self.thetas.len()];
        for trace in &self.traces {
            for (a, r) in acc.iter_mut().zip(&trace.snapshots[snapshot]) {
                *a += r;
            }
        }
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    pub fn terminal_scatter(&self) -> Vec<ScatterRow> {
        let last = self.times.len() - 1;
        let mean = self.mean_ratings(last);
        let n = self.traces.len() as f64;
        (0..self.thetas.len())
            .map(|i| {
                let var = self
                    .traces
                    .iter()
                    .map(|t| (t.snapshots[last][i] - mean[i]).powi(2))
                    .sum::<f64>()
                    / n;
                ScatterRow {
                    team_id: i,
                    theta: self.thetas[i],
                    sigma_est: self.sigmas[i],
                    rating_mean: mean[i],
                    rating_std: var.sqrt(),
                }
            })
            .collect()
    }

    /// `(theta, mean rating)` pairs at the last snapshot.
    pub fn terminal_points(&self) -> Vec<(f64, f64)> {
        self.terminal_scatter()
            .iter()
            .map(|r| (r.theta, r.rating_mean))
            .collect()
    }

    /// OLS slope of the realization-averaged ratings on theta at every snapshot.
    pub fn slope_series(&self) -> Result<Vec<(f64, f64)>> {
        (0..self.times.len())
            .map(|k| {
                let pts: Vec<(f64, f64)> = self
                    .thetas
                    .iter()
                    .copied()
                    .zip(self.mean_ratings(k))
                    .collect();
                Ok((self.times[k], regression_slope(&pts)?))
            })
            .collect()
    }
}

struct MatchContext<'a> {
    teams: &'a [Team],
    b: RatingFunction,
    kernel: InteractionKernel,
    w_max: f64,
    mode: LineupMode,
    gamma: f64,
}

impl MatchContext<'_> {
    fn draw_strength(&self, team: &Team, rng: &mut ChaCha8Rng, scratch: &mut Vec<usize>) -> f64 {
        let gaussian = |rng: &mut ChaCha8Rng, theta: f64, sigma: f64| {
            if sigma == 0.0 {
                theta
            } else {
                let z: f64 = rng.sample(StandardNormal);
                theta + sigma * z
            }
        };
        match (&team.strength, self.mode) {
            (StrengthModel::Gaussian { theta, sigma }, _) => gaussian(rng, *theta, *sigma),
            (StrengthModel::Roster(_), LineupMode::GaussianDraw) => {
                gaussian(rng, team.theta, team.sigma)
            }
            (StrengthModel::Roster(r), LineupMode::UniformSubset) => r.sample_uniform(rng, scratch),
            (StrengthModel::Roster(r), LineupMode::StrengthProportional) => {
                r.sample_proportional(rng, scratch)
            }
        }
    }
}

fn run_realization(
    pop: &Population,
    cfg: &MicroConfig,
    ctx: &MatchContext<'_>,
    realization: usize,
) -> Result<Trace> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(realization as u64);
    let n = pop.len();
    let mut ratings = pop.ratings().to_vec();
    let mut trace = Trace {
        snapshots: vec![ratings.clone()],
        ..Trace::default()
    };
    let mut scratch = Vec::new();
    for step in 1..=cfg.n_steps {
        for _ in 0..cfg.matches_per_step {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            if !ctx.kernel.is_all_play_all() {
                let accept = ctx.kernel.eval(ratings[i] - ratings[j]) / ctx.w_max;
                if accept < 1.0 && rng.random::<f64>() >= accept {
                    trace.rejected += 1;
                    continue;
                }
            }
            let xi = ctx.draw_strength(&ctx.teams[i], &mut rng, &mut scratch);
            let xj = ctx.draw_strength(&ctx.teams[j], &mut rng, &mut scratch);
            let s = sample_outcome(win_probability(xi - xj, &ctx.b), &mut rng)?;
            let (ri, rj) = rating_update(ratings[i], ratings[j], s, ctx.gamma, &ctx.b)?;
            ratings[i] = ri;
            ratings[j] = rj;
            trace.played += 1;
        }
        if step % cfg.record_stride == 0 || step == cfg.n_steps {
            trace.snapshots.push(ratings.clone());
        }
    }
    Ok(trace)
}

/// Direct Monte Carlo simulation of the match dynamics.
///
/// Each step draws `matches_per_step` candidate pairs uniformly (no
/// self-pairing); a candidate plays with probability `w(R_i - R_j) / w_max`.
/// A played match draws both strengths, samples the outcome with
/// `P(win) = (1 + b(x_i - x_j)) / 2` and applies the Elo update.
/// Realizations run in parallel on independent ChaCha streams
/// `(seed, realization)`, so results do not depend on the thread count.
pub fn run_micro(pop: &Population, cfg: &MicroConfig) -> Result<MicroRun> {
    cfg.validate()?;
    if pop.len() < 2 {
        return Err(Error::Config("need at least two teams".into()));
    }
    let ctx = MatchContext {
        teams: pop.teams(),
        b: RatingFunction::try_new(cfg.nu)?,
        kernel: cfg.kernel,
        w_max: cfg.kernel.max(),
        mode: cfg.lineup_mode,
        gamma: cfg.gamma,
    };
    let traces = (0..cfg.realizations)
        .into_par_iter()
        .map(|k| run_realization(pop, cfg, &ctx, k))
        .collect::<Result<Vec<_>>>()?;

    let mut times = vec![0.0];
    for step in 1..=cfg.n_steps {
        if step % cfg.record_stride == 0 || step == cfg.n_steps {
            times.push(step as f64 * cfg.dt);
        }
    }
    Ok(MicroRun {
        times,
        thetas: pop.thetas(),
        sigmas: pop.sigmas(),
        traces,
    })
}

/// Teams with fixed mean strengths whose match strength is `N(theta_n, sigma^2)`.
/// Ratings start at the midpoint of the strength range unless given.
pub fn run_micro_gaussian(
    cfg: &MicroConfig,
    thetas: &[f64],
    sigma: f64,
    initial_rating: Option<f64>,
) -> Result<MicroRun> {
    let pop = Population::gaussian(thetas, sigma, initial_rating)?;
    let cfg = MicroConfig {
        lineup_mode: LineupMode::GaussianDraw,
        ..cfg.clone()
    };
    run_micro(&pop, &cfg)
}
