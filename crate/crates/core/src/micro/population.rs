use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::TeamRoster;
use crate::{Error, Result};

/// Football squads: 23 players, 11 fielded per match.
pub const PAPER_SQUAD_SIZE: usize = 23;
pub const PAPER_LINEUP_SIZE: usize = 11;

// keeps setup draws disjoint from the per-realization engine streams
const SETUP_SALT: u64 = 0x5e7u64 << 48;

/// How a team's per-match strength is produced.
#[derive(Clone, Debug, PartialEq)]
pub enum StrengthModel {
    /// Sum of a line-up drawn from the squad.
    Roster(TeamRoster),
    /// Strength drawn from `N(theta, sigma^2)` every match.
    Gaussian { theta: f64, sigma: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Team {
    pub strength: StrengthModel,
    /// Mean per-match strength.
    pub theta: f64,
    /// Standard deviation of the per-match strength.
    pub sigma: f64,
}

impl Team {
    pub fn roster(roster: TeamRoster) -> Self {
        Self {
            theta: roster.theta(),
            sigma: roster.sigma(),
            strength: StrengthModel::Roster(roster),
        }
    }

    pub fn gaussian(theta: f64, sigma: f64) -> Result<Self> {
        crate::error::ensure_finite("theta", theta)?;
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Domain(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(Self {
            strength: StrengthModel::Gaussian { theta, sigma },
            theta,
            sigma,
        })
    }
}

/// `N` teams with their current ratings; team ids are vector indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    teams: Vec<Team>,
    ratings: Vec<f64>,
}

impl Population {
    pub fn new(teams: Vec<Team>, ratings: Vec<f64>) -> Result<Self> {
        if teams.len() != ratings.len() {
            return Err(Error::Config(format!(
                "{} teams but {} ratings",
                teams.len(),
                ratings.len()
            )));
        }
        if let Some(r) = ratings.iter().find(|r| !r.is_finite()) {
            return Err(Error::Domain(format!("non-finite initial rating {r}")));
        }
        Ok(Self { teams, ratings })
    }

    pub fn with_rating(teams: Vec<Team>, rating: f64) -> Result<Self> {
        let n = teams.len();
        Self::new(teams, vec![rating; n])
    }

    /// Every team starts at the midpoint of the population's strength range.
    pub fn with_midpoint_rating(teams: Vec<Team>) -> Result<Self> {
        let lo = teams.iter().map(|t| t.theta).fold(f64::INFINITY, f64::min);
        let hi = teams
            .iter()
            .map(|t| t.theta)
            .fold(f64::NEG_INFINITY, f64::max);
        let mid = if teams.is_empty() {
            0.0
        } else {
            0.5 * (lo + hi)
        };
        Self::with_rating(teams, mid)
    }

    pub fn gaussian(thetas: &[f64], sigma: f64, rating: Option<f64>) -> Result<Self> {
        let teams = thetas
            .iter()
            .map(|&t| Team::gaussian(t, sigma))
            .collect::<Result<Vec<_>>>()?;
        match rating {
            Some(r) => Self::with_rating(teams, r),
            None => Self::with_midpoint_rating(teams),
        }
    }

    pub fn len(&self) -> usize {
        self.teams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.teams.is_empty()
    }

    pub fn teams(&self) -> &[Team] {
        &self.teams
    }

    pub fn ratings(&self) -> &[f64] {
        &self.ratings
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.teams.iter().map(|t| t.theta).collect()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.teams.iter().map(|t| t.sigma).collect()
    }

    /// Shifts every rating and every team's match strength by `c`.
    /// Roster players move by `c / m` so that line-up sums move by `c`.
    pub fn translated(&self, c: f64) -> Result<Self> {
        let teams = self
            .teams
            .iter()
            .map(|t| match &t.strength {
                StrengthModel::Gaussian { theta, sigma } => Team::gaussian(theta + c, *sigma),
                StrengthModel::Roster(r) => {
                    let d = c / r.lineup_size() as f64;
                    let s = r.strengths().iter().map(|x| x + d).collect();
                    Ok(Team::roster(TeamRoster::new(s, r.lineup_size())?))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(teams, self.ratings.iter().map(|r| r + c).collect())
    }
}

fn setup_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ SETUP_SALT)
}

/// Teams of roughly equal strength 5 with growing spread: team `i` (1-based)
/// draws its 23 players uniformly from `(1/11) [5 - 5(i-1)/N, 5 + 5(i-1)/N]`.
pub fn build_setup_r1(n_teams: usize, seed: u64) -> Result<Population> {
    if n_teams == 0 {
        return Err(Error::Config("setup R1 needs at least one team".into()));
    }
    let mut rng = setup_rng(seed);
    let scale = PAPER_LINEUP_SIZE as f64;
    let teams = (1..=n_teams)
        .map(|i| {
            let half = 5.0 * (i - 1) as f64 / n_teams as f64;
            let (lo, hi) = ((5.0 - half) / scale, (5.0 + half) / scale);
            let strengths = (0..PAPER_SQUAD_SIZE)
                .map(|_| lo + (hi - lo) * rng.random::<f64>())
                .collect();
            TeamRoster::new(strengths, PAPER_LINEUP_SIZE).map(Team::roster)
        })
        .collect::<Result<Vec<_>>>()?;
    Population::with_rating(teams, 5.0)
}

/// Strength increasing from about 4 to about 10 with i.i.d. normal player
/// noise for the first `N - 2` teams, plus two outliers with mean strength 10
/// and 9 and line-up standard deviation `special_sigma`.
pub fn build_setup_r2(n_teams: usize, seed: u64, special_sigma: f64) -> Result<Population> {
    if n_teams < 3 {
        return Err(Error::Config("setup R2 needs at least three teams".into()));
    }
    let mut rng = setup_rng(seed);
    let scale = PAPER_LINEUP_SIZE as f64;
    let regular = n_teams - 2;
    let denom = (n_teams - 3).max(1) as f64;
    let mut teams = (1..=regular)
        .map(|i| {
            let base = 4.0 + 6.0 * (i - 1) as f64 / denom;
            let strengths = (0..PAPER_SQUAD_SIZE)
                .map(|_| {
                    let eta: f64 = rng.sample(StandardNormal);
                    (base + eta) / scale
                })
                .collect();
            TeamRoster::new(strengths, PAPER_LINEUP_SIZE).map(Team::roster)
        })
        .collect::<Result<Vec<_>>>()?;
    for theta in [10.0, 9.0] {
        teams.push(Team::roster(special_roster(
            theta,
            special_sigma,
            PAPER_SQUAD_SIZE,
            PAPER_LINEUP_SIZE,
        )?));
    }
    Population::with_midpoint_rating(teams)
}

/// A squad with evenly spaced players whose uniform line-ups have mean
/// `theta` and standard deviation `sigma`.
pub fn special_roster(theta: f64, sigma: f64, squad: usize, lineup: usize) -> Result<TeamRoster> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Domain(format!("sigma must be >= 0, got {sigma}")));
    }
    if lineup == 0 || lineup > squad {
        return Err(Error::Domain(format!(
            "line-up size {lineup} out of 1..={squad}"
        )));
    }
    if sigma > 0.0 && lineup == squad {
        return Err(Error::Domain("a full line-up cannot fluctuate".into()));
    }
    let (big_m, m) = (squad as f64, lineup as f64);
    let mean = theta / m;
    let centre = 0.5 * (big_m - 1.0);
    let pop_sd = ((big_m * big_m - 1.0) / 12.0).sqrt();
    let spread = if sigma > 0.0 {
        sigma / (m * (big_m - m) / (big_m - 1.0)).sqrt()
    } else {
        0.0
    };
    let strengths = (0..squad)
        .map(|k| mean + spread * (k as f64 - centre) / pop_sd)
        .collect();
    TeamRoster::new(strengths, lineup)
}

/// Sample mean and standard deviation of the line-up strength over `n_draws`
/// uniform line-ups.
pub fn sample_team_moments<R: Rng + ?Sized>(
    roster: &TeamRoster,
    n_draws: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if n_draws < 2 {
        return Err(Error::Domain("need at least two draws".into()));
    }
    let mut scratch = Vec::new();
    let xs: Vec<f64> = (0..n_draws)
        .map(|_| roster.sample_uniform(rng, &mut scratch))
        .collect();
    let (mean, m2) = shifted_moments(&xs);
    Ok((mean, (m2 / (n_draws - 1) as f64).sqrt()))
}

/// Mean and sum of squared deviations, computed relative to the first value
/// so that constant data gives exactly zero spread.
fn shifted_moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let shift = xs[0];
    let d_mean = xs.iter().map(|x| x - shift).sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - shift - d_mean).powi(2)).sum::<f64>();
    (shift + d_mean, m2)
}

/// Exact moments by enumeration when `C(M, m) <= cap`, otherwise sampled.
pub fn estimate_team_moments<R: Rng + ?Sized>(
    roster: &TeamRoster,
    n_draws: usize,
    rng: &mut R,
    cap: u128,
) -> Result<(f64, f64)> {
    if n_draws < 2 {
        return Err(Error::Domain("need at least two draws".into()));
    }
    if roster.lineup_count() <= cap {
        let xs = roster.lineup_strengths(cap)?;
        let (mean, m2) = shifted_moments(&xs);
        Ok((mean, (m2 / xs.len() as f64).sqrt()))
    } else {
        sample_team_moments(roster, n_draws, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r1_first_and_last_team() {
        let pop = build_setup_r1(200, 9).unwrap();
        let first = &pop.teams()[0];
        match &first.strength {
            StrengthModel::Roster(r) => {
                assert!(r.strengths().iter().all(|&s| s == 5.0 / 11.0));
                assert_eq!(r.squad_size(), 23);
            }
            _ => unreachable!(),
        }
        assert_eq!(first.sigma, 0.0);
        let last = &pop.teams()[199];
        let StrengthModel::Roster(r) = &last.strength else {
            unreachable!()
        };
        assert!(r
            .strengths()
            .iter()
            .all(|&s| (0.0..=10.0 / 11.0).contains(&s)));
        assert!(last.sigma > 0.5);
        assert!(pop.ratings().iter().all(|&x| x == 5.0));
    }

    #[test]
    fn r2_outliers_and_trend() {
        let pop = build_setup_r2(200, 4, 2.0).unwrap();
        let t = pop.teams();
        assert!((t[198].theta - 10.0).abs() < 1e-12);
        assert!((t[199].theta - 9.0).abs() < 1e-12);
        assert!((t[198].sigma - 2.0).abs() < 1e-12);
        assert!((t[0].theta - 4.0).abs() < 1.0);
        assert!((t[197].theta - 10.0).abs() < 1.0);
        // eta ~ N(0,1)/11 per player gives a much smaller line-up spread
        assert!(t[..198].iter().all(|x| x.sigma < 0.5));
        let flat = build_setup_r2(200, 4, 0.0).unwrap();
        assert_eq!(flat.teams()[198].sigma, 0.0);
        assert_eq!(flat.teams()[199].sigma, 0.0);
        assert!(build_setup_r2(2, 0, 1.0).is_err());
    }

    #[test]
    fn setups_are_seeded() {
        assert_eq!(
            build_setup_r1(20, 1).unwrap(),
            build_setup_r1(20, 1).unwrap()
        );
        assert_ne!(
            build_setup_r1(20, 1).unwrap(),
            build_setup_r1(20, 2).unwrap()
        );
    }

    #[test]
    fn moment_estimates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let flat = TeamRoster::new(vec![0.4; 23], 11).unwrap();
        let (_, s) = sample_team_moments(&flat, 100, &mut rng).unwrap();
        assert_eq!(s, 0.0);
        let full = TeamRoster::new(vec![0.5, 1.5, 2.0], 3).unwrap();
        let (t, s) = estimate_team_moments(&full, 10, &mut rng, 1).unwrap();
        assert_eq!((t, s), (4.0, 0.0));

        let r = TeamRoster::new(vec![0.0, 0.0, 3.0], 2).unwrap();
        let (t, s) = estimate_team_moments(&r, 10, &mut rng, 100).unwrap();
        assert!((t - 2.0).abs() < 1e-15 && (s * s - 2.0).abs() < 1e-14);
        let n = 20_000;
        let (t, s) = sample_team_moments(&r, n, &mut rng).unwrap();
        let se = (2.0f64 / n as f64).sqrt();
        assert!((t - 2.0).abs() < 3.0 * se, "{t}");
        // standard error of the variance estimate: sqrt((mu4 - sigma^4) / n) with mu4 = 6, sigma^4 = 4
        assert!(
            (s * s - 2.0).abs() < 3.0 * (2.0f64 / n as f64).sqrt(),
            "{s}"
        );
        assert!(sample_team_moments(&r, 1, &mut rng).is_err());
    }

    #[test]
    fn special_roster_hits_targets() {
        for sigma in [0.0, 0.3, 2.0] {
            let r = special_roster(10.0, sigma, 23, 11).unwrap();
            assert!((r.theta() - 10.0).abs() < 1e-12);
            assert!((r.sigma() - sigma).abs() < 1e-12);
        }
    }

    #[test]
    fn translation_moves_line_up_strength() {
        let pop = build_setup_r2(10, 3, 1.0).unwrap();
        let moved = pop.translated(2.5).unwrap();
        for (a, b) in pop.teams().iter().zip(moved.teams()) {
            assert!((b.theta - a.theta - 2.5).abs() < 1e-12);
            assert!((b.sigma - a.sigma).abs() < 1e-12);
        }
    }
}
