use rand::Rng;

use super::response::Response;
use super::team::{TeamRoster, TeamState};
use crate::error::ensure_finite;
use crate::{Error, Result};

/// Default limit on line-up pairs for exact enumeration.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

// Line-ups per team beyond which even the binned path refuses to enumerate.
const BINNED_LINEUP_LIMIT: u128 = 50_000_000;

/// Result of a single match from the first team's point of view. Ties are not modelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchOutcome {
    Win,
    Loss,
}

impl MatchOutcome {
    pub fn value(self) -> f64 {
        match self {
            Self::Win => 1.0,
            Self::Loss => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Self::Win => Self::Loss,
            Self::Loss => Self::Win,
        }
    }
}

/// Elo update after a match with outcome `s` for team `i`:
/// `r_i + gamma (s - b(r_i - r_j))` and `r_j + gamma (-s - b(r_j - r_i))`.
///
/// The increment is computed once and applied with opposite signs, so the
/// pair sum changes only by the rounding of the two additions.
pub fn rating_update<B: Response>(
    ri: f64,
    rj: f64,
    s: MatchOutcome,
    gamma: f64,
    b: &B,
) -> Result<(f64, f64)> {
    ensure_finite("ri", ri)?;
    ensure_finite("rj", rj)?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Domain(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let delta = gamma * (s.value() - b.eval(ri - rj));
    Ok((ri + delta, rj - delta))
}

/// Probability that the first team wins when the strength gap is `gap`,
/// chosen so that the expected outcome equals `b(gap)`.
pub fn win_probability<B: Response>(gap: f64, b: &B) -> f64 {
    (0.5 * (1.0 + b.eval(gap))).clamp(0.0, 1.0)
}

pub fn sample_outcome<R: Rng + ?Sized>(pwin: f64, rng: &mut R) -> Result<MatchOutcome> {
    if !(0.0..=1.0).contains(&pwin) {
        return Err(Error::Domain(format!(
            "win probability must lie in [0, 1], got {pwin}"
        )));
    }
    Ok(if rng.random::<f64>() < pwin {
        MatchOutcome::Win
    } else {
        MatchOutcome::Loss
    })
}

/// Expected outcome `sum_x sum_y b(x - y) p(x) p(y)` over all pairs of
/// uniformly chosen, independent line-ups.
pub fn exact_expected_outcome<B: Response>(
    ri: &TeamRoster,
    rj: &TeamRoster,
    b: &B,
    cap: u128,
) -> Result<f64> {
    let pairs = ri.lineup_count().saturating_mul(rj.lineup_count());
    if pairs > cap {
        return Err(Error::EnumerationTooLarge { pairs, cap });
    }
    let xs = ri.lineup_strengths(cap)?;
    let ys = rj.lineup_strengths(cap)?;
    let mut total = 0.0;
    for &x in &xs {
        let row: f64 = ys.iter().map(|&y| b.eval(x - y)).sum();
        total += row;
    }
    Ok(total / (xs.len() as f64 * ys.len() as f64))
}

/// Expected outcome for large squads: each team's line-up strengths are
/// enumerated once and collapsed into `n_bins` histogram bins (represented
/// by the mean strength of the bin), then the bins are paired.
pub fn binned_expected_outcome<B: Response>(
    ri: &TeamRoster,
    rj: &TeamRoster,
    b: &B,
    n_bins: usize,
) -> Result<f64> {
    if n_bins == 0 {
        return Err(Error::Domain("need at least one bin".into()));
    }
    let hi = histogram(ri, n_bins)?;
    let hj = histogram(rj, n_bins)?;
    let mut total = 0.0;
    for &(x, px) in &hi {
        for &(y, py) in &hj {
            total += b.eval(x - y) * px * py;
        }
    }
    Ok(total)
}

// (mean strength, probability) per non-empty bin
fn histogram(r: &TeamRoster, n_bins: usize) -> Result<Vec<(f64, f64)>> {
    let count = r.lineup_count();
    if count > BINNED_LINEUP_LIMIT {
        return Err(Error::EnumerationTooLarge {
            pairs: count,
            cap: BINNED_LINEUP_LIMIT,
        });
    }
    let s = r.strengths();
    let m = r.lineup_size();
    let lo: f64 = s[..m].iter().sum();
    let hi: f64 = s[s.len() - m..].iter().sum();
    let width = (hi - lo) / n_bins as f64;
    let mut sums = vec![0.0; n_bins];
    let mut counts = vec![0u64; n_bins];
    r.for_each_lineup(|x| {
        let k = if width > 0.0 {
            (((x - lo) / width) as usize).min(n_bins - 1)
        } else {
            0
        };
        sums[k] += x;
        counts[k] += 1;
    });
    let n = count as f64;
    Ok(sums
        .into_iter()
        .zip(counts)
        .filter(|&(_, c)| c > 0)
        .map(|(s, c)| (s / c as f64, c as f64 / n))
        .collect())
}

/// Second-order expansion `b(dtheta) + b''(dtheta) (sigma_i^2 + sigma_j^2) / 2`.
pub fn taylor_expected_outcome<B: Response>(ti: &TeamState, tj: &TeamState, b: &B) -> Result<f64> {
    let (gap, spread) = gap_and_spread(ti, tj)?;
    Ok(b.eval(gap) + 0.5 * b.deriv2(gap) * spread)
}

/// `b'(dtheta)^2 (sigma_i^2 + sigma_j^2)`.
pub fn taylor_outcome_variance<B: Response>(ti: &TeamState, tj: &TeamState, b: &B) -> Result<f64> {
    let (gap, spread) = gap_and_spread(ti, tj)?;
    Ok(b.deriv1(gap).powi(2) * spread)
}

fn gap_and_spread(ti: &TeamState, tj: &TeamState) -> Result<(f64, f64)> {
    for (name, v) in [
        ("theta_i", ti.theta),
        ("theta_j", tj.theta),
        ("sigma_i", ti.sigma),
        ("sigma_j", tj.sigma),
    ] {
        ensure_finite(name, v)?;
    }
    Ok((ti.theta - tj.theta, ti.sigma.powi(2) + tj.sigma.powi(2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RatingFunction;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(theta: f64, sigma: f64) -> TeamState {
        TeamState::new(theta, sigma, 0.0).unwrap()
    }

    #[test]
    fn update_examples() {
        let b = RatingFunction::new(1.0);
        let (a, c) = rating_update(5.0, 5.0, MatchOutcome::Win, 0.1, &b).unwrap();
        assert!((a - 5.1).abs() < 1e-15 && (c - 4.9).abs() < 1e-15);
        // mpmath: 6 - 0.1 (1 + tanh 2)
        let (a, c) = rating_update(6.0, 4.0, MatchOutcome::Loss, 0.1, &b).unwrap();
        assert!((a - 5.803597241992418).abs() < 1e-14);
        assert!((c - 4.196402758007582).abs() < 1e-14);
    }

    #[test]
    fn update_rejects_bad_input() {
        let b = RatingFunction::new(1.0);
        assert!(rating_update(f64::NAN, 0.0, MatchOutcome::Win, 0.1, &b).is_err());
        assert!(rating_update(0.0, f64::INFINITY, MatchOutcome::Win, 0.1, &b).is_err());
        assert!(rating_update(0.0, 0.0, MatchOutcome::Win, 0.0, &b).is_err());
        assert!(rating_update(0.0, 0.0, MatchOutcome::Win, f64::NAN, &b).is_err());
    }

    #[test]
    fn taylor_examples() {
        let b = RatingFunction::new(1.0);
        assert_eq!(
            taylor_expected_outcome(&state(3.0, 0.7), &state(3.0, 1.9), &b).unwrap(),
            0.0
        );
        assert_eq!(
            taylor_expected_outcome(&state(2.5, 0.0), &state(1.0, 0.0), &b).unwrap(),
            b.eval(1.5)
        );
        // b'' from an mpmath central difference (step 1e-5): -0.6397000084
        let v = taylor_expected_outcome(&state(1.0, 0.5f64.sqrt()), &state(0.0, 0.5f64.sqrt()), &b)
            .unwrap();
        assert!((v - 0.4417441517339).abs() < 1e-9, "{v}");
    }

    #[test]
    fn variance_examples() {
        let b = RatingFunction::new(0.4);
        assert_eq!(
            taylor_outcome_variance(&state(1.0, 0.0), &state(-2.0, 0.0), &b).unwrap(),
            0.0
        );
        // b'(0) by central difference equals nu to ~1e-11
        let h = 1e-5;
        let fd = (b.eval(h) - b.eval(-h)) / (2.0 * h);
        let v = taylor_outcome_variance(&state(2.0, 0.5), &state(2.0, 1.5), &b).unwrap();
        assert!((v - fd * fd * 2.5).abs() < 1e-9);
        let a = taylor_outcome_variance(&state(2.0, 0.5), &state(-1.0, 1.5), &b).unwrap();
        let s = taylor_outcome_variance(&state(-1.0, 1.5), &state(2.0, 0.5), &b).unwrap();
        assert_eq!(a, s);
        let nan = TeamState {
            theta: f64::NAN,
            sigma: 0.0,
            rating: 0.0,
        };
        assert!(taylor_outcome_variance(&state(0.0, 0.0), &nan, &b).is_err());
    }

    #[test]
    fn sample_outcome_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            assert_eq!(sample_outcome(1.0, &mut rng).unwrap(), MatchOutcome::Win);
            assert_eq!(sample_outcome(0.0, &mut rng).unwrap(), MatchOutcome::Loss);
        }
        assert!(sample_outcome(1.0000001, &mut rng).is_err());
        assert!(sample_outcome(-0.1, &mut rng).is_err());
        assert!(sample_outcome(f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn fair_coin_mean_within_clt_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let sum: f64 = (0..n)
            .map(|_| sample_outcome(0.5, &mut rng).unwrap().value())
            .sum();
        // 4 standard errors of a +-1 variable: 4 / sqrt(n) = 0.004
        assert!((sum / n as f64).abs() <= 0.004);
    }

    #[test]
    fn win_probability_reproduces_expected_outcome() {
        let b = RatingFunction::new(0.8);
        for gap in [-3.0, -0.2, 0.0, 1.1, 40.0] {
            let p = win_probability(gap, &b);
            assert!((2.0 * p - 1.0 - b.eval(gap)).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_outcome_examples() {
        let b = RatingFunction::new(1.0);
        let a = TeamRoster::new(vec![1.0, 2.0, 3.0], 2).unwrap();
        let flat = TeamRoster::new(vec![2.0, 2.0, 2.0], 2).unwrap();
        assert!(exact_expected_outcome(&a, &a, &b, 100).unwrap().abs() < 1e-15);
        // brute-force mpmath enumeration of the 3 x 3 line-up pairs
        assert!(exact_expected_outcome(&a, &flat, &b, 100).unwrap().abs() < 1e-15);
        let p = TeamRoster::new(vec![0.0, 1.0, 3.0], 2).unwrap();
        let q = TeamRoster::new(vec![1.0, 1.0, 2.0], 2).unwrap();
        let v = exact_expected_outcome(&p, &q, &b, 100).unwrap();
        assert!((v - 0.062128970203968).abs() < 1e-14, "{v}");
        let p = TeamRoster::new(vec![0.5, 1.0, 1.5, 3.0], 2).unwrap();
        let q = TeamRoster::new(vec![1.0, 1.2, 2.0, 2.1], 2).unwrap();
        let v = exact_expected_outcome(&p, &q, &RatingFunction::new(0.5), 100).unwrap();
        assert!((v + 0.056220565237759).abs() < 1e-14, "{v}");
    }

    #[test]
    fn exact_outcome_degenerate_lineup() {
        let b = RatingFunction::new(0.3);
        let p = TeamRoster::new(vec![1.0, 4.0], 2).unwrap();
        let q = TeamRoster::new(vec![0.5, 2.0, 0.25], 3).unwrap();
        assert_eq!(
            exact_expected_outcome(&p, &q, &b, 1).unwrap(),
            b.eval(5.0 - 2.75)
        );
    }

    #[test]
    fn exact_outcome_cap() {
        let b = RatingFunction::new(1.0);
        let big = TeamRoster::new((0..10).map(f64::from).collect(), 5).unwrap();
        // 252 * 252 = 63_504 pairs
        assert!(exact_expected_outcome(&big, &big, &b, 63_504).is_ok());
        assert!(matches!(
            exact_expected_outcome(&big, &big, &b, 63_503),
            Err(Error::EnumerationTooLarge { pairs: 63_504, .. })
        ));
    }

    #[test]
    fn binned_outcome_approaches_exact() {
        let b = RatingFunction::new(0.5);
        let p = TeamRoster::new((0..12).map(|k| 0.1 * k as f64 + 0.3).collect(), 6).unwrap();
        let q = TeamRoster::new((0..12).map(|k| 0.13 * k as f64).collect(), 6).unwrap();
        let exact = exact_expected_outcome(&p, &q, &b, 1_000_000).unwrap();
        let coarse = binned_expected_outcome(&p, &q, &b, 20).unwrap();
        let fine = binned_expected_outcome(&p, &q, &b, 400).unwrap();
        assert!((fine - exact).abs() < 1e-5);
        assert!((fine - exact).abs() <= (coarse - exact).abs() + 1e-12);
    }

    proptest! {
        #[test]
        fn pair_sum_conserved(ri in -1e3f64..1e3, rj in -1e3f64..1e3, win in any::<bool>(),
                              gamma in 1e-4f64..1.0, nu in 0.01f64..3.0) {
            let b = RatingFunction::new(nu);
            let s = if win { MatchOutcome::Win } else { MatchOutcome::Loss };
            let (a, c) = rating_update(ri, rj, s, gamma, &b).unwrap();
            prop_assert!(((a + c) - (ri + rj)).abs() <= 1e-12 * (1.0 + ri.abs() + rj.abs()));
            // symmetric formulation for team j gives the same numbers
            let (c2, a2) = rating_update(rj, ri, s.flip(), gamma, &b).unwrap();
            prop_assert!((a - a2).abs() <= 1e-12 * (1.0 + ri.abs()));
            prop_assert!((c - c2).abs() <= 1e-12 * (1.0 + rj.abs()));
        }

        #[test]
        fn exact_outcome_antisymmetric(
            a in proptest::collection::vec(-3.0f64..3.0, 2..6),
            c in proptest::collection::vec(-3.0f64..3.0, 2..6),
        ) {
            let b = RatingFunction::new(0.9);
            let p = TeamRoster::new(a, 2).unwrap();
            let q = TeamRoster::new(c, 2).unwrap();
            let fwd = exact_expected_outcome(&p, &q, &b, 1000).unwrap();
            let bwd = exact_expected_outcome(&q, &p, &b, 1000).unwrap();
            prop_assert!((fwd + bwd).abs() < 1e-13);
            prop_assert!(fwd.abs() < 1.0);
        }

        #[test]
        fn taylor_correction_parity(d in -5.0f64..5.0, si in 0.0f64..2.0, sj in 0.0f64..2.0) {
            let b = RatingFunction::new(0.6);
            let k = |d: f64, si: f64, sj: f64| {
                taylor_expected_outcome(&state(d, si), &state(0.0, sj), &b).unwrap() - b.eval(d)
            };
            prop_assert!((k(d, si, sj) + k(-d, si, sj)).abs() < 1e-14);
            prop_assert!((k(d, si, sj) - k(d, sj, si)).abs() < 1e-14);
        }
    }
}
