use rand::Rng;

use crate::{Error, Result};

/// Observable description of a team: mean and standard deviation of its
/// per-match strength, and its current rating.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TeamState {
    pub theta: f64,
    pub sigma: f64,
    pub rating: f64,
}

impl TeamState {
    pub fn new(theta: f64, sigma: f64, rating: f64) -> Result<Self> {
        for (name, v) in [("theta", theta), ("sigma", sigma), ("rating", rating)] {
            crate::error::ensure_finite(name, v)?;
        }
        if sigma < 0.0 {
            return Err(Error::Domain(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(Self {
            theta,
            sigma,
            rating,
        })
    }
}

/// The `M` player strengths of a team, of which `m` are fielded per match.
///
/// A line-up's strength is the sum of its players' strengths.
#[derive(Clone, Debug, PartialEq)]
pub struct TeamRoster {
    strengths: Vec<f64>,
    lineup_size: usize,
}

impl TeamRoster {
    pub fn new(mut strengths: Vec<f64>, lineup_size: usize) -> Result<Self> {
        if strengths.is_empty() {
            return Err(Error::Domain("a roster needs at least one player".into()));
        }
        if lineup_size == 0 || lineup_size > strengths.len() {
            return Err(Error::Domain(format!(
                "line-up size {lineup_size} must be in 1..={}",
                strengths.len()
            )));
        }
        if let Some(bad) = strengths.iter().find(|s| !s.is_finite()) {
            return Err(Error::Domain(format!("non-finite player strength {bad}")));
        }
        strengths.sort_by(f64::total_cmp);
        Ok(Self {
            strengths,
            lineup_size,
        })
    }

    /// Sorted ascending.
    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    pub fn squad_size(&self) -> usize {
        self.strengths.len()
    }

    pub fn lineup_size(&self) -> usize {
        self.lineup_size
    }

    /// Number of distinct line-ups, `C(M, m)`.
    pub fn lineup_count(&self) -> u128 {
        binomial(self.squad_size() as u64, self.lineup_size as u64)
    }

    /// Mean line-up strength, `(m / M) * sum(rho)`.
    pub fn theta(&self) -> f64 {
        let m = self.lineup_size as f64;
        let big_m = self.squad_size() as f64;
        m / big_m * self.strengths.iter().sum::<f64>()
    }

    /// Variance of the line-up strength under uniform line-ups:
    /// `m (M - m) / (M - 1)` times the population variance of the squad.
    pub fn lineup_variance(&self) -> f64 {
        let n = self.squad_size();
        if n < 2 || self.lineup_size == n || self.strengths[0] == self.strengths[n - 1] {
            return 0.0;
        }
        let big_m = n as f64;
        let m = self.lineup_size as f64;
        let mean = self.strengths.iter().sum::<f64>() / big_m;
        let pop_var = self
            .strengths
            .iter()
            .map(|s| (s - mean).powi(2))
            .sum::<f64>()
            / big_m;
        m * (big_m - m) / (big_m - 1.0) * pop_var
    }

    pub fn sigma(&self) -> f64 {
        self.lineup_variance().sqrt()
    }

    pub fn state(&self, rating: f64) -> TeamState {
        TeamState {
            theta: self.theta(),
            sigma: self.sigma(),
            rating,
        }
    }

    /// Calls `visit` with the strength of every line-up, in lexicographic order
    /// of the chosen player indices.
    pub fn for_each_lineup(&self, mut visit: impl FnMut(f64)) {
        fn recurse(s: &[f64], start: usize, left: usize, acc: f64, visit: &mut impl FnMut(f64)) {
            if left == 0 {
                visit(acc);
                return;
            }
            for k in start..=s.len() - left {
                recurse(s, k + 1, left - 1, acc + s[k], visit);
            }
        }
        recurse(&self.strengths, 0, self.lineup_size, 0.0, &mut visit);
    }

    /// All line-up strengths; errors when there are more than `cap`.
    pub fn lineup_strengths(&self, cap: u128) -> Result<Vec<f64>> {
        let count = self.lineup_count();
        if count > cap {
            return Err(Error::EnumerationTooLarge { pairs: count, cap });
        }
        let mut out = Vec::with_capacity(count as usize);
        self.for_each_lineup(|x| out.push(x));
        Ok(out)
    }

    /// Strength of a uniformly random line-up. `scratch` is reused between
    /// calls to avoid allocation.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Vec<usize>) -> f64 {
        let n = self.squad_size();
        if self.lineup_size == n {
            return self.strengths.iter().sum();
        }
        scratch.clear();
        scratch.extend(0..n);
        let mut sum = 0.0;
        for k in 0..self.lineup_size {
            let pick = rng.random_range(k..n);
            scratch.swap(k, pick);
            sum += self.strengths[scratch[k]];
        }
        sum
    }

    /// Line-up drawn player by player without replacement, each pick with
    /// probability proportional to the (non-negative part of the) strength.
    pub fn sample_proportional<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        scratch: &mut Vec<usize>,
    ) -> f64 {
        let n = self.squad_size();
        if self.lineup_size == n {
            return self.strengths.iter().sum();
        }
        scratch.clear();
        scratch.extend(0..n);
        let mut sum = 0.0;
        for k in 0..self.lineup_size {
            let total: f64 = scratch[k..]
                .iter()
                .map(|&i| self.strengths[i].max(0.0))
                .sum();
            let pick = if total > 0.0 {
                let mut u = rng.random::<f64>() * total;
                let mut chosen = n - 1;
                for (offset, &i) in scratch[k..].iter().enumerate() {
                    u -= self.strengths[i].max(0.0);
                    if u < 0.0 {
                        chosen = k + offset;
                        break;
                    }
                }
                chosen
            } else {
                rng.random_range(k..n)
            };
            scratch.swap(k, pick);
            sum += self.strengths[scratch[k]];
        }
        sum
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Pascal's triangle, independent of the multiplicative formula.
    fn pascal(n: usize, k: usize) -> u128 {
        let mut row = vec![1u128];
        for _ in 0..n {
            let mut next = vec![1u128; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        row[k]
    }

    #[test]
    fn binomial_matches_pascal() {
        for n in 0..40 {
            for k in 0..=n {
                assert_eq!(binomial(n as u64, k as u64), pascal(n, k));
            }
        }
        assert_eq!(binomial(23, 11), 1_352_078);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn roster_is_sorted_and_validated() {
        let r = TeamRoster::new(vec![3.0, 1.0, 2.0], 2).unwrap();
        assert_eq!(r.strengths(), &[1.0, 2.0, 3.0]);
        assert!(TeamRoster::new(vec![], 1).is_err());
        assert!(TeamRoster::new(vec![1.0], 2).is_err());
        assert!(TeamRoster::new(vec![1.0], 0).is_err());
        assert!(TeamRoster::new(vec![f64::NAN], 1).is_err());
    }

    #[test]
    fn closed_form_moments_match_enumeration() {
        let r = TeamRoster::new(vec![0.0, 0.0, 3.0], 2).unwrap();
        let xs = r.lineup_strengths(100).unwrap();
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, vec![0.0, 3.0, 3.0]);
        assert!((r.theta() - 2.0).abs() < 1e-15);
        assert!((r.lineup_variance() - 2.0).abs() < 1e-15);

        let r = TeamRoster::new(vec![0.3, -1.2, 2.5, 0.9, 4.1, 1.7, -0.4], 3).unwrap();
        let xs = r.lineup_strengths(1000).unwrap();
        assert_eq!(xs.len(), 35);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((mean - r.theta()).abs() < 1e-12);
        assert!((var - r.lineup_variance()).abs() < 1e-12);
    }

    #[test]
    fn full_lineup_is_deterministic() {
        let r = TeamRoster::new(vec![1.0, 2.0, 4.0], 3).unwrap();
        assert_eq!(r.lineup_variance(), 0.0);
        assert_eq!(r.theta(), 7.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut scratch = Vec::new();
        assert_eq!(r.sample_uniform(&mut rng, &mut scratch), 7.0);
        assert_eq!(r.sample_proportional(&mut rng, &mut scratch), 7.0);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let r = TeamRoster::new((0..23).map(f64::from).collect(), 11).unwrap();
        match r.lineup_strengths(1_000_000) {
            Err(Error::EnumerationTooLarge { pairs, .. }) => assert_eq!(pairs, 1_352_078),
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn uniform_sampler_hits_every_lineup_evenly() {
        let r = TeamRoster::new(vec![1.0, 10.0, 100.0, 1000.0], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut scratch = Vec::new();
        let mut counts = std::collections::BTreeMap::new();
        let n = 60_000;
        for _ in 0..n {
            *counts
                .entry(r.sample_uniform(&mut rng, &mut scratch) as i64)
                .or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 6);
        for c in counts.values() {
            // expected 10_000, sd ~ 91
            assert!((*c as f64 - 10_000.0).abs() < 400.0, "{counts:?}");
        }
    }

    #[test]
    fn proportional_sampler_favours_strong_players() {
        let r = TeamRoster::new(vec![1.0, 1.0, 8.0], 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut scratch = Vec::new();
        let n = 20_000;
        let strong = (0..n)
            .filter(|_| r.sample_proportional(&mut rng, &mut scratch) == 8.0)
            .count();
        let frac = strong as f64 / n as f64;
        assert!((frac - 0.8).abs() < 0.015, "{frac}");
    }
}
