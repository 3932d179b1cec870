use super::moments::MomentReport;
use crate::model::{
    check_b_prime_monotone, lipschitz_estimates, BPrimeCheck, InteractionKernel,
    LipschitzEstimates, Response,
};
use crate::{Error, Result};

/// Samples of the relative energy `E(t)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergySeries {
    pub samples: Vec<(f64, f64)>,
}

impl EnergySeries {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(&(t, e)) = samples
            .iter()
            .find(|(t, e)| !(t.is_finite() && e.is_finite() && *e >= 0.0))
        {
            return Err(Error::Domain(format!("invalid energy sample ({t}, {e})")));
        }
        Ok(Self { samples })
    }

    /// Energies of reduced-model moment reports.
    pub fn from_moments(reports: &[MomentReport]) -> Result<Self> {
        let samples = reports
            .iter()
            .map(|m| {
                m.energy
                    .map(|e| (m.t, e))
                    .ok_or_else(|| Error::Usage("moment report without energy (sigma grid)".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples)
    }

    /// Least-squares decay rate `-d log E / dt` over the samples with
    /// `E > 1e-8 E(0)`.
    pub fn fitted_rate(&self) -> Result<f64> {
        let e0 = self.samples.first().map_or(0.0, |s| s.1);
        let pts: Vec<(f64, f64)> = self
            .samples
            .iter()
            .filter(|(_, e)| *e > 1e-8 * e0)
            .map(|&(t, e)| (t, e.ln()))
            .collect();
        Ok(-super::regression_slope(&pts)?)
    }
}

/// Guaranteed decay rate `2 w_min (L_min + sigma^2 L2_min)` on a support
/// whose pairwise theta and r gaps are at most `gap`.
pub fn theorem_rate<B: Response>(
    b: &B,
    w: InteractionKernel,
    gap: f64,
    sigma: f64,
) -> (f64, LipschitzEstimates) {
    let est = lipschitz_estimates(b, -gap, gap);
    let w_min = w.min_on(gap);
    (2.0 * w_min * (est.l_min + sigma * sigma * est.l2_min), est)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EnergyVerdict {
    /// `b + sigma^2 b''` is not monotone on the support: no decay guarantee.
    AssumptionViolated { fails_at: f64 },
    Checked {
        /// `E` nonincreasing between consecutive samples.
        monotone: bool,
        fitted_rate: f64,
        bound_rate: f64,
        /// `E(t) <= E(0) exp(-bound_rate t) (1 + tolerance)` at every sample.
        bound_satisfied: bool,
        /// Largest `E(t) / (E(0) exp(-bound_rate t))` over the samples.
        worst_ratio: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyDecayReport {
    pub b_prime: BPrimeCheck,
    pub constants: LipschitzEstimates,
    pub w_min: f64,
    pub verdict: EnergyVerdict,
}

impl EnergyDecayReport {
    /// Plain-text verdict line.
    pub fn summary(&self) -> String {
        match self.verdict {
            EnergyVerdict::AssumptionViolated { fails_at } => format!(
                "assumption violated: b + sigma^2 b'' decreases near z = {fails_at:.4} (min slope {:.6e}); decay not guaranteed",
                self.b_prime.min_slope
            ),
            EnergyVerdict::Checked { monotone, fitted_rate, bound_rate, bound_satisfied, worst_ratio } => format!(
                "monotone: {monotone}; fitted rate {fitted_rate:.6}; bound rate {bound_rate:.6}; bound satisfied: {bound_satisfied} (worst ratio {worst_ratio:.6})"
            ),
        }
    }
}

/// Compare an energy series with the exponential decay bound.
///
/// `gap` is the largest pairwise distance of theta values and of ratings on
/// the support; assumption (b + sigma^2 b'' increasing) is checked on
/// `[-gap, gap]` first. `tolerance` is the relative slack on the bound.
pub fn check_energy_decay<B: Response>(
    series: &EnergySeries,
    b: &B,
    w: InteractionKernel,
    gap: f64,
    sigma: f64,
    tolerance: f64,
) -> Result<EnergyDecayReport> {
    if series.samples.len() < 3 {
        return Err(Error::Usage(
            "energy check needs at least three samples".into(),
        ));
    }
    let b_prime = check_b_prime_monotone(b, sigma, -gap, gap, 10_001);
    let (bound_rate, constants) = theorem_rate(b, w, gap, sigma);
    let w_min = w.min_on(gap);
    if let Some(fails_at) = b_prime.fails_at {
        return Ok(EnergyDecayReport {
            b_prime,
            constants,
            w_min,
            verdict: EnergyVerdict::AssumptionViolated { fails_at },
        });
    }
    let s = &series.samples;
    let monotone = s.windows(2).all(|p| p[1].1 <= p[0].1 * (1.0 + 1e-12));
    let (t0, e0) = s[0];
    let mut worst_ratio: f64 = 0.0;
    let mut bound_satisfied = true;
    for &(t, e) in s {
        let bound = e0 * (-bound_rate * (t - t0)).exp();
        if e > bound * (1.0 + tolerance) {
            bound_satisfied = false;
        }
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(e / bound);
        }
    }
    Ok(EnergyDecayReport {
        b_prime,
        constants,
        w_min,
        verdict: EnergyVerdict::Checked {
            monotone,
            fitted_rate: series.fitted_rate()?,
            bound_rate,
            bound_satisfied,
            worst_ratio,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RatingFunction;

    #[test]
    fn constant_series_fails_positive_bound() {
        let s = EnergySeries::new((0..5).map(|k| (k as f64, 2.0)).collect()).unwrap();
        let b = RatingFunction::new(0.1);
        let r = check_energy_decay(&s, &b, InteractionKernel::AllPlayAll, 6.0, 0.0, 0.05).unwrap();
        match r.verdict {
            EnergyVerdict::Checked {
                monotone,
                bound_satisfied,
                bound_rate,
                fitted_rate,
                ..
            } => {
                assert!(monotone && !bound_satisfied);
                assert!(bound_rate > 0.0);
                assert_eq!(fitted_rate, 0.0);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn exact_exponential_at_bound_rate_passes() {
        let b = RatingFunction::new(0.1);
        let (rate, est) = theorem_rate(&b, InteractionKernel::AllPlayAll, 6.0, 0.5);
        // L_min = nu sech^2(6 nu), L2_min = b'''(0) = -2 nu^3
        let expect = 2.0 * (0.1 / (0.6f64).cosh().powi(2) - 0.25 * 2.0 * 0.001);
        assert!((rate - expect).abs() < 1e-12, "{rate} vs {expect}");
        assert!((est.l2_min + 0.002).abs() < 1e-15);
        let s = EnergySeries::new(
            (0..20)
                .map(|k| (0.1 * k as f64, 3.0 * (-1.2 * rate * 0.1 * k as f64).exp()))
                .collect(),
        )
        .unwrap();
        let r = check_energy_decay(&s, &b, InteractionKernel::AllPlayAll, 6.0, 0.5, 0.05).unwrap();
        match r.verdict {
            EnergyVerdict::Checked {
                bound_satisfied,
                fitted_rate,
                ..
            } => {
                assert!(bound_satisfied);
                assert!((fitted_rate - 1.2 * rate).abs() < 1e-10);
            }
            v => panic!("{v:?}"),
        }
        assert!(r.summary().starts_with("monotone: true"));
    }

    #[test]
    fn violated_assumption_is_reported() {
        let s = EnergySeries::new(vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.25)]).unwrap();
        let b = RatingFunction::new(1.0);
        let r = check_energy_decay(&s, &b, InteractionKernel::AllPlayAll, 6.0, 2.0, 0.05).unwrap();
        assert!(matches!(
            r.verdict,
            EnergyVerdict::AssumptionViolated { .. }
        ));
        assert!(r.summary().starts_with("assumption violated"));
    }

    #[test]
    fn input_checks() {
        assert!(EnergySeries::new(vec![(0.0, -1.0)]).is_err());
        let s = EnergySeries::new(vec![(0.0, 1.0), (1.0, 0.5)]).unwrap();
        let b = RatingFunction::new(0.1);
        assert!(check_energy_decay(&s, &b, InteractionKernel::AllPlayAll, 1.0, 0.0, 0.05).is_err());
    }
}
