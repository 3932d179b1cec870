use crate::fokker_planck::DensityGrid;
use crate::{Error, Result};

/// Moments of a density at one time.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct MomentReport {
    pub t: f64,
    pub mass: f64,
    pub m1_r: f64,
    pub m2_r: f64,
    pub m1_theta: f64,
    pub m2_theta: f64,
    /// `int sigma^2 f`.
    pub m_sigma2: f64,
    /// `m2_r - m1_r^2 / mass`: the second moment after shifting `r` so the
    /// first moment vanishes.
    pub m2_r_centered: f64,
    /// `m2_theta - m1_theta^2 / mass`.
    pub m2_theta_centered: f64,
    /// Relative energy `int (r - theta)^2 f`; reduced densities only.
    pub energy: Option<f64>,
}

/// Quadrature moments of `f`, in a fixed summation order.
pub fn moments(f: &DensityGrid, t: f64) -> MomentReport {
    let (ta, sa, ra) = (f.theta_axis(), f.sigma_axis(), f.r_axis());
    let mut acc = [0.0f64; 7];
    let r_centers = ra.centers();
    for l in 0..ta.len() {
        let th = ta.center(l);
        for m in 0..sa.len() {
            let s2 = sa.value(m).powi(2);
            let (mut c0, mut c1, mut c2, mut ce) = (0.0, 0.0, 0.0, 0.0);
            for (v, r) in f.column(l, m).iter().zip(&r_centers) {
                c0 += v;
                c1 += v * r;
                c2 += v * r * r;
                ce += v * (r - th) * (r - th);
            }
            acc[0] += c0;
            acc[1] += c1;
            acc[2] += c2;
            acc[3] += c0 * th;
            acc[4] += c0 * th * th;
            acc[5] += c0 * s2;
            acc[6] += ce;
        }
    }
    let vol = f.cell_volume();
    let [mass, m1_r, m2_r, m1_theta, m2_theta, m_sigma2, energy] = acc.map(|a| a * vol);
    MomentReport {
        t,
        mass,
        m1_r,
        m2_r,
        m1_theta,
        m2_theta,
        m_sigma2,
        m2_r_centered: m2_r - m1_r * m1_r / mass,
        m2_theta_centered: m2_theta - m1_theta * m1_theta / mass,
        energy: f.is_reduced().then_some(energy),
    }
}

/// `int (r - theta)^2 f` for a reduced `(theta, r)` density.
pub fn relative_energy(f: &DensityGrid) -> Result<f64> {
    if !f.is_reduced() {
        return Err(Error::Usage(
            "relative energy is defined on (theta, r) densities; reduce the grid first".into(),
        ));
    }
    Ok(moments(f, 0.0).energy.unwrap_or(0.0))
}

/// Empirical moments of a set of teams with equal weight, in the same
/// layout as the quadrature moments.
pub fn empirical_moments(
    thetas: &[f64],
    sigmas: &[f64],
    ratings: &[f64],
    t: f64,
) -> Result<MomentReport> {
    let n = ratings.len();
    if n == 0 || thetas.len() != n || sigmas.len() != n {
        return Err(Error::Usage(
            "need equally long, nonempty theta/sigma/rating vectors".into(),
        ));
    }
    let nf = n as f64;
    let mean = |g: &dyn Fn(usize) -> f64| (0..n).map(g).sum::<f64>() / nf;
    let m1_r = mean(&|i| ratings[i]);
    let m2_r = mean(&|i| ratings[i] * ratings[i]);
    let m1_theta = mean(&|i| thetas[i]);
    let m2_theta = mean(&|i| thetas[i] * thetas[i]);
    Ok(MomentReport {
        t,
        mass: 1.0,
        m1_r,
        m2_r,
        m1_theta,
        m2_theta,
        m_sigma2: mean(&|i| sigmas[i] * sigmas[i]),
        m2_r_centered: m2_r - m1_r * m1_r,
        m2_theta_centered: m2_theta - m1_theta * m1_theta,
        energy: Some(mean(&|i| (ratings[i] - thetas[i]).powi(2))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fokker_planck::{Axis, SigmaAxis};

    #[test]
    fn diagonal_density_has_zero_energy() {
        let a = Axis::new(0.0, 4.0, 4).unwrap();
        let f = DensityGrid::from_fn(a, SigmaAxis::Constant(0.0), a, |t, _, r| {
            if t == r {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        assert_eq!(relative_energy(&f).unwrap(), 0.0);
    }

    #[test]
    fn two_cell_energy_and_translation() {
        // mass 1/2 at (theta, r) = (0, 1) and (1, 0)
        let a = Axis::new(-0.5, 1.5, 2).unwrap();
        let f = DensityGrid::from_values(a, SigmaAxis::Constant(0.0), a, vec![0.0, 0.5, 0.5, 0.0])
            .unwrap();
        assert!((relative_energy(&f).unwrap() - 1.0).abs() < 1e-15);
        let b = a.translated(3.25);
        let g =
            DensityGrid::from_values(b, SigmaAxis::Constant(0.0), b, f.values().to_vec()).unwrap();
        assert!((relative_energy(&g).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn energy_needs_reduced_grid() {
        let a = Axis::new(0.0, 1.0, 2).unwrap();
        let f = DensityGrid::zeros(a, SigmaAxis::Grid(a), a).unwrap();
        assert!(matches!(relative_energy(&f), Err(Error::Usage(_))));
        assert_eq!(moments(&f, 0.0).energy, None);
    }

    #[test]
    fn cauchy_schwarz_and_uniform_values() {
        let t = Axis::new(0.0, 10.0, 20).unwrap();
        let s = SigmaAxis::Grid(Axis::new(0.0, 1.0, 5).unwrap());
        let f = DensityGrid::uniform_box(t, s, t, (0.0, 10.0), (0.0, 10.0)).unwrap();
        let m = moments(&f, 0.0);
        assert!((m.mass - 1.0).abs() < 1e-12);
        assert!((m.m1_r - 5.0).abs() < 1e-12);
        // midpoint rule: mean of squared centers = 100/3 - h^2/12
        assert!((m.m2_r - (100.0 / 3.0 - 0.25 / 12.0)).abs() < 1e-11);
        assert!(m.m2_r >= m.m1_r * m.m1_r / m.mass);
        // sigma centers 0.1, 0.3, ..., 0.9
        assert!((m.m_sigma2 - 0.33).abs() < 1e-12);
    }

    #[test]
    fn empirical_matches_quadrature_on_binned_points() {
        let pts: Vec<(f64, f64)> = (0..50)
            .map(|i| {
                let t = 4.0 + 6.0 * i as f64 / 49.0;
                (t, 7.0 + 0.3 * (t - 7.0) + 0.2 * (i as f64).sin())
            })
            .collect();
        let (th, rs): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        let emp = empirical_moments(&th, &vec![0.0; 50], &rs, 0.0).unwrap();
        let t = Axis::new(3.9, 10.1, 31).unwrap();
        let r = Axis::new(4.0, 10.0, 30).unwrap();
        let f = DensityGrid::from_scatter(t, r, 0.0, &pts).unwrap();
        let q = moments(&f, 0.0);
        assert!((emp.m1_r - q.m1_r).abs() <= 2.0 * r.spacing());
        assert!((emp.m1_theta - q.m1_theta).abs() <= 2.0 * t.spacing());
        assert!(empirical_moments(&th, &[0.0], &rs, 0.0).is_err());
    }
}
