use rayon::prelude::*;

use super::grid::{Axis, DensityGrid, SigmaAxis};
use crate::model::{InteractionKernel, Response};
use crate::{Error, Result};

/// Rating velocity at the `r` faces of every `(theta, sigma)` column.
///
/// Face `k` of a column sits between cells `k - 1` and `k`; faces `0` and
/// `n_r` are the domain boundaries.
#[derive(Clone, Debug, PartialEq)]
pub struct Velocity {
    n_faces: usize,
    values: Vec<f64>,
}

impl Velocity {
    /// The same speed at every face of a grid.
    pub fn constant(grid: &DensityGrid, a: f64) -> Self {
        let n_faces = grid.r_axis().len() + 1;
        let cols = grid.theta_axis().len() * grid.sigma_axis().len();
        Self {
            n_faces,
            values: vec![a; cols * n_faces],
        }
    }

    pub fn from_values(grid: &DensityGrid, values: Vec<f64>) -> Result<Self> {
        let n_faces = grid.r_axis().len() + 1;
        let cols = grid.theta_axis().len() * grid.sigma_axis().len();
        if values.len() != cols * n_faces {
            return Err(Error::Config(format!(
                "expected {} face velocities, got {}",
                cols * n_faces,
                values.len()
            )));
        }
        Ok(Self { n_faces, values })
    }

    pub fn n_faces(&self) -> usize {
        self.n_faces
    }

    /// Face velocities of column `c = l * n_sigma + m`.
    pub fn column(&self, c: usize) -> &[f64] {
        &self.values[c * self.n_faces..(c + 1) * self.n_faces]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest speed over interior faces (boundary faces carry no flux).
    pub fn max_abs(&self) -> f64 {
        self.values
            .chunks(self.n_faces)
            .flat_map(|c| &c[1..self.n_faces - 1])
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Quadrature of the nonlocal rating velocity
///
/// `a(theta, sigma, r) = int w(r - r') [ b(theta - theta') + b''(theta - theta') (sigma^2 + sigma'^2) / 2 - b(r - r') ] f' `
///
/// evaluated at the cell faces with the midpoint rule over all cells. For the
/// reduced model every team has the same `s` and the bracket becomes
/// `b(theta - theta') + s^2 b''(theta - theta') - b(r - r')`.
///
/// The kernel factorizes over `theta'` and `r'`, so the sum is assembled in
/// `O(n_theta^2 n_r + n_theta n_sigma n_r)` work from cached tables.
pub struct VelocityOperator {
    theta: Axis,
    sigma: SigmaAxis,
    r: Axis,
    /// `b(theta_l - theta_l')`, row-major in `l`.
    b_theta: Vec<f64>,
    /// `b''(theta_l - theta_l')`.
    b2_theta: Vec<f64>,
    /// `w(r_k - r_j')` for faces `k` and cells `j'`.
    w_face: Vec<f64>,
    /// `w(r_k - r_j') b(r_k - r_j')`.
    wb_face: Vec<f64>,
}

impl VelocityOperator {
    pub fn new<B: Response + ?Sized>(grid: &DensityGrid, b: &B, w: InteractionKernel) -> Self {
        let theta = *grid.theta_axis();
        let r = *grid.r_axis();
        let nt = theta.len();
        let nr = r.len();
        let mut b_theta = vec![0.0; nt * nt];
        let mut b2_theta = vec![0.0; nt * nt];
        for l in 0..nt {
            for lp in 0..nt {
                let z = theta.center(l) - theta.center(lp);
                b_theta[l * nt + lp] = b.eval(z);
                b2_theta[l * nt + lp] = b.deriv2(z);
            }
        }
        let mut w_face = vec![0.0; (nr + 1) * nr];
        let mut wb_face = vec![0.0; (nr + 1) * nr];
        for k in 0..=nr {
            for jp in 0..nr {
                let z = r.face(k) - r.center(jp);
                let wk = w.eval(z);
                w_face[k * nr + jp] = wk;
                wb_face[k * nr + jp] = wk * b.eval(z);
            }
        }
        Self {
            theta,
            sigma: *grid.sigma_axis(),
            r,
            b_theta,
            b2_theta,
            w_face,
            wb_face,
        }
    }

    fn check_grid(&self, f: &DensityGrid) -> Result<()> {
        if *f.theta_axis() != self.theta
            || *f.r_axis() != self.r
            || f.sigma_axis().len() != self.sigma.len()
        {
            return Err(Error::Usage(
                "velocity operator was built for a different grid".into(),
            ));
        }
        Ok(())
    }

    /// Face velocities for the density `f`, which must live on the grid the
    /// operator was built for. The sigma values are taken from `f`, so a
    /// reduced density may carry a different constant than at construction.
    pub fn assemble(&self, f: &DensityGrid) -> Result<Velocity> {
        self.check_grid(f)?;
        let sigma = *f.sigma_axis();
        let nt = self.theta.len();
        let ns = sigma.len();
        let nr = self.r.len();
        let nf = nr + 1;
        let ds = sigma.spacing();
        let (dt, dr) = (self.theta.spacing(), self.r.spacing());

        // sigma moments of f per (theta', r') cell
        let mut p = vec![0.0; nt * nr];
        let mut q = vec![0.0; nt * nr];
        for lp in 0..nt {
            for m in 0..ns {
                let s2 = sigma.value(m).powi(2);
                let col = f.column(lp, m);
                let (pr, qr) = (
                    &mut p[lp * nr..(lp + 1) * nr],
                    &mut q[lp * nr..(lp + 1) * nr],
                );
                for j in 0..nr {
                    pr[j] += col[j] * ds;
                    qr[j] += s2 * col[j] * ds;
                }
            }
        }
        let p_tot: Vec<f64> = (0..nr)
            .map(|j| (0..nt).map(|lp| p[lp * nr + j]).sum())
            .collect();

        // r' sums at every face: u[k][l'], v[k][l'], wr[k]
        let vol = dt * dr;
        let faces: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..nf)
            .into_par_iter()
            .map(|k| {
                let wrow = &self.w_face[k * nr..(k + 1) * nr];
                let mut u = vec![0.0; nt];
                let mut v = vec![0.0; nt];
                for lp in 0..nt {
                    let (pr, qr) = (&p[lp * nr..(lp + 1) * nr], &q[lp * nr..(lp + 1) * nr]);
                    let (mut su, mut sv) = (0.0, 0.0);
                    for j in 0..nr {
                        su += wrow[j] * pr[j];
                        sv += wrow[j] * qr[j];
                    }
                    u[lp] = su * vol;
                    v[lp] = sv * vol;
                }
                let wb = &self.wb_face[k * nr..(k + 1) * nr];
                let wr = wb.iter().zip(&p_tot).map(|(a, b)| a * b).sum::<f64>() * vol;
                (u, v, wr)
            })
            .collect();

        let rows: Vec<Vec<f64>> = (0..nt)
            .into_par_iter()
            .map(|l| {
                let bt = &self.b_theta[l * nt..(l + 1) * nt];
                let b2 = &self.b2_theta[l * nt..(l + 1) * nt];
                let mut out = vec![0.0; ns * nf];
                for (k, (u, v, wr)) in faces.iter().enumerate() {
                    let (mut a1, mut a2, mut a3) = (0.0, 0.0, 0.0);
                    for lp in 0..nt {
                        a1 += bt[lp] * u[lp];
                        a2 += b2[lp] * u[lp];
                        a3 += b2[lp] * v[lp];
                    }
                    for m in 0..ns {
                        let s2 = sigma.value(m).powi(2);
                        out[m * nf + k] = a1 + 0.5 * s2 * a2 + 0.5 * a3 - wr;
                    }
                }
                out
            })
            .collect();
        Ok(Velocity {
            n_faces: nf,
            values: rows.concat(),
        })
    }
}

/// Velocity field of `f` at the cell faces.
pub fn assemble_velocity<B: Response + ?Sized>(
    f: &DensityGrid,
    b: &B,
    w: InteractionKernel,
) -> Result<Velocity> {
    VelocityOperator::new(f, b, w).assemble(f)
}

/// Direct evaluation of the velocity at one point by summing over every
/// cell. Slow; used to cross-check the factorized assembly.
pub fn velocity_at<B: Response + ?Sized>(
    f: &DensityGrid,
    b: &B,
    w: InteractionKernel,
    theta: f64,
    sigma: f64,
    r: f64,
) -> f64 {
    let (ta, sa, ra) = (f.theta_axis(), f.sigma_axis(), f.r_axis());
    let mut acc = 0.0;
    for lp in 0..ta.len() {
        let tp = ta.center(lp);
        for m in 0..sa.len() {
            let sp = sa.value(m);
            // in the reduced model the constant deviation replaces both sigmas
            let s2 = match sa {
                SigmaAxis::Grid(_) => 0.5 * (sigma * sigma + sp * sp),
                SigmaAxis::Constant(_) => sp * sp,
            };
            for j in 0..ra.len() {
                let rp = ra.center(j);
                let fv = f.get(lp, m, j);
                if fv == 0.0 {
                    continue;
                }
                let bracket = b.eval(theta - tp) + b.deriv2(theta - tp) * s2 - b.eval(r - rp);
                acc += w.eval(r - rp) * bracket * fv;
            }
        }
    }
    acc * f.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RatingFunction;

    #[test]
    fn two_cell_example() {
        // mass 1/2 at (0, 0) and (1, 0), sigma = 0
        let t = Axis::new(-0.5, 1.5, 2).unwrap();
        let r = Axis::new(-0.5, 0.5, 1).unwrap();
        let f = DensityGrid::from_values(t, SigmaAxis::Constant(0.0), r, vec![0.5, 0.5]).unwrap();
        let b = RatingFunction::new(1.0);
        let a = velocity_at(&f, &b, InteractionKernel::AllPlayAll, 0.0, 0.0, 0.0);
        assert!((a - (-0.380797077977882)).abs() < 1e-12, "{a}");
        assert!((a - 0.5 * (-1.0f64).tanh()).abs() < 1e-15);
    }

    #[test]
    fn point_mass_has_zero_velocity() {
        let t = Axis::new(0.0, 1.0, 1).unwrap();
        let s = SigmaAxis::Grid(Axis::new(0.0, 1.0, 1).unwrap());
        let r = Axis::new(2.0, 3.0, 1).unwrap();
        let f = DensityGrid::from_values(t, s, r, vec![1.0]).unwrap();
        let b = RatingFunction::new(1.0);
        let a = velocity_at(&f, &b, InteractionKernel::SmoothBump, 0.5, 0.5, 2.5);
        assert_eq!(a, 0.0);
    }

    #[test]
    fn symmetric_density_has_zero_velocity_at_center() {
        let t = Axis::new(0.0, 10.0, 10).unwrap();
        let r = Axis::new(0.0, 10.0, 20).unwrap();
        let f = DensityGrid::from_fn(t, SigmaAxis::Constant(0.7), r, |th, _, x| {
            (-(th - 5.0).powi(2) - 0.5 * (x - 5.0).powi(2) + 0.3 * (th - 5.0) * (x - 5.0)).exp()
        })
        .unwrap();
        let b = RatingFunction::new(0.8);
        for w in [InteractionKernel::AllPlayAll, InteractionKernel::SmoothBump] {
            let a = velocity_at(&f, &b, w, 5.0, 0.7, 5.0);
            assert!(a.abs() < 1e-13, "{a}");
            // face 10 of the theta cells straddling 5 is at r = 5
            let v = assemble_velocity(&f, &b, w).unwrap();
            let mid = v.column(4)[10] + v.column(5)[10];
            assert!(mid.abs() < 1e-12);
        }
    }

    fn random_grid(sigma: SigmaAxis) -> DensityGrid {
        let t = Axis::new(2.0, 8.0, 7).unwrap();
        let r = Axis::new(1.0, 9.0, 9).unwrap();
        let mut g = DensityGrid::from_fn(t, sigma, r, |th, sg, x| {
            1.0 + (1.3 * th).sin() * (0.7 * x).cos() * 0.5 + 0.2 * sg
        })
        .unwrap();
        g.normalize().unwrap();
        g
    }

    #[test]
    fn assembly_matches_direct_sum() {
        let b = RatingFunction::new(0.6);
        for sigma in [
            SigmaAxis::Constant(0.9),
            SigmaAxis::Grid(Axis::new(0.0, 1.5, 3).unwrap()),
        ] {
            let f = random_grid(sigma);
            for w in [
                InteractionKernel::AllPlayAll,
                InteractionKernel::Indicator { c: 2.0 },
                InteractionKernel::SmoothBump,
            ] {
                let v = assemble_velocity(&f, &b, w).unwrap();
                let (t, r) = (f.theta_axis(), f.r_axis());
                for l in 0..t.len() {
                    for m in 0..sigma.len() {
                        let col = v.column(l * sigma.len() + m);
                        for (k, &got) in col.iter().enumerate() {
                            let direct =
                                velocity_at(&f, &b, w, t.center(l), sigma.value(m), r.face(k));
                            assert!((got - direct).abs() < 1e-13, "{got} vs {direct}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn operator_rejects_other_grids() {
        let b = RatingFunction::new(1.0);
        let f = random_grid(SigmaAxis::Constant(0.0));
        let op = VelocityOperator::new(&f, &b, InteractionKernel::AllPlayAll);
        let t = Axis::new(0.0, 1.0, 3).unwrap();
        let g = DensityGrid::zeros(t, SigmaAxis::Constant(0.0), t).unwrap();
        assert!(op.assemble(&g).is_err());
    }
}
