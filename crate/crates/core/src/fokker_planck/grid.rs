use crate::{Error, Result};

/// Uniform cell-centered axis on `[lo, hi]` with `n` cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || n == 0 {
            return Err(Error::Config(format!(
                "invalid axis [{lo}, {hi}] with {n} cells"
            )));
        }
        Ok(Self { lo, hi, n })
    }

    /// Axis with spacing `h` whose cells cover `[lo, hi]`; `hi` is rounded up
    /// to a whole number of cells.
    pub fn with_spacing(lo: f64, hi: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Config(format!("spacing must be positive, got {h}")));
        }
        let n = ((hi - lo) / h - 1e-9).ceil().max(1.0) as usize;
        Self::new(lo, lo + n as f64 * h, n)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.spacing()
    }

    /// Position of the face between cells `k - 1` and `k` (`0 ..= n`).
    pub fn face(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.spacing()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    /// Index of the cell containing `x`, if inside the axis.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        Some((((x - self.lo) / self.spacing()) as usize).min(self.n - 1))
    }

    /// Same cells refined by an integer factor.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n: self.n * factor,
            ..*self
        }
    }

    /// Shift both ends by `c`.
    pub fn translated(&self, c: f64) -> Self {
        Self {
            lo: self.lo + c,
            hi: self.hi + c,
            n: self.n,
        }
    }
}

/// The strength-deviation direction of a density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SigmaAxis {
    /// Resolved on a grid: the full `(theta, sigma, r)` model.
    Grid(Axis),
    /// Every team has the same deviation: the reduced `(theta, r)` model.
    Constant(f64),
}

impl SigmaAxis {
    pub fn len(&self) -> usize {
        match self {
            Self::Grid(a) => a.len(),
            Self::Constant(_) => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, m: usize) -> f64 {
        match self {
            Self::Grid(a) => a.center(m),
            Self::Constant(s) => *s,
        }
    }

    /// Cell width; 1 for the reduced model so that volumes are `dtheta * dr`.
    pub fn spacing(&self) -> f64 {
        match self {
            Self::Grid(a) => a.spacing(),
            Self::Constant(_) => 1.0,
        }
    }
}

/// Team density on a cell-centered grid. Values are stored with `r` varying
/// fastest: index `(l * n_sigma + m) * n_r + j` for `(theta_l, sigma_m, r_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    theta: Axis,
    sigma: SigmaAxis,
    r: Axis,
    values: Vec<f64>,
}

impl DensityGrid {
    pub fn zeros(theta: Axis, sigma: SigmaAxis, r: Axis) -> Result<Self> {
        if let SigmaAxis::Constant(s) = sigma {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::Config(format!("sigma must be >= 0, got {s}")));
            }
        }
        let n = theta.len() * sigma.len() * r.len();
        Ok(Self {
            theta,
            sigma,
            r,
            values: vec![0.0; n],
        })
    }

    /// Density sampled at cell centers, `f(theta, sigma, r)`.
    pub fn from_fn(
        theta: Axis,
        sigma: SigmaAxis,
        r: Axis,
        f: impl Fn(f64, f64, f64) -> f64,
    ) -> Result<Self> {
        let mut grid = Self::zeros(theta, sigma, r)?;
        for l in 0..theta.len() {
            for m in 0..sigma.len() {
                for j in 0..r.len() {
                    let idx = grid.index(l, m, j);
                    grid.values[idx] = f(theta.center(l), sigma.value(m), r.center(j));
                }
            }
        }
        grid.validate()?;
        Ok(grid)
    }

    pub fn from_values(theta: Axis, sigma: SigmaAxis, r: Axis, values: Vec<f64>) -> Result<Self> {
        let mut grid = Self::zeros(theta, sigma, r)?;
        if values.len() != grid.values.len() {
            return Err(Error::Config(format!(
                "expected {} values, got {}",
                grid.values.len(),
                values.len()
            )));
        }
        grid.values = values;
        grid.validate()?;
        Ok(grid)
    }

    /// Normalized density that is constant on the cells whose centers lie
    /// in `theta_range x r_range` (all sigma cells).
    pub fn uniform_box(
        theta: Axis,
        sigma: SigmaAxis,
        r: Axis,
        theta_range: (f64, f64),
        r_range: (f64, f64),
    ) -> Result<Self> {
        let inside = |x: f64, (a, b): (f64, f64)| x >= a && x <= b;
        let mut grid = Self::from_fn(theta, sigma, r, |t, _, x| {
            if inside(t, theta_range) && inside(x, r_range) {
                1.0
            } else {
                0.0
            }
        })?;
        grid.normalize()?;
        Ok(grid)
    }

    /// Empirical density of `(theta, r)` points: each point puts mass
    /// `1 / n` into the cell that contains it. Points outside are dropped.
    pub fn from_scatter(theta: Axis, r: Axis, sigma: f64, points: &[(f64, f64)]) -> Result<Self> {
        let mut grid = Self::zeros(theta, SigmaAxis::Constant(sigma), r)?;
        let vol = grid.cell_volume();
        let w = 1.0 / (points.len() as f64 * vol);
        for &(t, x) in points {
            if let (Some(l), Some(j)) = (theta.locate(t), r.locate(x)) {
                let idx = grid.index(l, 0, j);
                grid.values[idx] += w;
            }
        }
        Ok(grid)
    }

    fn validate(&self) -> Result<()> {
        if let Some(v) = self.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!(
                "density values must be finite and >= 0, got {v}"
            )));
        }
        Ok(())
    }

    pub fn theta_axis(&self) -> &Axis {
        &self.theta
    }

    pub fn sigma_axis(&self) -> &SigmaAxis {
        &self.sigma
    }

    pub fn r_axis(&self) -> &Axis {
        &self.r
    }

    pub fn is_reduced(&self) -> bool {
        matches!(self.sigma, SigmaAxis::Constant(_))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn index(&self, l: usize, m: usize, j: usize) -> usize {
        (l * self.sigma.len() + m) * self.r.len() + j
    }

    pub fn get(&self, l: usize, m: usize, j: usize) -> f64 {
        self.values[self.index(l, m, j)]
    }

    /// The `r` column at `(theta_l, sigma_m)`.
    pub fn column(&self, l: usize, m: usize) -> &[f64] {
        let start = self.index(l, m, 0);
        &self.values[start..start + self.r.len()]
    }

    pub fn cell_volume(&self) -> f64 {
        self.theta.spacing() * self.sigma.spacing() * self.r.spacing()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let mass = self.mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Degenerate(format!(
                "cannot normalize density of mass {mass}"
            )));
        }
        self.values.iter_mut().for_each(|v| *v /= mass);
        Ok(())
    }

    /// Mass in the first and last `r` cell of every column.
    pub fn boundary_mass(&self) -> f64 {
        let nr = self.r.len();
        let edge: f64 = self
            .values
            .chunks(nr)
            .map(|c| if nr == 1 { c[0] } else { c[0] + c[nr - 1] })
            .sum();
        edge * self.cell_volume()
    }

    /// Marginal density in theta (integrated over sigma and r).
    pub fn theta_marginal(&self) -> Vec<f64> {
        let w = self.sigma.spacing() * self.r.spacing();
        self.values
            .chunks(self.sigma.len() * self.r.len())
            .map(|c| c.iter().sum::<f64>() * w)
            .collect()
    }

    /// Marginal density in r (integrated over theta and sigma).
    pub fn r_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.r.len()];
        for col in self.values.chunks(self.r.len()) {
            for (o, v) in out.iter_mut().zip(col) {
                *o += v;
            }
        }
        let w = self.theta.spacing() * self.sigma.spacing();
        out.iter_mut().for_each(|o| *o *= w);
        out
    }

    /// Marginal density in sigma; a single entry for the reduced model.
    pub fn sigma_marginal(&self) -> Vec<f64> {
        let ns = self.sigma.len();
        let w = self.theta.spacing() * self.r.spacing();
        (0..ns)
            .map(|m| {
                (0..self.theta.len())
                    .map(|l| self.column(l, m).iter().sum::<f64>())
                    .sum::<f64>()
                    * w
            })
            .collect()
    }

    /// Joint `(theta, r)` density integrated over sigma, as a reduced grid
    /// with the given constant deviation.
    pub fn theta_r_marginal(&self, sigma_const: f64) -> Result<Self> {
        let nr = self.r.len();
        let ds = self.sigma.spacing();
        let mut out = Self::zeros(self.theta, SigmaAxis::Constant(sigma_const), self.r)?;
        for l in 0..self.theta.len() {
            for m in 0..self.sigma.len() {
                let src = self.index(l, m, 0);
                let dst = l * nr;
                for j in 0..nr {
                    out.values[dst + j] += self.values[src + j] * ds;
                }
            }
        }
        Ok(out)
    }

    /// Conditional mean rating `E[r | theta]` per theta cell; `None` where
    /// the theta slice carries no mass.
    pub fn conditional_mean_r(&self) -> Vec<Option<f64>> {
        let block = self.sigma.len() * self.r.len();
        self.values
            .chunks(block)
            .map(|c| {
                let (mut m0, mut m1) = (0.0, 0.0);
                for (k, v) in c.iter().enumerate() {
                    let r = self.r.center(k % self.r.len());
                    m0 += v;
                    m1 += v * r;
                }
                (m0 > 0.0).then(|| m1 / m0)
            })
            .collect()
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.theta == other.theta
            && self.r == other.r
            && self.sigma.len() == other.sigma.len()
            && match (self.sigma, other.sigma) {
                (SigmaAxis::Grid(a), SigmaAxis::Grid(b)) => a == b,
                (SigmaAxis::Constant(_), SigmaAxis::Constant(_)) => true,
                _ => false,
            }
    }

    /// `sum |f - g| * cell volume` on identical grids.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::Usage("L1 distance needs identical grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.cell_volume())
    }
}

/// Collapse the sigma direction: the result is the `(theta, r)` density of
/// the same teams, evolved with every team carrying deviation `sigma_const`.
pub fn reduce_to_2d(f: &DensityGrid, sigma_const: f64) -> Result<DensityGrid> {
    if f.is_reduced() {
        return Err(Error::Usage("density is already reduced".into()));
    }
    f.theta_r_marginal(sigma_const)
}
