use super::response::Response;

/// Outcome of sampling `g'(z) = b'(z) + sigma^2 b'''(z)` on a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BPrimeCheck {
    pub holds: bool,
    /// First grid point (ascending) where `g' < 0`.
    pub fails_at: Option<f64>,
    pub min_slope: f64,
    pub argmin: f64,
}

/// Sup and inf constants of `b'` and `b'''` over an interval.
///
/// `l` and `l2` bound `|b'|` and `|b'''|` from above (Lipschitz constants of
/// `b` and `b''`). `l_min` is the smallest slope of `b` and `l2_min` the
/// smallest (signed) slope of `b''`; these are the coercivity constants used
/// for the guaranteed decay rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzEstimates {
    pub l: f64,
    pub l2: f64,
    pub l_min: f64,
    pub l2_min: f64,
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |k| if k == n - 1 { hi } else { lo + h * k as f64 })
}

/// Checks that `b + sigma^2 b''` is non-decreasing on `[z_lo, z_hi]` by
/// sampling its derivative at `n_samples` equispaced points.
pub fn check_b_prime_monotone<B: Response>(
    b: &B,
    sigma: f64,
    z_lo: f64,
    z_hi: f64,
    n_samples: usize,
) -> BPrimeCheck {
    let s2 = sigma * sigma;
    let mut fails_at = None;
    let mut min_slope = f64::INFINITY;
    let mut argmin = z_lo;
    for z in grid(z_lo, z_hi, n_samples) {
        let g = b.deriv1(z) + s2 * b.deriv3(z);
        if g < min_slope {
            min_slope = g;
            argmin = z;
        }
        if g < 0.0 && fails_at.is_none() {
            fails_at = Some(z);
        }
    }
    BPrimeCheck {
        holds: fails_at.is_none(),
        fails_at,
        min_slope,
        argmin,
    }
}

/// Sampled on 10 001 points of `[z_lo, z_hi]`; a degenerate interval gives the
/// values at that single point.
pub fn lipschitz_estimates<B: Response>(b: &B, z_lo: f64, z_hi: f64) -> LipschitzEstimates {
    let mut est = LipschitzEstimates {
        l: 0.0,
        l2: 0.0,
        l_min: f64::INFINITY,
        l2_min: f64::INFINITY,
    };
    let n = if z_hi > z_lo { 10_001 } else { 1 };
    let points: Box<dyn Iterator<Item = f64>> = if n == 1 {
        Box::new(std::iter::once(z_lo))
    } else {
        Box::new(grid(z_lo, z_hi, n))
    };
    for z in points {
        let d1 = b.deriv1(z);
        let d3 = b.deriv3(z);
        est.l = est.l.max(d1.abs());
        est.l2 = est.l2.max(d3.abs());
        est.l_min = est.l_min.min(d1);
        est.l2_min = est.l2_min.min(d3);
    }
    est
}
