use crate::{Error, Result};

/// Ordinary least-squares slope of `y` on `x` for `(x, y)` pairs.
pub fn regression_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Degenerate(format!(
            "regression needs at least two points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    // relative threshold so that theta values equal up to rounding count as one
    if !(sxx > 1e-24 * n * (mx * mx).max(1.0)) {
        return Err(Error::Degenerate("all theta values coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Mean of `sign(theta - mean theta) * (rating - theta)`.
///
/// Negative when strong teams are rated below their strength and weak teams
/// above it, i.e. ratings are squeezed toward the center.
pub fn compression_metric(points: &[(f64, f64)]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Degenerate("empty scatter".into()));
    }
    let n = points.len() as f64;
    let mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let total: f64 = points
        .iter()
        .map(|&(theta, r)| {
            let d = theta - mean;
            let s = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            s * (r - theta)
        })
        .sum();
    Ok(total / n)
}

/// First time at which a `(t, value)` series reaches `fraction` of its
/// terminal value and stays there. `None` if the terminal value is not positive.
pub fn convergence_time(series: &[(f64, f64)], fraction: f64) -> Option<f64> {
    let &(_, last) = series.last()?;
    if !(last > 0.0) {
        return None;
    }
    let target = fraction * last;
    // scan backwards for the last crossing so transient overshoots do not count
    let mut first = series.len() - 1;
    for k in (0..series.len()).rev() {
        if series[k].1 >= target {
            first = k;
        } else {
            break;
        }
    }
    Some(series[first].0)
}
