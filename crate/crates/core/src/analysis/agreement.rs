use crate::fokker_planck::DensityGrid;
use crate::{Error, Result};

/// Largest gap between binned micro ratings and the macro `E[r | theta]`.
///
/// Micro `(theta, rating)` points are grouped by the theta cell of the macro
/// grid; bins without points or without macro mass are skipped.
pub fn micro_macro_distance(micro: &[(f64, f64)], macro_grid: &DensityGrid) -> Result<f64> {
    let axis = macro_grid.theta_axis();
    let mut sums = vec![(0.0, 0usize); axis.len()];
    for &(theta, r) in micro {
        if let Some(l) = axis.locate(theta) {
            sums[l].0 += r;
            sums[l].1 += 1;
        }
    }
    let cond = macro_grid.conditional_mean_r();
    let mut worst: Option<f64> = None;
    for ((sum, n), macro_mean) in sums.iter().zip(cond) {
        if let (true, Some(mm)) = (*n > 0, macro_mean) {
            let d = (sum / *n as f64 - mm).abs();
            worst = Some(worst.map_or(d, |w| w.max(d)));
        }
    }
    worst.ok_or_else(|| Error::Degenerate("no theta bin holds both micro and macro mass".into()))
}
