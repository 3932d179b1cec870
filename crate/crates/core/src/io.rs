//! CSV formats exchanged between the engines, the analysis layer and the
//! command-line front end.
//!
//! | file       | columns                                                |
//! |------------|--------------------------------------------------------|
//! | trajectory | `realization,t,team_id,theta,sigma_est,rating`         |
//! | scatter    | `team_id,theta,sigma_est,rating_mean,rating_std`       |
//! | snapshot   | `theta,sigma,r,f` (sigma grid) or `theta,r,f`          |
//! | marginal   | `<axis>,density`                                       |
//! | moments    | `t,mass,m1_r,m2_r,energy`                              |
//! | report     | `check,quantity,value`                                 |

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::MomentReport;
use crate::fokker_planck::{Axis, DensityGrid, SigmaAxis};
use crate::micro::{MicroRun, ScatterRow};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct TrajectoryRow {
    pub realization: usize,
    pub t: f64,
    pub team_id: usize,
    pub theta: f64,
    pub sigma_est: f64,
    pub rating: f64,
}

#[derive(Serialize, Deserialize)]
struct ScatterCsv {
    team_id: usize,
    theta: f64,
    sigma_est: f64,
    rating_mean: f64,
    rating_std: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct MomentRow {
    pub t: f64,
    pub mass: f64,
    pub m1_r: f64,
    pub m2_r: f64,
    /// Empty for densities with a sigma grid.
    pub energy: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportRow {
    pub check: String,
    pub quantity: String,
    pub value: String,
}

pub fn write_trajectory<W: Write>(out: W, run: &MicroRun) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in run.records() {
        for (i, &rating) in rec.ratings.iter().enumerate() {
            w.serialize(TrajectoryRow {
                realization: rec.realization,
                t: rec.time,
                team_id: i,
                theta: rec.thetas[i],
                sigma_est: rec.sigmas[i],
                rating,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory<R: Read>(input: R) -> Result<Vec<TrajectoryRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_scatter<W: Write>(out: W, rows: &[ScatterRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(ScatterCsv {
            team_id: r.team_id,
            theta: r.theta,
            sigma_est: r.sigma_est,
            rating_mean: r.rating_mean,
            rating_std: r.rating_std,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scatter<R: Read>(input: R) -> Result<Vec<ScatterRow>> {
    csv::Reader::from_reader(input)
        .deserialize::<ScatterCsv>()
        .map(|r| {
            let r = r?;
            Ok(ScatterRow {
                team_id: r.team_id,
                theta: r.theta,
                sigma_est: r.sigma_est,
                rating_mean: r.rating_mean,
                rating_std: r.rating_std,
            })
        })
        .collect()
}

/// Per-team ratings averaged over realizations at the last recorded time of
/// a trajectory file.
pub fn terminal_scatter_from_trajectory(rows: &[TrajectoryRow]) -> Result<Vec<ScatterRow>> {
    let t_last = rows.iter().map(|r| r.t).fold(f64::NEG_INFINITY, f64::max);
    if !t_last.is_finite() {
        return Err(Error::Degenerate("empty trajectory".into()));
    }
    let mut teams: BTreeMap<usize, (f64, f64, Vec<f64>)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.t == t_last) {
        teams
            .entry(r.team_id)
            .or_insert((r.theta, r.sigma_est, Vec::new()))
            .2
            .push(r.rating);
    }
    Ok(teams
        .into_iter()
        .map(|(team_id, (theta, sigma_est, xs))| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            ScatterRow {
                team_id,
                theta,
                sigma_est,
                rating_mean: mean,
                rating_std: var.sqrt(),
            }
        })
        .collect())
}

pub fn write_snapshot<W: Write>(out: W, f: &DensityGrid) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let (ta, sa, ra) = (f.theta_axis(), f.sigma_axis(), f.r_axis());
    if f.is_reduced() {
        w.write_record(["theta", "r", "f"])?;
    } else {
        w.write_record(["theta", "sigma", "r", "f"])?;
    }
    for l in 0..ta.len() {
        for m in 0..sa.len() {
            for (j, v) in f.column(l, m).iter().enumerate() {
                let (t, r) = (ta.center(l).to_string(), ra.center(j).to_string());
                if f.is_reduced() {
                    w.write_record([t, r, v.to_string()])?;
                } else {
                    w.write_record([t, sa.value(m).to_string(), r, v.to_string()])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn axis_from_centers(name: &str, mut centers: Vec<f64>) -> Result<Axis> {
    centers.sort_by(f64::total_cmp);
    centers.dedup();
    if centers.len() < 2 {
        return Err(Error::Config(format!(
            "snapshot needs at least two {name} cells"
        )));
    }
    let n = centers.len();
    let h = (centers[n - 1] - centers[0]) / (n - 1) as f64;
    Axis::new(centers[0] - 0.5 * h, centers[n - 1] + 0.5 * h, n)
}

/// Read a snapshot written by [`write_snapshot`]. A `(theta, r)` file is
/// given the constant deviation `sigma_const` (required for such files).
pub fn read_snapshot<R: Read>(input: R, sigma_const: Option<f64>) -> Result<DensityGrid> {
    let mut rd = csv::Reader::from_reader(input);
    let headers: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    let reduced = match headers
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["theta", "r", "f"] => true,
        ["theta", "sigma", "r", "f"] => false,
        other => return Err(Error::Config(format!("unknown snapshot header {other:?}"))),
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad number {s:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(if reduced {
            [vals[0], 0.0, vals[1], vals[2]]
        } else {
            [vals[0], vals[1], vals[2], vals[3]]
        });
    }
    let theta = axis_from_centers("theta", rows.iter().map(|r| r[0]).collect())?;
    let r = axis_from_centers("r", rows.iter().map(|r| r[2]).collect())?;
    let sigma =
        if reduced {
            SigmaAxis::Constant(sigma_const.ok_or_else(|| {
                Error::Config("a (theta, r) snapshot needs a constant sigma".into())
            })?)
        } else {
            SigmaAxis::Grid(axis_from_centers(
                "sigma",
                rows.iter().map(|r| r[1]).collect(),
            )?)
        };
    let mut f = DensityGrid::zeros(theta, sigma, r)?;
    if rows.len() != f.values().len() {
        return Err(Error::Config(format!(
            "snapshot has {} rows for a grid of {} cells",
            rows.len(),
            f.values().len()
        )));
    }
    let locate = |axis: &Axis, x: f64| {
        axis.locate(x)
            .ok_or_else(|| Error::Config(format!("value {x} outside the snapshot grid")))
    };
    for row in &rows {
        let l = locate(&theta, row[0])?;
        let m = match sigma {
            SigmaAxis::Grid(a) => locate(&a, row[1])?,
            SigmaAxis::Constant(_) => 0,
        };
        let j = locate(&r, row[2])?;
        let idx = f.index(l, m, j);
        f.values_mut()[idx] = row[3];
    }
    DensityGrid::from_values(theta, sigma, r, f.values().to_vec())
}

pub fn write_marginal<W: Write>(
    out: W,
    axis_name: &str,
    centers: &[f64],
    density: &[f64],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([axis_name, "density"])?;
    for (x, d) in centers.iter().zip(density) {
        w.write_record([x.to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_moments<W: Write>(out: W, reports: &[MomentReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for m in reports {
        w.serialize(MomentRow {
            t: m.t,
            mass: m.mass,
            m1_r: m.m1_r,
            m2_r: m.m2_r,
            energy: m.energy,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_moments<R: Read>(input: R) -> Result<Vec<MomentRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_report<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::moments;
    use crate::micro::{run_micro_gaussian, MicroConfig};

    #[test]
    fn snapshot_round_trip() {
        let t = Axis::new(4.0, 10.0, 6).unwrap();
        let r = Axis::new(3.0, 11.0, 8).unwrap();
        for sigma in [
            SigmaAxis::Constant(0.5),
            SigmaAxis::Grid(Axis::new(0.0, 1.0, 3).unwrap()),
        ] {
            let f = DensityGrid::from_fn(t, sigma, r, |a, s, x| a + 10.0 * s + 0.1 * x).unwrap();
            let mut buf = Vec::new();
            write_snapshot(&mut buf, &f).unwrap();
            let g = read_snapshot(buf.as_slice(), Some(0.5)).unwrap();
            assert_eq!(g.values(), f.values());
            let (a, b) = (g.theta_axis(), f.theta_axis());
            assert!((a.lo() - b.lo()).abs() < 1e-12 && (a.hi() - b.hi()).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_snapshot_needs_sigma() {
        let a = Axis::new(0.0, 1.0, 2).unwrap();
        let f = DensityGrid::zeros(a, SigmaAxis::Constant(0.0), a).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f).unwrap();
        assert!(read_snapshot(buf.as_slice(), None).is_err());
        assert!(read_snapshot("x,y\n1,2\n".as_bytes(), None).is_err());
    }

    #[test]
    fn micro_files_round_trip() {
        let cfg = MicroConfig {
            n_steps: 20,
            realizations: 2,
            record_stride: 10,
            ..MicroConfig::default()
        };
        let run = run_micro_gaussian(&cfg, &[4.0, 7.0, 10.0], 1.0, None).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &run).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("realization,t,team_id,theta,sigma_est,rating\n"));
        let rows = read_trajectory(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 3);
        let from_file = terminal_scatter_from_trajectory(&rows).unwrap();
        let direct = run.terminal_scatter();
        for (a, b) in from_file.iter().zip(&direct) {
            assert!((a.rating_mean - b.rating_mean).abs() < 1e-12);
            assert!((a.rating_std - b.rating_std).abs() < 1e-12);
        }
        let mut buf = Vec::new();
        write_scatter(&mut buf, &direct).unwrap();
        assert!(buf.starts_with(b"team_id,theta,sigma_est,rating_mean,rating_std\n"));
        assert_eq!(read_scatter(buf.as_slice()).unwrap(), direct);
    }

    #[test]
    fn moments_file() {
        let a = Axis::new(0.0, 1.0, 4).unwrap();
        let f = DensityGrid::uniform_box(a, SigmaAxis::Constant(0.0), a, (0.0, 1.0), (0.0, 1.0))
            .unwrap();
        let mut buf = Vec::new();
        write_moments(&mut buf, &[moments(&f, 0.0), moments(&f, 0.5)]).unwrap();
        assert!(buf.starts_with(b"t,mass,m1_r,m2_r,energy\n"));
        let rows = read_moments(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].t, 0.5);
        assert!(rows[0].energy.is_some());
    }
}
