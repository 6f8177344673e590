//! Trajectory evaluation: dynamic time warping distance and jerkiness.
//!
//! DTWD uses geodesic point distances and the step pattern
//! `{(1,0), (0,1), (1,1)}` with both endpoints matched. The accumulated cost of
//! the optimal alignment is divided by `n + m − 1`, the length of the longest
//! monotone alignment, so the value is comparable across lengths and the
//! dynamic program is still an exact minimization.
//!
//! Jerkiness is the mean squared norm of the third forward difference of the
//! ambient coordinates divided by `dt³`. On the sphere this is an ambient
//! approximation, not a covariant derivative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{self, ManifoldPoint};

fn check_same_manifold(a: &[ManifoldPoint], b: &[ManifoldPoint]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("DTW needs non-empty trajectories"));
    }
    if a[0].kind() != b[0].kind() {
        return Err(Error::invalid("trajectories live on different manifolds"));
    }
    Ok(())
}

/// Raw accumulated cost of the optimal DTW alignment.
pub fn dtw_cost(a: &[ManifoldPoint], b: &[ManifoldPoint]) -> Result<f64> {
    check_same_manifold(a, b)?;
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![0.0; m];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            let d = manifold::geodesic_distance(ai, bj)?;
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(cur[j - 1]).min(prev[j - 1]),
            };
            cur[j] = best + d;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// Normalized dynamic time warping distance.
pub fn dtwd(a: &[ManifoldPoint], b: &[ManifoldPoint]) -> Result<f64> {
    Ok(dtw_cost(a, b)? / (a.len() + b.len() - 1) as f64)
}

pub fn jerkiness(traj: &[ManifoldPoint], dt: f64) -> Result<f64> {
    if traj.len() < 4 {
        return Err(Error::invalid(format!(
            "jerkiness needs at least 4 points, got {}",
            traj.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    let dt3 = dt * dt * dt;
    let n = traj.len() - 3;
    let total: f64 = traj
        .windows(4)
        .map(|w| {
            (0..w[0].coords().len())
                .map(|k| {
                    let j = (w[3].coords()[k] - 3.0 * w[2].coords()[k] + 3.0 * w[1].coords()[k]
                        - w[0].coords()[k])
                        / dt3;
                    j * j
                })
                .sum::<f64>()
        })
        .sum();
    Ok(total / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Rollout `i` is scored against demonstration `i`.
    Matched,
    /// Each rollout is scored against its closest demonstration.
    Nearest,
}

impl std::str::FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matched" => Ok(Pairing::Matched),
            "nearest" => Ok(Pairing::Nearest),
            other => Err(Error::invalid(format!("unknown pairing `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub rollout: usize,
    pub demo: usize,
    pub dtwd: f64,
    pub jerk: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub pairing: Pairing,
    pub rows: Vec<MetricRow>,
    pub dtwd_mean: f64,
    pub dtwd_std: f64,
    pub jerk_mean: f64,
    pub jerk_std: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Scores rollouts against demonstrations (jerkiness with `dt = 1` step).
pub fn evaluate_rollouts(
    demos: &[Vec<ManifoldPoint>],
    rollouts: &[Vec<ManifoldPoint>],
    pairing: Pairing,
) -> Result<MetricReport> {
    if rollouts.is_empty() {
        return Err(Error::invalid("no rollouts to evaluate"));
    }
    if demos.is_empty() {
        return Err(Error::invalid("no demonstrations to evaluate against"));
    }
    if pairing == Pairing::Matched && demos.len() != rollouts.len() {
        return Err(Error::invalid(format!(
            "matched pairing needs equal counts ({} demos, {} rollouts)",
            demos.len(),
            rollouts.len()
        )));
    }
    let mut rows = Vec::with_capacity(rollouts.len());
    for (i, r) in rollouts.iter().enumerate() {
        let (demo, d) = match pairing {
            Pairing::Matched => (i, dtwd(&demos[i], r)?),
            Pairing::Nearest => {
                let mut best = (0, f64::INFINITY);
                for (j, demo) in demos.iter().enumerate() {
                    let d = dtwd(demo, r)?;
                    if d < best.1 {
                        best = (j, d);
                    }
                }
                best
            }
        };
        rows.push(MetricRow {
            rollout: i,
            demo,
            dtwd: d,
            jerk: jerkiness(r, 1.0)?,
        });
    }
    let (dtwd_mean, dtwd_std) = mean_std(&rows.iter().map(|r| r.dtwd).collect::<Vec<_>>());
    let (jerk_mean, jerk_std) = mean_std(&rows.iter().map(|r| r.jerk).collect::<Vec<_>>());
    Ok(MetricReport {
        pairing,
        rows,
        dtwd_mean,
        dtwd_std,
        jerk_mean,
        jerk_std,
    })
}

/// Mean over demonstrations of the DTWD to their closest other demonstration.
pub fn demo_nearest_neighbor_dtwd(demos: &[Vec<ManifoldPoint>]) -> Result<f64> {
    if demos.len() < 2 {
        return Err(Error::invalid("need at least two demonstrations"));
    }
    let mut total = 0.0;
    for (i, a) in demos.iter().enumerate() {
        let mut best = f64::INFINITY;
        for (j, b) in demos.iter().enumerate() {
            if i != j {
                best = best.min(dtwd(a, b)?);
            }
        }
        total += best;
    }
    Ok(total / demos.len() as f64)
}

impl MetricReport {
    /// One row per rollout followed by `mean` and `std` aggregate rows.
    pub fn to_csv(&self, meta: &[(String, String)]) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for (k, v) in meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("row,rollout,demo,dtwd,jerk\n");
        for r in &self.rows {
            let _ = writeln!(out, "pair,{},{},{},{}", r.rollout, r.demo, r.dtwd, r.jerk);
        }
        let _ = writeln!(out, "mean,,,{},{}", self.dtwd_mean, self.jerk_mean);
        let _ = writeln!(out, "std,,,{},{}", self.dtwd_std, self.jerk_std);
        out
    }
}
