//! Conditional probability paths and their target vector fields.
//!
//! Two paths are provided. The geodesic path interpolates each horizon step
//! along the minimizing geodesic from the base sample to the data sample and
//! works on any supported manifold. The Gaussian CFM path is the Euclidean
//! interpolant `x_t = t·x1 + (1 − (1 − σ)t)·x0` with target
//! `u_t = (x1 − (1 − σ)x_t) / (1 − (1 − σ)t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::horizon::ActionHorizon;
use crate::manifold::{self, ManifoldPoint, TangentVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PathKind {
    GaussianCfm { sigma_min: f64 },
    Geodesic,
}

impl PathKind {
    pub fn validate(&self, kind: manifold::ManifoldKind) -> Result<()> {
        if let PathKind::GaussianCfm { sigma_min } = *self {
            if !kind.is_euclidean() {
                return Err(Error::invalid("the Gaussian CFM path requires a Euclidean manifold"));
            }
            if !(0.0..1.0).contains(&sigma_min) {
                return Err(Error::invalid(format!("sigma_min must lie in [0, 1), got {sigma_min}")));
            }
        }
        Ok(())
    }
}

/// A point on the conditional path together with the target velocity there.
#[derive(Clone, Debug)]
pub struct PathSample {
    pub t: f64,
    pub point: ActionHorizon,
    pub target_field: Vec<TangentVector>,
}

fn check_pair(a0: &ActionHorizon, a1: &ActionHorizon, t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("path time must lie in [0, 1], got {t}")));
    }
    if a0.len() != a1.len() {
        return Err(Error::invalid(format!(
            "horizon lengths differ ({} vs {})",
            a0.len(),
            a1.len()
        )));
    }
    if a0.kind() != a1.kind() {
        return Err(Error::invalid("horizons live on different manifolds"));
    }
    Ok(())
}

/// Geodesic interpolant `x_t = exp_{x0}(t·log_{x0}(x1))`, applied per horizon step,
/// with its time derivative as target field.
pub fn sample_geodesic_path(a0: &ActionHorizon, a1: &ActionHorizon, t: f64) -> Result<PathSample> {
    check_pair(a0, a1, t)?;
    let mut points = Vec::with_capacity(a0.len());
    let mut field = Vec::with_capacity(a0.len());
    for (x0, x1) in a0.points().iter().zip(a1.points()) {
        let v = manifold::log_map(x0, x1)?;
        let xt = manifold::exp_map(x0, &v.scale(t))?;
        // The geodesic has constant velocity; transporting log_{x0}(x1) to x_t gives ẋ_t.
        field.push(manifold::parallel_transport(&v, x0, &xt)?);
        points.push(xt);
    }
    Ok(PathSample {
        t,
        point: ActionHorizon::new(points)?,
        target_field: field,
    })
}

/// Gaussian CFM path in Euclidean space, sampled through the supplied base draw `a0`.
pub fn sample_gaussian_path(
    a0: &ActionHorizon,
    a1: &ActionHorizon,
    t: f64,
    sigma_min: f64,
) -> Result<PathSample> {
    check_pair(a0, a1, t)?;
    PathKind::GaussianCfm { sigma_min }.validate(a0.kind())?;
    let shrink = 1.0 - sigma_min;
    let denom = 1.0 - shrink * t;
    if denom < 1e-9 {
        return Err(Error::Numerical(format!(
            "degenerate Gaussian path denominator at t = {t}, sigma_min = {sigma_min}"
        )));
    }
    let mut points = Vec::with_capacity(a0.len());
    let mut field = Vec::with_capacity(a0.len());
    for (x0, x1) in a0.points().iter().zip(a1.points()) {
        let xt: Vec<f64> = x0
            .coords()
            .iter()
            .zip(x1.coords())
            .map(|(b, d)| t * d + denom * b)
            .collect();
        let u: Vec<f64> = x1
            .coords()
            .iter()
            .zip(&xt)
            .map(|(d, x)| (d - shrink * x) / denom)
            .collect();
        let xt = ManifoldPoint::new(xt, x0.kind())?;
        field.push(TangentVector::new(u, xt.clone())?);
        points.push(xt);
    }
    Ok(PathSample {
        t,
        point: ActionHorizon::new(points)?,
        target_field: field,
    })
}

/// Dispatches on the configured path kind.
pub fn sample_path(
    path: PathKind,
    a0: &ActionHorizon,
    a1: &ActionHorizon,
    t: f64,
) -> Result<PathSample> {
    match path {
        PathKind::Geodesic => sample_geodesic_path(a0, a1, t),
        PathKind::GaussianCfm { sigma_min } => sample_gaussian_path(a0, a1, t, sigma_min),
    }
}

/// Squared metric norm of the regression residual, summed over the horizon.
pub fn rfmp_loss_sample(v_pred: &[TangentVector], sample: &PathSample) -> Result<f64> {
    if v_pred.len() != sample.target_field.len() {
        return Err(Error::invalid(format!(
            "prediction has {} steps, path sample has {}",
            v_pred.len(),
            sample.target_field.len()
        )));
    }
    let mut loss = 0.0;
    for ((v, u), x) in v_pred.iter().zip(&sample.target_field).zip(sample.point.points()) {
        if v.base().kind() != x.kind()
            || v.base().coords().iter().zip(x.coords()).any(|(a, b)| (a - b).abs() > manifold::MANIFOLD_TOL)
        {
            return Err(Error::invalid("predicted vector is not based at the path point"));
        }
        loss += v
            .coords()
            .iter()
            .zip(u.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok(loss)
}
