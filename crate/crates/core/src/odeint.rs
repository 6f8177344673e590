//! Integration of the learned flow from `t = 0` to `t = 1`.
//!
//! Euclidean horizons can use an adaptive Dormand–Prince 5(4) pair; any
//! manifold can use geodesic Euler, which steps along `exp_map` and
//! re-projects onto the manifold after every step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::horizon::{flatten_tangents, ActionHorizon};
use crate::manifold::{self, TangentVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SolverConfig {
    Dopri5 { rtol: f64, atol: f64, max_steps: usize },
    GeodesicEuler { num_steps: usize },
}

impl SolverConfig {
    pub const fn default_dopri5() -> Self {
        SolverConfig::Dopri5 {
            rtol: 1e-5,
            atol: 1e-5,
            max_steps: 10_000,
        }
    }

    pub const fn default_euler() -> Self {
        SolverConfig::GeodesicEuler { num_steps: 10 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SolverConfig::Dopri5 { rtol, atol, max_steps } => {
                if !(rtol > 0.0 && atol > 0.0) {
                    return Err(Error::invalid("solver tolerances must be positive"));
                }
                if max_steps == 0 {
                    return Err(Error::invalid("max_steps must be at least 1"));
                }
            }
            SolverConfig::GeodesicEuler { num_steps } => {
                if num_steps == 0 {
                    return Err(Error::invalid("num_steps must be at least 1"));
                }
            }
        }
        Ok(())
    }
}

/// Step counts from one integration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub accepted: usize,
    pub rejected: usize,
    pub field_evals: usize,
}

/// Integrates `dφ/dt = field(t, φ)` over `[0, 1]` starting at `a_init`.
pub fn integrate_flow<F>(field: F, a_init: &ActionHorizon, cfg: &SolverConfig) -> Result<ActionHorizon>
where
    F: Fn(f64, &ActionHorizon) -> Result<Vec<TangentVector>>,
{
    integrate_interval(&field, a_init, 0.0, 1.0, cfg).map(|(a, _)| a)
}

/// Like [`integrate_flow`], also reporting solver statistics.
pub fn integrate_flow_with_stats<F>(
    field: F,
    a_init: &ActionHorizon,
    cfg: &SolverConfig,
) -> Result<(ActionHorizon, SolveStats)>
where
    F: Fn(f64, &ActionHorizon) -> Result<Vec<TangentVector>>,
{
    integrate_interval(&field, a_init, 0.0, 1.0, cfg)
}

/// Snapshots of the flow at `num_snapshots` evenly spaced times, including 0 and 1.
pub fn trace_flow<F>(
    field: F,
    a_init: &ActionHorizon,
    cfg: &SolverConfig,
    num_snapshots: usize,
) -> Result<Vec<(f64, ActionHorizon)>>
where
    F: Fn(f64, &ActionHorizon) -> Result<Vec<TangentVector>>,
{
    if num_snapshots < 2 {
        return Err(Error::invalid("trace_flow needs at least two snapshots"));
    }
    let segments = num_snapshots - 1;
    let mut out = Vec::with_capacity(num_snapshots);
    out.push((0.0, a_init.clone()));
    let mut state = a_init.clone();
    for k in 0..segments {
        let t0 = k as f64 / segments as f64;
        let t1 = (k + 1) as f64 / segments as f64;
        let seg_cfg = match *cfg {
            // Keep the overall Euler step size when the grid divides evenly.
            SolverConfig::GeodesicEuler { num_steps } => SolverConfig::GeodesicEuler {
                num_steps: ((num_steps as f64 * (t1 - t0)).round() as usize).max(1),
            },
            other => other,
        };
        state = integrate_interval(&field, &state, t0, t1, &seg_cfg)?.0;
        out.push((t1, state.clone()));
    }
    Ok(out)
}

fn check_field(v: &[TangentVector], a: &ActionHorizon, t: f64) -> Result<()> {
    if v.len() != a.len() {
        return Err(Error::invalid(format!(
            "field returned {} vectors for a horizon of {}",
            v.len(),
            a.len()
        )));
    }
    if v.iter().any(|u| u.coords().iter().any(|c| !c.is_finite())) {
        return Err(Error::Numerical(format!("vector field is not finite at t = {t}")));
    }
    Ok(())
}

fn integrate_interval<F>(
    field: &F,
    a_init: &ActionHorizon,
    t0: f64,
    t1: f64,
    cfg: &SolverConfig,
) -> Result<(ActionHorizon, SolveStats)>
where
    F: Fn(f64, &ActionHorizon) -> Result<Vec<TangentVector>>,
{
    cfg.validate()?;
    match *cfg {
        SolverConfig::GeodesicEuler { num_steps } => geodesic_euler(field, a_init, t0, t1, num_steps),
        SolverConfig::Dopri5 { rtol, atol, max_steps } => {
            if !a_init.kind().is_euclidean() {
                return Err(Error::invalid(
                    "Dopri5 integrates in flat coordinates; use geodesic Euler on curved manifolds",
                ));
            }
            dopri5(field, a_init, t0, t1, rtol, atol, max_steps)
        }
    }
}

fn geodesic_euler<F>(
    field: &F,
    a_init: &ActionHorizon,
    t0: f64,
    t1: f64,
    num_steps: usize,
) -> Result<(ActionHorizon, SolveStats)>
where
    F: Fn(f64, &ActionHorizon) -> Result<Vec<TangentVector>>,
{
    let h = (t1 - t0) / num_steps as f64;
    let kind = a_init.kind();
    let mut a = a_init.clone();
    for k in 0..num_steps {
        let t = t0 + k as f64 * h;
        let v = field(t, &a)?;
        check_field(&v, &a, t)?;
        let next = a
            .points()
            .iter()
            .zip(&v)
            .map(|(x, u)| {
                let y = manifold::exp_map(x, &u.scale(h))?;
                manifold::project_to_manifold(y.coords(), kind)
            })
            .collect::<Result<Vec<_>>>()?;
        a = ActionHorizon::new(next)?;
    }
    let stats = SolveStats {
        accepted: num_steps,
        rejected: 0,
        field_evals: num_steps,
    };
    Ok((a, stats))
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;

struct FlatField<'a, F> {
    field: &'a F,
    kind: manifold::ManifoldKind,
    evals: usize,
}

impl<F> FlatField<'_, F>
where
    F: Fn(f64, &ActionHorizon) -> Result<Vec<TangentVector>>,
{
    fn eval(&mut self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let a = ActionHorizon::from_flat(y, self.kind)?;
        let v = (self.field)(t, &a)?;
        check_field(&v, &a, t)?;
        self.evals += 1;
        Ok(flatten_tangents(&v))
    }
}

fn error_norm(err: &[f64], y: &[f64], y_new: &[f64], rtol: f64, atol: f64) -> f64 {
    let n = err.len() as f64;
    let s: f64 = err
        .iter()
        .zip(y.iter().zip(y_new))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

/// Starting step size following Hairer, Nørsett & Wanner's heuristic.
fn initial_step<F>(
    f: &mut FlatField<'_, F>,
    t: f64,
    y: &[f64],
    f0: &[f64],
    span: f64,
    rtol: f64,
    atol: f64,
) -> Result<f64>
where
    F: Fn(f64, &ActionHorizon) -> Result<Vec<TangentVector>>,
{
    let scale: Vec<f64> = y.iter().map(|v| atol + rtol * v.abs()).collect();
    let rms = |v: &[f64]| -> f64 {
        (v.iter().zip(&scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    };
    let (d0, d1) = (rms(y), rms(f0));
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let f1 = f.eval(t + h0, &y1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    Ok((100.0 * h0).min(h1).min(span))
}

fn dopri5<F>(
    field: &F,
    a_init: &ActionHorizon,
    t0: f64,
    t1: f64,
    rtol: f64,
    atol: f64,
    max_steps: usize,
) -> Result<(ActionHorizon, SolveStats)>
where
    F: Fn(f64, &ActionHorizon) -> Result<Vec<TangentVector>>,
{
    let kind = a_init.kind();
    let mut f = FlatField { field, kind, evals: 0 };
    let mut y = a_init.flatten();
    let n = y.len();
    let mut t = t0;
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok((a_init.clone(), SolveStats::default()));
    }
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    k[0] = f.eval(t, &y)?;
    let mut h = initial_step(&mut f, t, &y, &k[0].clone(), span, rtol, atol)?;
    let mut fac_old: f64 = 1e-4;
    let mut stats = SolveStats::default();
    let mut y_stage = vec![0.0; n];
    let mut last = false;

    while !last || t < t1 {
        if stats.accepted + stats.rejected >= max_steps {
            return Err(Error::NonConvergence { max_steps, t });
        }
        if t + 1.01 * h >= t1 {
            h = t1 - t;
            last = true;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                y_stage[i] = acc;
            }
            k[s] = f.eval(t + C[s] * h, &y_stage)?;
        }
        // Stage 7 is evaluated at the 5th-order solution (FSAL).
        let y_new = y_stage.clone();
        let err: Vec<f64> = (0..n)
            .map(|i| h * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>())
            .collect();
        let err_n = error_norm(&err, &y, &y_new, rtol, atol);
        if !err_n.is_finite() {
            return Err(Error::Numerical(format!("error estimate is not finite at t = {t}")));
        }
        let fac11 = err_n.powf(0.2 - PI_BETA * 0.75);
        if err_n <= 1.0 {
            let fac = (fac11 / fac_old.powf(PI_BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            fac_old = err_n.max(1e-4);
            t = if last { t1 } else { t + h };
            y = y_new;
            k[0] = k[6].clone();
            stats.accepted += 1;
            h /= fac;
        } else {
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last = false;
            stats.rejected += 1;
        }
    }
    stats.field_evals = f.evals;
    Ok((ActionHorizon::from_flat(&y, kind)?, stats))
}
