//! Geometry kernel for the Euclidean space `R^d` and the unit hypersphere `S^d`.
//!
//! Sphere points are stored in ambient coordinates (`d + 1` entries) and tangent
//! vectors are ambient vectors orthogonal to their base point. The Riemannian
//! metric on both manifolds is the ambient inner product, so norms of tangent
//! vectors are plain Euclidean norms.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for the on-manifold and tangency invariants.
pub const MANIFOLD_TOL: f64 = 1e-9;

/// Below this angle the `sin(θ)/θ` factors switch to their Taylor series.
const SMALL_ANGLE: f64 = 1e-6;

/// `⟨x, y⟩` at or below `-1 + ANTIPODAL_EPS` is treated as the cut locus.
const ANTIPODAL_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ManifoldKind {
    Euclidean { dim: usize },
    /// Unit sphere `S^d`, embedded in `R^{d+1}`.
    Sphere { intrinsic_dim: usize },
}

impl ManifoldKind {
    pub fn euclidean(dim: usize) -> Result<Self> {
        let kind = ManifoldKind::Euclidean { dim };
        kind.validate()?;
        Ok(kind)
    }

    pub fn sphere(intrinsic_dim: usize) -> Result<Self> {
        let kind = ManifoldKind::Sphere { intrinsic_dim };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ManifoldKind::Euclidean { dim: 0 } | ManifoldKind::Sphere { intrinsic_dim: 0 } => {
                Err(Error::invalid("manifold dimension must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    /// Number of coordinates used to store a point.
    pub fn ambient_dim(&self) -> usize {
        match *self {
            ManifoldKind::Euclidean { dim } => dim,
            ManifoldKind::Sphere { intrinsic_dim } => intrinsic_dim + 1,
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match *self {
            ManifoldKind::Euclidean { dim } => dim,
            ManifoldKind::Sphere { intrinsic_dim } => intrinsic_dim,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, ManifoldKind::Euclidean { .. })
    }

    /// The zero vector in `R^d`, or the pole `e = (0, …, 0, 1)` on the sphere.
    pub fn origin(&self) -> ManifoldPoint {
        let mut coords = vec![0.0; self.ambient_dim()];
        if let ManifoldKind::Sphere { .. } = self {
            *coords.last_mut().unwrap() = 1.0;
        }
        ManifoldPoint { coords, kind: *self }
    }

    /// Short text tag such as `euclidean:2` or `sphere:2`.
    pub fn tag(&self) -> String {
        match *self {
            ManifoldKind::Euclidean { dim } => format!("euclidean:{dim}"),
            ManifoldKind::Sphere { intrinsic_dim } => format!("sphere:{intrinsic_dim}"),
        }
    }

    pub fn parse_tag(s: &str) -> Result<Self> {
        let (name, dim) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("malformed manifold tag `{s}`")))?;
        let dim: usize = dim
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("malformed manifold dimension in `{s}`")))?;
        match name.trim() {
            "euclidean" => ManifoldKind::euclidean(dim),
            "sphere" => ManifoldKind::sphere(dim),
            other => Err(Error::invalid(format!("unknown manifold `{other}`"))),
        }
    }
}

impl std::fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.tag())
    }
}

/// A point on a manifold, in ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldPoint {
    coords: Vec<f64>,
    kind: ManifoldKind,
}

impl ManifoldPoint {
    /// Builds a point, checking dimension, finiteness, and (on the sphere) unit norm.
    pub fn new(coords: Vec<f64>, kind: ManifoldKind) -> Result<Self> {
        check_dim(coords.len(), kind.ambient_dim())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("point has non-finite coordinates"));
        }
        if let ManifoldKind::Sphere { .. } = kind {
            let n = norm(&coords);
            if (n - 1.0).abs() > MANIFOLD_TOL {
                return Err(Error::invalid(format!(
                    "sphere point has norm {n}, expected 1"
                )));
            }
        }
        Ok(ManifoldPoint { coords, kind })
    }

    pub fn euclidean(coords: Vec<f64>) -> Result<Self> {
        let dim = coords.len();
        ManifoldPoint::new(coords, ManifoldKind::euclidean(dim)?)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }
}

/// A tangent vector at `base`, in ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    coords: Vec<f64>,
    base: ManifoldPoint,
}

impl TangentVector {
    /// Builds a tangent vector, checking dimension and orthogonality to the base on the sphere.
    pub fn new(coords: Vec<f64>, base: ManifoldPoint) -> Result<Self> {
        check_dim(coords.len(), base.kind.ambient_dim())?;
        if let ManifoldKind::Sphere { .. } = base.kind {
            let d = dot(&coords, &base.coords);
            if d.abs() > MANIFOLD_TOL * norm(&coords).max(1.0) {
                return Err(Error::invalid(format!(
                    "vector is not tangent: <u, x> = {d}"
                )));
            }
        }
        Ok(TangentVector { coords, base })
    }

    pub fn zero(base: &ManifoldPoint) -> Self {
        TangentVector {
            coords: vec![0.0; base.coords.len()],
            base: base.clone(),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    /// Multiplies by a scalar; tangency is preserved.
    pub fn scale(&self, s: f64) -> Self {
        TangentVector {
            coords: self.coords.iter().map(|c| c * s).collect(),
            base: self.base.clone(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_dim(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::invalid(format!(
            "dimension mismatch: got {got} coordinates, expected {want}"
        )));
    }
    Ok(())
}

fn check_same(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<()> {
    if x.kind != y.kind {
        return Err(Error::invalid(format!(
            "points live on different manifolds ({} vs {})",
            x.kind, y.kind
        )));
    }
    Ok(())
}

fn check_base(u: &TangentVector, x: &ManifoldPoint) -> Result<()> {
    check_same(&u.base, x)?;
    let off = u
        .base
        .coords
        .iter()
        .zip(&x.coords)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if off > MANIFOLD_TOL {
        return Err(Error::invalid("tangent vector is not based at the given point"));
    }
    Ok(())
}

/// `sin(θ)/θ`, with a series expansion near zero.
fn sinc(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        1.0 - theta * theta / 6.0
    } else {
        theta.sin() / theta
    }
}

/// Component of `y` orthogonal to the unit vector `x`, and `⟨x, y⟩`.
fn orthogonal_part(x: &[f64], y: &[f64]) -> (Vec<f64>, f64) {
    let c = dot(x, y);
    (y.iter().zip(x).map(|(yi, xi)| yi - c * xi).collect(), c)
}

/// Follows the geodesic from `x` with initial velocity `u` for unit time.
pub fn exp_map(x: &ManifoldPoint, u: &TangentVector) -> Result<ManifoldPoint> {
    check_base(u, x)?;
    let coords = match x.kind {
        ManifoldKind::Euclidean { .. } => x.coords.iter().zip(&u.coords).map(|(a, b)| a + b).collect(),
        ManifoldKind::Sphere { .. } => {
            let theta = norm(&u.coords);
            let (c, s) = (theta.cos(), sinc(theta));
            let mut y: Vec<f64> = x
                .coords
                .iter()
                .zip(&u.coords)
                .map(|(xi, ui)| c * xi + s * ui)
                .collect();
            let n = norm(&y);
            y.iter_mut().for_each(|v| *v /= n);
            y
        }
    };
    Ok(ManifoldPoint { coords, kind: x.kind })
}

/// Inverse of [`exp_map`]: the initial velocity of the minimizing geodesic from `x` to `y`.
pub fn log_map(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector> {
    check_same(x, y)?;
    let coords = match x.kind {
        ManifoldKind::Euclidean { .. } => y.coords.iter().zip(&x.coords).map(|(a, b)| a - b).collect(),
        ManifoldKind::Sphere { .. } => {
            let (v, c) = orthogonal_part(&x.coords, &y.coords);
            if c <= -1.0 + ANTIPODAL_EPS {
                return Err(Error::domain("logarithmic map undefined at the antipode"));
            }
            let s = norm(&v);
            let theta = s.atan2(c);
            if s == 0.0 {
                vec![0.0; v.len()]
            } else {
                // θ / sin θ, where s = sin θ is computed from the orthogonal part directly.
                let ratio = if theta < SMALL_ANGLE {
                    1.0 + theta * theta / 6.0
                } else {
                    theta / s
                };
                v.into_iter().map(|vi| vi * ratio).collect()
            }
        }
    };
    Ok(TangentVector { coords, base: x.clone() })
}

/// Transports `u` from `T_x` to `T_y` along the minimizing geodesic.
pub fn parallel_transport(
    u: &TangentVector,
    x: &ManifoldPoint,
    y: &ManifoldPoint,
) -> Result<TangentVector> {
    check_base(u, x)?;
    check_same(x, y)?;
    match x.kind {
        ManifoldKind::Euclidean { .. } => Ok(TangentVector {
            coords: u.coords.clone(),
            base: y.clone(),
        }),
        ManifoldKind::Sphere { .. } => {
            let v = log_map(x, y)?;
            let theta = v.norm();
            if theta == 0.0 {
                return Ok(TangentVector {
                    coords: u.coords.clone(),
                    base: y.clone(),
                });
            }
            // Only the component along the geodesic direction e rotates in span{x, e}.
            let e: Vec<f64> = v.coords.iter().map(|c| c / theta).collect();
            let a = dot(&e, &u.coords);
            let (c, s) = (theta.cos(), theta.sin());
            let w: Vec<f64> = u
                .coords
                .iter()
                .zip(e.iter().zip(&x.coords))
                .map(|(ui, (ei, xi))| ui + a * ((c - 1.0) * ei - s * xi))
                .collect();
            Ok(TangentVector {
                coords: remove_normal(&w, &y.coords),
                base: y.clone(),
            })
        }
    }
}

/// Length of the minimizing geodesic between `x` and `y`.
pub fn geodesic_distance(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
    check_same(x, y)?;
    Ok(distance_unchecked(x, y))
}

pub(crate) fn distance_unchecked(x: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
    match x.kind {
        ManifoldKind::Euclidean { .. } => x
            .coords
            .iter()
            .zip(&y.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
        // atan2(‖y - ⟨x,y⟩x‖, ⟨x,y⟩) equals arccos(clamp(⟨x,y⟩)) but keeps full
        // precision for nearby points.
        ManifoldKind::Sphere { .. } => {
            let (v, c) = orthogonal_part(&x.coords, &y.coords);
            norm(&v).atan2(c.clamp(-1.0, 1.0))
        }
    }
}

fn remove_normal(v: &[f64], x: &[f64]) -> Vec<f64> {
    let d = dot(v, x);
    v.iter().zip(x).map(|(vi, xi)| vi - d * xi).collect()
}

/// Orthogonal projection of a raw ambient vector onto `T_x`.
pub fn project_to_tangent(v: &[f64], x: &ManifoldPoint) -> Result<TangentVector> {
    check_dim(v.len(), x.coords.len())?;
    let coords = match x.kind {
        ManifoldKind::Euclidean { .. } => v.to_vec(),
        ManifoldKind::Sphere { .. } => remove_normal(v, &x.coords),
    };
    Ok(TangentVector { coords, base: x.clone() })
}

/// Maps a raw ambient vector back onto the manifold (renormalization on the sphere).
pub fn project_to_manifold(v: &[f64], kind: ManifoldKind) -> Result<ManifoldPoint> {
    check_dim(v.len(), kind.ambient_dim())?;
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numerical("non-finite coordinates".into()));
    }
    let coords = match kind {
        ManifoldKind::Euclidean { .. } => v.to_vec(),
        ManifoldKind::Sphere { .. } => {
            let n = norm(v);
            if n <= 1e-12 {
                return Err(Error::domain("cannot project a near-zero vector onto the sphere"));
            }
            v.iter().map(|c| c / n).collect()
        }
    };
    Ok(ManifoldPoint { coords, kind })
}

/// Draws from the base distribution: `origin + N(0, σ²I)` in `R^d`, or a wrapped
/// Gaussian on the sphere (tangent Gaussian at `origin` pushed through `exp_map`).
///
/// `sigma` is a per-axis standard deviation.
pub fn sample_base<R: Rng + ?Sized>(
    kind: ManifoldKind,
    sigma: f64,
    origin: &ManifoldPoint,
    rng: &mut R,
) -> Result<ManifoldPoint> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("base sigma must be positive, got {sigma}")));
    }
    if origin.kind != kind {
        return Err(Error::invalid("origin is not on the requested manifold"));
    }
    let noise: Vec<f64> = (0..kind.ambient_dim())
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    match kind {
        ManifoldKind::Euclidean { .. } => Ok(ManifoldPoint {
            coords: origin.coords.iter().zip(&noise).map(|(o, n)| o + n).collect(),
            kind,
        }),
        ManifoldKind::Sphere { .. } => {
            // Projecting an isotropic ambient draw onto T_origin gives an isotropic
            // tangent Gaussian; at e this is exactly the first `intrinsic_dim` axes.
            let t = project_to_tangent(&noise, origin)?;
            exp_map(origin, &t)
        }
    }
}
