use crate::error::{Error, Result};
use crate::manifold::{ManifoldKind, ManifoldPoint, TangentVector};

/// An ordered block of `T_a` consecutive actions, all on one manifold.
///
/// The horizon is treated as a point on the product manifold `M^{T_a}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionHorizon {
    points: Vec<ManifoldPoint>,
}

impl ActionHorizon {
    pub fn new(points: Vec<ManifoldPoint>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::invalid("action horizon must contain at least one point"))?;
        let kind = first.kind();
        if points.iter().any(|p| p.kind() != kind) {
            return Err(Error::invalid("action horizon mixes manifolds"));
        }
        Ok(ActionHorizon { points })
    }

    /// `T_a` copies of the same point.
    pub fn repeated(point: &ManifoldPoint, len: usize) -> Result<Self> {
        ActionHorizon::new(vec![point.clone(); len])
    }

    /// Rebuilds a horizon from concatenated ambient coordinates.
    pub fn from_flat(flat: &[f64], kind: ManifoldKind) -> Result<Self> {
        let d = kind.ambient_dim();
        if flat.is_empty() || !flat.len().is_multiple_of(d) {
            return Err(Error::invalid(format!(
                "flat horizon of length {} is not a multiple of {d}",
                flat.len()
            )));
        }
        let points = flat
            .chunks(d)
            .map(|c| ManifoldPoint::new(c.to_vec(), kind))
            .collect::<Result<Vec<_>>>()?;
        ActionHorizon::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kind(&self) -> ManifoldKind {
        self.points[0].kind()
    }

    pub fn points(&self) -> &[ManifoldPoint] {
        &self.points
    }

    pub fn into_points(self) -> Vec<ManifoldPoint> {
        self.points
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| p.coords().iter().copied()).collect()
    }
}

impl std::ops::Index<usize> for ActionHorizon {
    type Output = ManifoldPoint;

    fn index(&self, i: usize) -> &ManifoldPoint {
        &self.points[i]
    }
}

pub(crate) fn flatten_tangents(v: &[TangentVector]) -> Vec<f64> {
    v.iter().flat_map(|t| t.coords().iter().copied()).collect()
}
