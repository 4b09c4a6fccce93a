//! Convex hulls in V- and H-representation.
//!
//! [`quickhull`] builds a simplicial hull internally and reports the merged
//! (geometric) facets, each as a unit outward normal and offset in the
//! original coordinates.

mod quickhull;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, norm, Lu};

pub use quickhull::HullBuilder;

/// Facet incidence tolerance used when reporting and checking hulls.
pub const INCIDENCE_TOL: f64 = 1e-8;
/// Relative threshold for affine rank decisions.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error("point set spans an affine subspace of dimension {rank} only")]
    DegenerateDimension { rank: usize },
    #[error("numerically degenerate facet: {0}")]
    Numerical(String),
    #[error("invalid hull input: {0}")]
    InvalidInput(String),
}

/// A facet `normal . x <= offset` with `|normal| = 1`; `vertices` index into
/// [`VertexHull::vertices`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexHull {
    pub dim: usize,
    /// Extreme points, sorted lexicographically.
    pub vertices: Vec<Vec<f64>>,
    /// Merged facets, sorted lexicographically by normal.
    pub facets: Vec<Facet>,
    /// Vertex centroid.
    pub interior_point: Vec<f64>,
}

impl VertexHull {
    /// Largest facet violation `normal . p - offset` (negative inside).
    pub fn max_violation(&self, p: &[f64]) -> f64 {
        self.facets
            .iter()
            .map(|f| dot(&f.normal, p) - f.offset)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.max_violation(p) <= tol
    }

    /// Support function `max_v dir . v` over the vertices.
    pub fn support(&self, dir: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| dot(dir, v))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Edge lengths of the vertex bounding box, as a diagonal length.
    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&self.vertices)
    }
}

pub(crate) fn bbox_diagonal(points: &[Vec<f64>]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let mut lo = first.clone();
    let mut hi = first.clone();
    for p in points {
        for (k, &v) in p.iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    norm(&crate::linalg::sub(&hi, &lo))
}

/// Plane through the `d` points of `block` (rows, shifted coordinates),
/// oriented away from `interior`.
///
/// Solves `V alpha = 1`, so every block point satisfies `alpha . x = 1`. With
/// `sigma = alpha . interior - 1`, a nonnegative `sigma` means the interior
/// point is not on the origin's side and the plane is flipped to
/// `(-alpha, -1)`. The returned `(alpha, b)` satisfies `alpha . interior < b`
/// whenever the interior point is off the plane.
pub fn facet_normal(block: &[Vec<f64>], interior: &[f64]) -> Result<(Vec<f64>, f64), HullError> {
    let d = interior.len();
    if block.len() != d || block.iter().any(|p| p.len() != d) {
        return Err(HullError::InvalidInput(format!(
            "facet block needs {d} points of dimension {d}"
        )));
    }
    let mut mat = Vec::with_capacity(d * d);
    for p in block {
        mat.extend_from_slice(p);
    }
    let lu = Lu::factor(mat, d, 1e-13)
        .ok_or_else(|| HullError::Numerical("facet vertex block is singular".into()))?;
    let mut alpha = vec![1.0; d];
    lu.solve(&mut alpha);
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(HullError::Numerical("non-finite facet normal".into()));
    }
    let sigma = dot(&alpha, interior) - 1.0;
    if sigma >= 0.0 {
        Ok((alpha.iter().map(|v| -v).collect(), -1.0))
    } else {
        Ok((alpha, 1.0))
    }
}

/// Stacked facet rows `A x <= b` of a hull.
pub fn hull_halfspaces(h: &VertexHull) -> (Vec<Vec<f64>>, Vec<f64>) {
    h.facets
        .iter()
        .map(|f| (f.normal.clone(), f.offset))
        .unzip()
}

/// Convex hull of `points`. Exact duplicates are dropped; interior and
/// non-extreme boundary points never appear in the output.
pub fn quickhull(points: &[Vec<f64>]) -> Result<VertexHull, HullError> {
    HullBuilder::new(points)?.snapshot()
}
