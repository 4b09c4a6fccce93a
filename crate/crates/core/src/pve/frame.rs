use super::{lex_cmp, Found, Projector, PveError};
use crate::linalg::{dot, norm, sub, OrthoBasis};
use crate::polytope::{Facet, VertexHull};

/// Width below which a direction of the normalized frame counts as flat.
const FLAT_TOL: f64 = 1e-9;

/// Normalized, reduced coordinates of a projection.
///
/// `s = (y - lo) / range` maps the bounding box of the projection to the
/// unit cube (fixed coordinates keep `range = 1`); `z = Q^T (s - s0)`
/// expresses `s` in an orthonormal basis `Q` of the affine hull through `s0`.
#[derive(Debug, Clone)]
pub struct AffineFrame {
    lo: Vec<f64>,
    range: Vec<f64>,
    s0: Vec<f64>,
    q: Vec<Vec<f64>>,
    complement: Vec<Vec<f64>>,
    anchors: Vec<(Vec<f64>, Found)>,
}

impl AffineFrame {
    /// Bounding box by `2 n` coordinate searches, then the affine hull by
    /// probing the complement of the span found so far until it is flat.
    pub fn detect(proj: &Projector) -> Result<Self, PveError> {
        let n = proj.ny();
        let mut found: Vec<Found> = Vec::with_capacity(2 * n);
        let mut lo = vec![0.0; n];
        let mut range = vec![1.0; n];
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let hi = proj.search(&e)?;
            e[k] = -1.0;
            let low = proj.search(&e)?;
            let (a, b) = (low.y[k], hi.y[k]);
            lo[k] = a;
            let width = b - a;
            if width > FLAT_TOL * a.abs().max(b.abs()).max(1.0) {
                range[k] = width;
            }
            found.push(hi);
            found.push(low);
        }
        let mut frame = AffineFrame {
            lo,
            range,
            s0: Vec::new(),
            q: Vec::new(),
            complement: Vec::new(),
            anchors: Vec::new(),
        };
        frame.s0 = frame.to_s(&found[0].y);
        let mut basis = OrthoBasis::new(n);
        let mut anchors = vec![found[0].clone()];
        for f in &found[1..] {
            let v = sub(&frame.to_s(&f.y), &frame.s0);
            if norm(&basis.residual(&v)) > FLAT_TOL && basis.try_add(&v, FLAT_TOL) {
                anchors.push(f.clone());
            }
        }
        'probe: loop {
            for c in basis.complement() {
                let c0 = dot(&c, &frame.s0);
                for sign in [1.0, -1.0] {
                    let dir: Vec<f64> = c.iter().map(|v| sign * v).collect();
                    let eta = frame.s_direction_to_y(&dir);
                    let f = proj.search(&eta)?;
                    let s = frame.to_s(&f.y);
                    if sign * (dot(&c, &s) - c0) > FLAT_TOL && basis.try_add(&sub(&s, &frame.s0), FLAT_TOL) {
                        anchors.push(f);
                        continue 'probe;
                    }
                }
            }
            break;
        }
        frame.q = basis.vectors().to_vec();
        frame.complement = basis.complement();
        frame.anchors = anchors
            .into_iter()
            .map(|f| (frame.to_reduced(&f.y), f))
            .collect();
        Ok(frame)
    }

    /// Dimension of the affine hull.
    pub fn rank(&self) -> usize {
        self.q.len()
    }

    /// `rank + 1` affinely independent vertices met during detection.
    pub fn anchor_vertices(&self) -> &[(Vec<f64>, Found)] {
        &self.anchors
    }

    fn to_s(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.lo.iter().zip(&self.range))
            .map(|(v, (l, r))| (v - l) / r)
            .collect()
    }

    pub fn to_reduced(&self, y: &[f64]) -> Vec<f64> {
        let d = sub(&self.to_s(y), &self.s0);
        self.q.iter().map(|q| dot(q, &d)).collect()
    }

    fn s_direction_to_y(&self, w: &[f64]) -> Vec<f64> {
        w.iter().zip(&self.range).map(|(a, r)| a / r).collect()
    }

    fn reduced_direction_to_s(&self, eta: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.lo.len()];
        for (e, q) in eta.iter().zip(&self.q) {
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi += e * qi;
            }
        }
        w
    }

    /// Objective over `y` equivalent (up to a constant) to `eta . z`.
    pub fn direction_to_y(&self, eta: &[f64]) -> Vec<f64> {
        self.s_direction_to_y(&self.reduced_direction_to_s(eta))
    }

    /// Converts `value = direction_to_y(eta) . y` into `eta . z`.
    pub fn y_value_to_reduced(&self, eta: &[f64], value: f64) -> f64 {
        let w = self.reduced_direction_to_s(eta);
        let shift: f64 = w.iter().zip(self.lo.iter().zip(&self.range)).map(|(a, (l, r))| a * l / r).sum();
        value - shift - dot(&w, &self.s0)
    }

    /// Halfspace `w . s <= b` in `y` coordinates, unit normal.
    fn s_halfspace_to_y(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let a = self.s_direction_to_y(w);
        let shift: f64 = a.iter().zip(&self.lo).map(|(x, l)| x * l).sum();
        let n = norm(&a);
        (a.iter().map(|v| v / n).collect(), (b + shift) / n)
    }

    /// Hull in `y` coordinates from a hull in reduced coordinates whose
    /// vertices map to `ys` (same order). The affine hull adds one pair of
    /// opposite facets per flat direction.
    pub fn lift_hull(&self, z_hull: &VertexHull, ys: Vec<Vec<f64>>) -> VertexHull {
        let n = self.lo.len();
        let mut order: Vec<usize> = (0..ys.len()).collect();
        order.sort_by(|&a, &b| lex_cmp(&ys[a], &ys[b]));
        let mut new_index = vec![0; ys.len()];
        for (k, &i) in order.iter().enumerate() {
            new_index[i] = k;
        }
        let vertices: Vec<Vec<f64>> = order.iter().map(|&i| ys[i].clone()).collect();
        let mut facets = Vec::new();
        for f in &z_hull.facets {
            let w = self.reduced_direction_to_s(&f.normal);
            let (normal, offset) = self.s_halfspace_to_y(&w, f.offset + dot(&w, &self.s0));
            let mut vs: Vec<usize> = f.vertices.iter().map(|&i| new_index[i]).collect();
            vs.sort_unstable();
            facets.push(Facet {
                normal,
                offset,
                vertices: vs,
            });
        }
        let all: Vec<usize> = (0..vertices.len()).collect();
        for c in &self.complement {
            let c0 = dot(c, &self.s0);
            for sign in [1.0, -1.0] {
                let w: Vec<f64> = c.iter().map(|v| sign * v).collect();
                let (normal, offset) = self.s_halfspace_to_y(&w, sign * c0);
                facets.push(Facet {
                    normal,
                    offset,
                    vertices: all.clone(),
                });
            }
        }
        facets.sort_by(|a, b| lex_cmp(&a.normal, &b.normal).then(a.offset.total_cmp(&b.offset)));
        let mut interior = vec![0.0; n];
        for v in &vertices {
            for (c, x) in interior.iter_mut().zip(v) {
                *c += x / vertices.len() as f64;
            }
        }
        VertexHull {
            dim: n,
            vertices,
            facets,
            interior_point: interior,
        }
    }

    /// Hull of a single point.
    pub fn lift_point_hull(&self, y: &[f64]) -> VertexHull {
        let n = y.len();
        let mut facets = Vec::with_capacity(2 * n);
        for k in 0..n {
            for sign in [1.0, -1.0] {
                let mut normal = vec![0.0; n];
                normal[k] = sign;
                facets.push(Facet {
                    normal,
                    offset: sign * y[k],
                    vertices: vec![0],
                });
            }
        }
        facets.sort_by(|a, b| lex_cmp(&a.normal, &b.normal));
        VertexHull {
            dim: n,
            vertices: vec![y.to_vec()],
            facets,
            interior_point: y.to_vec(),
        }
    }
}
