//! Independent ground-truth machinery used to check the production paths.

pub mod fme;
pub mod hull;
pub mod monolithic;
pub mod vertex_enum;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lin_network::Polyhedron;
use crate::lp::{solve_lp, LinearRow, LpError, LpProblem, LpStatus, PreparedLp, Sense};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("the polyhedron is empty")]
    Empty,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Support value `max eta . y` over the polyhedron; `None` marks an
/// unbounded direction.
pub fn support_sample(poly: &Polyhedron, directions: &[Vec<f64>]) -> Result<Vec<Option<f64>>, OracleError> {
    let lp = PreparedLp::new(&poly.to_lp())?.ok_or(OracleError::Empty)?;
    let n = poly.nx() + poly.ny();
    directions
        .iter()
        .map(|eta| {
            if eta.len() != poly.ny() {
                return Err(OracleError::Dimension {
                    expected: poly.ny(),
                    found: eta.len(),
                });
            }
            let mut c = vec![0.0; n];
            c[poly.nx()..].copy_from_slice(eta);
            let s = lp.maximize(&c)?;
            Ok(match s.status {
                LpStatus::Optimal => Some(s.objective_value),
                _ => None,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub inside: bool,
    /// Smallest uniform relaxation of the (max-abs normalized) rows under
    /// which some `x` within its bounds exists for the given `y`; bounds on
    /// `y` count with their own violation.
    pub residual: f64,
}

pub const MEMBERSHIP_TOL: f64 = 1e-7;

/// Decides `exists x: (x, y) in poly` by an elastic feasibility LP.
pub fn membership(y: &[f64], poly: &Polyhedron) -> Result<Membership, OracleError> {
    let (nx, ny) = (poly.nx(), poly.ny());
    if y.len() != ny {
        return Err(OracleError::Dimension {
            expected: ny,
            found: y.len(),
        });
    }
    let mut p = LpProblem::new(Sense::Minimize, nx + 1);
    let t = nx;
    p.bounds[t] = (0.0, f64::INFINITY);
    p.objective[t] = 1.0;
    let mut fixed_violation = 0.0f64;
    for (k, &(lo, hi)) in poly.y_bounds.iter().enumerate() {
        fixed_violation = fixed_violation.max(lo - y[k]).max(y[k] - hi);
    }
    for i in 0..poly.num_rows() {
        let s = poly.a_rows[i]
            .iter()
            .chain(&poly.b_rows[i])
            .fold(0.0f64, |m, &(_, a)| m.max(a.abs()));
        let by: f64 = poly.b_rows[i].iter().map(|&(k, a)| a * y[k]).sum();
        let b = (poly.rhs[i] - by) / s;
        let a: Vec<(usize, f64)> = poly.a_rows[i].iter().map(|&(j, v)| (j, v / s)).collect();
        if a.is_empty() {
            let v = match poly.kinds[i] {
                crate::lp::RowKind::Eq => b.abs(),
                _ => (-b).max(0.0),
            };
            fixed_violation = fixed_violation.max(v);
            continue;
        }
        let mut up = a.clone();
        up.push((t, -1.0));
        p.rows.push(LinearRow::le(up, b));
        if poly.kinds[i] == crate::lp::RowKind::Eq {
            let mut down: Vec<(usize, f64)> = a.iter().map(|&(j, v)| (j, -v)).collect();
            down.push((t, -1.0));
            p.rows.push(LinearRow::le(down, -b));
        }
    }
    p.bounds[..nx].copy_from_slice(&poly.x_bounds);
    let sol = solve_lp(&p)?;
    let residual = match sol.status {
        LpStatus::Optimal => sol.objective_value.max(0.0).max(fixed_violation),
        _ => f64::INFINITY,
    };
    Ok(Membership {
        inside: residual <= MEMBERSHIP_TOL,
        residual,
    })
}

/// Vertices of the bounded 2-D polygon `rows . p <= rhs`, sorted
/// lexicographically; non-extreme boundary points are dropped.
pub fn polygon_vertices(rows: &[Vec<f64>], rhs: &[f64]) -> Vec<Vec<f64>> {
    let hs: Vec<vertex_enum::Halfspace> = rows
        .iter()
        .zip(rhs)
        .map(|(a, &b)| vertex_enum::Halfspace { a: a.clone(), b })
        .collect();
    let pts = vertex_enum::enumerate_vertices(&hs, 2, 1e-9);
    match crate::polytope::quickhull(&pts) {
        Ok(h) => h.vertices,
        Err(_) => {
            // point or segment: lexicographic extremes are the endpoints
            let mut p = pts;
            p.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if p.len() > 2 {
                let last = p.pop().unwrap();
                p.truncate(1);
                p.push(last);
            }
            p
        }
    }
}
