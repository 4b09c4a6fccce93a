//! Assembly of the full cluster polyhedron `A x + B y <= d` from the
//! linearized network model and the device constraints.

mod assemble;

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LinearRow, LpError, LpProblem, RowKind, Sense};
use crate::model::ModelError;

pub use assemble::{assemble_polyhedron, bus_balance_rows, linear_flow_rows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarKind {
    /// Squared voltage magnitude.
    U,
    Theta,
    FlowP,
    FlowQ,
    PvP,
    PvQ,
    EsDischarge,
    EsCharge,
    EsNet,
    EsEnergy,
    FbP,
    GateP,
    GateQ,
    DcsCost,
    /// Anonymous variable of a hand-built polyhedron.
    Aux,
}

/// A model variable: its kind, owner (bus id, branch or unit index) and slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VariableIndex {
    pub kind: VarKind,
    pub owner: usize,
    pub slot: usize,
}

impl VariableIndex {
    pub fn new(kind: VarKind, owner: usize, slot: usize) -> Self {
        VariableIndex { kind, owner, slot }
    }

    /// Gate power and cluster cost survive the projection.
    pub fn is_retained(&self) -> bool {
        matches!(self.kind, VarKind::GateP | VarKind::DcsCost)
    }
}

/// Linear constraint over named variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<(VariableIndex, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(terms: Vec<(VariableIndex, f64)>, kind: RowKind, rhs: f64) -> Self {
        Constraint { terms, kind, rhs }
    }

    pub fn evaluate(&self, value: impl Fn(&VariableIndex) -> f64) -> f64 {
        self.terms.iter().map(|(v, c)| c * value(v)).sum()
    }
}

/// Inscribed regular `n`-gon of the disc of radius `s_max` in the `(p, q)`
/// plane: `p cos(2k pi/n) + q sin(2k pi/n) <= s_max cos(pi/n)`.
pub fn capacity_polygon_rows(s_max: f64, n: usize, p: VariableIndex, q: VariableIndex) -> Vec<Constraint> {
    let rhs = s_max * (PI / n as f64).cos();
    (1..=n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            let mut terms = Vec::with_capacity(2);
            let (s, c) = a.sin_cos();
            // exact zeros keep the rows sparse
            let c = if c.abs() < 1e-15 { 0.0 } else { c };
            let s = if s.abs() < 1e-15 { 0.0 } else { s };
            if c != 0.0 {
                terms.push((p, c));
            }
            if s != 0.0 {
                terms.push((q, s));
            }
            Constraint::new(terms, RowKind::Le, rhs)
        })
        .collect()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("constraint references undeclared variable {0:?}")]
    UndeclaredVariable(VariableIndex),
    #[error("the cluster polyhedron is empty: {0}")]
    EmptyRegion(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// How equality rows are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EqualityEncoding {
    /// Rows carry their own kind (`Le` or `Eq`).
    RowKind,
}

/// `{(x, y) : A x + B y (<= | =) d, bounds}` with an explicit split into
/// eliminated (`x`) and retained (`y`) variables. Single-variable rows are
/// held as bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    pub x_vars: Vec<VariableIndex>,
    pub y_vars: Vec<VariableIndex>,
    pub a_rows: Vec<Vec<(usize, f64)>>,
    pub b_rows: Vec<Vec<(usize, f64)>>,
    pub kinds: Vec<RowKind>,
    pub rhs: Vec<f64>,
    pub x_bounds: Vec<(f64, f64)>,
    pub y_bounds: Vec<(f64, f64)>,
    pub encoding: EqualityEncoding,
}

impl Polyhedron {
    /// Builds the polyhedron from named constraints. `Ge` rows are negated;
    /// duplicate terms are summed; single-variable rows become bounds; rows
    /// whose coefficients all vanish are checked and dropped.
    pub fn from_constraints(
        x_vars: Vec<VariableIndex>,
        y_vars: Vec<VariableIndex>,
        constraints: &[Constraint],
    ) -> Result<Self, AssemblyError> {
        let nx = x_vars.len();
        let mut column: HashMap<VariableIndex, usize> = HashMap::new();
        for (j, v) in x_vars.iter().chain(&y_vars).enumerate() {
            column.insert(*v, j);
        }
        let mut rows = Vec::with_capacity(constraints.len());
        for c in constraints {
            let mut coeffs = Vec::with_capacity(c.terms.len());
            for (v, a) in &c.terms {
                let j = *column.get(v).ok_or(AssemblyError::UndeclaredVariable(*v))?;
                coeffs.push((j, *a));
            }
            rows.push(LinearRow {
                coeffs,
                kind: c.kind,
                rhs: c.rhs,
            });
        }
        let mut poly = Polyhedron {
            x_vars,
            y_vars,
            a_rows: Vec::new(),
            b_rows: Vec::new(),
            kinds: Vec::new(),
            rhs: Vec::new(),
            x_bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); nx],
            y_bounds: Vec::new(),
            encoding: EqualityEncoding::RowKind,
        };
        poly.y_bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); poly.y_vars.len()];
        for r in rows {
            poly.push_row(r)?;
        }
        Ok(poly)
    }

    /// Hand-built polyhedron over anonymous variables: columns `0..nx` are
    /// `x`, `nx..nx+ny` are `y`.
    pub fn from_rows(nx: usize, ny: usize, rows: Vec<LinearRow>) -> Result<Self, AssemblyError> {
        let x_vars = (0..nx).map(|j| VariableIndex::new(VarKind::Aux, j, 0)).collect();
        let y_vars = (0..ny).map(|j| VariableIndex::new(VarKind::Aux, nx + j, 0)).collect();
        let mut poly = Polyhedron::from_constraints(x_vars, y_vars, &[])?;
        for r in rows {
            poly.push_row(r)?;
        }
        Ok(poly)
    }

    fn push_row(&mut self, r: LinearRow) -> Result<(), AssemblyError> {
        let nx = self.nx();
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(r.coeffs.len());
        let mut sorted = r.coeffs.clone();
        sorted.sort_by_key(|&(j, _)| j);
        for (j, a) in sorted {
            if !a.is_finite() {
                return Err(AssemblyError::EmptyRegion(format!("non-finite coefficient on column {j}")));
            }
            match merged.last_mut() {
                Some((k, b)) if *k == j => *b += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        let (kind, sign) = match r.kind {
            RowKind::Ge => (RowKind::Le, -1.0),
            k => (k, 1.0),
        };
        let rhs = sign * r.rhs;
        match merged.len() {
            0 => {
                let ok = match kind {
                    RowKind::Eq => rhs.abs() <= 1e-9 * rhs.abs().max(1.0),
                    _ => rhs >= -1e-9,
                };
                if !ok {
                    return Err(AssemblyError::EmptyRegion("constant row 0 <= rhs violated".into()));
                }
            }
            1 => {
                let (j, a) = merged[0];
                let bound = if j < nx { &mut self.x_bounds[j] } else { &mut self.y_bounds[j - nx] };
                let val = r.rhs / a;
                match (r.kind, a > 0.0) {
                    (RowKind::Eq, _) => {
                        bound.0 = bound.0.max(val);
                        bound.1 = bound.1.min(val);
                    }
                    (RowKind::Le, true) | (RowKind::Ge, false) => bound.1 = bound.1.min(val),
                    (RowKind::Le, false) | (RowKind::Ge, true) => bound.0 = bound.0.max(val),
                }
            }
            _ => {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for (j, c) in merged {
                    if j < nx {
                        a.push((j, sign * c));
                    } else {
                        b.push((j - nx, sign * c));
                    }
                }
                self.a_rows.push(a);
                self.b_rows.push(b);
                self.kinds.push(kind);
                self.rhs.push(rhs);
            }
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.x_vars.len()
    }

    pub fn ny(&self) -> usize {
        self.y_vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    /// Joint column of `y_k` in [`Polyhedron::to_lp`].
    pub fn y_column(&self, k: usize) -> usize {
        self.nx() + k
    }

    pub fn column_of(&self, v: &VariableIndex) -> Option<usize> {
        self.x_vars
            .iter()
            .chain(&self.y_vars)
            .position(|w| w == v)
    }

    /// Feasibility LP over the joint vector `(x, y)` with a zero objective.
    pub fn to_lp(&self) -> LpProblem {
        let nx = self.nx();
        let mut p = LpProblem::new(Sense::Maximize, nx + self.ny());
        p.bounds = self.x_bounds.iter().chain(&self.y_bounds).copied().collect();
        for i in 0..self.num_rows() {
            let coeffs: Vec<(usize, f64)> = self.a_rows[i]
                .iter()
                .copied()
                .chain(self.b_rows[i].iter().map(|&(k, c)| (nx + k, c)))
                .collect();
            p.rows.push(LinearRow {
                coeffs,
                kind: self.kinds[i],
                rhs: self.rhs[i],
            });
        }
        p
    }

    /// Dense inequality system `G [x; y] <= h` with equalities split in two
    /// and finite bounds turned into rows.
    pub fn inequalities(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.nx() + self.ny();
        let lp = self.to_lp();
        let hs = crate::oracle::vertex_enum::halfspaces_of(&lp);
        debug_assert!(hs.iter().all(|h| h.a.len() == n));
        hs.into_iter().map(|h| (h.a, h.b)).unzip()
    }

    /// Largest violation of rows (absolute) and bounds at `(x, y)`.
    pub fn max_violation(&self, x: &[f64], y: &[f64]) -> f64 {
        let joint: Vec<f64> = x.iter().chain(y).copied().collect();
        self.to_lp().max_violation(&joint)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_polygon_half_width() {
        let p = VariableIndex::new(VarKind::Aux, 0, 0);
        let q = VariableIndex::new(VarKind::Aux, 1, 0);
        let rows = capacity_polygon_rows(1.0, 4, p, q);
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert_eq!(r.terms.len(), 1);
            assert!((r.rhs - 0.5f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn single_variable_rows_become_bounds() {
        let poly = Polyhedron::from_rows(
            1,
            1,
            vec![
                LinearRow::le(vec![(0, 2.0)], 4.0),
                LinearRow::ge(vec![(0, -1.0)], -3.0),
                LinearRow::ge(vec![(1, 1.0)], -1.0),
                LinearRow::eq(vec![(0, 1.0), (1, 1.0), (0, 1.0)], 1.0),
            ],
        )
        .unwrap();
        assert_eq!(poly.x_bounds[0], (f64::NEG_INFINITY, 2.0));
        assert_eq!(poly.y_bounds[0], (-1.0, f64::INFINITY));
        assert_eq!(poly.num_rows(), 1);
        assert_eq!(poly.a_rows[0], vec![(0, 2.0)]);
        assert_eq!(poly.b_rows[0], vec![(0, 1.0)]);
    }
}
