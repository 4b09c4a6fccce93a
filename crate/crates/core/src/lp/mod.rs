//! Linear programming substrate.
//!
//! Problems are stated over original variables with sparse rows and variable
//! bounds. Equality rows and fixed variables are eliminated up front; the
//! remaining inequality system is solved by an active-set (vertex-following)
//! primal simplex that refactors its working matrix at every step. Optimal
//! solutions are always vertices of the reduced feasible set whenever that set
//! is pointed, and identical inputs give bit-identical outputs.

mod engine;
mod presolve;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use engine::{Engine, Outcome};
use presolve::Presolved;

/// Primal feasibility tolerance on normalized rows inside the engine.
pub const FEAS_TOL: f64 = 1e-9;
/// Tolerance the returned point is checked against (normalized rows).
pub const CHECK_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

/// A sparse linear row `sum coeffs[i].1 * x[coeffs[i].0]  (kind)  rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

impl LinearRow {
    pub fn le(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        LinearRow {
            coeffs,
            kind: RowKind::Le,
            rhs,
        }
    }

    pub fn ge(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        LinearRow {
            coeffs,
            kind: RowKind::Ge,
            rhs,
        }
    }

    pub fn eq(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        LinearRow {
            coeffs,
            kind: RowKind::Eq,
            rhs,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, &(_, a)| m.max(a.abs()))
    }

    /// Violation of the row at `x`, divided by the largest coefficient.
    pub fn normalized_violation(&self, x: &[f64]) -> f64 {
        let scale = self.max_abs_coeff().max(f64::MIN_POSITIVE);
        let act = self.activity(x);
        let v = match self.kind {
            RowKind::Le => act - self.rhs,
            RowKind::Ge => self.rhs - act,
            RowKind::Eq => (act - self.rhs).abs(),
        };
        v.max(0.0) / scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<LinearRow>,
    /// Per-variable `(lower, upper)`; infinities allowed.
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    /// A problem with `n` free variables, no rows and a zero objective.
    pub fn new(sense: Sense, n: usize) -> Self {
        LpProblem {
            sense,
            objective: vec![0.0; n],
            rows: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    pub fn add_var(&mut self, lo: f64, hi: f64, obj: f64) -> usize {
        self.bounds.push((lo, hi));
        self.objective.push(obj);
        self.bounds.len() - 1
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.bounds.len();
        if self.objective.len() != n {
            return Err(LpError::Malformed(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                n
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite objective coefficient".into()));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!("invalid bounds on variable {j}")));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {i} has non-finite rhs")));
            }
            for &(j, a) in &r.coeffs {
                if j >= n || !a.is_finite() {
                    return Err(LpError::Malformed(format!("row {i} references bad entry ({j}, {a})")));
                }
            }
        }
        Ok(())
    }

    /// Largest normalized violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .rows
            .iter()
            .map(|r| r.normalized_violation(x))
            .fold(0.0f64, f64::max);
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (lo - v).max(v - hi).max(0.0))
            .fold(0.0f64, f64::max);
        rows.max(bounds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point; for `Unbounded` a feasible point, for `Infeasible` empty.
    pub point: Vec<f64>,
    pub objective_value: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn infeasible() -> Self {
        LpSolution {
            status: LpStatus::Infeasible,
            point: Vec::new(),
            objective_value: f64::NAN,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("numerical breakdown: {0}")]
    Numerical(String),
    #[error("iteration limit reached after {0} pivots")]
    IterationLimit(usize),
}

/// Solve a single LP.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    solve_lexicographic(p, &[])
}

/// Solve `p`, then successively maximize each of `secondary` over the optimal
/// face of the previous stage. Secondary objectives are always maximized and
/// are stated over the original variables.
pub fn solve_lexicographic(p: &LpProblem, secondary: &[Vec<f64>]) -> Result<LpSolution, LpError> {
    p.validate()?;
    let prepared = match PreparedLp::new(&LpProblem {
        sense: Sense::Maximize,
        objective: vec![0.0; p.num_vars()],
        rows: p.rows.clone(),
        bounds: p.bounds.clone(),
    })? {
        Some(prep) => prep,
        None => return Ok(LpSolution::infeasible()),
    };
    let primary: Vec<f64> = match p.sense {
        Sense::Maximize => p.objective.clone(),
        Sense::Minimize => p.objective.iter().map(|c| -c).collect(),
    };
    let mut objectives: Vec<&[f64]> = vec![&primary];
    objectives.extend(secondary.iter().map(|v| v.as_slice()));
    let mut sol = prepared.maximize_lex(&objectives)?;
    sol.objective_value = p.objective.iter().zip(&sol.point).map(|(c, x)| c * x).sum();
    if sol.status == LpStatus::Unbounded {
        sol.objective_value = match p.sense {
            Sense::Maximize => f64::INFINITY,
            Sense::Minimize => f64::NEG_INFINITY,
        };
    }
    Ok(sol)
}

/// A feasible region prepared for repeated optimization with different
/// objectives. Every solve warm-starts from the same canonical vertex, so
/// results do not depend on call order.
#[derive(Debug, Clone)]
pub struct PreparedLp {
    pre: Arc<Presolved>,
    start: Engine,
    original: Arc<LpProblem>,
}

impl PreparedLp {
    /// Presolve and locate a starting vertex. `Ok(None)` means infeasible.
    /// The objective of `p` is ignored.
    pub fn new(p: &LpProblem) -> Result<Option<Self>, LpError> {
        p.validate()?;
        let pre = match Presolved::new(p)? {
            Some(pre) => pre,
            None => return Ok(None),
        };
        let pre = Arc::new(pre);
        let start = match Engine::feasible_start(pre.reduced.clone())? {
            Some(e) => e,
            None => return Ok(None),
        };
        Ok(Some(PreparedLp {
            pre,
            start,
            original: Arc::new(p.clone()),
        }))
    }

    pub fn num_vars(&self) -> usize {
        self.original.num_vars()
    }

    pub fn problem(&self) -> &LpProblem {
        &self.original
    }

    /// The canonical feasible vertex.
    pub fn start_point(&self) -> Vec<f64> {
        self.pre.expand(self.start.point())
    }

    pub fn maximize(&self, c: &[f64]) -> Result<LpSolution, LpError> {
        self.maximize_lex(&[c])
    }

    pub fn minimize(&self, c: &[f64]) -> Result<LpSolution, LpError> {
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        let mut s = self.maximize_lex(&[&neg])?;
        s.objective_value = -s.objective_value;
        Ok(s)
    }

    /// Lexicographic maximization: each stage is optimized over the optimal
    /// face of the previous ones.
    pub fn maximize_lex(&self, objectives: &[&[f64]]) -> Result<LpSolution, LpError> {
        let mut eng = self.start.clone();
        let mut first_value = 0.0;
        for (stage, c) in objectives.iter().enumerate() {
            if c.len() != self.num_vars() {
                return Err(LpError::Malformed(format!(
                    "objective has {} entries for {} variables",
                    c.len(),
                    self.num_vars()
                )));
            }
            let (cz, _) = self.pre.map_objective(c);
            let scale = crate::linalg::max_abs(&cz);
            if scale == 0.0 {
                if stage == 0 {
                    first_value = c.iter().zip(&self.pre.expand(eng.point())).map(|(a, b)| a * b).sum();
                }
                continue;
            }
            let cz_n: Vec<f64> = cz.iter().map(|v| v / scale).collect();
            match eng.optimize(&cz_n)? {
                Outcome::Optimal => {}
                Outcome::Unbounded => {
                    let point = self.pre.expand(eng.point());
                    return Ok(LpSolution {
                        status: LpStatus::Unbounded,
                        point,
                        objective_value: f64::INFINITY,
                    });
                }
            }
            if stage == 0 {
                let x = self.pre.expand(eng.point());
                first_value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
            }
            if stage + 1 < objectives.len() {
                eng.lock_optimal_face(&cz_n)?;
            }
        }
        let point = self.pre.expand(eng.point());
        let viol = self.original.max_violation(&point);
        if viol > CHECK_TOL {
            return Err(LpError::Numerical(format!(
                "returned point violates constraints by {viol:.3e}"
            )));
        }
        Ok(LpSolution {
            status: LpStatus::Optimal,
            point,
            objective_value: first_value,
        })
    }
}
