//! Fourier-Motzkin elimination with Chernikov's rule and syntactic
//! redundancy removal.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lin_network::Polyhedron;
use crate::lp::RowKind;

pub const DEFAULT_ROW_CAP: usize = 1_000_000;
const DOMINANCE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FmeError {
    #[error("elimination produced {count} rows, above the cap of {cap}")]
    TooManyRows { count: usize, cap: usize },
    #[error("variable {0} is out of range")]
    NoSuchVariable(usize),
}

/// `rows[i] . x <= rhs[i]` over `n` variables. `history[i]` is the set of
/// original rows that row `i` combines, as a bitset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmeSystem {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    history: Vec<Vec<u64>>,
    eliminated: usize,
    /// Set when a constant row `0 <= b` with `b < 0` was derived.
    pub infeasible: bool,
}

fn scale(row: &mut [f64], rhs: &mut f64) -> bool {
    let s = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if s == 0.0 {
        return false;
    }
    row.iter_mut().for_each(|v| *v /= s);
    *rhs /= s;
    true
}

impl FmeSystem {
    pub fn new(n: usize, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Self {
        let m = rows.len();
        let words = m.div_ceil(64).max(1);
        let history: Vec<Vec<u64>> = (0..m)
            .map(|i| {
                let mut h = vec![0u64; words];
                h[i / 64] |= 1 << (i % 64);
                h
            })
            .collect();
        let mut s = FmeSystem {
            n,
            rows: Vec::new(),
            rhs: Vec::new(),
            history: Vec::new(),
            eliminated: 0,
            infeasible: false,
        };
        s.absorb(rows.into_iter().zip(rhs).zip(history).map(|((r, b), h)| (r, b, h)).collect());
        s
    }

    /// Normalizes, drops constant rows (recording infeasibility), removes
    /// duplicates and rows dominated by a parallel row with a smaller rhs.
    fn absorb(&mut self, rows: Vec<(Vec<f64>, f64, Vec<u64>)>) {
        let mut best: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut kept: Vec<(Vec<f64>, f64, Vec<u64>)> = Vec::new();
        for (mut r, mut b, h) in rows {
            if !scale(&mut r, &mut b) {
                if b < -DOMINANCE_TOL {
                    self.infeasible = true;
                }
                continue;
            }
            let key: Vec<i64> = r.iter().map(|v| (v / DOMINANCE_TOL).round() as i64).collect();
            match best.get(&key) {
                Some(&i) => {
                    if b < kept[i].1 {
                        kept[i] = (r, b, h);
                    }
                }
                None => {
                    best.insert(key, kept.len());
                    kept.push((r, b, h));
                }
            }
        }
        self.rows.clear();
        self.rhs.clear();
        self.history.clear();
        for (r, b, h) in kept {
            self.rows.push(r);
            self.rhs.push(b);
            self.history.push(h);
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Whether `x` satisfies every row within `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        !self.infeasible
            && self
                .rows
                .iter()
                .zip(&self.rhs)
                .all(|(r, b)| crate::linalg::dot(r, x) <= b + tol)
    }

    /// Copy restricted to the listed columns (which must carry the only
    /// nonzero coefficients).
    pub fn restrict(&self, keep: &[usize]) -> FmeSystem {
        let rows = self.rows.iter().map(|r| keep.iter().map(|&j| r[j]).collect()).collect();
        FmeSystem {
            n: keep.len(),
            rows,
            rhs: self.rhs.clone(),
            history: self.history.clone(),
            eliminated: self.eliminated,
            infeasible: self.infeasible,
        }
    }
}

/// Eliminates `var`: keeps rows without it and adds every admissible
/// positive/negative combination. Under Chernikov's rule a combination is
/// dropped when it derives from more than `k + 1` original rows after `k`
/// eliminations. The variable's column stays (all zeros).
pub fn fme_eliminate(sys: &FmeSystem, var: usize, cap: usize) -> Result<FmeSystem, FmeError> {
    if var >= sys.n {
        return Err(FmeError::NoSuchVariable(var));
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut out: Vec<(Vec<f64>, f64, Vec<u64>)> = Vec::new();
    for i in 0..sys.num_rows() {
        let a = sys.rows[i][var];
        if a > 0.0 {
            pos.push(i);
        } else if a < 0.0 {
            neg.push(i);
        } else {
            out.push((sys.rows[i].clone(), sys.rhs[i], sys.history[i].clone()));
        }
    }
    if pos.is_empty() && neg.is_empty() {
        return Ok(sys.clone());
    }
    let limit = sys.eliminated + 2;
    for &i in &pos {
        for &j in &neg {
            let h: Vec<u64> = sys.history[i].iter().zip(&sys.history[j]).map(|(a, b)| a | b).collect();
            let count: u32 = h.iter().map(|w| w.count_ones()).sum();
            if count as usize > limit {
                continue;
            }
            let (ai, aj) = (sys.rows[i][var], -sys.rows[j][var]);
            let mut r: Vec<f64> = sys.rows[i]
                .iter()
                .zip(&sys.rows[j])
                .map(|(x, y)| aj * x + ai * y)
                .collect();
            r[var] = 0.0;
            let b = aj * sys.rhs[i] + ai * sys.rhs[j];
            out.push((r, b, h));
            if out.len() > cap {
                return Err(FmeError::TooManyRows { count: out.len(), cap });
            }
        }
    }
    let mut next = FmeSystem {
        n: sys.n,
        rows: Vec::new(),
        rhs: Vec::new(),
        history: Vec::new(),
        eliminated: sys.eliminated + 1,
        infeasible: sys.infeasible,
    };
    next.absorb(out);
    Ok(next)
}

/// Eliminates every variable in `vars`, choosing at each step the one with
/// the fewest positive-negative pairs.
pub fn fme_eliminate_all(sys: &FmeSystem, vars: &[usize], cap: usize) -> Result<FmeSystem, FmeError> {
    let mut cur = sys.clone();
    let mut left: Vec<usize> = vars.to_vec();
    while !left.is_empty() {
        let (pick, _) = left
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let p = cur.rows.iter().filter(|r| r[v] > 0.0).count();
                let n = cur.rows.iter().filter(|r| r[v] < 0.0).count();
                (k, p * n)
            })
            .min_by_key(|&(k, c)| (c, k))
            .unwrap();
        let v = left.remove(pick);
        cur = fme_eliminate(&cur, v, cap)?;
    }
    Ok(cur)
}

/// Projection of `poly` onto its `y` variables. Equality rows are used
/// first to substitute `x` variables; the rest is eliminated by FME.
pub fn project_polyhedron(poly: &Polyhedron, cap: usize) -> Result<FmeSystem, FmeError> {
    let nx = poly.nx();
    let n = nx + poly.ny();
    let dense = |i: usize| {
        let mut r = vec![0.0; n];
        for &(j, a) in &poly.a_rows[i] {
            r[j] += a;
        }
        for &(k, a) in &poly.b_rows[i] {
            r[nx + k] += a;
        }
        r
    };
    let mut eqs: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut ineqs: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..poly.num_rows() {
        match poly.kinds[i] {
            RowKind::Eq => eqs.push((dense(i), poly.rhs[i])),
            _ => ineqs.push((dense(i), poly.rhs[i])),
        }
    }
    for (j, &(lo, hi)) in poly.x_bounds.iter().chain(&poly.y_bounds).enumerate() {
        if lo == hi {
            let mut r = vec![0.0; n];
            r[j] = 1.0;
            eqs.push((r, lo));
            continue;
        }
        if hi.is_finite() {
            let mut r = vec![0.0; n];
            r[j] = 1.0;
            ineqs.push((r, hi));
        }
        if lo.is_finite() {
            let mut r = vec![0.0; n];
            r[j] = -1.0;
            ineqs.push((r, -lo));
        }
    }

    // Gauss-Jordan on x columns of the equality block.
    let mut used = vec![false; eqs.len()];
    for col in 0..nx {
        let Some(p) = (0..eqs.len())
            .filter(|&i| !used[i] && eqs[i].0[col].abs() > 1e-12)
            .max_by(|&a, &b| eqs[a].0[col].abs().total_cmp(&eqs[b].0[col].abs()))
        else {
            continue;
        };
        used[p] = true;
        let piv = eqs[p].0[col];
        let (prow, pb) = (eqs[p].0.iter().map(|v| v / piv).collect::<Vec<f64>>(), eqs[p].1 / piv);
        let sub = |r: &mut Vec<f64>, b: &mut f64| {
            let f = r[col];
            if f != 0.0 {
                for (x, y) in r.iter_mut().zip(&prow) {
                    *x -= f * y;
                }
                r[col] = 0.0;
                *b -= f * pb;
            }
        };
        for (i, e) in eqs.iter_mut().enumerate() {
            if i != p {
                sub(&mut e.0, &mut e.1);
            }
        }
        for e in ineqs.iter_mut() {
            sub(&mut e.0, &mut e.1);
        }
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (r, b) in ineqs {
        rows.push(r);
        rhs.push(b);
    }
    for (i, (r, b)) in eqs.into_iter().enumerate() {
        if used[i] {
            continue;
        }
        rows.push(r.iter().map(|v| -v).collect());
        rhs.push(-b);
        rows.push(r);
        rhs.push(b);
    }
    let sys = FmeSystem::new(n, rows, rhs);
    let remaining: Vec<usize> = (0..nx).filter(|&j| sys.rows.iter().any(|r| r[j] != 0.0)).collect();
    let projected = fme_eliminate_all(&sys, &remaining, cap)?;
    let keep: Vec<usize> = (nx..n).collect();
    Ok(projected.restrict(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_onto_y() {
        let s = FmeSystem::new(
            2,
            vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.0, 0.0, 0.0],
        );
        let p = fme_eliminate(&s, 0, DEFAULT_ROW_CAP).unwrap();
        let mut got: Vec<(Vec<f64>, f64)> = p.rows.iter().cloned().zip(p.rhs.iter().copied()).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, vec![(vec![0.0, -1.0], 0.0), (vec![0.0, 1.0], 1.0)]);
    }

    #[test]
    fn absent_variable_is_a_no_op() {
        let s = FmeSystem::new(3, vec![vec![1.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]], vec![2.0, 0.0]);
        assert_eq!(fme_eliminate(&s, 1, DEFAULT_ROW_CAP).unwrap(), s);
    }

    #[test]
    fn infeasibility_is_detected() {
        let s = FmeSystem::new(1, vec![vec![1.0], vec![-1.0]], vec![1.0, -2.0]);
        assert!(fme_eliminate(&s, 0, DEFAULT_ROW_CAP).unwrap().infeasible);
    }

    #[test]
    fn cap_is_enforced() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }, i as f64]).collect();
        let s = FmeSystem::new(2, rows, vec![1.0; 20]);
        assert!(matches!(fme_eliminate(&s, 0, 10), Err(FmeError::TooManyRows { .. })));
    }
}
