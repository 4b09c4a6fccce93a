//! Brute-force vertex enumeration of small H-polytopes.

use crate::linalg::Lu;
use crate::lp::{LpProblem, RowKind};

/// Halfspace `a . x <= b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub a: Vec<f64>,
    pub b: f64,
}

/// Rows and finite bounds of `p` as halfspaces (equalities split in two).
pub fn halfspaces_of(p: &LpProblem) -> Vec<Halfspace> {
    let n = p.num_vars();
    let mut out = Vec::new();
    for r in &p.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &r.coeffs {
            a[j] += v;
        }
        match r.kind {
            RowKind::Le => out.push(Halfspace { a, b: r.rhs }),
            RowKind::Ge => out.push(Halfspace {
                a: a.iter().map(|v| -v).collect(),
                b: -r.rhs,
            }),
            RowKind::Eq => {
                out.push(Halfspace {
                    a: a.iter().map(|v| -v).collect(),
                    b: -r.rhs,
                });
                out.push(Halfspace { a, b: r.rhs });
            }
        }
    }
    for (j, &(lo, hi)) in p.bounds.iter().enumerate() {
        if hi.is_finite() {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            out.push(Halfspace { a, b: hi });
        }
        if lo.is_finite() {
            let mut a = vec![0.0; n];
            a[j] = -1.0;
            out.push(Halfspace { a, b: -lo });
        }
    }
    out
}

fn combinations(m: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > m {
        return;
    }
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + m - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        if idx[i] == i + m - k {
            return;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All vertices of `{x : a_i . x <= b_i}` in dimension `n`, deduplicated at
/// `tol`. Exponential in `n`; intended for n <= 8 and a few dozen rows.
pub fn enumerate_vertices(hs: &[Halfspace], n: usize, tol: f64) -> Vec<Vec<f64>> {
    let mut verts: Vec<Vec<f64>> = Vec::new();
    if n == 0 {
        return verts;
    }
    combinations(hs.len(), n, &mut |sel| {
        let mut mat = Vec::with_capacity(n * n);
        let mut rhs = Vec::with_capacity(n);
        for &i in sel {
            mat.extend_from_slice(&hs[i].a);
            rhs.push(hs[i].b);
        }
        let Some(lu) = Lu::factor(mat, n, 1e-10) else {
            return;
        };
        lu.solve(&mut rhs);
        let feasible = hs.iter().all(|h| {
            let s = h.a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
            crate::linalg::dot(&h.a, &rhs) <= h.b + tol * s
        });
        if feasible && !verts.iter().any(|v| v.iter().zip(&rhs).all(|(a, b)| (a - b).abs() <= tol * 10.0)) {
            verts.push(rhs);
        }
    });
    verts
}
