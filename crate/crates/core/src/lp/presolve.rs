use super::{LpError, LpProblem, RowKind, FEAS_TOL};

/// Inequality-only system over the reduced variables `z`:
/// `g z <= h`, `lo <= z <= hi`. Rows are scaled to unit max-abs coefficient.
#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub n: usize,
    pub m: usize,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Reduced {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.g[i * self.n..(i + 1) * self.n]
    }
}

#[derive(Debug, Clone)]
enum VarMap {
    Z(usize),
    Fixed(f64),
    /// `c0 + sum coeffs * z`
    Expr(f64, Vec<(usize, f64)>),
}

/// Result of eliminating fixed variables and equality rows.
#[derive(Debug, Clone)]
pub(crate) struct Presolved {
    map: Vec<VarMap>,
    pub reduced: Reduced,
}

const PIVOT_THRESHOLD: f64 = 0.1;
const ZERO_ROW: f64 = 1e-11;

impl Presolved {
    /// `Ok(None)` when presolve alone proves infeasibility.
    pub fn new(p: &LpProblem) -> Result<Option<Self>, LpError> {
        let n = p.num_vars();
        let mut fixed: Vec<Option<f64>> = vec![None; n];
        for (j, &(lo, hi)) in p.bounds.iter().enumerate() {
            if lo > hi {
                let gap = lo - hi;
                if gap > FEAS_TOL * lo.abs().max(hi.abs()).max(1.0) {
                    return Ok(None);
                }
                fixed[j] = Some(0.5 * (lo + hi));
            } else if lo == hi {
                fixed[j] = Some(lo);
            }
        }

        // Dense equality block after substituting fixed variables.
        let mut eq: Vec<(Vec<f64>, f64, f64)> = Vec::new();
        for r in p.rows.iter().filter(|r| r.kind == RowKind::Eq) {
            let mut dense = vec![0.0; n];
            let mut rhs = r.rhs;
            for &(j, a) in &r.coeffs {
                match fixed[j] {
                    Some(v) => rhs -= a * v,
                    None => dense[j] += a,
                }
            }
            let scale = r.max_abs_coeff().max(r.rhs.abs()).max(1.0);
            eq.push((dense, rhs, scale));
        }

        // Gauss-Jordan with threshold pivoting that prefers free columns, so
        // bounded variables stay bounds in the reduced problem.
        let is_free = |j: usize| p.bounds[j].0 == f64::NEG_INFINITY && p.bounds[j].1 == f64::INFINITY;
        let mut pivot_of_row: Vec<Option<usize>> = vec![None; eq.len()];
        let mut is_pivot = vec![false; n];
        for i in 0..eq.len() {
            let rowmax = eq[i].0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if rowmax <= ZERO_ROW * eq[i].2 {
                if eq[i].1.abs() > FEAS_TOL * eq[i].2.max(1.0) {
                    return Ok(None);
                }
                continue;
            }
            let mut best: Option<(usize, bool, f64)> = None;
            for j in 0..n {
                let a = eq[i].0[j].abs();
                if is_pivot[j] || a < PIVOT_THRESHOLD * rowmax {
                    continue;
                }
                let free = is_free(j);
                let better = match best {
                    None => true,
                    Some((_, bf, ba)) => (free && !bf) || (free == bf && a > ba),
                };
                if better {
                    best = Some((j, free, a));
                }
            }
            let (pc, _, _) = best.expect("row has a nonzero entry");
            let piv = eq[i].0[pc];
            let (row, rhs, scale) = {
                let (r, b, s) = &mut eq[i];
                for v in r.iter_mut() {
                    *v /= piv;
                }
                *b /= piv;
                (r.clone(), *b, *s)
            };
            for (k, other) in eq.iter_mut().enumerate() {
                if k == i {
                    continue;
                }
                let f = other.0[pc];
                if f != 0.0 {
                    for (o, v) in other.0.iter_mut().zip(&row) {
                        *o -= f * v;
                    }
                    other.0[pc] = 0.0;
                    other.1 -= f * rhs;
                }
            }
            let _ = scale;
            pivot_of_row[i] = Some(pc);
            is_pivot[pc] = true;
        }

        // Reduced variable numbering.
        let mut map: Vec<VarMap> = Vec::with_capacity(n);
        let mut z_index = vec![usize::MAX; n];
        let mut nz = 0;
        for j in 0..n {
            if fixed[j].is_none() && !is_pivot[j] {
                z_index[j] = nz;
                nz += 1;
            }
        }
        for j in 0..n {
            if let Some(v) = fixed[j] {
                map.push(VarMap::Fixed(v));
            } else if !is_pivot[j] {
                map.push(VarMap::Z(z_index[j]));
            } else {
                map.push(VarMap::Fixed(0.0)); // placeholder, filled below
            }
        }
        for (i, pc) in pivot_of_row.iter().enumerate() {
            if let Some(pc) = *pc {
                let coeffs: Vec<(usize, f64)> = (0..n)
                    .filter(|&j| z_index[j] != usize::MAX && eq[i].0[j] != 0.0)
                    .map(|j| (z_index[j], -eq[i].0[j]))
                    .collect();
                map[pc] = VarMap::Expr(eq[i].1, coeffs);
            }
        }

        let mut lo = vec![f64::NEG_INFINITY; nz];
        let mut hi = vec![f64::INFINITY; nz];
        for j in 0..n {
            if let VarMap::Z(k) = map[j] {
                lo[k] = p.bounds[j].0;
                hi[k] = p.bounds[j].1;
            }
        }

        let mut g: Vec<f64> = Vec::new();
        let mut h: Vec<f64> = Vec::new();
        let mut push_row = |mut coef: Vec<f64>, mut rhs: f64, scale_hint: f64| -> bool {
            let s = coef.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if s <= ZERO_ROW * scale_hint.max(1.0) {
                // row reduced to a constant comparison 0 <= rhs
                return rhs >= -FEAS_TOL * scale_hint.max(1.0);
            }
            for v in coef.iter_mut() {
                *v /= s;
            }
            rhs /= s;
            g.extend_from_slice(&coef);
            h.push(rhs);
            true
        };

        let substitute = |coeffs: &[(usize, f64)], rhs: f64| -> (Vec<f64>, f64) {
            let mut dense = vec![0.0; nz];
            let mut b = rhs;
            for &(j, a) in coeffs {
                match &map[j] {
                    VarMap::Z(k) => dense[*k] += a,
                    VarMap::Fixed(v) => b -= a * v,
                    VarMap::Expr(c0, terms) => {
                        b -= a * c0;
                        for &(k, t) in terms {
                            dense[k] += a * t;
                        }
                    }
                }
            }
            (dense, b)
        };

        for r in &p.rows {
            let sign = match r.kind {
                RowKind::Le => 1.0,
                RowKind::Ge => -1.0,
                RowKind::Eq => continue,
            };
            let signed: Vec<(usize, f64)> = r.coeffs.iter().map(|&(j, a)| (j, sign * a)).collect();
            let (dense, b) = substitute(&signed, sign * r.rhs);
            let hint = r.max_abs_coeff().max(r.rhs.abs());
            if !push_row(dense, b, hint) {
                return Ok(None);
            }
        }
        // Bounds of eliminated variables become general rows.
        for j in 0..n {
            if let VarMap::Expr(c0, terms) = &map[j] {
                let (plo, phi) = p.bounds[j];
                let hint = terms.iter().fold(c0.abs(), |m, &(_, t)| m.max(t.abs()));
                if phi.is_finite() {
                    let mut dense = vec![0.0; nz];
                    for &(k, t) in terms {
                        dense[k] += t;
                    }
                    if !push_row(dense, phi - c0, hint.max(phi.abs())) {
                        return Ok(None);
                    }
                }
                if plo.is_finite() {
                    let mut dense = vec![0.0; nz];
                    for &(k, t) in terms {
                        dense[k] -= t;
                    }
                    if !push_row(dense, c0 - plo, hint.max(plo.abs())) {
                        return Ok(None);
                    }
                }
            }
        }
        let m = h.len();
        Ok(Some(Presolved {
            map,
            reduced: Reduced {
                n: nz,
                m,
                g,
                h,
                lo,
                hi,
            },
        }))
    }

    /// Objective over `z` and its constant part.
    pub fn map_objective(&self, c: &[f64]) -> (Vec<f64>, f64) {
        let mut cz = vec![0.0; self.reduced.n];
        let mut c0 = 0.0;
        for (j, &cj) in c.iter().enumerate() {
            if cj == 0.0 {
                continue;
            }
            match &self.map[j] {
                VarMap::Z(k) => cz[*k] += cj,
                VarMap::Fixed(v) => c0 += cj * v,
                VarMap::Expr(e0, terms) => {
                    c0 += cj * e0;
                    for &(k, t) in terms {
                        cz[k] += cj * t;
                    }
                }
            }
        }
        (cz, c0)
    }

    pub fn expand(&self, z: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .map(|m| match m {
                VarMap::Z(k) => z[*k],
                VarMap::Fixed(v) => *v,
                VarMap::Expr(c0, terms) => c0 + terms.iter().map(|&(k, t)| t * z[k]).sum::<f64>(),
            })
            .collect()
    }
}
