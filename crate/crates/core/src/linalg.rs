//! Small dense linear-algebra kernels shared by the LP engine, the hull code
//! and the oracles. Matrices are row-major `Vec<f64>`.

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Factor the `n x n` matrix `a`. Returns `None` when a pivot falls below
    /// `rel_tol` times the largest entry of `a`.
    pub fn factor(mut a: Vec<f64>, n: usize, rel_tol: f64) -> Option<Lu> {
        debug_assert_eq!(a.len(), n * n);
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if n > 0 && scale == 0.0 {
            return None;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].abs();
            for r in col + 1..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= rel_tol * scale {
                return None;
            }
            if piv != col {
                for c in 0..n {
                    a.swap(col * n + c, piv * n + c);
                }
                perm.swap(col, piv);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f != 0.0 {
                    a[r * n + col] = f;
                    for c in col + 1..n {
                        a[r * n + c] -= f * a[col * n + c];
                    }
                } else {
                    a[r * n + col] = 0.0;
                }
            }
        }
        Some(Lu { n, lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * y[j];
            }
            y[i] = s / self.lu[i * n + i];
        }
        b[..n].copy_from_slice(&y);
    }

    /// Solve `A^T x = b` in place.
    pub fn solve_transpose(&self, b: &mut [f64]) {
        let n = self.n;
        let mut s: Vec<f64> = b[..n].to_vec();
        // U^T s' = b
        for i in 0..n {
            let mut v = s[i];
            for j in 0..i {
                v -= self.lu[j * n + i] * s[j];
            }
            s[i] = v / self.lu[i * n + i];
        }
        // L^T v = s'
        for i in (0..n).rev() {
            let mut v = s[i];
            for j in i + 1..n {
                v -= self.lu[j * n + i] * s[j];
            }
            s[i] = v;
        }
        for (i, &p) in self.perm.iter().enumerate() {
            b[p] = s[i];
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Incremental orthonormal basis built by modified Gram-Schmidt with one
/// re-orthogonalization pass.
#[derive(Debug, Clone, Default)]
pub struct OrthoBasis {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl OrthoBasis {
    pub fn new(dim: usize) -> Self {
        OrthoBasis {
            dim,
            vectors: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Component of `v` orthogonal to the current span.
    pub fn residual(&self, v: &[f64]) -> Vec<f64> {
        let mut r = v.to_vec();
        for _ in 0..2 {
            for q in &self.vectors {
                let c = dot(&r, q);
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
        }
        r
    }

    /// Adds `v` when its orthogonal residual exceeds `rel_tol * |v|`.
    pub fn try_add(&mut self, v: &[f64], rel_tol: f64) -> bool {
        debug_assert_eq!(v.len(), self.dim);
        let vn = norm(v);
        if vn == 0.0 || self.vectors.len() >= self.dim {
            return false;
        }
        let r = self.residual(v);
        let rn = norm(&r);
        if rn <= rel_tol * vn {
            return false;
        }
        self.vectors.push(r.into_iter().map(|x| x / rn).collect());
        true
    }

    /// Orthonormal basis of the orthogonal complement, completed from the
    /// standard basis in index order.
    pub fn complement(&self) -> Vec<Vec<f64>> {
        let mut full = self.clone();
        let mut out = Vec::new();
        for i in 0..self.dim {
            let mut e = vec![0.0; self.dim];
            e[i] = 1.0;
            if full.try_add(&e, 1e-8) {
                out.push(full.vectors.last().unwrap().clone());
            }
            if full.rank() == self.dim {
                break;
            }
        }
        out
    }
}

/// Numerical rank of the row set `rows` using Gram-Schmidt with relative
/// threshold `rel_tol`.
pub fn rank(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut basis = OrthoBasis::new(rows[0].len());
    for r in rows {
        basis.try_add(r, rel_tol);
    }
    basis.rank()
}
