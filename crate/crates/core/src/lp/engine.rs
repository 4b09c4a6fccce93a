//! Active-set primal simplex over `g z <= h`, `lo <= z <= hi`.
//!
//! The working set holds active general rows plus variables sitting at a
//! bound. Free variables (`F`) are determined by the active rows through the
//! square matrix `G[R, F]` once the iterate is a vertex; while `|F| > |R|`
//! the engine is in its crash phase and moves along superbasic directions
//! until enough constraints become active.

use std::sync::Arc;

use super::presolve::Reduced;
use super::{LpError, FEAS_TOL};
use crate::linalg::{max_abs, Lu, OrthoBasis};

const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-13;
const BLAND_AFTER: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Free,
    Lower,
    Upper,
    /// Fixed at its current value along a direction of lineality.
    Pinned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Blocking {
    Row(usize),
    Lower(usize),
    Upper(usize),
}

impl Blocking {
    fn id(&self) -> (u8, usize) {
        match *self {
            Blocking::Row(i) => (0, i),
            Blocking::Lower(j) | Blocking::Upper(j) => (1, j),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Unbounded,
}

#[derive(Debug, Clone)]
pub(crate) struct Engine {
    base: Arc<Reduced>,
    extra_g: Vec<f64>,
    extra_h: Vec<f64>,
    z: Vec<f64>,
    state: Vec<VarState>,
    active: Vec<usize>,
    in_w: Vec<bool>,
    locked_rows: Vec<bool>,
    locked_vars: Vec<bool>,
}

struct Basis {
    basic: Vec<usize>,
    superbasic: Vec<usize>,
    lu: Option<Lu>,
}

impl Engine {
    fn new(base: Arc<Reduced>, z: Vec<f64>, state: Vec<VarState>, active: Vec<usize>) -> Self {
        let mut in_w = vec![false; base.m];
        for &r in &active {
            in_w[r] = true;
        }
        let m = base.m;
        let n = base.n;
        Engine {
            locked_rows: vec![false; m],
            locked_vars: vec![false; n],
            base,
            extra_g: Vec::new(),
            extra_h: Vec::new(),
            z,
            state,
            active,
            in_w,
        }
    }

    pub fn point(&self) -> &[f64] {
        &self.z
    }

    fn n(&self) -> usize {
        self.base.n
    }

    fn m_total(&self) -> usize {
        self.base.m + self.extra_h.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        if i < self.base.m {
            self.base.row(i)
        } else {
            let k = i - self.base.m;
            &self.extra_g[k * self.n()..(k + 1) * self.n()]
        }
    }

    fn rhs(&self, i: usize) -> f64 {
        if i < self.base.m {
            self.base.h[i]
        } else {
            self.extra_h[i - self.base.m]
        }
    }

    /// Keep every working constraint with a strictly positive multiplier for
    /// `c` active from now on, restricting later solves to the optimal face.
    pub fn lock_optimal_face(&mut self, c: &[f64]) -> Result<(), LpError> {
        let b = self.basis()?;
        let mut lambda: Vec<f64> = b.basic.iter().map(|&j| c[j]).collect();
        if let Some(lu) = &b.lu {
            lu.solve_transpose(&mut lambda);
        }
        for (pos, &r) in self.active.iter().enumerate() {
            if lambda[pos] > DUAL_TOL {
                self.locked_rows[r] = true;
            }
        }
        for j in 0..self.n() {
            let r = self.reduced_cost(c, &lambda, j);
            match self.state[j] {
                VarState::Lower if r < -DUAL_TOL => self.locked_vars[j] = true,
                VarState::Upper if r > DUAL_TOL => self.locked_vars[j] = true,
                _ => {}
            }
        }
        Ok(())
    }

    /// Find a feasible vertex of the reduced system, or `None` if empty.
    pub fn feasible_start(red: Reduced) -> Result<Option<Engine>, LpError> {
        let n = red.n;
        let mut z0 = vec![0.0; n];
        let mut state = vec![VarState::Free; n];
        for j in 0..n {
            if red.lo[j].is_finite() {
                z0[j] = red.lo[j];
                state[j] = VarState::Lower;
            } else if red.hi[j].is_finite() {
                z0[j] = red.hi[j];
                state[j] = VarState::Upper;
            }
        }
        let mut worst = (0.0f64, usize::MAX);
        for i in 0..red.m {
            let v: f64 = red.row(i).iter().zip(&z0).map(|(a, b)| a * b).sum::<f64>() - red.h[i];
            if v > worst.0 {
                worst = (v, i);
            }
        }
        let base = Arc::new(red);
        if worst.0 <= FEAS_TOL {
            let mut e = Engine::new(base, z0, state, Vec::new());
            e.optimize(&vec![0.0; n])?;
            return Ok(Some(e));
        }

        // Phase one: minimize a uniform violation bound t.
        let m = base.m;
        let mut g1 = Vec::with_capacity(m * (n + 1));
        for i in 0..m {
            g1.extend_from_slice(base.row(i));
            g1.push(-1.0);
        }
        let mut lo1 = base.lo.clone();
        lo1.push(0.0);
        let mut hi1 = base.hi.clone();
        hi1.push(f64::INFINITY);
        let red1 = Reduced {
            n: n + 1,
            m,
            g: g1,
            h: base.h.clone(),
            lo: lo1,
            hi: hi1,
        };
        let mut z1 = z0.clone();
        z1.push(worst.0);
        let mut state1 = state.clone();
        state1.push(VarState::Free);
        let mut e1 = Engine::new(Arc::new(red1), z1, state1, vec![worst.1]);
        let mut c1 = vec![0.0; n + 1];
        c1[n] = -1.0;
        e1.optimize(&c1)?;
        if e1.z[n] > FEAS_TOL {
            return Ok(None);
        }

        let z = e1.z[..n].to_vec();
        let state: Vec<VarState> = e1.state[..n].to_vec();
        let free: Vec<usize> = (0..n).filter(|&j| state[j] == VarState::Free).collect();
        let mut basis = OrthoBasis::new(free.len());
        let mut active = Vec::new();
        for &r in &e1.active {
            let restricted: Vec<f64> = free.iter().map(|&j| base.row(r)[j]).collect();
            if basis.try_add(&restricted, 1e-9) {
                active.push(r);
            }
        }
        let mut e = Engine::new(base, z, state, active);
        e.optimize(&vec![0.0; n])?;
        Ok(Some(e))
    }

    fn basis(&self) -> Result<Basis, LpError> {
        let free: Vec<usize> = (0..self.n()).filter(|&j| self.state[j] == VarState::Free).collect();
        let k = self.active.len();
        if k > free.len() {
            return Err(LpError::Numerical("working set overdetermined".into()));
        }
        let basic: Vec<usize> = if k == free.len() {
            free.clone()
        } else if k == 0 {
            Vec::new()
        } else {
            // row-wise pivoting on G[R, F] to pick k independent columns
            let f = free.len();
            let mut a: Vec<f64> = Vec::with_capacity(k * f);
            for &r in &self.active {
                let row = self.row(r);
                a.extend(free.iter().map(|&j| row[j]));
            }
            let scale = max_abs(&a).max(f64::MIN_POSITIVE);
            let mut col_done = vec![false; f];
            let mut chosen = Vec::with_capacity(k);
            for pr in 0..k {
                let mut best = (0.0f64, 0usize);
                for c in 0..f {
                    let v = a[pr * f + c].abs();
                    if !col_done[c] && v > best.0 {
                        best = (v, c);
                    }
                }
                if best.0 <= SINGULAR_TOL * scale {
                    return Err(LpError::Numerical("active rows are dependent".into()));
                }
                let pc = best.1;
                col_done[pc] = true;
                chosen.push(pc);
                let pv = a[pr * f + pc];
                let (done, rest) = a.split_at_mut((pr + 1) * f);
                let pivot_row = &done[pr * f..];
                for row in rest.chunks_exact_mut(f) {
                    let fct = row[pc] / pv;
                    if fct != 0.0 {
                        for (x, p) in row.iter_mut().zip(pivot_row) {
                            *x -= fct * p;
                        }
                    }
                }
            }
            chosen.sort_unstable();
            chosen.into_iter().map(|c| free[c]).collect()
        };
        let superbasic: Vec<usize> = if basic.len() == free.len() {
            Vec::new()
        } else {
            free.iter().copied().filter(|j| basic.binary_search(j).is_err()).collect()
        };
        let lu = if k == 0 {
            None
        } else {
            let mut mat = Vec::with_capacity(k * k);
            for &r in &self.active {
                let row = self.row(r);
                mat.extend(basic.iter().map(|&j| row[j]));
            }
            match Lu::factor(mat, k, SINGULAR_TOL) {
                Some(lu) => Some(lu),
                None => return Err(LpError::Numerical("singular working matrix".into())),
            }
        };
        Ok(Basis {
            basic,
            superbasic,
            lu,
        })
    }

    fn recompute_point(&mut self, b: &Basis) {
        for j in 0..self.n() {
            match self.state[j] {
                VarState::Lower => self.z[j] = self.base.lo[j],
                VarState::Upper => self.z[j] = self.base.hi[j],
                _ => {}
            }
        }
        if let Some(lu) = &b.lu {
            let mut is_basic = vec![false; self.n()];
            for &j in &b.basic {
                is_basic[j] = true;
            }
            let mut rhs: Vec<f64> = self
                .active
                .iter()
                .map(|&r| {
                    let row = self.row(r);
                    let mut v = self.rhs(r);
                    for j in 0..self.n() {
                        if row[j] != 0.0 && !is_basic[j] {
                            v -= row[j] * self.z[j];
                        }
                    }
                    v
                })
                .collect();
            lu.solve(&mut rhs);
            for (pos, &j) in b.basic.iter().enumerate() {
                self.z[j] = rhs[pos];
            }
        }
    }

    fn reduced_cost(&self, c: &[f64], lambda: &[f64], j: usize) -> f64 {
        let mut r = c[j];
        for (pos, &row) in self.active.iter().enumerate() {
            r -= lambda[pos] * self.row(row)[j];
        }
        r
    }

    /// Basic components of a direction in which the variables listed in
    /// `moving` change and the rows at positions `row_shift` change by the given amounts.
    fn direction(&self, b: &Basis, moving: &[(usize, f64)], row_shift: Option<(usize, f64)>) -> Vec<(usize, f64)> {
        let mut d: Vec<(usize, f64)> = moving.to_vec();
        if let Some(lu) = &b.lu {
            let mut rhs: Vec<f64> = self
                .active
                .iter()
                .map(|&r| {
                    let row = self.row(r);
                    -moving.iter().map(|&(j, v)| row[j] * v).sum::<f64>()
                })
                .collect();
            if let Some((pos, amount)) = row_shift {
                rhs[pos] += amount;
            }
            lu.solve(&mut rhs);
            for (pos, &j) in b.basic.iter().enumerate() {
                d.push((j, rhs[pos]));
            }
        }
        d
    }

    fn ratio_test(&self, d: &[(usize, f64)], bland: bool) -> Option<(Blocking, f64)> {
        let dmax = d.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
        if dmax == 0.0 {
            return None;
        }
        let ptol = PIVOT_TOL * dmax.max(1.0);
        // (blocking, slack, rate)
        let mut cands: Vec<(Blocking, f64, f64)> = Vec::new();
        for i in 0..self.m_total() {
            if self.in_w[i] {
                continue;
            }
            let row = self.row(i);
            let rate: f64 = d.iter().map(|&(j, v)| row[j] * v).sum();
            if rate > ptol {
                let act: f64 = row.iter().zip(&self.z).map(|(a, b)| a * b).sum();
                cands.push((Blocking::Row(i), (self.rhs(i) - act).max(0.0), rate));
            }
        }
        for &(j, v) in d {
            if v > ptol && self.base.hi[j].is_finite() {
                cands.push((Blocking::Upper(j), (self.base.hi[j] - self.z[j]).max(0.0), v));
            } else if v < -ptol && self.base.lo[j].is_finite() {
                cands.push((Blocking::Lower(j), (self.z[j] - self.base.lo[j]).max(0.0), -v));
            }
        }
        if cands.is_empty() {
            return None;
        }
        if bland {
            let theta = cands.iter().map(|c| c.1 / c.2).fold(f64::INFINITY, f64::min);
            let lim = theta + 1e-12 * theta.abs().max(1e-12);
            let best = cands
                .iter()
                .filter(|c| c.1 / c.2 <= lim)
                .min_by_key(|c| c.0.id())
                .unwrap();
            return Some((best.0, best.1 / best.2));
        }
        let theta_max = cands
            .iter()
            .map(|c| (c.1 + FEAS_TOL) / c.2)
            .fold(f64::INFINITY, f64::min);
        let mut best: Option<&(Blocking, f64, f64)> = None;
        for c in &cands {
            if c.1 / c.2 > theta_max {
                continue;
            }
            best = match best {
                None => Some(c),
                Some(b) if c.2 > b.2 || (c.2 == b.2 && c.0.id() < b.0.id()) => Some(c),
                keep => keep,
            };
        }
        let b = best.unwrap();
        Some((b.0, b.1 / b.2))
    }

    fn apply(&mut self, d: &[(usize, f64)], step: f64, blocking: Blocking) {
        for &(j, v) in d {
            self.z[j] += step * v;
        }
        match blocking {
            Blocking::Row(i) => {
                self.active.push(i);
                self.in_w[i] = true;
            }
            Blocking::Lower(j) => {
                self.state[j] = VarState::Lower;
                self.z[j] = self.base.lo[j];
            }
            Blocking::Upper(j) => {
                self.state[j] = VarState::Upper;
                self.z[j] = self.base.hi[j];
            }
        }
    }

    /// Maximize `c . z` starting from the current feasible iterate.
    pub fn optimize(&mut self, c: &[f64]) -> Result<Outcome, LpError> {
        let limit = 200 * (self.n() + self.m_total()) + 1000;
        let mut degenerate = 0usize;
        for _ in 0..limit {
            let b = self.basis()?;
            self.recompute_point(&b);
            let mut lambda: Vec<f64> = b.basic.iter().map(|&j| c[j]).collect();
            if let Some(lu) = &b.lu {
                lu.solve_transpose(&mut lambda);
            }
            let bland = degenerate > BLAND_AFTER;

            if !b.superbasic.is_empty() {
                // crash: move along a superbasic direction
                let mut pick: Option<(usize, f64)> = None;
                for &s in &b.superbasic {
                    let r = self.reduced_cost(c, &lambda, s);
                    match pick {
                        Some((_, pr)) if r.abs() <= pr.abs() + DUAL_TOL => {}
                        _ => pick = Some((s, r)),
                    }
                }
                let pick = pick.unwrap();
                let (s, r) = pick;
                let sign = if r < -DUAL_TOL { -1.0 } else { 1.0 };
                let d = self.direction(&b, &[(s, sign)], None);
                match self.ratio_test(&d, bland) {
                    Some((blk, step)) => {
                        self.apply(&d, step, blk);
                    }
                    None if r.abs() > DUAL_TOL => return Ok(Outcome::Unbounded),
                    None => {
                        let d = self.direction(&b, &[(s, -1.0)], None);
                        match self.ratio_test(&d, bland) {
                            Some((blk, step)) => self.apply(&d, step, blk),
                            None => self.state[s] = VarState::Pinned,
                        }
                    }
                }
                continue;
            }

            // Vertex: look for a constraint with a negative multiplier.
            let mut leave: Option<((u8, usize), f64, Option<usize>, Option<(usize, f64)>)> = None;
            let mut consider = |id: (u8, usize), mult: f64, pos: Option<usize>, var: Option<(usize, f64)>| {
                if mult >= -DUAL_TOL {
                    return;
                }
                let better = match &leave {
                    None => true,
                    Some((bid, bm, _, _)) => {
                        if bland {
                            id < *bid
                        } else {
                            mult < *bm || (mult == *bm && id < *bid)
                        }
                    }
                };
                if better {
                    leave = Some((id, mult, pos, var));
                }
            };
            for (pos, &r) in self.active.iter().enumerate() {
                if !self.locked_rows[r] {
                    consider((0, r), lambda[pos], Some(pos), None);
                }
            }
            for j in 0..self.n() {
                if self.locked_vars[j] {
                    continue;
                }
                match self.state[j] {
                    VarState::Lower => {
                        let r = self.reduced_cost(c, &lambda, j);
                        consider((1, j), -r, None, Some((j, 1.0)));
                    }
                    VarState::Upper => {
                        let r = self.reduced_cost(c, &lambda, j);
                        consider((1, j), r, None, Some((j, -1.0)));
                    }
                    _ => {}
                }
            }
            let Some((_, _, pos, var)) = leave else {
                return Ok(Outcome::Optimal);
            };
            let d = match (pos, var) {
                (Some(p), _) => self.direction(&b, &[], Some((p, -1.0))),
                (None, Some((j, s))) => self.direction(&b, &[(j, s)], None),
                _ => unreachable!(),
            };
            let Some((blk, step)) = self.ratio_test(&d, bland) else {
                return Ok(Outcome::Unbounded);
            };
            let dmax = d.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
            if step * dmax < 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            // release the leaving constraint, then add the blocking one
            match (pos, var) {
                (Some(p), _) => {
                    let r = self.active.remove(p);
                    self.in_w[r] = false;
                }
                (None, Some((j, _))) => self.state[j] = VarState::Free,
                _ => unreachable!(),
            }
            self.apply(&d, step, blk);
        }
        Err(LpError::IterationLimit(limit))
    }
}
