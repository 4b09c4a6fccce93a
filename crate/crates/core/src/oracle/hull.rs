//! LP-based convex-hull oracles over explicit point sets.

use crate::lp::{solve_lp, LinearRow, LpError, LpProblem, Sense};

/// Smallest max-norm distance from `q` to a convex combination of `points`.
pub fn convex_combination_residual(points: &[&[f64]], q: &[f64]) -> Result<f64, LpError> {
    let n = points.len();
    let d = q.len();
    if n == 0 {
        return Ok(f64::INFINITY);
    }
    let mut p = LpProblem::new(Sense::Minimize, n + 1);
    for j in 0..n {
        p.bounds[j] = (0.0, f64::INFINITY);
    }
    p.bounds[n] = (0.0, f64::INFINITY);
    p.objective[n] = 1.0;
    for k in 0..d {
        let mut up: Vec<(usize, f64)> = (0..n).map(|j| (j, points[j][k])).collect();
        let mut down: Vec<(usize, f64)> = up.iter().map(|&(j, v)| (j, -v)).collect();
        up.push((n, -1.0));
        down.push((n, -1.0));
        p.rows.push(LinearRow::le(up, q[k]));
        p.rows.push(LinearRow::le(down, -q[k]));
    }
    p.rows.push(LinearRow::eq((0..n).map(|j| (j, 1.0)).collect(), 1.0));
    let sol = solve_lp(&p)?;
    Ok(sol.objective_value)
}

/// Indices of the points that are not convex combinations of the others
/// (exact duplicates count once: the first occurrence is kept).
pub fn extreme_points(points: &[Vec<f64>], tol: f64) -> Result<Vec<usize>, LpError> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        if points[..i].contains(&points[i]) {
            continue;
        }
        let others: Vec<&[f64]> = points
            .iter()
            .enumerate()
            .filter(|&(j, p)| j != i && p != &points[i])
            .map(|(_, p)| p.as_slice())
            .collect();
        if convex_combination_residual(&others, &points[i])? > tol {
            out.push(i);
        }
    }
    Ok(out)
}
