mod common;

use std::f64::consts::PI;

use deragg::lin_network::{assemble_polyhedron, Polyhedron};
use deragg::lp::LinearRow;
use deragg::oracle::fme::{project_polyhedron, DEFAULT_ROW_CAP};
use deragg::oracle::{membership, polygon_vertices, support_sample};
use deragg::polytope::quickhull;
use deragg::pve::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_box(n: usize) -> Polyhedron {
    let mut rows = Vec::new();
    for k in 0..n {
        rows.push(LinearRow::le(vec![(k, 1.0)], 1.0));
        rows.push(LinearRow::ge(vec![(k, 1.0)], 0.0));
    }
    Polyhedron::from_rows(0, n, rows).unwrap()
}

fn cfg(eps: f64) -> PveConfig {
    PveConfig {
        epsilon: eps,
        ..PveConfig::default()
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn box_corner_search() {
    let b = unit_box(2);
    assert_eq!(search_vertex(&b, &[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
    // ties on the face x = 1 are broken by maximizing y
    assert_eq!(search_vertex(&b, &[1.0, 0.0]).unwrap(), vec![1.0, 1.0]);
}

#[test]
fn segment_projection() {
    // y = x, 0 <= x <= 2
    let p = Polyhedron::from_rows(
        1,
        1,
        vec![
            LinearRow::eq(vec![(0, 1.0), (1, -1.0)], 0.0),
            LinearRow::le(vec![(0, 1.0)], 2.0),
            LinearRow::ge(vec![(0, 1.0)], 0.0),
        ],
    )
    .unwrap();
    assert_eq!(search_vertex(&p, &[1.0]).unwrap(), vec![2.0]);
    let r = run_pve(&p, &cfg(1e-9)).unwrap();
    assert!(r.converged);
    assert_eq!(r.hull.vertices, vec![vec![0.0], vec![2.0]]);
}

#[test]
fn expansion_of_inscribed_triangle() {
    let tri = quickhull(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let e = expansion_amount(&tri, &unit_box(2)).unwrap();
    assert!((e - 0.5).abs() < 1e-12, "{e}");
    let sq = quickhull(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
    assert!(expansion_amount(&sq, &unit_box(2)).unwrap().abs() < 1e-12);
}

#[test]
fn box_and_simplex_converge_exactly() {
    let r = run_pve(&unit_box(3), &cfg(1e-9)).unwrap();
    assert!(r.converged);
    assert_eq!(r.hull.vertices.len(), 8);
    assert_eq!(r.hull.facets.len(), 6);

    // simplex {y >= 0, sum y <= 1}: initial vertices already span it
    let mut rows: Vec<LinearRow> = (0..3).map(|k| LinearRow::ge(vec![(k, 1.0)], 0.0)).collect();
    rows.push(LinearRow::le((0..3).map(|k| (k, 1.0)).collect(), 1.0));
    let s = Polyhedron::from_rows(0, 3, rows).unwrap();
    let r = run_pve(&s, &cfg(1e-9)).unwrap();
    assert!(r.converged);
    assert_eq!(r.trace.records.len(), 1);
    assert!(r.trace.records[0].expansion < 1e-12);
    assert_eq!(r.hull.vertices.len(), 4);
}

#[test]
fn octagon_through_eliminated_variables() {
    // x in a regular octagon, y = (x1 + x2, x1 - x2) / 2 + (3, -1)
    let mut rows = Vec::new();
    for k in 0..8 {
        let a = 2.0 * PI * k as f64 / 8.0 + 0.3;
        rows.push(LinearRow::le(vec![(0, a.cos()), (1, a.sin())], 1.0));
    }
    rows.push(LinearRow::eq(vec![(2, 1.0), (0, -0.5), (1, -0.5)], 3.0));
    rows.push(LinearRow::eq(vec![(3, 1.0), (0, -0.5), (1, 0.5)], -1.0));
    let p = Polyhedron::from_rows(2, 2, rows).unwrap();
    let r = run_pve(&p, &cfg(1e-6)).unwrap();
    assert!(r.converged);
    assert_eq!(r.hull.vertices.len(), 8);
    for (v, x) in r.vertices.iter().zip(&r.witnesses) {
        assert!(p.max_violation(x, v) < 1e-9);
    }
}

#[test]
fn degenerate_projections_are_reduced() {
    // a point
    let p = Polyhedron::from_rows(0, 2, vec![LinearRow::eq(vec![(0, 1.0)], 2.0), LinearRow::eq(vec![(1, 1.0)], -1.0)]).unwrap();
    let r = run_pve(&p, &cfg(1e-9)).unwrap();
    assert_eq!(r.affine_dim, 0);
    assert_eq!(r.hull.vertices, vec![vec![2.0, -1.0]]);
    assert!(r.hull.contains(&[2.0, -1.0], 1e-12));
    assert!(!r.hull.contains(&[2.0, -0.9], 1e-9));

    // a tilted square inside a plane of R^3
    let rows = vec![
        LinearRow::eq(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 1.0),
        LinearRow::le(vec![(0, 1.0)], 1.0),
        LinearRow::ge(vec![(0, 1.0)], 0.0),
        LinearRow::le(vec![(1, 1.0)], 1.0),
        LinearRow::ge(vec![(1, 1.0)], 0.0),
    ];
    let p = Polyhedron::from_rows(0, 3, rows).unwrap();
    let r = run_pve(&p, &cfg(1e-9)).unwrap();
    assert!(r.converged);
    assert_eq!(r.affine_dim, 2);
    assert_eq!(r.hull.vertices.len(), 4);
    assert!(r.hull.contains(&[0.5, 0.5, 0.0], 1e-9));
    assert!(!r.hull.contains(&[0.5, 0.5, 0.1], 1e-9));
}

/// Random bounded polyhedron in (x, y) with `nx` eliminated and 2 retained.
fn random_omega(rng: &mut ChaCha8Rng, nx: usize) -> Polyhedron {
    let n = nx + 2;
    loop {
        let mut rows = Vec::new();
        for j in 0..n {
            rows.push(LinearRow::le(vec![(j, 1.0)], rng.gen_range(0.5..2.0)));
            rows.push(LinearRow::ge(vec![(j, 1.0)], -rng.gen_range(0.5..2.0)));
        }
        for _ in 0..rng.gen_range(3..8) {
            let coeffs: Vec<(usize, f64)> = (0..n).map(|j| (j, rng.gen_range(-1.0..1.0))).collect();
            rows.push(LinearRow::le(coeffs, rng.gen_range(0.2..1.0)));
        }
        if let Ok(p) = Polyhedron::from_rows(nx, 2, rows) {
            return p;
        }
    }
}

#[test]
fn pve_matches_fme_on_random_planar_projections() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..15 {
        let p = random_omega(&mut rng, 3);
        let fme = project_polyhedron(&p, DEFAULT_ROW_CAP).unwrap();
        let want = polygon_vertices(&fme.rows, &fme.rhs);
        let r = run_pve(&p, &cfg(1e-9)).unwrap();
        assert!(r.converged, "case {case}");
        assert_eq!(r.hull.vertices.len(), want.len(), "case {case}: {:?} vs {:?}", r.hull.vertices, want);
        for v in &want {
            assert!(r.hull.vertices.iter().any(|w| close(v, w, 1e-6)), "case {case}: missing {v:?}");
        }
        // support values along random directions agree with the LP oracle
        let dirs: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..2.0 * PI);
                vec![a.cos(), a.sin()]
            })
            .collect();
        let sup = support_sample(&p, &dirs).unwrap();
        for (d, s) in dirs.iter().zip(sup) {
            let s = s.unwrap();
            let h = r.hull.support(d);
            assert!(h <= s + 1e-8 && h >= s - 1e-8, "case {case}");
            // the returned search vertex attains the oracle support
            let y = search_vertex(&p, d).unwrap();
            assert!((d[0] * y[0] + d[1] * y[1] - s).abs() < 1e-8);
        }
    }
}

#[test]
fn one_iteration_cap_is_reported_unconverged() {
    let c = common::four_bus(3);
    let p = assemble_polyhedron(&c).unwrap();
    let capped = run_pve(
        &p,
        &PveConfig {
            max_iterations: 1,
            ..cfg(1e-6)
        },
    )
    .unwrap();
    assert!(!capped.converged);
    let full = run_pve(&p, &cfg(1e-6)).unwrap();
    assert!(full.converged, "{:?}", full.trace);
    let counts: Vec<usize> = full.trace.records.iter().map(|r| r.vertex_count).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));
    for (y, x) in full.vertices.iter().zip(&full.witnesses) {
        assert!(p.max_violation(x, y) <= 1e-7);
        assert!(membership(y, &p).unwrap().residual <= 1e-7);
    }
}
