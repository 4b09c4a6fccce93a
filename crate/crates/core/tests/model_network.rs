mod common;

use std::collections::HashMap;

use common::*;
use deragg::lin_network::*;
use deragg::lp::{solve_lp, LinearRow, LpProblem, RowKind, Sense};
use deragg::model::*;
use deragg::oracle::vertex_enum::{enumerate_vertices, Halfspace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small LP over the device variables named in `rows`.
struct Local {
    vars: Vec<VariableIndex>,
    lp: LpProblem,
}

fn local(rows: &[Constraint]) -> Local {
    let mut vars: Vec<VariableIndex> = rows.iter().flat_map(|r| r.terms.iter().map(|t| t.0)).collect();
    vars.sort();
    vars.dedup();
    let col: HashMap<VariableIndex, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut lp = LpProblem::new(Sense::Maximize, vars.len());
    for r in rows {
        lp.rows.push(LinearRow {
            coeffs: r.terms.iter().map(|(v, c)| (col[v], *c)).collect(),
            kind: r.kind,
            rhs: r.rhs,
        });
    }
    Local { vars, lp }
}

impl Local {
    fn col(&self, v: VariableIndex) -> usize {
        self.vars.iter().position(|w| *w == v).unwrap()
    }
}

fn v(kind: VarKind, owner: usize, slot: usize) -> VariableIndex {
    VariableIndex::new(kind, owner, slot)
}

#[test]
fn pv_with_zero_output_forces_zero_reactive_power() {
    let time = TimeGrid { slots: 2, dt_hours: 1.0 };
    let mut u = pv(0, 2, 0.0, 1.0);
    u.s_max = vec![1.0; 2];
    let mut l = local(&pv_constraints(&u, 0, &time, 12));
    for sign in [1.0, -1.0] {
        l.lp.objective = vec![0.0; l.vars.len()];
        let c = l.col(v(VarKind::PvQ, 0, 1));
        l.lp.objective[c] = sign;
        let s = solve_lp(&l.lp).unwrap();
        assert!(s.objective_value.abs() < 1e-12);
    }
}

#[test]
fn pv_power_factor_cone_at_45_degrees() {
    let time = TimeGrid { slots: 1, dt_hours: 1.0 };
    let u = PvUnit {
        bus: 0,
        p_min: vec![0.0],
        p_max: vec![1.0],
        s_min: vec![0.0],
        s_max: vec![10.0],
        pf_angle_min: -std::f64::consts::FRAC_PI_4,
        pf_angle_max: std::f64::consts::FRAC_PI_4,
        cost_per_mwh: 0.0,
    };
    let l = local(&pv_constraints(&u, 0, &time, 12));
    let hs: Vec<Halfspace> = deragg::oracle::vertex_enum::halfspaces_of(&l.lp);
    let mut verts = enumerate_vertices(&hs, 2, 1e-9);
    verts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (p, q) = (l.col(v(VarKind::PvP, 0, 0)), l.col(v(VarKind::PvQ, 0, 0)));
    let pts: Vec<(f64, f64)> = verts.iter().map(|x| (x[p], x[q])).collect();
    assert_eq!(pts.len(), 3);
    for want in [(0.0, 0.0), (1.0, 1.0), (1.0, -1.0)] {
        assert!(pts.iter().any(|&(a, b)| (a - want.0).abs() < 1e-9 && (b - want.1).abs() < 1e-9));
    }
}

#[test]
fn pv_region_area_matches_sampling_of_the_exact_model() {
    // polygon area from the linear rows vs. Monte-Carlo area of box, disc and cone
    let time = TimeGrid { slots: 1, dt_hours: 1.0 };
    let u = PvUnit {
        bus: 0,
        p_min: vec![0.0],
        p_max: vec![1.0],
        s_min: vec![0.0],
        s_max: vec![1.0],
        pf_angle_min: -std::f64::consts::FRAC_PI_4,
        pf_angle_max: std::f64::consts::FRAC_PI_4,
        cost_per_mwh: 0.0,
    };
    let rows = pv_constraints(&u, 0, &time, 16);
    let inside_linear = |p: f64, q: f64| {
        rows.iter().all(|r| {
            let a = r.evaluate(|x| if x.kind == VarKind::PvP { p } else { q });
            match r.kind {
                RowKind::Le => a <= r.rhs + 1e-12,
                RowKind::Ge => a >= r.rhs - 1e-12,
                RowKind::Eq => (a - r.rhs).abs() < 1e-12,
            }
        })
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut exact, mut lin, mut lin_outside_exact) = (0u32, 0u32, 0u32);
    let n = 200_000;
    for _ in 0..n {
        let p: f64 = rng.gen_range(0.0..1.0);
        let q: f64 = rng.gen_range(-1.0..1.0);
        let e = p * p + q * q <= 1.0 && q.abs() <= p;
        let l = inside_linear(p, q);
        exact += e as u32;
        lin += l as u32;
        lin_outside_exact += (l && !e) as u32;
    }
    // inscribed polygon: never outside the exact region
    assert_eq!(lin_outside_exact, 0);
    let ratio = lin as f64 / exact as f64;
    // area ratio of the inscribed 16-gon sector, with sampling noise
    assert!(ratio > 0.97 && ratio <= 1.0, "ratio {ratio}");
}

#[test]
fn lossless_storage_bookkeeping() {
    let time = TimeGrid { slots: 1, dt_hours: 1.0 };
    let mut u = storage(0);
    u.eta_c = 1.0;
    u.eta_d = 1.0;
    u.e0 = 0.0;
    u.e_max = 5.0;
    let e = storage_energy_trajectory(&u, &time, &[1.0], &[0.0]);
    assert_eq!(e, vec![1.0]);
    // cyclic T=1: charge equals discharge
    let mut l = local(&storage_constraints(&u, 0, &time));
    l.lp.rows.push(LinearRow::eq(vec![(l.col(v(VarKind::EsCharge, 0, 0)), 1.0)], 0.7));
    l.lp.objective = vec![0.0; l.vars.len()];
    let c = l.col(v(VarKind::EsDischarge, 0, 0));
        l.lp.objective[c] = 1.0;
    let s = solve_lp(&l.lp).unwrap();
    assert!((s.objective_value - 0.7).abs() < 1e-12);
    l.lp.sense = Sense::Minimize;
    assert!((solve_lp(&l.lp).unwrap().objective_value - 0.7).abs() < 1e-12);
}

#[test]
fn lossy_round_trip_discharge() {
    let time = TimeGrid { slots: 2, dt_hours: 1.0 };
    let mut u = storage(0);
    u.eta_c = 0.9;
    u.eta_d = 0.8;
    u.e0 = 1.0;
    let mut l = local(&storage_constraints(&u, 0, &time));
    let fix = |l: &Local, k, t, val| LinearRow::eq(vec![(l.col(v(k, 0, t)), 1.0)], val);
    let rows = [
        fix(&l, VarKind::EsCharge, 0, 1.0),
        fix(&l, VarKind::EsDischarge, 0, 0.0),
        fix(&l, VarKind::EsCharge, 1, 0.0),
    ];
    l.lp.rows.extend(rows);
    l.lp.objective = vec![0.0; l.vars.len()];
    let c = l.col(v(VarKind::EsDischarge, 0, 1));
        l.lp.objective[c] = 1.0;
    let s = solve_lp(&l.lp).unwrap();
    assert!((s.objective_value - 0.72).abs() < 1e-12);
    let e = storage_energy_trajectory(&u, &time, &[1.0, 0.0], &[0.0, 0.72]);
    assert!((e[1] - u.e0).abs() < 1e-12);
}

#[test]
fn flexbuilding_slices() {
    let time = TimeGrid { slots: 3, dt_hours: 1.0 };
    let u = flex(0, 0.0, 1.0, 2.0, 0.0);
    let l = local(&flexbuilding_constraints(&u, 0, &time));
    let hs = deragg::oracle::vertex_enum::halfspaces_of(&l.lp);
    let mut verts = enumerate_vertices(&hs, 3, 1e-9);
    verts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(verts, vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]);

    let point = flex(0, 0.5, 0.5, 1.5, 0.0);
    let l = local(&flexbuilding_constraints(&point, 0, &time));
    let hs = deragg::oracle::vertex_enum::halfspaces_of(&l.lp);
    assert_eq!(enumerate_vertices(&hs, 3, 1e-9), vec![vec![0.5; 3]]);
}

#[test]
fn flexbuilding_total_is_validated() {
    let mut c = single_bus(3);
    c.flexbuildings = vec![flex(0, 0.0, 1.0, 3.5, 0.0)];
    let err = c.validate().unwrap_err();
    assert!(err.to_string().contains("flexbuildings[0].energy_total"), "{err}");
    c.flexbuildings = vec![flex(0, 0.0, 1.0, 3.0, 0.0)];
    assert!(c.validate().is_ok());
}

#[test]
fn cost_expression_is_a_dot_product() {
    let mut c = single_bus(3);
    assert!(dcs_cost_expression(&c).is_empty());
    c.pv = vec![pv(0, 3, 5.0, 10.0)];
    let e = dcs_cost_expression(&c);
    let vals = [1.0, 2.0, 3.0];
    let total: f64 = e.iter().map(|(var, coef)| coef * vals[var.slot]).sum();
    assert!((total - 60.0).abs() < 1e-12);
}

#[test]
fn relaxation_conditions() {
    let mut c = single_bus(1);
    let mut s = storage(0);
    s.cost_dis = 5.0;
    s.cost_chg = 3.0;
    c.storage = vec![s.clone()];
    assert!(validate_relaxation_conditions(&c).passed);
    c.storage[0].cost_dis = 2.0;
    let r = validate_relaxation_conditions(&c);
    assert!(!r.passed && !r.units[0].discharge_ok && r.units[0].price_ok);
    c.storage[0] = s;
    c.storage[0].cost_chg = 60.0;
    c.storage[0].cost_dis = 70.0;
    let r = validate_relaxation_conditions(&c);
    assert!(!r.passed && r.units[0].discharge_ok && !r.units[0].price_ok);
}

#[test]
fn validation_names_the_field() {
    let mut c = four_bus(2);
    c.branches[1].to = 9;
    assert_eq!(c.validate().unwrap_err().to_string(), "branches[1].to: unknown bus 9");
    let mut c = four_bus(2);
    c.storage[0].e0 = 3.0;
    assert!(c.validate().unwrap_err().to_string().starts_with("storage[0].e0"));
    let mut c = four_bus(2);
    c.pv[0].s_min = vec![0.1, 0.0];
    assert!(c.validate().unwrap_err().to_string().starts_with("pv[0].s_min[0]"));
    let mut c = four_bus(2);
    c.branches.pop();
    assert!(c.validate().unwrap_err().to_string().contains("not connected"));
}

#[test]
fn flow_rows_match_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let time = TimeGrid { slots: 1, dt_hours: 1.0 };
    for _ in 0..100 {
        let br = Branch {
            from: 0,
            to: 1,
            g: rng.gen_range(-5.0..5.0),
            b: rng.gen_range(-20.0..5.0),
            s_max: 1.0,
        };
        let (ui, uj, ti, tj): (f64, f64, f64, f64) = (
            rng.gen_range(0.9..1.1),
            rng.gen_range(0.9..1.1),
            rng.gen_range(-0.1..0.1),
            rng.gen_range(-0.1..0.1),
        );
        let pf = 0.5 * br.g * (ui - uj) - br.b * (ti - tj);
        let qf = -0.5 * br.b * (ui - uj) - br.g * (ti - tj);
        let value = |x: &VariableIndex| match (x.kind, x.owner) {
            (VarKind::U, 0) => ui,
            (VarKind::U, _) => uj,
            (VarKind::Theta, 0) => ti,
            (VarKind::Theta, _) => tj,
            (VarKind::FlowP, _) => pf,
            (VarKind::FlowQ, _) => qf,
            _ => unreachable!(),
        };
        for r in linear_flow_rows(&br, 0, &time, 1.0) {
            assert!(r.evaluate(value).abs() < 1e-12);
        }
    }
    // DC-like case
    let br = Branch { from: 0, to: 1, g: 0.0, b: -10.0, s_max: 1.0 };
    let rows = linear_flow_rows(&br, 0, &time, 1.0);
    let value = |x: &VariableIndex| match (x.kind, x.owner) {
        (VarKind::Theta, 0) => 0.01,
        (VarKind::FlowP, _) => 0.1,
        (VarKind::U, _) => 1.0,
        _ => 0.0,
    };
    assert!(rows[0].evaluate(value).abs() < 1e-15);
}

#[test]
fn balance_rows_sum_to_gate_equation() {
    // with zero shunts and zero reactive devices the sum over buses leaves
    // gate + injections = total load
    let c = four_bus(2);
    let rows = bus_balance_rows(&c);
    for t in 0..2 {
        let mut sum: HashMap<VariableIndex, f64> = HashMap::new();
        let mut rhs = 0.0;
        for r in rows.iter().filter(|r| r.terms.iter().any(|(x, _)| x.slot == t && x.kind != VarKind::U)) {
            if r.terms.iter().any(|(x, _)| matches!(x.kind, VarKind::FlowQ | VarKind::PvQ | VarKind::GateQ)) {
                continue;
            }
            if r.terms.iter().all(|(x, _)| x.kind == VarKind::U) {
                continue;
            }
            for (x, a) in &r.terms {
                *sum.entry(*x).or_default() += a;
            }
            rhs += r.rhs;
        }
        sum.retain(|_, a| a.abs() > 1e-15);
        let mut keys: Vec<_> = sum.keys().map(|k| k.kind).collect();
        keys.sort();
        assert_eq!(keys, vec![VarKind::PvP, VarKind::EsNet, VarKind::FbP, VarKind::GateP]);
        assert!((rhs - 1.6).abs() < 1e-12);
    }
}

#[test]
fn constraint_rows_reference_declared_variables_only() {
    let c = four_bus(3);
    let poly = assemble_polyhedron(&c).unwrap();
    assert_eq!(poly.ny(), 4);
    assert!(poly.y_vars.iter().all(|v| v.is_retained()));
    assert!(poly.x_vars.iter().all(|v| !v.is_retained()));
    assert!(poly.a_rows.iter().zip(&poly.b_rows).all(|(a, b)| !a.is_empty() || !b.is_empty()));
    let again = assemble_polyhedron(&c).unwrap();
    assert_eq!(poly, again);
}

fn y_support(poly: &Polyhedron, dir: &[f64]) -> f64 {
    let mut lp = poly.to_lp();
    for (k, d) in dir.iter().enumerate() {
        lp.objective[poly.y_column(k)] = *d;
    }
    solve_lp(&lp).unwrap().objective_value
}

#[test]
fn dead_network_projects_to_origin() {
    let poly = assemble_polyhedron(&single_bus(2)).unwrap();
    for k in 0..3 {
        let mut e = vec![0.0; 3];
        e[k] = 1.0;
        assert!(y_support(&poly, &e).abs() < 1e-12);
        e[k] = -1.0;
        assert!(y_support(&poly, &e).abs() < 1e-12);
    }
}

#[test]
fn flexbuilding_pass_through_segment() {
    let mut c = single_bus(2);
    c.flexbuildings = vec![flex(0, 0.0, 1.0, 1.0, 7.0)];
    let poly = assemble_polyhedron(&c).unwrap();
    // gate_p1 + gate_p2 = -1 in both directions, cost fixed at 7
    assert!((y_support(&poly, &[1.0, 1.0, 0.0]) + 1.0).abs() < 1e-12);
    assert!((y_support(&poly, &[-1.0, -1.0, 0.0]) - 1.0).abs() < 1e-12);
    assert!((y_support(&poly, &[0.0, 0.0, 1.0]) - 7.0).abs() < 1e-12);
    assert!((y_support(&poly, &[0.0, 0.0, -1.0]) + 7.0).abs() < 1e-12);
    assert!((y_support(&poly, &[1.0, 0.0, 0.0]) - 0.0).abs() < 1e-12);
    assert!((y_support(&poly, &[-1.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
}

#[test]
fn infeasible_case_is_reported_empty() {
    let mut c = single_bus(1);
    c.buses[0].load_p = vec![20.0];
    assert!(matches!(assemble_polyhedron(&c), Err(AssemblyError::EmptyRegion(_))));
}

#[test]
fn projection_is_bounded() {
    let poly = assemble_polyhedron(&four_bus(3)).unwrap();
    for k in 0..4 {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; 4];
            e[k] = s;
            let mut lp = poly.to_lp();
            lp.objective[poly.y_column(k)] = s;
            let sol = solve_lp(&lp).unwrap();
            assert!(sol.is_optimal());
        }
    }
}
