use super::{capacity_polygon_rows, AssemblyError, Constraint, Polyhedron, VarKind, VariableIndex};
use crate::lp::{PreparedLp, RowKind};
use crate::model::{
    dcs_cost_expression, flexbuilding_constraints, pv_constraints, storage_constraints, Branch, NetworkCase,
    TimeGrid,
};

fn var(kind: VarKind, owner: usize, slot: usize) -> VariableIndex {
    VariableIndex::new(kind, owner, slot)
}

/// Linearized branch flows from `from` to `to`, in MW/MVAr:
/// `P = base (g/2 (u_i - u_j) - b (th_i - th_j))`,
/// `Q = base (-b/2 (u_i - u_j) - g (th_i - th_j))`.
pub fn linear_flow_rows(branch: &Branch, owner: usize, time: &TimeGrid, base_mva: f64) -> Vec<Constraint> {
    let (g, b) = (branch.g * base_mva, branch.b * base_mva);
    let mut rows = Vec::with_capacity(2 * time.slots);
    for t in 0..time.slots {
        let (ui, uj) = (var(VarKind::U, branch.from, t), var(VarKind::U, branch.to, t));
        let (ti, tj) = (var(VarKind::Theta, branch.from, t), var(VarKind::Theta, branch.to, t));
        rows.push(Constraint::new(
            vec![
                (var(VarKind::FlowP, owner, t), 1.0),
                (ui, -0.5 * g),
                (uj, 0.5 * g),
                (ti, b),
                (tj, -b),
            ],
            RowKind::Eq,
            0.0,
        ));
        rows.push(Constraint::new(
            vec![
                (var(VarKind::FlowQ, owner, t), 1.0),
                (ui, 0.5 * b),
                (uj, -0.5 * b),
                (ti, g),
                (tj, -g),
            ],
            RowKind::Eq,
            0.0,
        ));
    }
    rows
}

/// Active and reactive balance per bus and slot:
/// `injections + gate - load = shunt * u + outgoing flows`.
pub fn bus_balance_rows(case: &NetworkCase) -> Vec<Constraint> {
    let base = case.base_mva;
    let mut rows = Vec::new();
    for t in 0..case.time.slots {
        for bus in &case.buses {
            let mut p = vec![(var(VarKind::U, bus.id, t), -bus.shunt_g * base)];
            let mut q = vec![(var(VarKind::U, bus.id, t), bus.shunt_b * base)];
            for (l, br) in case.branches.iter().enumerate() {
                if br.from == bus.id {
                    p.push((var(VarKind::FlowP, l, t), -1.0));
                    q.push((var(VarKind::FlowQ, l, t), -1.0));
                } else if br.to == bus.id {
                    p.push((var(VarKind::FlowP, l, t), 1.0));
                    q.push((var(VarKind::FlowQ, l, t), 1.0));
                }
            }
            for (k, u) in case.pv.iter().enumerate() {
                if u.bus == bus.id {
                    p.push((var(VarKind::PvP, k, t), 1.0));
                    q.push((var(VarKind::PvQ, k, t), 1.0));
                }
            }
            for (k, u) in case.storage.iter().enumerate() {
                if u.bus == bus.id {
                    p.push((var(VarKind::EsNet, k, t), 1.0));
                }
            }
            for (k, u) in case.flexbuildings.iter().enumerate() {
                if u.bus == bus.id {
                    p.push((var(VarKind::FbP, k, t), 1.0));
                }
            }
            if bus.id == case.feeder.bus {
                p.push((var(VarKind::GateP, 0, t), 1.0));
                q.push((var(VarKind::GateQ, 0, t), 1.0));
            }
            rows.push(Constraint::new(p, RowKind::Eq, bus.load_p[t]));
            rows.push(Constraint::new(q, RowKind::Eq, bus.load_q[t]));
        }
    }
    rows
}

/// Declared variables: eliminated ones slot by slot, then the retained
/// `(gate_p_1..T, dcs_cost)`.
fn declare(case: &NetworkCase) -> (Vec<VariableIndex>, Vec<VariableIndex>) {
    let mut x = Vec::new();
    for t in 0..case.time.slots {
        for bus in &case.buses {
            x.push(var(VarKind::U, bus.id, t));
            x.push(var(VarKind::Theta, bus.id, t));
        }
        for l in 0..case.branches.len() {
            x.push(var(VarKind::FlowP, l, t));
            x.push(var(VarKind::FlowQ, l, t));
        }
        for k in 0..case.pv.len() {
            x.push(var(VarKind::PvP, k, t));
            x.push(var(VarKind::PvQ, k, t));
        }
        for k in 0..case.storage.len() {
            x.push(var(VarKind::EsDischarge, k, t));
            x.push(var(VarKind::EsCharge, k, t));
            x.push(var(VarKind::EsNet, k, t));
            x.push(var(VarKind::EsEnergy, k, t));
        }
        for k in 0..case.flexbuildings.len() {
            x.push(var(VarKind::FbP, k, t));
        }
        x.push(var(VarKind::GateQ, 0, t));
    }
    let mut y: Vec<VariableIndex> = (0..case.time.slots).map(|t| var(VarKind::GateP, 0, t)).collect();
    y.push(var(VarKind::DcsCost, 0, 0));
    (x, y)
}

/// Every constraint of the cluster in declaration order.
pub(crate) fn all_constraints(case: &NetworkCase) -> Vec<Constraint> {
    let n = case.lin_segments;
    let time = &case.time;
    let mut rows = Vec::new();
    for t in 0..time.slots {
        for bus in &case.buses {
            let u = var(VarKind::U, bus.id, t);
            if bus.id == case.feeder.bus {
                rows.push(Constraint::new(vec![(u, 1.0)], RowKind::Eq, 1.0));
                rows.push(Constraint::new(vec![(var(VarKind::Theta, bus.id, t), 1.0)], RowKind::Eq, 0.0));
            }
            rows.push(Constraint::new(vec![(u, 1.0)], RowKind::Ge, bus.v_min * bus.v_min));
            rows.push(Constraint::new(vec![(u, 1.0)], RowKind::Le, bus.v_max * bus.v_max));
        }
    }
    for (l, br) in case.branches.iter().enumerate() {
        rows.extend(linear_flow_rows(br, l, time, case.base_mva));
        for t in 0..time.slots {
            rows.extend(capacity_polygon_rows(
                br.s_max,
                n,
                var(VarKind::FlowP, l, t),
                var(VarKind::FlowQ, l, t),
            ));
        }
    }
    for t in 0..time.slots {
        rows.extend(capacity_polygon_rows(
            case.feeder.s_max,
            n,
            var(VarKind::GateP, 0, t),
            var(VarKind::GateQ, 0, t),
        ));
    }
    rows.extend(bus_balance_rows(case));
    for (k, u) in case.pv.iter().enumerate() {
        rows.extend(pv_constraints(u, k, time, n));
    }
    for (k, u) in case.storage.iter().enumerate() {
        rows.extend(storage_constraints(u, k, time));
    }
    for (k, u) in case.flexbuildings.iter().enumerate() {
        rows.extend(flexbuilding_constraints(u, k, time));
    }
    let mut cost = vec![(var(VarKind::DcsCost, 0, 0), 1.0)];
    cost.extend(dcs_cost_expression(case).into_iter().map(|(v, c)| (v, -c)));
    rows.push(Constraint::new(cost, RowKind::Eq, 0.0));
    rows
}

/// Validates `case`, builds its polyhedron and proves it nonempty.
pub fn assemble_polyhedron(case: &NetworkCase) -> Result<Polyhedron, AssemblyError> {
    case.validate()?;
    let (x, y) = declare(case);
    let poly = Polyhedron::from_constraints(x, y, &all_constraints(case))?;
    if PreparedLp::new(&poly.to_lp())?.is_none() {
        return Err(AssemblyError::EmptyRegion(
            "no operating point satisfies the network and device constraints".into(),
        ));
    }
    Ok(poly)
}
