use super::{FlexBuilding, NetworkCase, PvUnit, StorageUnit, TimeGrid};
use crate::lin_network::{capacity_polygon_rows, Constraint, VarKind, VariableIndex};
use crate::lp::RowKind;

/// Box on active power, power-factor cone and outer capacity polygon per slot.
pub fn pv_constraints(unit: &PvUnit, owner: usize, time: &TimeGrid, segments: usize) -> Vec<Constraint> {
    let mut rows = Vec::new();
    let (tan_lo, tan_hi) = (unit.pf_angle_min.tan(), unit.pf_angle_max.tan());
    for t in 0..time.slots {
        let p = VariableIndex::new(VarKind::PvP, owner, t);
        let q = VariableIndex::new(VarKind::PvQ, owner, t);
        rows.push(Constraint::new(vec![(p, 1.0)], RowKind::Ge, unit.p_min[t]));
        rows.push(Constraint::new(vec![(p, 1.0)], RowKind::Le, unit.p_max[t]));
        rows.push(Constraint::new(vec![(q, 1.0), (p, -tan_hi)], RowKind::Le, 0.0));
        rows.push(Constraint::new(vec![(q, 1.0), (p, -tan_lo)], RowKind::Ge, 0.0));
        rows.extend(capacity_polygon_rows(unit.s_max[t], segments, p, q));
    }
    rows
}

/// Relaxed storage model: net output, energy bookkeeping with efficiencies,
/// cyclic end condition and power/energy boxes. `EsEnergy` at slot `t` is the
/// energy at the end of slot `t`.
pub fn storage_constraints(unit: &StorageUnit, owner: usize, time: &TimeGrid) -> Vec<Constraint> {
    let mut rows = Vec::new();
    let dt = time.dt_hours;
    let last = time.slots - 1;
    for t in 0..time.slots {
        let dis = VariableIndex::new(VarKind::EsDischarge, owner, t);
        let chg = VariableIndex::new(VarKind::EsCharge, owner, t);
        let net = VariableIndex::new(VarKind::EsNet, owner, t);
        let e = VariableIndex::new(VarKind::EsEnergy, owner, t);
        rows.push(Constraint::new(vec![(net, 1.0), (dis, -1.0), (chg, 1.0)], RowKind::Eq, 0.0));
        let mut bal = vec![(e, 1.0), (chg, -unit.eta_c * dt), (dis, dt / unit.eta_d)];
        let rhs = if t == 0 {
            unit.e0
        } else {
            bal.push((VariableIndex::new(VarKind::EsEnergy, owner, t - 1), -1.0));
            0.0
        };
        rows.push(Constraint::new(bal, RowKind::Eq, rhs));
        rows.push(Constraint::new(vec![(dis, 1.0)], RowKind::Ge, 0.0));
        rows.push(Constraint::new(vec![(dis, 1.0)], RowKind::Le, unit.p_dis_max));
        rows.push(Constraint::new(vec![(chg, 1.0)], RowKind::Ge, 0.0));
        rows.push(Constraint::new(vec![(chg, 1.0)], RowKind::Le, unit.p_chg_max));
        rows.push(Constraint::new(vec![(e, 1.0)], RowKind::Ge, unit.e_min));
        rows.push(Constraint::new(vec![(e, 1.0)], RowKind::Le, unit.e_max));
    }
    rows.push(Constraint::new(
        vec![(VariableIndex::new(VarKind::EsEnergy, owner, last), 1.0)],
        RowKind::Eq,
        unit.e0,
    ));
    rows
}

/// Energy after each slot for given charge/discharge series.
pub fn storage_energy_trajectory(unit: &StorageUnit, time: &TimeGrid, chg: &[f64], dis: &[f64]) -> Vec<f64> {
    let mut e = unit.e0;
    chg.iter()
        .zip(dis)
        .map(|(c, d)| {
            e += (c * unit.eta_c - d / unit.eta_d) * time.dt_hours;
            e
        })
        .collect()
}

/// Per-slot box and the horizon total.
pub fn flexbuilding_constraints(unit: &FlexBuilding, owner: usize, time: &TimeGrid) -> Vec<Constraint> {
    let mut rows = Vec::new();
    let mut total = Vec::with_capacity(time.slots);
    for t in 0..time.slots {
        let p = VariableIndex::new(VarKind::FbP, owner, t);
        rows.push(Constraint::new(vec![(p, 1.0)], RowKind::Ge, unit.p_min));
        rows.push(Constraint::new(vec![(p, 1.0)], RowKind::Le, unit.p_max));
        total.push((p, 1.0));
    }
    rows.push(Constraint::new(total, RowKind::Eq, unit.energy_total));
    rows
}

/// Total cluster cost as a linear expression (USD).
pub fn dcs_cost_expression(case: &NetworkCase) -> Vec<(VariableIndex, f64)> {
    let dt = case.time.dt_hours;
    let mut terms = Vec::new();
    for t in 0..case.time.slots {
        for (k, u) in case.pv.iter().enumerate() {
            terms.push((VariableIndex::new(VarKind::PvP, k, t), u.cost_per_mwh * dt));
        }
        for (k, u) in case.storage.iter().enumerate() {
            terms.push((VariableIndex::new(VarKind::EsDischarge, k, t), u.cost_dis * dt));
            terms.push((VariableIndex::new(VarKind::EsCharge, k, t), u.cost_chg * dt));
        }
        for (k, u) in case.flexbuildings.iter().enumerate() {
            terms.push((VariableIndex::new(VarKind::FbP, k, t), u.cost_per_mwh * dt));
        }
    }
    terms.retain(|&(_, c)| c != 0.0);
    terms
}
