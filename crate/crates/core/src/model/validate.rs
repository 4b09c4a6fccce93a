use std::collections::{HashMap, VecDeque};
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{invalid, ModelError, NetworkCase};

fn finite(path: &str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, "must be finite"))
    }
}

fn series(path: &str, s: &[f64], t: usize) -> Result<(), ModelError> {
    if s.len() != t {
        return Err(invalid(path, format!("expected {t} values, found {}", s.len())));
    }
    for (k, &v) in s.iter().enumerate() {
        finite(&format!("{path}[{k}]"), v)?;
    }
    Ok(())
}

pub(super) fn validate_case(c: &NetworkCase) -> Result<(), ModelError> {
    let t = c.time.slots;
    if t == 0 {
        return Err(invalid("time.slots", "must be at least 1"));
    }
    if !(c.time.dt_hours > 0.0 && c.time.dt_hours.is_finite()) {
        return Err(invalid("time.dt_hours", "must be positive"));
    }
    if c.lin_segments < 4 {
        return Err(invalid("options.lin_segments", "must be at least 4"));
    }
    if !(c.base_mva > 0.0 && c.base_mva.is_finite()) {
        return Err(invalid("options.base_mva", "must be positive"));
    }
    if c.buses.is_empty() {
        return Err(invalid("buses", "at least one bus is required"));
    }

    let mut index: HashMap<usize, usize> = HashMap::new();
    for (i, b) in c.buses.iter().enumerate() {
        let p = format!("buses[{i}]");
        if index.insert(b.id, i).is_some() {
            return Err(invalid(format!("{p}.id"), format!("duplicate bus id {}", b.id)));
        }
        finite(&format!("{p}.v_min"), b.v_min)?;
        finite(&format!("{p}.v_max"), b.v_max)?;
        if b.v_min <= 0.0 {
            return Err(invalid(format!("{p}.v_min"), "must be positive"));
        }
        if b.v_min > b.v_max {
            return Err(invalid(format!("{p}.v_max"), "must not be below v_min"));
        }
        series(&format!("{p}.load_p"), &b.load_p, t)?;
        series(&format!("{p}.load_q"), &b.load_q, t)?;
        finite(&format!("{p}.shunt_g"), b.shunt_g)?;
        finite(&format!("{p}.shunt_b"), b.shunt_b)?;
    }
    let bus_ref = |path: String, id: usize| -> Result<usize, ModelError> {
        index
            .get(&id)
            .copied()
            .ok_or_else(|| invalid(path, format!("unknown bus {id}")))
    };

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); c.buses.len()];
    for (l, br) in c.branches.iter().enumerate() {
        let p = format!("branches[{l}]");
        let f = bus_ref(format!("{p}.from"), br.from)?;
        let to = bus_ref(format!("{p}.to"), br.to)?;
        if f == to {
            return Err(invalid(format!("{p}.to"), "branch connects a bus to itself"));
        }
        finite(&format!("{p}.g"), br.g)?;
        finite(&format!("{p}.b"), br.b)?;
        if !(br.s_max > 0.0 && br.s_max.is_finite()) {
            return Err(invalid(format!("{p}.s_max"), "must be positive"));
        }
        adj[f].push(to);
        adj[to].push(f);
    }

    let feeder = bus_ref("feeder.bus".into(), c.feeder.bus)?;
    if !(c.feeder.s_max > 0.0 && c.feeder.s_max.is_finite()) {
        return Err(invalid("feeder.s_max", "must be positive"));
    }
    let fb = &c.buses[feeder];
    if fb.v_min > 1.0 || fb.v_max < 1.0 {
        return Err(invalid(
            format!("buses[{feeder}].v_min"),
            "feeder bus voltage bounds must contain 1 p.u.",
        ));
    }
    let mut seen = vec![false; c.buses.len()];
    seen[feeder] = true;
    let mut queue = VecDeque::from([feeder]);
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(invalid(
            format!("buses[{i}]"),
            format!("bus {} is not connected to the feeder", c.buses[i].id),
        ));
    }

    for (k, u) in c.pv.iter().enumerate() {
        let p = format!("pv[{k}]");
        bus_ref(format!("{p}.bus"), u.bus)?;
        series(&format!("{p}.p_min"), &u.p_min, t)?;
        series(&format!("{p}.p_max"), &u.p_max, t)?;
        series(&format!("{p}.s_max"), &u.s_max, t)?;
        if !u.s_min.is_empty() {
            series(&format!("{p}.s_min"), &u.s_min, t)?;
        }
        for s in 0..t {
            if u.p_min[s] < 0.0 {
                return Err(invalid(format!("{p}.p_min[{s}]"), "must be nonnegative"));
            }
            if u.p_min[s] > u.p_max[s] {
                return Err(invalid(format!("{p}.p_max[{s}]"), "must not be below p_min"));
            }
            if u.s_max[s] < 0.0 {
                return Err(invalid(format!("{p}.s_max[{s}]"), "must be nonnegative"));
            }
            if u.s_min.get(s).copied().unwrap_or(0.0) > 0.0 {
                return Err(invalid(
                    format!("{p}.s_min[{s}]"),
                    "a positive inner apparent-power bound is non-convex and not supported",
                ));
            }
        }
        finite(&format!("{p}.pf_angle_min"), u.pf_angle_min)?;
        finite(&format!("{p}.pf_angle_max"), u.pf_angle_max)?;
        if u.pf_angle_min > u.pf_angle_max {
            return Err(invalid(format!("{p}.pf_angle_max"), "must not be below pf_angle_min"));
        }
        if u.pf_angle_min <= -FRAC_PI_2 || u.pf_angle_max >= FRAC_PI_2 {
            return Err(invalid(format!("{p}.pf_angle_max"), "angles must lie in (-pi/2, pi/2)"));
        }
        cost(&format!("{p}.cost_per_mwh"), u.cost_per_mwh)?;
    }

    for (k, u) in c.storage.iter().enumerate() {
        let p = format!("storage[{k}]");
        bus_ref(format!("{p}.bus"), u.bus)?;
        for (name, v) in [
            ("e_min", u.e_min),
            ("e_max", u.e_max),
            ("e0", u.e0),
            ("p_dis_max", u.p_dis_max),
            ("p_chg_max", u.p_chg_max),
        ] {
            finite(&format!("{p}.{name}"), v)?;
        }
        if u.e_min > u.e_max {
            return Err(invalid(format!("{p}.e_max"), "must not be below e_min"));
        }
        if u.e0 < u.e_min || u.e0 > u.e_max {
            return Err(invalid(format!("{p}.e0"), "initial energy outside [e_min, e_max]"));
        }
        if u.p_dis_max < 0.0 {
            return Err(invalid(format!("{p}.p_dis_max"), "must be nonnegative"));
        }
        if u.p_chg_max < 0.0 {
            return Err(invalid(format!("{p}.p_chg_max"), "must be nonnegative"));
        }
        for (name, v) in [("eta_c", u.eta_c), ("eta_d", u.eta_d)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(format!("{p}.{name}"), "efficiency must lie in (0, 1]"));
            }
        }
        cost(&format!("{p}.cost_dis"), u.cost_dis)?;
        cost(&format!("{p}.cost_chg"), u.cost_chg)?;
    }

    for (k, u) in c.flexbuildings.iter().enumerate() {
        let p = format!("flexbuildings[{k}]");
        bus_ref(format!("{p}.bus"), u.bus)?;
        finite(&format!("{p}.p_min"), u.p_min)?;
        finite(&format!("{p}.p_max"), u.p_max)?;
        finite(&format!("{p}.energy_total"), u.energy_total)?;
        if u.p_min > u.p_max {
            return Err(invalid(format!("{p}.p_max"), "must not be below p_min"));
        }
        let (lo, hi) = (t as f64 * u.p_min, t as f64 * u.p_max);
        let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        if u.energy_total < lo - slack || u.energy_total > hi + slack {
            return Err(invalid(
                format!("{p}.energy_total"),
                format!("must lie in [{lo}, {hi}] for {t} slots"),
            ));
        }
        cost(&format!("{p}.cost_per_mwh"), u.cost_per_mwh)?;
    }

    let g = &c.grid;
    finite("grid.p_min", g.p_min)?;
    finite("grid.p_max", g.p_max)?;
    if g.p_min > g.p_max {
        return Err(invalid("grid.p_max", "must not be below p_min"));
    }
    if !(g.ramp >= 0.0) {
        return Err(invalid("grid.ramp", "must be nonnegative"));
    }
    if let Some(p0) = g.p_initial {
        finite("grid.p_initial", p0)?;
    }
    finite("grid.cost_per_mwh", g.cost_per_mwh)?;
    series("grid.grid_load", &g.grid_load, t)?;
    Ok(())
}

fn cost(path: &str, v: f64) -> Result<(), ModelError> {
    finite(path, v)?;
    if v < 0.0 {
        return Err(invalid(path, "cost coefficients must be nonnegative"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageCheck {
    pub unit: usize,
    /// `cost_dis - cost_chg`; must be nonnegative.
    pub discharge_margin: f64,
    /// `grid price - cost_chg`; must be positive.
    pub price_margin: f64,
    pub discharge_ok: bool,
    pub price_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationReport {
    pub units: Vec<StorageCheck>,
    pub passed: bool,
}

/// Checks the two cost conditions under which dropping the storage
/// charge/discharge binaries is exact.
pub fn validate_relaxation_conditions(case: &NetworkCase) -> RelaxationReport {
    let price = case.grid.cost_per_mwh;
    let units: Vec<StorageCheck> = case
        .storage
        .iter()
        .enumerate()
        .map(|(unit, s)| {
            let discharge_margin = s.cost_dis - s.cost_chg;
            let price_margin = price - s.cost_chg;
            StorageCheck {
                unit,
                discharge_margin,
                price_margin,
                discharge_ok: discharge_margin >= 0.0,
                price_ok: price_margin > 0.0,
            }
        })
        .collect();
    let passed = units.iter().all(|u| u.discharge_ok && u.price_ok);
    RelaxationReport { units, passed }
}
