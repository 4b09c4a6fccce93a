//! Second, self-contained assembly of the centralized dispatch LP. It shares
//! no code with the network assembly so the two can check each other.

use std::f64::consts::PI;

use crate::lp::{solve_lp, LinearRow, LpError, LpProblem, LpStatus, Sense};
use crate::model::NetworkCase;

struct Builder {
    lp: LpProblem,
}

impl Builder {
    fn var(&mut self, lo: f64, hi: f64, cost: f64) -> usize {
        self.lp.add_var(lo, hi, cost)
    }

    fn row(&mut self, terms: Vec<(usize, f64)>, lo: f64, hi: f64) {
        if lo == hi {
            self.lp.rows.push(LinearRow::eq(terms, lo));
            return;
        }
        if hi.is_finite() {
            self.lp.rows.push(LinearRow::le(terms.clone(), hi));
        }
        if lo.is_finite() {
            self.lp.rows.push(LinearRow::ge(terms, lo));
        }
    }

    fn disc(&mut self, p: usize, q: usize, s: f64, n: usize) {
        for k in 1..=n {
            let a = 2.0 * PI * k as f64 / n as f64;
            self.row(vec![(p, a.cos()), (q, a.sin())], f64::NEG_INFINITY, s * (PI / n as f64).cos());
        }
    }
}

/// Optimal total cost of the centralized dispatch, `None` when infeasible.
pub fn centralized_cost(case: &NetworkCase) -> Result<Option<f64>, LpError> {
    let t_n = case.time.slots;
    let dt = case.time.dt_hours;
    let n = case.lin_segments;
    let base = case.base_mva;
    let inf = f64::INFINITY;
    let mut b = Builder {
        lp: LpProblem::new(Sense::Minimize, 0),
    };
    let mut prev_grid: Option<usize> = None;
    let mut es_energy: Vec<Option<usize>> = vec![None; case.storage.len()];
    let mut fb_series: Vec<Vec<usize>> = vec![Vec::new(); case.flexbuildings.len()];
    for t in 0..t_n {
        let mut u = Vec::new();
        let mut th = Vec::new();
        for bus in &case.buses {
            if bus.id == case.feeder.bus {
                u.push(b.var(1.0, 1.0, 0.0));
                th.push(b.var(0.0, 0.0, 0.0));
            } else {
                u.push(b.var(bus.v_min.powi(2), bus.v_max.powi(2), 0.0));
                th.push(b.var(-inf, inf, 0.0));
            }
        }
        let pos = |id: usize| case.buses.iter().position(|x| x.id == id).unwrap();
        // net active / reactive injections per bus
        let mut inj_p: Vec<Vec<(usize, f64)>> = vec![Vec::new(); case.buses.len()];
        let mut inj_q: Vec<Vec<(usize, f64)>> = vec![Vec::new(); case.buses.len()];
        for br in &case.branches {
            let (i, j) = (pos(br.from), pos(br.to));
            let pf = b.var(-inf, inf, 0.0);
            let qf = b.var(-inf, inf, 0.0);
            let (g, bb) = (br.g * base, br.b * base);
            b.row(vec![(pf, 1.0), (u[i], -0.5 * g), (u[j], 0.5 * g), (th[i], bb), (th[j], -bb)], 0.0, 0.0);
            b.row(vec![(qf, 1.0), (u[i], 0.5 * bb), (u[j], -0.5 * bb), (th[i], g), (th[j], -g)], 0.0, 0.0);
            b.disc(pf, qf, br.s_max, n);
            inj_p[i].push((pf, -1.0));
            inj_q[i].push((qf, -1.0));
            inj_p[j].push((pf, 1.0));
            inj_q[j].push((qf, 1.0));
        }
        for pv in &case.pv {
            let p = b.var(pv.p_min[t], pv.p_max[t], pv.cost_per_mwh * dt);
            let q = b.var(-inf, inf, 0.0);
            b.row(vec![(q, 1.0), (p, -pv.pf_angle_max.tan())], f64::NEG_INFINITY, 0.0);
            b.row(vec![(q, 1.0), (p, -pv.pf_angle_min.tan())], 0.0, inf);
            b.disc(p, q, pv.s_max[t], n);
            inj_p[pos(pv.bus)].push((p, 1.0));
            inj_q[pos(pv.bus)].push((q, 1.0));
        }
        for (k, es) in case.storage.iter().enumerate() {
            let dis = b.var(0.0, es.p_dis_max, es.cost_dis * dt);
            let chg = b.var(0.0, es.p_chg_max, es.cost_chg * dt);
            let last = t + 1 == t_n;
            let e = if last {
                b.var(es.e0, es.e0, 0.0)
            } else {
                b.var(es.e_min, es.e_max, 0.0)
            };
            let mut bal = vec![(e, 1.0), (chg, -es.eta_c * dt), (dis, dt / es.eta_d)];
            let rhs = match es_energy[k] {
                Some(prev) => {
                    bal.push((prev, -1.0));
                    0.0
                }
                None => es.e0,
            };
            b.row(bal, rhs, rhs);
            es_energy[k] = Some(e);
            inj_p[pos(es.bus)].push((dis, 1.0));
            inj_p[pos(es.bus)].push((chg, -1.0));
        }
        for (k, fb) in case.flexbuildings.iter().enumerate() {
            let p = b.var(fb.p_min, fb.p_max, fb.cost_per_mwh * dt);
            fb_series[k].push(p);
            inj_p[pos(fb.bus)].push((p, 1.0));
        }
        let gate_p = b.var(-inf, inf, 0.0);
        let gate_q = b.var(-inf, inf, 0.0);
        b.disc(gate_p, gate_q, case.feeder.s_max, n);
        let f = pos(case.feeder.bus);
        inj_p[f].push((gate_p, 1.0));
        inj_q[f].push((gate_q, 1.0));
        for (i, bus) in case.buses.iter().enumerate() {
            let mut p = inj_p[i].clone();
            p.push((u[i], -bus.shunt_g * base));
            b.row(p, bus.load_p[t], bus.load_p[t]);
            let mut q = inj_q[i].clone();
            q.push((u[i], bus.shunt_b * base));
            b.row(q, bus.load_q[t], bus.load_q[t]);
        }
        // grid side
        let g = &case.grid;
        let pm = b.var(g.p_min, g.p_max, g.cost_per_mwh * dt);
        b.row(vec![(pm, 1.0), (gate_p, -1.0)], g.grid_load[t], g.grid_load[t]);
        let r = g.ramp * dt;
        match (prev_grid, g.p_initial) {
            (Some(prev), _) => b.row(vec![(pm, 1.0), (prev, -1.0)], -r, r),
            (None, Some(p0)) => b.row(vec![(pm, 1.0)], p0 - r, p0 + r),
            (None, None) => {}
        }
        prev_grid = Some(pm);
    }
    for (k, fb) in case.flexbuildings.iter().enumerate() {
        let terms = fb_series[k].iter().map(|&v| (v, 1.0)).collect();
        b.row(terms, fb.energy_total, fb.energy_total);
    }
    let sol = solve_lp(&b.lp)?;
    Ok(match sol.status {
        LpStatus::Optimal => Some(sol.objective_value),
        _ => None,
    })
}
