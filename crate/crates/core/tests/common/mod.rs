#![allow(dead_code)]

use deragg::model::*;

pub fn bus(id: usize, t: usize, load: f64) -> Bus {
    Bus {
        id,
        v_min: 0.95,
        v_max: 1.05,
        load_p: vec![load; t],
        load_q: vec![0.0; t],
        shunt_g: 0.0,
        shunt_b: 0.0,
    }
}

pub fn grid(t: usize) -> GridUnit {
    GridUnit {
        bus: 0,
        p_min: 0.0,
        p_max: 100.0,
        ramp: 100.0,
        p_initial: None,
        cost_per_mwh: 50.0,
        grid_load: vec![10.0; t],
    }
}

/// One bus, no devices, no load.
pub fn single_bus(t: usize) -> NetworkCase {
    NetworkCase {
        time: TimeGrid { slots: t, dt_hours: 1.0 },
        buses: vec![bus(0, t, 0.0)],
        branches: vec![],
        feeder: FeederLink { bus: 0, s_max: 10.0 },
        pv: vec![],
        storage: vec![],
        flexbuildings: vec![],
        grid: grid(t),
        lin_segments: DEFAULT_SEGMENTS,
        base_mva: 1.0,
    }
}

pub fn pv(bus: usize, t: usize, p_max: f64, cost: f64) -> PvUnit {
    PvUnit {
        bus,
        p_min: vec![0.0; t],
        p_max: vec![p_max; t],
        s_min: vec![0.0; t],
        s_max: vec![p_max * 1.2; t],
        pf_angle_min: -0.5,
        pf_angle_max: 0.5,
        cost_per_mwh: cost,
    }
}

pub fn storage(bus: usize) -> StorageUnit {
    StorageUnit {
        bus,
        e_min: 0.0,
        e_max: 2.0,
        e0: 1.0,
        p_dis_max: 1.0,
        p_chg_max: 1.0,
        eta_c: 0.95,
        eta_d: 0.9,
        cost_dis: 4.0,
        cost_chg: 2.0,
    }
}

pub fn flex(bus: usize, p_min: f64, p_max: f64, total: f64, cost: f64) -> FlexBuilding {
    FlexBuilding {
        bus,
        p_min,
        p_max,
        energy_total: total,
        cost_per_mwh: cost,
    }
}

/// Radial four-bus feeder 0-1-2, 1-3 with one of each device.
pub fn four_bus(t: usize) -> NetworkCase {
    let mut c = single_bus(t);
    c.buses = vec![bus(0, t, 0.0), bus(1, t, 0.5), bus(2, t, 0.8), bus(3, t, 0.3)];
    for (i, b) in c.buses.iter_mut().enumerate() {
        b.load_q = vec![0.1 * i as f64; t];
    }
    c.branches = vec![
        Branch { from: 0, to: 1, g: 4.0, b: -12.0, s_max: 5.0 },
        Branch { from: 1, to: 2, g: 3.0, b: -9.0, s_max: 4.0 },
        Branch { from: 1, to: 3, g: 5.0, b: -10.0, s_max: 4.0 },
    ];
    c.pv = vec![pv(2, t, 1.0, 5.0)];
    c.storage = vec![storage(3)];
    c.flexbuildings = vec![flex(1, 0.0, 0.6, 0.4 * t as f64, 8.0)];
    c
}
