mod common;

use deragg::dispatch::*;
use deragg::lin_network::assemble_polyhedron;
use deragg::model::NetworkCase;
use deragg::oracle::membership;
use deragg::oracle::monolithic::centralized_cost;
use deragg::pve::PveConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> PveConfig {
    PveConfig {
        epsilon: 1e-6,
        ..PveConfig::default()
    }
}

#[test]
fn no_devices_pass_load_through() {
    let mut c = common::single_bus(3);
    c.grid.grid_load = vec![7.0; 3];
    let r = centralized_ed(&c).unwrap();
    assert_eq!(r.grid_power, vec![7.0; 3]);
    assert!(r.gate_power.iter().all(|g| g.abs() < 1e-12));
    assert!((r.total_cost - 3.0 * 50.0 * 7.0).abs() < 1e-9);
    assert_eq!(r.total_cost, r.dcs_cost + r.grid_cost);
}

#[test]
fn free_pv_covers_its_own_bus() {
    let mut c = common::single_bus(2);
    c.buses[0].load_p = vec![0.6; 2];
    c.pv = vec![common::pv(0, 2, 0.6, 0.0)];
    let r = centralized_ed(&c).unwrap();
    assert!(r.gate_power.iter().all(|g| g.abs() < 1e-9), "{:?}", r.gate_power);
    let s = r.device_schedules.unwrap();
    assert!(s.pv_p[0].iter().all(|p| (p - 0.6).abs() < 1e-9));
}

/// The four-bus feeder with lines stiff enough to run without PV.
fn stiff_four_bus(t: usize) -> NetworkCase {
    let mut c = common::four_bus(t);
    for b in &mut c.branches {
        b.g *= 10.0;
        b.b *= 10.0;
    }
    c
}

fn perturbed_four_bus(rng: &mut ChaCha8Rng, t: usize) -> NetworkCase {
    let mut c = stiff_four_bus(t);
    for b in c.buses.iter_mut().skip(1) {
        for p in &mut b.load_p {
            *p = rng.gen_range(0.1..0.8);
        }
    }
    c.pv[0].p_max = (0..t).map(|_| rng.gen_range(0.2..1.0)).collect();
    c.pv[0].cost_per_mwh = rng.gen_range(1.0..20.0);
    c.grid.cost_per_mwh = rng.gen_range(30.0..60.0);
    c.grid.grid_load = (0..t).map(|_| rng.gen_range(8.0..12.0)).collect();
    c.grid.ramp = rng.gen_range(4.0..8.0);
    let first = c.grid.grid_load[0];
    c.grid.p_initial = if rng.gen_bool(0.5) { Some(first + rng.gen_range(-1.0..1.0)) } else { None };
    c.storage[0].e0 = rng.gen_range(0.5..1.5);
    c
}

#[test]
fn centralized_matches_monolithic_assembly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..12 {
        let c = perturbed_four_bus(&mut rng, 3);
        let want = centralized_cost(&c).unwrap().expect("feasible");
        let got = centralized_ed(&c).unwrap();
        assert!(relative_deviation(got.total_cost, want) < 1e-8, "case {case}: {} vs {want}", got.total_cost);
        let bal: f64 = got
            .grid_power
            .iter()
            .zip(&got.gate_power)
            .zip(&c.grid.grid_load)
            .map(|((p, g), l)| (p - g - l).abs())
            .fold(0.0, f64::max);
        assert!(bal < 1e-9);
    }
}

#[test]
fn tiny_case_modes_agree_exactly() {
    let mut c = common::single_bus(2);
    c.buses[0].load_p = vec![0.2, 0.4];
    c.flexbuildings = vec![common::flex(0, 0.0, 0.5, 0.6, 3.0)];
    let r = compare_modes(&c, &cfg(), Tolerances::default()).unwrap();
    assert!(r.converged);
    assert!(r.max_gate_delta <= 1e-8, "{:?}", r.gate_deltas);
    assert!(r.cost_delta.abs() <= 1e-8);
    assert!(r.passed);
}

#[test]
fn converged_region_reproduces_centralized_dispatch() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..3 {
        let c = perturbed_four_bus(&mut rng, 3);
        let r = compare_modes(&c, &cfg(), Tolerances::default()).unwrap();
        assert!(r.converged, "case {case}");
        assert!(r.passed, "case {case}: {} {:?}", r.cost_relative_deviation, r.gate_deltas);

        // enlarging the region never raises the aggregated cost
        let costs: Vec<f64> = r.iterations.iter().filter_map(|i| i.result.as_ref().map(|d| d.total_cost)).collect();
        assert!(costs.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{costs:?}");

        // the aggregated point is realizable by the devices
        let poly = assemble_polyhedron(&c).unwrap();
        let mut y = r.aggregated.gate_power.clone();
        y.push(r.aggregated.dcs_cost);
        assert!(membership(&y, &poly).unwrap().residual <= 1e-7);
        let s = recover_schedules(&c, &r.aggregated.gate_power, r.aggregated.dcs_cost).unwrap();
        assert!(s.max_complementarity() <= 1e-9);
        assert!(r.centralized.device_schedules.as_ref().unwrap().max_complementarity() <= 1e-9);
    }
}

#[test]
fn capped_run_is_flagged_and_no_better() {
    let c = stiff_four_bus(3);
    let capped = compare_modes(
        &c,
        &PveConfig {
            max_iterations: 1,
            ..cfg()
        },
        Tolerances::default(),
    )
    .unwrap();
    let full = compare_modes(&c, &cfg(), Tolerances::default()).unwrap();
    assert!(!capped.converged);
    assert!(full.converged);
    assert!(capped.aggregated.total_cost >= full.aggregated.total_cost - 1e-9);
    assert!(capped.cost_relative_deviation >= full.cost_relative_deviation);
}

#[test]
fn ramp_limit_binds_only_below_the_free_optimum() {
    let mut c = stiff_four_bus(3);
    c.grid.grid_load = vec![5.0, 12.0, 6.0];
    c.grid.ramp = 100.0;
    let free = centralized_ed(&c).unwrap();
    let needed = free
        .grid_power
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    c.grid.ramp = needed + 1.0;
    let loose = centralized_ed(&c).unwrap();
    assert!((loose.total_cost - free.total_cost).abs() < 1e-9);
    assert_eq!(loose.grid_power.len(), 3);
    c.grid.ramp = needed - 0.5;
    let tight = centralized_ed(&c).unwrap();
    let diff: f64 = tight
        .grid_power
        .iter()
        .zip(&free.grid_power)
        .map(|(a, b)| (a - b).abs())
        .sum();
    assert!(diff > 1e-3);
}

#[test]
fn pv_sweep_endpoints_and_trend() {
    let c = stiff_four_bus(2);
    let sweep = pv_capacity_sweep(&c, &[0.0, 0.25, 0.5, 0.75, 1.0], &cfg(), Tolerances::default()).unwrap();
    let base = centralized_ed(&c).unwrap();
    let mut no_pv = c.clone();
    no_pv.pv.clear();
    let without = centralized_ed(&no_pv).unwrap();
    assert!((sweep[0].total_cost - without.total_cost).abs() < 1e-9);
    assert!((sweep[4].total_cost - base.total_cost).abs() < 1e-9);
    for w in sweep.windows(2) {
        assert!(w[1].total_cost <= w[0].total_cost + 1e-7);
        assert!(w[1].dcs_cost >= w[0].dcs_cost - 1e-7);
    }
    assert!(sweep.iter().all(|p| p.passed && p.converged));
    assert!(pv_capacity_sweep(&c, &[1.5], &cfg(), Tolerances::default()).is_err());
}

#[test]
fn infeasible_cluster_is_named() {
    let mut c = common::single_bus(1);
    c.buses[0].load_p = vec![50.0];
    match centralized_ed(&c) {
        Err(DispatchError::Infeasible { subsystem, .. }) => assert_eq!(subsystem, Subsystem::Dcs),
        other => panic!("{other:?}"),
    }
    let mut c = common::single_bus(1);
    c.grid.grid_load = vec![500.0];
    match centralized_ed(&c) {
        Err(DispatchError::Infeasible { subsystem, .. }) => assert_eq!(subsystem, Subsystem::Joint),
        other => panic!("{other:?}"),
    }
}
