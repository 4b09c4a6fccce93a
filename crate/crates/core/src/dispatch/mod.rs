//! Economic dispatch of the cluster and its upstream grid, either against
//! the full device model (centralized) or against the aggregate region
//! given by convex combinations of its vertices (two-step).

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lin_network::{assemble_polyhedron, AssemblyError, Polyhedron, VarKind, VariableIndex};
use crate::lp::{solve_lexicographic, LinearRow, LpError, LpProblem, LpStatus, Sense};
use crate::model::{storage_energy_trajectory, GridUnit, ModelError, NetworkCase, TimeGrid};
use crate::polytope::VertexHull;
use crate::pve::{run_pve_observed, PveConfig, PveError, PveResult, PveTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DispatchMode {
    Centralized,
    Aggregated,
}

impl fmt::Display for DispatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DispatchMode::Centralized => "centralized",
            DispatchMode::Aggregated => "aggregated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subsystem {
    /// Grid bounds and ramp limits alone.
    Grid,
    /// The cluster's own network and device constraints.
    Dcs,
    /// Each side is feasible, but not together.
    Joint,
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subsystem::Grid => "grid bounds/ramp",
            Subsystem::Dcs => "cluster",
            Subsystem::Joint => "cluster gate range vs grid",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispatchError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("infeasible ({subsystem}): {message}")]
    Infeasible { subsystem: Subsystem, message: String },
    #[error("invalid aggregate region: {0}")]
    InvalidRegion(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dispatch problem is unbounded")]
    Unbounded,
    #[error(transparent)]
    Assembly(AssemblyError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Pve(PveError),
}

impl From<AssemblyError> for DispatchError {
    fn from(e: AssemblyError) -> Self {
        match e {
            AssemblyError::Model(m) => DispatchError::Model(m),
            AssemblyError::EmptyRegion(message) => DispatchError::Infeasible {
                subsystem: Subsystem::Dcs,
                message,
            },
            AssemblyError::Lp(l) => DispatchError::Lp(l),
            other => DispatchError::Assembly(other),
        }
    }
}

impl From<PveError> for DispatchError {
    fn from(e: PveError) -> Self {
        match e {
            PveError::EmptyRegion => DispatchError::Infeasible {
                subsystem: Subsystem::Dcs,
                message: "the cluster region is empty".into(),
            },
            PveError::Lp(l) => DispatchError::Lp(l),
            other => DispatchError::Pve(other),
        }
    }
}

/// Vertices `(P_1..P_T, C)` whose convex hull stands in for the cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRegion {
    pub vertices: Vec<Vec<f64>>,
}

impl AggregateRegion {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self, DispatchError> {
        let first = vertices
            .first()
            .ok_or_else(|| DispatchError::InvalidRegion("no vertices".into()))?;
        let d = first.len();
        if d < 2 {
            return Err(DispatchError::InvalidRegion(format!("vertex dimension {d} < 2")));
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != d {
                return Err(DispatchError::InvalidRegion(format!(
                    "vertex {i} has dimension {}, expected {d}",
                    v.len()
                )));
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(DispatchError::InvalidRegion(format!("vertex {i} is not finite")));
            }
        }
        Ok(AggregateRegion { vertices })
    }

    pub fn from_hull(hull: &VertexHull) -> Result<Self, DispatchError> {
        AggregateRegion::new(hull.vertices.clone())
    }

    pub fn from_pve(result: &PveResult) -> Result<Self, DispatchError> {
        AggregateRegion::from_hull(&result.hull)
    }

    pub fn slots(&self) -> usize {
        self.vertices[0].len() - 1
    }
}

/// Per-device series, indexed `[unit][slot]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSchedules {
    pub pv_p: Vec<Vec<f64>>,
    pub pv_q: Vec<Vec<f64>>,
    pub storage_charge: Vec<Vec<f64>>,
    pub storage_discharge: Vec<Vec<f64>>,
    /// Stored energy at the end of each slot (MWh).
    pub storage_energy: Vec<Vec<f64>>,
    pub flexbuilding_p: Vec<Vec<f64>>,
}

impl DeviceSchedules {
    /// `max_{k,t} charge * discharge`; zero when the relaxation is exact.
    pub fn max_complementarity(&self) -> f64 {
        self.storage_charge
            .iter()
            .zip(&self.storage_discharge)
            .flat_map(|(c, d)| c.iter().zip(d).map(|(a, b)| a * b))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchResult {
    pub mode: DispatchMode,
    /// Gate power per slot, import positive (MW).
    pub gate_power: Vec<f64>,
    /// Thermal unit output per slot (MW).
    pub grid_power: Vec<f64>,
    pub dcs_cost: f64,
    pub grid_cost: f64,
    pub total_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_schedules: Option<DeviceSchedules>,
}

/// Appends the grid unit to `lp`: one output column per slot with its cost,
/// the balance `P_t - gate_t = load_t`, and ramp rows. Returns the columns.
fn add_grid(
    lp: &mut LpProblem,
    grid: &GridUnit,
    time: &TimeGrid,
    gate: &dyn Fn(usize) -> Vec<(usize, f64)>,
) -> Vec<usize> {
    let dt = time.dt_hours;
    let r = grid.ramp * dt;
    let mut cols = Vec::with_capacity(time.slots);
    for t in 0..time.slots {
        let pm = lp.add_var(grid.p_min, grid.p_max, grid.cost_per_mwh * dt);
        let mut terms = vec![(pm, 1.0)];
        terms.extend(gate(t).into_iter().map(|(j, a)| (j, -a)));
        lp.rows.push(LinearRow::eq(terms, grid.grid_load[t]));
        match (cols.last(), grid.p_initial) {
            (Some(&prev), _) => {
                lp.rows.push(LinearRow::le(vec![(pm, 1.0), (prev, -1.0)], r));
                lp.rows.push(LinearRow::ge(vec![(pm, 1.0), (prev, -1.0)], -r));
            }
            (None, Some(p0)) => {
                lp.rows.push(LinearRow::le(vec![(pm, 1.0)], p0 + r));
                lp.rows.push(LinearRow::ge(vec![(pm, 1.0)], p0 - r));
            }
            (None, None) => {}
        }
        cols.push(pm);
    }
    cols
}

fn check_grid(grid: &GridUnit, time: &TimeGrid) -> Result<(), DispatchError> {
    if grid.grid_load.len() != time.slots {
        return Err(DispatchError::InvalidArgument(format!(
            "grid.grid_load has {} entries for {} slots",
            grid.grid_load.len(),
            time.slots
        )));
    }
    let mut lp = LpProblem::new(Sense::Minimize, time.slots);
    let free: Vec<usize> = (0..time.slots).collect();
    add_grid(&mut lp, grid, time, &|t| vec![(free[t], 1.0)]);
    if !solve_lexicographic(&lp, &[])?.is_optimal() {
        return Err(DispatchError::Infeasible {
            subsystem: Subsystem::Grid,
            message: "no output series satisfies the unit bounds and ramp limits".into(),
        });
    }
    Ok(())
}

/// Minimizes `objective`, then maximizes gate power slot by slot so that
/// ties between equal-cost optima resolve the same way in both modes.
fn solve_with_tie_break(lp: &LpProblem, gate: &[Vec<(usize, f64)>]) -> Result<Vec<f64>, DispatchError> {
    let n = lp.num_vars();
    let secondary: Vec<Vec<f64>> = gate
        .iter()
        .map(|terms| {
            let mut c = vec![0.0; n];
            for &(j, a) in terms {
                c[j] += a;
            }
            c
        })
        .collect();
    let sol = solve_lexicographic(lp, &secondary)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.point),
        LpStatus::Unbounded => Err(DispatchError::Unbounded),
        LpStatus::Infeasible => Err(DispatchError::Infeasible {
            subsystem: Subsystem::Joint,
            message: "no gate-power series is acceptable to both the cluster and the grid".into(),
        }),
    }
}

fn grid_totals(grid: &GridUnit, time: &TimeGrid, point: &[f64], cols: &[usize]) -> (Vec<f64>, f64) {
    let series: Vec<f64> = cols.iter().map(|&j| point[j]).collect();
    let cost = series.iter().map(|p| grid.cost_per_mwh * p * time.dt_hours).sum();
    (series, cost)
}

fn column_map(poly: &Polyhedron) -> HashMap<VariableIndex, usize> {
    poly.x_vars.iter().chain(&poly.y_vars).enumerate().map(|(j, v)| (*v, j)).collect()
}

fn schedules_from(case: &NetworkCase, cols: &HashMap<VariableIndex, usize>, point: &[f64]) -> DeviceSchedules {
    let t_n = case.time.slots;
    let series = |kind: VarKind, k: usize| -> Vec<f64> {
        (0..t_n)
            .map(|t| point[cols[&VariableIndex::new(kind, k, t)]])
            .collect()
    };
    let charge: Vec<Vec<f64>> = (0..case.storage.len()).map(|k| series(VarKind::EsCharge, k)).collect();
    let discharge: Vec<Vec<f64>> = (0..case.storage.len()).map(|k| series(VarKind::EsDischarge, k)).collect();
    let energy = case
        .storage
        .iter()
        .enumerate()
        .map(|(k, u)| storage_energy_trajectory(u, &case.time, &charge[k], &discharge[k]))
        .collect();
    DeviceSchedules {
        pv_p: (0..case.pv.len()).map(|k| series(VarKind::PvP, k)).collect(),
        pv_q: (0..case.pv.len()).map(|k| series(VarKind::PvQ, k)).collect(),
        storage_charge: charge,
        storage_discharge: discharge,
        storage_energy: energy,
        flexbuilding_p: (0..case.flexbuildings.len()).map(|k| series(VarKind::FbP, k)).collect(),
    }
}

/// Joint dispatch of the full cluster model and the grid.
pub fn centralized_ed(case: &NetworkCase) -> Result<DispatchResult, DispatchError> {
    let poly = assemble_polyhedron(case)?;
    check_grid(&case.grid, &case.time)?;
    let t_n = case.time.slots;
    let mut lp = poly.to_lp();
    lp.sense = Sense::Minimize;
    let cost_col = poly.y_column(t_n);
    lp.objective[cost_col] = 1.0;
    let gate: Vec<Vec<(usize, f64)>> = (0..t_n).map(|t| vec![(poly.y_column(t), 1.0)]).collect();
    let grid_cols = add_grid(&mut lp, &case.grid, &case.time, &|t| gate[t].clone());
    let point = solve_with_tie_break(&lp, &gate)?;
    let (grid_power, grid_cost) = grid_totals(&case.grid, &case.time, &point, &grid_cols);
    let dcs_cost = point[cost_col];
    Ok(DispatchResult {
        mode: DispatchMode::Centralized,
        gate_power: (0..t_n).map(|t| point[poly.y_column(t)]).collect(),
        grid_power,
        dcs_cost,
        grid_cost,
        total_cost: dcs_cost + grid_cost,
        lambda: None,
        device_schedules: Some(schedules_from(case, &column_map(&poly), &point)),
    })
}

/// Two-step dispatch: the grid chooses a convex combination of the region's
/// vertices.
pub fn aggregated_ed(region: &AggregateRegion, grid: &GridUnit, time: &TimeGrid) -> Result<DispatchResult, DispatchError> {
    let t_n = time.slots;
    if region.slots() != t_n {
        return Err(DispatchError::InvalidRegion(format!(
            "region has {} gate slots, time grid has {t_n}",
            region.slots()
        )));
    }
    check_grid(grid, time)?;
    let n = region.vertices.len();
    let mut lp = LpProblem::new(Sense::Minimize, 0);
    for v in &region.vertices {
        lp.add_var(0.0, f64::INFINITY, v[t_n]);
    }
    lp.rows.push(LinearRow::eq((0..n).map(|i| (i, 1.0)).collect(), 1.0));
    let gate: Vec<Vec<(usize, f64)>> = (0..t_n)
        .map(|t| {
            (0..n)
                .filter(|&i| region.vertices[i][t] != 0.0)
                .map(|i| (i, region.vertices[i][t]))
                .collect()
        })
        .collect();
    let grid_cols = add_grid(&mut lp, grid, time, &|t| gate[t].clone());
    let point = solve_with_tie_break(&lp, &gate)?;
    let lambda: Vec<f64> = point[..n].to_vec();
    let combine = |k: usize| lambda.iter().zip(&region.vertices).map(|(l, v)| l * v[k]).sum::<f64>();
    let (grid_power, grid_cost) = grid_totals(grid, time, &point, &grid_cols);
    let dcs_cost = combine(t_n);
    Ok(DispatchResult {
        mode: DispatchMode::Aggregated,
        gate_power: (0..t_n).map(combine).collect(),
        grid_power,
        dcs_cost,
        grid_cost,
        total_cost: dcs_cost + grid_cost,
        lambda: Some(lambda),
        device_schedules: None,
    })
}

/// Device schedules realizing an aggregate point `(gate, cost)`: one LP on
/// the cluster model with the point fixed, minimizing total storage
/// throughput so that charging and discharging do not overlap needlessly.
pub fn recover_schedules(case: &NetworkCase, gate_power: &[f64], dcs_cost: f64) -> Result<DeviceSchedules, DispatchError> {
    let poly = assemble_polyhedron(case)?;
    let t_n = case.time.slots;
    if gate_power.len() != t_n {
        return Err(DispatchError::InvalidArgument(format!(
            "{} gate values for {t_n} slots",
            gate_power.len()
        )));
    }
    let mut lp = poly.to_lp();
    lp.sense = Sense::Minimize;
    for (t, &g) in gate_power.iter().enumerate() {
        lp.bounds[poly.y_column(t)] = (g, g);
    }
    lp.bounds[poly.y_column(t_n)] = (dcs_cost, dcs_cost);
    let cols = column_map(&poly);
    for k in 0..case.storage.len() {
        for t in 0..t_n {
            lp.objective[cols[&VariableIndex::new(VarKind::EsCharge, k, t)]] = 1.0;
            lp.objective[cols[&VariableIndex::new(VarKind::EsDischarge, k, t)]] = 1.0;
        }
    }
    let sol = solve_lexicographic(&lp, &[])?;
    if !sol.is_optimal() {
        return Err(DispatchError::Infeasible {
            subsystem: Subsystem::Dcs,
            message: "no device schedule realizes the aggregate point".into(),
        });
    }
    Ok(schedules_from(case, &cols, &sol.point))
}

/// Acceptance thresholds for [`compare_modes`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// `|C_agg - C_cen| / max(|C_cen|, 1)`.
    pub cost_relative: f64,
    /// Per-slot gate power (MW).
    pub gate_mw: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cost_relative: 1e-4,
            gate_mw: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullSummary {
    pub dim: usize,
    pub affine_dim: usize,
    pub vertex_count: usize,
    pub facet_count: usize,
}

/// Aggregated dispatch against the vertices known after one PVE iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationDispatch {
    pub iteration: usize,
    pub vertex_count: usize,
    pub expansion: f64,
    /// `None` when the partial region admits no grid-feasible dispatch.
    pub result: Option<DispatchResult>,
    pub cost_relative_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub centralized: DispatchResult,
    pub aggregated: DispatchResult,
    /// Aggregated minus centralized gate power per slot.
    pub gate_deltas: Vec<f64>,
    pub max_gate_delta: f64,
    pub cost_delta: f64,
    pub cost_relative_deviation: f64,
    pub tolerances: Tolerances,
    pub passed: bool,
    pub converged: bool,
    pub hull: HullSummary,
    pub trace: PveTrace,
    pub iterations: Vec<IterationDispatch>,
    /// The aggregate region used by the final aggregated dispatch.
    pub region: AggregateRegion,
    /// Hull facets `(normal, offset)` of the final region.
    pub facets: Vec<(Vec<f64>, f64)>,
}

pub fn relative_deviation(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(1.0)
}

/// Runs both dispatch modes on `case` and compares them.
pub fn compare_modes(case: &NetworkCase, cfg: &PveConfig, tol: Tolerances) -> Result<ModeComparison, DispatchError> {
    let poly = assemble_polyhedron(case)?;
    let mut snapshots: Vec<(usize, usize, f64, Vec<Vec<f64>>)> = Vec::new();
    let (centralized, pve) = rayon::join(
        || centralized_ed(case),
        || {
            run_pve_observed(&poly, cfg, |rec, vs| {
                snapshots.push((rec.iteration, rec.vertex_count, rec.expansion, vs.to_vec()))
            })
        },
    );
    let centralized = centralized?;
    let pve = pve?;
    let region = AggregateRegion::from_pve(&pve)?;
    let aggregated = aggregated_ed(&region, &case.grid, &case.time)?;

    let mut iterations = Vec::with_capacity(snapshots.len());
    for (iteration, vertex_count, expansion, vs) in snapshots {
        let result = match aggregated_ed(&AggregateRegion::new(vs)?, &case.grid, &case.time) {
            Ok(r) => Some(r),
            Err(DispatchError::Infeasible { .. }) => None,
            Err(e) => return Err(e),
        };
        let dev = result
            .as_ref()
            .map(|r| relative_deviation(r.total_cost, centralized.total_cost));
        iterations.push(IterationDispatch {
            iteration,
            vertex_count,
            expansion,
            result,
            cost_relative_deviation: dev,
        });
    }

    let gate_deltas: Vec<f64> = aggregated
        .gate_power
        .iter()
        .zip(&centralized.gate_power)
        .map(|(a, c)| a - c)
        .collect();
    let max_gate_delta = gate_deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let cost_relative_deviation = relative_deviation(aggregated.total_cost, centralized.total_cost);
    Ok(ModeComparison {
        gate_deltas,
        max_gate_delta,
        cost_delta: aggregated.total_cost - centralized.total_cost,
        cost_relative_deviation,
        tolerances: tol,
        passed: cost_relative_deviation <= tol.cost_relative && max_gate_delta <= tol.gate_mw,
        converged: pve.converged,
        hull: HullSummary {
            dim: pve.hull.dim,
            affine_dim: pve.affine_dim,
            vertex_count: pve.hull.vertices.len(),
            facet_count: pve.hull.facets.len(),
        },
        trace: pve.trace,
        iterations,
        facets: pve.hull.facets.iter().map(|f| (f.normal.clone(), f.offset)).collect(),
        region,
        centralized,
        aggregated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub dcs_cost: f64,
    pub total_cost: f64,
    pub aggregated_total_cost: f64,
    pub passed: bool,
    pub converged: bool,
}

/// Scales every PV unit by each `alpha` in turn and compares both modes.
pub fn pv_capacity_sweep(
    case: &NetworkCase,
    alphas: &[f64],
    cfg: &PveConfig,
    tol: Tolerances,
) -> Result<Vec<SweepPoint>, DispatchError> {
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(DispatchError::InvalidArgument(format!("PV scale {a} outside [0, 1]")));
    }
    alphas
        .iter()
        .map(|&alpha| {
            let c = compare_modes(&case.with_pv_scaled(alpha), cfg, tol)?;
            Ok(SweepPoint {
                alpha,
                dcs_cost: c.centralized.dcs_cost,
                total_cost: c.centralized.total_cost,
                aggregated_total_cost: c.aggregated.total_cost,
                passed: c.passed,
                converged: c.converged,
            })
        })
        .collect()
}
