//! Files written by the commands: JSON documents and CSV series.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use deragg::dispatch::{DispatchResult, HullSummary, ModeComparison, Tolerances};
use deragg::pve::{PveConfig, PveTrace};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const ARTIFACT_VERSION: u32 = 1;

/// Hex SHA-256 of the case bytes followed by the flag string.
pub fn inputs_digest(case_bytes: &[u8], flags: &str) -> String {
    let mut h = Sha256::new();
    h.update(case_bytes);
    h.update([0u8]);
    h.update(flags.as_bytes());
    format!("{:x}", h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub epsilon: f64,
    pub lin_segments: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl RunSettings {
    pub fn pve_config(&self) -> PveConfig {
        PveConfig {
            epsilon: self.epsilon,
            max_iterations: self.max_iterations,
            seed: self.seed,
            ..PveConfig::default()
        }
    }

    pub fn flag_string(&self) -> String {
        format!(
            "epsilon={:e};segments={};max_iterations={};seed={}",
            self.epsilon, self.lin_segments, self.max_iterations, self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetRecord {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Output of `aggregate`: the vertex and facet description of the region
/// over `(P_1..P_T, C)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullArtifact {
    pub schema_version: u32,
    pub inputs_digest: String,
    pub settings: RunSettings,
    pub converged: bool,
    pub dim: usize,
    pub affine_dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub facets: Vec<FacetRecord>,
    pub trace: PveTrace,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchReport {
    pub schema_version: u32,
    pub inputs_digest: String,
    pub result: DispatchResult,
    /// Largest charge x discharge product in the device schedules, when known.
    pub max_complementarity: Option<f64>,
    pub relaxation_conditions_ok: bool,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotComparison {
    pub slot: usize,
    pub gate_centralized: f64,
    pub gate_aggregated: f64,
    pub gate_delta: f64,
    pub grid_centralized: f64,
    pub grid_aggregated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostComparison {
    pub centralized_total: f64,
    pub aggregated_total: f64,
    pub centralized_dcs: f64,
    pub aggregated_dcs: f64,
    pub delta: f64,
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub converged: bool,
    pub passed: bool,
    pub relaxation_conditions_ok: bool,
    pub max_complementarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub pve_seconds: f64,
    pub total_seconds: f64,
}

/// Output of `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub inputs_digest: String,
    pub settings: RunSettings,
    pub tolerances: Tolerances,
    pub trace: PveTrace,
    pub hull: HullSummary,
    pub slots: Vec<SlotComparison>,
    pub costs: CostComparison,
    pub flags: Flags,
    pub timings: Timings,
}

impl RunReport {
    pub fn slot_table(c: &ModeComparison) -> Vec<SlotComparison> {
        (0..c.centralized.gate_power.len())
            .map(|t| SlotComparison {
                slot: t + 1,
                gate_centralized: c.centralized.gate_power[t],
                gate_aggregated: c.aggregated.gate_power[t],
                gate_delta: c.gate_deltas[t],
                grid_centralized: c.centralized.grid_power[t],
                grid_aggregated: c.aggregated.grid_power[t],
            })
            .collect()
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct DispatchRow {
    slot: usize,
    gate_power: f64,
    grid_power: f64,
    grid_cost: f64,
}

/// Per-slot series of one dispatch.
pub fn write_dispatch_csv(path: &Path, r: &DispatchResult, cost_per_mwh: f64, dt: f64) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for t in 0..r.gate_power.len() {
        w.serialize(DispatchRow {
            slot: t + 1,
            gate_power: r.gate_power[t],
            grid_power: r.grid_power[t],
            grid_cost: cost_per_mwh * r.grid_power[t] * dt,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_slots_csv(path: &Path, rows: &[SlotComparison]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct IterationRow {
    mode: &'static str,
    iteration: Option<usize>,
    vertex_count: Option<usize>,
    expansion: Option<f64>,
    slot: usize,
    gate_power: f64,
    grid_cost: f64,
    total_cost: f64,
    relative_deviation: f64,
}

/// Gate power and cost per slot for every PVE iteration (aggregated mode)
/// and for the centralized reference, in long format.
pub fn write_iterations_csv(path: &Path, c: &ModeComparison, cost_per_mwh: f64, dt: f64) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let cen = &c.centralized;
    for t in 0..cen.gate_power.len() {
        w.serialize(IterationRow {
            mode: "centralized",
            iteration: None,
            vertex_count: None,
            expansion: None,
            slot: t + 1,
            gate_power: cen.gate_power[t],
            grid_cost: cost_per_mwh * cen.grid_power[t] * dt,
            total_cost: cen.total_cost,
            relative_deviation: 0.0,
        })?;
    }
    for it in &c.iterations {
        let (Some(r), Some(dev)) = (&it.result, it.cost_relative_deviation) else {
            continue;
        };
        for t in 0..r.gate_power.len() {
            w.serialize(IterationRow {
                mode: "aggregated",
                iteration: Some(it.iteration),
                vertex_count: Some(it.vertex_count),
                expansion: Some(it.expansion),
                slot: t + 1,
                gate_power: r.gate_power[t],
                grid_cost: cost_per_mwh * r.grid_power[t] * dt,
                total_cost: r.total_cost,
                relative_deviation: dev,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
