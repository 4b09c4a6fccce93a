//! Domain types of a distribution network with PV, storage and flexible
//! buildings, plus the per-device linear constraints and the cluster cost.
//!
//! Power quantities are MW / MVAr / MVA, energies MWh, voltages p.u., costs
//! USD/MWh. Device power is generation-positive at its bus.

mod devices;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use devices::{
    dcs_cost_expression, flexbuilding_constraints, pv_constraints, storage_constraints,
    storage_energy_trajectory,
};
pub use validate::{validate_relaxation_conditions, RelaxationReport, StorageCheck};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    /// Number of slots `T`.
    pub slots: usize,
    pub dt_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub load_p: Vec<f64>,
    pub load_q: Vec<f64>,
    #[serde(default)]
    pub shunt_g: f64,
    #[serde(default)]
    pub shunt_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub g: f64,
    pub b: f64,
    pub s_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederLink {
    pub bus: usize,
    pub s_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvUnit {
    pub bus: usize,
    pub p_min: Vec<f64>,
    pub p_max: Vec<f64>,
    /// Inner apparent-power bound; only zero is supported.
    #[serde(default)]
    pub s_min: Vec<f64>,
    pub s_max: Vec<f64>,
    /// Power-factor angle bounds (rad).
    pub pf_angle_min: f64,
    pub pf_angle_max: f64,
    pub cost_per_mwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageUnit {
    pub bus: usize,
    pub e_min: f64,
    pub e_max: f64,
    pub e0: f64,
    pub p_dis_max: f64,
    pub p_chg_max: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    pub cost_dis: f64,
    pub cost_chg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlexBuilding {
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// Required sum of the per-slot powers over the horizon.
    pub energy_total: f64,
    pub cost_per_mwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridUnit {
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// MW per hour.
    pub ramp: f64,
    /// Output before slot 1; `None` leaves the first slot unconstrained.
    #[serde(default)]
    pub p_initial: Option<f64>,
    pub cost_per_mwh: f64,
    pub grid_load: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    pub time: TimeGrid,
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub branches: Vec<Branch>,
    pub feeder: FeederLink,
    #[serde(default)]
    pub pv: Vec<PvUnit>,
    #[serde(default)]
    pub storage: Vec<StorageUnit>,
    #[serde(default)]
    pub flexbuildings: Vec<FlexBuilding>,
    pub grid: GridUnit,
    /// Segment count of every capacity polygon.
    pub lin_segments: usize,
    /// Power base for the flow equations (MVA per p.u.).
    #[serde(default = "one")]
    pub base_mva: f64,
}

fn one() -> f64 {
    1.0
}

pub const DEFAULT_SEGMENTS: usize = 12;

impl NetworkCase {
    pub fn bus_position(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Copy with every PV power and apparent-power cap multiplied by `alpha`.
    pub fn with_pv_scaled(&self, alpha: f64) -> NetworkCase {
        let mut c = self.clone();
        for u in &mut c.pv {
            for v in u.p_min.iter_mut().chain(&mut u.p_max).chain(&mut u.s_max).chain(&mut u.s_min) {
                *v *= alpha;
            }
        }
        c
    }

    /// Checks every field; errors carry the path of the offending field.
    pub fn validate(&self) -> Result<(), ModelError> {
        validate::validate_case(self)
    }
}
