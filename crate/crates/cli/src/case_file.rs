//! TOML case files.
//!
//! Units: powers MW, reactive powers MVAr, apparent powers MVA, energies MWh,
//! voltages p.u., admittances p.u. on `options.base_mva`, angles rad, costs
//! USD/MWh, slot length hours.

use std::path::Path;

use deragg::model::{
    Branch, Bus, FeederLink, FlexBuilding, GridUnit, NetworkCase, PvUnit, StorageUnit, TimeGrid, DEFAULT_SEGMENTS,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseOptions {
    #[serde(default = "default_segments")]
    pub lin_segments: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_base")]
    pub base_mva: f64,
}

fn default_segments() -> usize {
    DEFAULT_SEGMENTS
}

fn default_epsilon() -> f64 {
    1e-6
}

fn default_base() -> f64 {
    1.0
}

impl Default for CaseOptions {
    fn default() -> Self {
        CaseOptions {
            lin_segments: default_segments(),
            epsilon: default_epsilon(),
            base_mva: default_base(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub schema_version: u32,
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
    #[serde(default)]
    pub options: CaseOptions,
}

impl CaseFile {
    pub fn from_case(case: &NetworkCase, epsilon: f64) -> Self {
        CaseFile {
            schema_version: SCHEMA_VERSION,
            time: case.time.clone(),
            buses: case.buses.clone(),
            branches: case.branches.clone(),
            feeder: case.feeder.clone(),
            pv: case.pv.clone(),
            storage: case.storage.clone(),
            flexbuildings: case.flexbuildings.clone(),
            grid: case.grid.clone(),
            options: CaseOptions {
                lin_segments: case.lin_segments,
                epsilon,
                base_mva: case.base_mva,
            },
        }
    }

    pub fn to_case(&self) -> NetworkCase {
        NetworkCase {
            time: self.time.clone(),
            buses: self.buses.clone(),
            branches: self.branches.clone(),
            feeder: self.feeder.clone(),
            pv: self.pv.clone(),
            storage: self.storage.clone(),
            flexbuildings: self.flexbuildings.clone(),
            grid: self.grid.clone(),
            lin_segments: self.options.lin_segments,
            base_mva: self.options.base_mva,
        }
    }

    /// Parses and validates; errors name the offending field.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: CaseFile = toml::from_str(text).map_err(|e| CliError::Invalid(format!("case file: {}", e.message())))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::Invalid(format!(
                "schema_version: unsupported version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        if !(file.options.epsilon > 0.0) {
            return Err(CliError::Invalid("options.epsilon: must be positive".into()));
        }
        file.to_case().validate().map_err(|e| CliError::Invalid(e.to_string()))?;
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Invalid(format!("{}: not UTF-8", path.display())))?;
        let file = CaseFile::parse(text).map_err(|e| match e {
            CliError::Invalid(m) => CliError::Invalid(format!("{}: {m}", path.display())),
            other => other,
        })?;
        Ok((file, bytes))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("case files always serialize")
    }
}
