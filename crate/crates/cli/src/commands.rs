use std::path::{Path, PathBuf};
use std::time::Instant;

use deragg::dispatch::{
    aggregated_ed, centralized_ed, compare_modes, recover_schedules, AggregateRegion, DispatchMode, Tolerances,
};
use deragg::lin_network::assemble_polyhedron;
use deragg::model::{validate_relaxation_conditions, NetworkCase};
use deragg::oracle::fme::{project_polyhedron, DEFAULT_ROW_CAP};
use deragg::oracle::polygon_vertices;
use deragg::pve::run_pve;
use serde::{Deserialize, Serialize};

use crate::artifacts::*;
use crate::case_file::CaseFile;
use crate::gen::{generate_case, GenSpec};
use crate::{CliError, Status};

/// Overrides for the values stored in the case file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFlags {
    pub epsilon: Option<f64>,
    pub segments: Option<usize>,
    pub seed: u64,
    pub max_iterations: Option<usize>,
}

pub struct LoadedCase {
    pub case: NetworkCase,
    pub settings: RunSettings,
    pub digest: String,
}

pub fn load_case(path: &Path, flags: &RunFlags) -> Result<LoadedCase, CliError> {
    let (file, bytes) = CaseFile::read(path)?;
    let mut case = file.to_case();
    if let Some(n) = flags.segments {
        if n < 4 {
            return Err(CliError::Invalid("--segments: need at least 4".into()));
        }
        case.lin_segments = n;
    }
    let epsilon = flags.epsilon.unwrap_or(file.options.epsilon);
    if !(epsilon > 0.0) {
        return Err(CliError::Invalid("--epsilon: must be positive".into()));
    }
    let settings = RunSettings {
        epsilon,
        lin_segments: case.lin_segments,
        max_iterations: flags.max_iterations.unwrap_or(deragg::pve::PveConfig::default().max_iterations),
        seed: flags.seed,
    };
    if settings.max_iterations == 0 {
        return Err(CliError::Invalid("--max-iterations: must be at least 1".into()));
    }
    let digest = inputs_digest(&bytes, &settings.flag_string());
    Ok(LoadedCase { case, settings, digest })
}

pub fn cmd_aggregate(case_path: &Path, out: &Path, flags: &RunFlags) -> Result<Status, CliError> {
    let start = Instant::now();
    let l = load_case(case_path, flags)?;
    let poly = assemble_polyhedron(&l.case)?;
    let r = run_pve(&poly, &l.settings.pve_config())?;
    let artifact = HullArtifact {
        schema_version: ARTIFACT_VERSION,
        inputs_digest: l.digest,
        settings: l.settings,
        converged: r.converged,
        dim: r.hull.dim,
        affine_dim: r.affine_dim,
        vertices: r.hull.vertices.clone(),
        facets: r
            .hull
            .facets
            .iter()
            .map(|f| FacetRecord {
                normal: f.normal.clone(),
                offset: f.offset,
            })
            .collect(),
        trace: r.trace,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(out, &artifact)?;
    Ok(if r.converged { Status::Ok } else { Status::NotConverged })
}

/// Path of the CSV series written next to a JSON report.
pub fn series_path(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

pub fn cmd_dispatch(case_path: &Path, mode: DispatchMode, hull: Option<&Path>, out: &Path) -> Result<Status, CliError> {
    let start = Instant::now();
    let l = load_case(case_path, &RunFlags::default())?;
    let case = &l.case;
    let (result, comp) = match mode {
        DispatchMode::Centralized => {
            let r = centralized_ed(case)?;
            let comp = r.device_schedules.as_ref().map(|s| s.max_complementarity());
            (r, comp)
        }
        DispatchMode::Aggregated => {
            let hull = hull.ok_or_else(|| CliError::Usage("aggregated mode needs --hull".into()))?;
            let artifact: HullArtifact = read_json(hull)?;
            let t = case.time.slots;
            if artifact.vertices.iter().any(|v| v.len() != t + 1) {
                return Err(CliError::Invalid(format!(
                    "{}: vertices do not have {} coordinates",
                    hull.display(),
                    t + 1
                )));
            }
            let region = AggregateRegion::new(artifact.vertices)?;
            let r = aggregated_ed(&region, &case.grid, &case.time)?;
            let comp = match recover_schedules(case, &r.gate_power, r.dcs_cost) {
                Ok(s) => Some(s.max_complementarity()),
                Err(e) => {
                    log::warn!("no device schedule recovered: {e}");
                    None
                }
            };
            (r, comp)
        }
    };
    let report = DispatchReport {
        schema_version: ARTIFACT_VERSION,
        inputs_digest: l.digest,
        max_complementarity: comp,
        relaxation_conditions_ok: validate_relaxation_conditions(case).passed,
        wall_seconds: start.elapsed().as_secs_f64(),
        result,
    };
    write_json(out, &report)?;
    write_dispatch_csv(&series_path(out), &report.result, case.grid.cost_per_mwh, case.time.dt_hours)?;
    Ok(Status::Ok)
}

pub const REPORT_FILE: &str = "report.json";
pub const SLOTS_FILE: &str = "slots.csv";
pub const ITERATIONS_FILE: &str = "iterations.csv";

pub fn cmd_compare(case_path: &Path, out_dir: &Path, flags: &RunFlags, tol: Tolerances) -> Result<Status, CliError> {
    let start = Instant::now();
    let l = load_case(case_path, flags)?;
    std::fs::create_dir_all(out_dir)?;
    let c = compare_modes(&l.case, &l.settings.pve_config(), tol)?;
    let comp = c
        .centralized
        .device_schedules
        .as_ref()
        .map(|s| s.max_complementarity())
        .unwrap_or(0.0);
    let report = RunReport {
        schema_version: ARTIFACT_VERSION,
        inputs_digest: l.digest,
        settings: l.settings,
        tolerances: tol,
        hull: c.hull,
        slots: RunReport::slot_table(&c),
        costs: CostComparison {
            centralized_total: c.centralized.total_cost,
            aggregated_total: c.aggregated.total_cost,
            centralized_dcs: c.centralized.dcs_cost,
            aggregated_dcs: c.aggregated.dcs_cost,
            delta: c.cost_delta,
            relative_deviation: c.cost_relative_deviation,
        },
        flags: Flags {
            converged: c.converged,
            passed: c.passed,
            relaxation_conditions_ok: validate_relaxation_conditions(&l.case).passed,
            max_complementarity: comp,
        },
        timings: Timings {
            pve_seconds: c.trace.records.iter().map(|r| r.wall_seconds).sum(),
            total_seconds: start.elapsed().as_secs_f64(),
        },
        trace: c.trace.clone(),
    };
    write_json(&out_dir.join(REPORT_FILE), &report)?;
    write_slots_csv(&out_dir.join(SLOTS_FILE), &report.slots)?;
    let (price, dt) = (l.case.grid.cost_per_mwh, l.case.time.dt_hours);
    write_iterations_csv(&out_dir.join(ITERATIONS_FILE), &c, price, dt)?;
    Ok(if !c.converged {
        Status::NotConverged
    } else if !c.passed {
        Status::OutOfTolerance
    } else {
        Status::Ok
    })
}

pub fn cmd_gen_case(seed: u64, spec: &GenSpec, out: &Path) -> Result<Status, CliError> {
    let case = generate_case(seed, spec)?;
    let file = CaseFile::from_case(&case, crate::case_file::CaseOptions::default().epsilon);
    let header = format!(
        "# Synthetic case generated with seed {seed} ({} buses, {} PV, {} storage, {} flexible buildings, {} slots).\n",
        spec.buses, spec.pv, spec.storage, spec.flexbuildings, spec.slots
    );
    std::fs::write(out, header + &file.to_toml())?;
    Ok(Status::Ok)
}

/// Output of `oracle fme`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmeReport {
    pub inputs_digest: String,
    pub eliminated: usize,
    pub retained: usize,
    pub row_count: usize,
    /// `rows[i] . y <= rhs[i]`, rows scaled to unit max-abs coefficient.
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    /// Polygon vertices when two coordinates are retained.
    pub polygon: Option<Vec<Vec<f64>>>,
}

pub fn cmd_oracle_fme(case_path: &Path, out: &Path, segments: Option<usize>, cap: Option<usize>) -> Result<Status, CliError> {
    let l = load_case(
        case_path,
        &RunFlags {
            segments,
            ..RunFlags::default()
        },
    )?;
    let poly = assemble_polyhedron(&l.case)?;
    let sys = project_polyhedron(&poly, cap.unwrap_or(DEFAULT_ROW_CAP)).map_err(|e| CliError::Internal(e.to_string()))?;
    if sys.infeasible {
        return Err(CliError::Infeasible("the projection is empty".into()));
    }
    let polygon = (poly.ny() == 2).then(|| polygon_vertices(&sys.rows, &sys.rhs));
    let report = FmeReport {
        inputs_digest: l.digest,
        eliminated: poly.nx(),
        retained: poly.ny(),
        row_count: sys.rows.len(),
        rows: sys.rows,
        rhs: sys.rhs,
        polygon,
    };
    write_json(out, &report)?;
    Ok(Status::Ok)
}
