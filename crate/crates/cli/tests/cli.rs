use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use deragg::model::validate_relaxation_conditions;
use deragg::oracle::monolithic::centralized_cost;
use deragg_cli::artifacts::{DispatchReport, HullArtifact, RunReport};
use deragg_cli::case_file::CaseFile;
use deragg_cli::commands::FmeReport;
use deragg_cli::gen::{generate_case, GenSpec};
use proptest::prelude::*;
use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn deragg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deragg"))
        .args(args)
        .env("DERAGG_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read<T: for<'de> serde::Deserialize<'de>>(p: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const NO_DER: &str = r#"
schema_version = 1

[time]
slots = 2
dt_hours = 1.0

[[buses]]
id = 0
v_min = 0.95
v_max = 1.05
load_p = [0.3, 0.2]
load_q = [0.05, 0.05]

[[buses]]
id = 1
v_min = 0.95
v_max = 1.05
load_p = [0.4, 0.5]
load_q = [0.1, 0.1]

[[branches]]
from = 0
to = 1
g = 30.0
b = -90.0
s_max = 5.0

[feeder]
bus = 0
s_max = 5.0

[grid]
bus = 0
p_min = 0.0
p_max = 50.0
ramp = 20.0
cost_per_mwh = 40.0
grid_load = [6.0, 7.0]
"#;

fn write_case(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn golden() -> Value {
    serde_json::from_str(&std::fs::read_to_string(data("demo6.golden.json")).unwrap()).unwrap()
}

#[test]
fn gen_case_is_byte_reproducible_and_valid() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.toml");
    let b = dir.path().join("b.toml");
    for p in [&a, &b] {
        assert_eq!(code(&deragg(&["gen-case", "--seed", "1", "-o", s(p)])), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (file, _) = CaseFile::read(&a).unwrap();
    assert!(validate_relaxation_conditions(&file.to_case()).passed);
}

#[test]
fn bundled_demo_is_the_seeded_generator_output() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("demo.toml");
    let o = deragg(&[
        "gen-case", "--seed", "2024", "--buses", "6", "--pv", "2", "--storage", "1", "--flex", "1", "--slots", "4", "-o",
        s(&p),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(data("demo6.toml")).unwrap());
}

#[test]
fn device_free_case_aggregates_to_a_point() {
    let dir = TempDir::new().unwrap();
    let case = write_case(&dir, "c.toml", NO_DER);
    let hull = dir.path().join("hull.json");
    assert_eq!(code(&deragg(&["aggregate", s(&case), "-o", s(&hull)])), 0);
    let h: HullArtifact = read(&hull);
    assert!(h.converged);
    assert_eq!(h.affine_dim, 0);
    assert_eq!(h.vertices.len(), 1);
    // the gate covers the cluster load and the cost is zero
    let v = &h.vertices[0];
    assert!((v[0] - 0.7).abs() < 1e-6 && (v[1] - 0.7).abs() < 1e-6, "{v:?}");
    assert!(v[2].abs() < 1e-12);

    // dispatch against the single vertex is forced to it
    let out = dir.path().join("agg.json");
    let o = deragg(&["dispatch", s(&case), "--mode", "aggregated", "--hull", s(&hull), "-o", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: DispatchReport = read(&out);
    assert_eq!(r.result.gate_power, v[..2].to_vec());
    assert_eq!(r.result.lambda, Some(vec![1.0]));
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert!(csv.starts_with("slot,gate_power,grid_power,grid_cost"));
    assert_eq!(csv.lines().count(), 3);

    // both modes agree trivially
    let cmp = dir.path().join("cmp");
    assert_eq!(code(&deragg(&["compare", s(&case), "-o", s(&cmp)])), 0);
    let rep: RunReport = read(&cmp.join("report.json"));
    assert!(rep.flags.passed && rep.flags.converged);
    assert!(rep.costs.delta.abs() < 1e-9);
}

#[test]
fn malformed_case_names_the_branch() {
    let dir = TempDir::new().unwrap();
    let case = write_case(&dir, "bad.toml", &NO_DER.replace("to = 1", "to = 7"));
    let o = deragg(&["aggregate", s(&case), "-o", s(&dir.path().join("h.json"))]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("branches[0].to"), "{err}");
    assert!(!dir.path().join("h.json").exists());
}

#[test]
fn usage_errors() {
    let dir = TempDir::new().unwrap();
    let case = write_case(&dir, "c.toml", NO_DER);
    let out = dir.path().join("r.json");
    assert_eq!(code(&deragg(&["dispatch", s(&case), "--mode", "centralised", "-o", s(&out)])), 2);
    let o = deragg(&["dispatch", s(&case), "--mode", "aggregated", "-o", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--hull"));
    assert_eq!(code(&deragg(&["aggregate", "/no/such/case.toml", "-o", s(&out)])), 2);
    assert_eq!(code(&deragg(&["aggregate", s(&case), "-o", s(&out), "--epsilon", "-1"])), 2);
}

#[test]
fn infeasible_case_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let case = write_case(&dir, "c.toml", &NO_DER.replace("load_p = [0.4, 0.5]", "load_p = [40.0, 0.5]"));
    let o = deragg(&["dispatch", s(&case), "--mode", "centralized", "-o", s(&dir.path().join("r.json"))]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn demo_case_matches_golden() {
    let dir = TempDir::new().unwrap();
    let g = golden();
    let hull = dir.path().join("hull.json");
    assert_eq!(code(&deragg(&["aggregate", s(&data("demo6.toml")), "-o", s(&hull), "--seed", "0"])), 0);
    let h: HullArtifact = read(&hull);
    assert!(h.converged);
    assert_eq!(h.vertices.len() as u64, g["aggregate"]["vertex_count"].as_u64().unwrap());
    assert_eq!(h.facets.len() as u64, g["aggregate"]["facet_count"].as_u64().unwrap());

    let out = dir.path().join("cen.json");
    assert_eq!(code(&deragg(&["dispatch", s(&data("demo6.toml")), "--mode", "centralized", "-o", s(&out)])), 0);
    let r: DispatchReport = read(&out);
    let want = g["centralized"]["total_cost"].as_f64().unwrap();
    assert!((r.result.total_cost - want).abs() <= 1e-9 * want);
    for (a, b) in r.result.gate_power.iter().zip(g["centralized"]["gate_power"].as_array().unwrap()) {
        assert!((a - b.as_f64().unwrap()).abs() < 1e-9);
    }
    // the golden value also agrees with the independently assembled LP
    let (file, _) = CaseFile::read(&data("demo6.toml")).unwrap();
    let mono = centralized_cost(&file.to_case()).unwrap().unwrap();
    assert!((mono - want).abs() <= 1e-8 * want);

    // aggregated dispatch through the written hull reproduces it
    let agg = dir.path().join("agg.json");
    let o = deragg(&["dispatch", s(&data("demo6.toml")), "--mode", "aggregated", "--hull", s(&hull), "-o", s(&agg)]);
    assert_eq!(code(&o), 0);
    let a: DispatchReport = read(&agg);
    assert!((a.result.total_cost - want).abs() <= 1e-4 * want);
    assert!(a.max_complementarity.unwrap() <= 1e-9);
}

#[test]
fn capped_compare_reports_not_converged() {
    let dir = TempDir::new().unwrap();
    let cmp = dir.path().join("cmp");
    let o = deragg(&["compare", s(&data("demo6.toml")), "-o", s(&cmp), "--max-iterations", "1"]);
    assert_eq!(code(&o), 4);
    let rep: RunReport = read(&cmp.join("report.json"));
    assert!(!rep.flags.converged);
    assert_eq!(rep.trace.records.len(), 1);
    let it = std::fs::read_to_string(cmp.join("iterations.csv")).unwrap();
    assert!(it.starts_with("mode,iteration,vertex_count,expansion,slot,gate_power,grid_cost,total_cost,relative_deviation"));
    // 4 centralized rows plus 4 rows for the single iteration
    assert_eq!(it.lines().count(), 1 + 4 + 4);
}

#[test]
fn commands_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let spec = GenSpec {
        buses: 4,
        pv: 1,
        storage: 1,
        flexbuildings: 1,
        slots: 2,
    };
    let case = CaseFile::from_case(&generate_case(3, &spec).unwrap(), 1e-6);
    let path = write_case(&dir, "c.toml", &case.to_toml());
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("h{k}.json"));
        assert_eq!(code(&deragg(&["aggregate", s(&path), "-o", s(&out), "--seed", "4"])), 0);
        let h: HullArtifact = read(&out);
        runs.push((h.inputs_digest, h.vertices, h.facets));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn fme_oracle_writes_the_polygon_for_one_slot() {
    let dir = TempDir::new().unwrap();
    let spec = GenSpec {
        buses: 2,
        pv: 1,
        storage: 1,
        flexbuildings: 0,
        slots: 1,
    };
    let case = CaseFile::from_case(&generate_case(5, &spec).unwrap(), 1e-9);
    let path = write_case(&dir, "c.toml", &case.to_toml());
    let out = dir.path().join("fme.json");
    let o = deragg(&["oracle", "fme", s(&path), "-o", s(&out), "--segments", "6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: FmeReport = read(&out);
    assert_eq!(r.retained, 2);
    let poly = r.polygon.unwrap();
    assert!(poly.len() >= 3);

    let hull = dir.path().join("h.json");
    assert_eq!(code(&deragg(&["aggregate", s(&path), "-o", s(&hull), "--segments", "6"])), 0);
    let h: HullArtifact = read(&hull);
    assert_eq!(h.vertices.len(), poly.len());
    for v in &poly {
        assert!(h.vertices.iter().any(|w| (w[0] - v[0]).abs() < 1e-6 && (w[1] - v[1]).abs() < 1e-6));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn case_files_round_trip(seed in 0u64..10_000, buses in 1usize..6, slots in 1usize..4) {
        let spec = GenSpec { buses, pv: 1, storage: 1, flexbuildings: 1, slots };
        let case = generate_case(seed, &spec).unwrap();
        let file = CaseFile::from_case(&case, 1e-6);
        let back = CaseFile::parse(&file.to_toml()).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.to_case(), case);
    }
}
