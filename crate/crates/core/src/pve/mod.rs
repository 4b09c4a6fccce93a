//! Progressive vertex enumeration of the projection of a polyhedron onto its
//! retained variables.
//!
//! The search runs in a normalized frame: each retained coordinate is mapped
//! to `[0, 1]` by its range over the projection, and the result is reduced to
//! the affine hull of the projection. Hulls are grown by searching along the
//! outward normal of every facet until the largest support gap, relative to
//! the hull's bounding-box diagonal, drops below `epsilon`.

mod frame;

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lin_network::Polyhedron;
use crate::linalg::{norm, sub};
use crate::lp::{LpError, LpStatus, PreparedLp};
use crate::polytope::{HullBuilder, HullError, VertexHull};

pub use frame::AffineFrame;

/// A candidate vertex is new only if it lies this far outside the hull
/// (normalized frame).
pub const NOVELTY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PveConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub max_vertices: usize,
    /// Seed for the random directions used when the initial searches
    /// coincide.
    pub seed: u64,
}

impl Default for PveConfig {
    fn default() -> Self {
        PveConfig {
            epsilon: 1e-6,
            max_iterations: 100,
            max_vertices: 200_000,
            seed: 0,
        }
    }
}

impl PveConfig {
    pub fn validate(&self) -> Result<(), PveError> {
        if !(self.epsilon > 0.0) {
            return Err(PveError::Config("epsilon must be positive".into()));
        }
        if self.max_iterations == 0 || self.max_vertices == 0 {
            return Err(PveError::Config("iteration and vertex caps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Vertices discovered after this iteration (a prefix of
    /// [`PveResult::vertices`]).
    pub vertex_count: usize,
    /// Expansion amount of the hull searched in this iteration.
    pub expansion: f64,
    pub facets_searched: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PveTrace {
    pub records: Vec<IterationRecord>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PveError {
    #[error("the projected region is empty")]
    EmptyRegion,
    #[error("the projected region is unbounded")]
    Unbounded,
    #[error("could not find {needed} affinely independent vertices (affine rank {rank})")]
    DegenerateDimension { rank: usize, needed: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Hull(#[from] HullError),
}

/// Optimizer over a polyhedron's projection.
#[derive(Debug, Clone)]
pub struct Projector {
    lp: PreparedLp,
    nx: usize,
    ny: usize,
}

/// A vertex of the projection and the eliminated variables realizing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Found {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
}

impl Projector {
    pub fn new(omega: &Polyhedron) -> Result<Self, PveError> {
        let lp = PreparedLp::new(&omega.to_lp())?.ok_or(PveError::EmptyRegion)?;
        Ok(Projector {
            lp,
            nx: omega.nx(),
            ny: omega.ny(),
        })
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    fn lift(&self, eta: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.nx + self.ny];
        c[self.nx..].copy_from_slice(eta);
        c
    }

    /// `max eta . y` over the projection.
    pub fn support(&self, eta: &[f64]) -> Result<f64, PveError> {
        let s = self.lp.maximize(&self.lift(eta))?;
        match s.status {
            LpStatus::Optimal => Ok(s.objective_value),
            LpStatus::Unbounded => Err(PveError::Unbounded),
            LpStatus::Infeasible => Err(PveError::EmptyRegion),
        }
    }

    /// Maximizer of `eta . y`, refined by maximizing `y_1, y_2, ...` in turn
    /// on the optimal face so that the result is a vertex.
    pub fn search(&self, eta: &[f64]) -> Result<Found, PveError> {
        let mut objectives = vec![self.lift(eta)];
        for k in 0..self.ny {
            let mut e = vec![0.0; self.ny];
            e[k] = 1.0;
            objectives.push(self.lift(&e));
        }
        let refs: Vec<&[f64]> = objectives.iter().map(|v| v.as_slice()).collect();
        let s = self.lp.maximize_lex(&refs)?;
        match s.status {
            LpStatus::Optimal => Ok(Found {
                y: s.point[self.nx..].to_vec(),
                x: s.point[..self.nx].to_vec(),
            }),
            LpStatus::Unbounded => Err(PveError::Unbounded),
            LpStatus::Infeasible => Err(PveError::EmptyRegion),
        }
    }
}

/// Vertex of the projection of `omega` maximizing `eta . y` (ties broken by
/// maximizing the coordinates in order).
pub fn search_vertex(omega: &Polyhedron, eta: &[f64]) -> Result<Vec<f64>, PveError> {
    if norm(eta) == 0.0 {
        return Err(PveError::Config("search direction must be nonzero".into()));
    }
    Ok(Projector::new(omega)?.search(eta)?.y)
}

/// Vertices found along `e_1..e_n` and `(-1, ..., -1)`, deduplicated, then
/// augmented by seeded random directions until `n + 1` of them are affinely
/// independent. Coordinates are those of `frame` (reduced, normalized).
pub fn initial_vertices(
    proj: &Projector,
    frame: &AffineFrame,
    seed: u64,
) -> Result<Vec<(Vec<f64>, Found)>, PveError> {
    let r = frame.rank();
    let mut dirs: Vec<Vec<f64>> = (0..r)
        .map(|i| {
            let mut e = vec![0.0; r];
            e[i] = 1.0;
            e
        })
        .collect();
    dirs.push(vec![-1.0; r]);
    let mut out: Vec<(Vec<f64>, Found)> = Vec::new();
    let mut span = crate::linalg::OrthoBasis::new(r);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tries = 0;
    let mut queue = dirs.into_iter();
    loop {
        let dir = match queue.next() {
            Some(d) => d,
            None => {
                if span.rank() == r || tries >= 64 * (r + 1) {
                    break;
                }
                tries += 1;
                let mut d: Vec<f64> = (0..r).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = norm(&d);
                d.iter_mut().for_each(|v| *v /= n);
                d
            }
        };
        let found = proj.search(&frame.direction_to_y(&dir))?;
        let z = frame.to_reduced(&found.y);
        if out.iter().any(|(w, _)| norm(&sub(w, &z)) <= NOVELTY_TOL) {
            continue;
        }
        if let Some((z0, _)) = out.first() {
            span.try_add(&sub(&z, z0), 1e-9);
        }
        out.push((z, found));
    }
    if span.rank() < r {
        // the frame search already holds r + 1 independent vertices
        return Ok(frame.anchor_vertices().to_vec());
    }
    Ok(out)
}

/// `max_i (support of omega along facet i - offset_i) / D` for a hull in
/// the original coordinates, `D` its bounding-box diagonal.
pub fn expansion_amount(hull: &VertexHull, omega: &Polyhedron) -> Result<f64, PveError> {
    let proj = Projector::new(omega)?;
    let d = hull.bbox_diagonal();
    let mut worst = 0.0f64;
    for f in &hull.facets {
        worst = worst.max(proj.support(&f.normal)? - f.offset);
    }
    Ok(if d > 0.0 { worst / d } else { worst })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PveResult {
    /// Hull of the discovered vertices, in the original coordinates.
    pub hull: VertexHull,
    /// Discovered vertices in discovery order.
    pub vertices: Vec<Vec<f64>>,
    /// Eliminated variables realizing each vertex.
    pub witnesses: Vec<Vec<f64>>,
    pub trace: PveTrace,
    pub converged: bool,
    /// Dimension of the affine hull of the projection.
    pub affine_dim: usize,
}

fn key(z: &[f64]) -> Vec<u64> {
    z.iter().map(|v| (v + 0.0).to_bits()).collect()
}

/// Inner approximation of the projection of `omega` by progressive vertex
/// enumeration.
pub fn run_pve(omega: &Polyhedron, cfg: &PveConfig) -> Result<PveResult, PveError> {
    run_pve_observed(omega, cfg, |_, _| {})
}

/// [`run_pve`] that hands every iteration record and the vertices found so
/// far (discovery order) to `observe`.
pub fn run_pve_observed(
    omega: &Polyhedron,
    cfg: &PveConfig,
    mut observe: impl FnMut(&IterationRecord, &[Vec<f64>]),
) -> Result<PveResult, PveError> {
    cfg.validate()?;
    let proj = Projector::new(omega)?;
    let frame = AffineFrame::detect(&proj)?;
    let r = frame.rank();
    let start = Instant::now();

    let init = if r == 0 {
        frame.anchor_vertices()[..1].to_vec()
    } else {
        initial_vertices(&proj, &frame, cfg.seed)?
    };
    let mut zs: Vec<Vec<f64>> = Vec::new();
    let mut vertices = Vec::new();
    let mut witnesses = Vec::new();
    let mut ids: HashMap<Vec<u64>, usize> = HashMap::new();
    for (z, f) in init {
        ids.insert(key(&z), zs.len());
        zs.push(z);
        vertices.push(f.y);
        witnesses.push(f.x);
    }
    let mut trace = PveTrace::default();
    if r == 0 {
        trace.records.push(IterationRecord {
            iteration: 1,
            vertex_count: 1,
            expansion: 0.0,
            facets_searched: 0,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
        observe(&trace.records[0], &vertices);
        let hull = frame.lift_point_hull(&vertices[0]);
        return Ok(PveResult {
            hull,
            vertices,
            witnesses,
            trace,
            converged: true,
            affine_dim: 0,
        });
    }

    let mut builder = HullBuilder::new(&zs)?;
    let mut gap_cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut converged = false;
    for iteration in 1..=cfg.max_iterations {
        let t0 = Instant::now();
        let hull = builder.snapshot()?;
        let diag = hull.bbox_diagonal();
        let facets: Vec<(Vec<usize>, &crate::polytope::Facet)> = hull
            .facets
            .iter()
            .map(|f| {
                let mut k: Vec<usize> = f.vertices.iter().map(|&i| ids[&key(&hull.vertices[i])]).collect();
                k.sort_unstable();
                (k, f)
            })
            .collect();
        let todo: Vec<usize> = (0..facets.len()).filter(|&i| !gap_cache.contains_key(&facets[i].0)).collect();
        let searched: Vec<Result<(f64, Option<Found>), PveError>> = todo
            .par_iter()
            .map(|&i| {
                let f = facets[i].1;
                let eta = frame.direction_to_y(&f.normal);
                let value = proj.support(&eta)?;
                let gap = frame.y_value_to_reduced(&f.normal, value) - f.offset;
                if gap > NOVELTY_TOL {
                    Ok((gap, Some(proj.search(&eta)?)))
                } else {
                    Ok((gap, None))
                }
            })
            .collect();
        let mut worst = 0.0f64;
        let mut fresh: Vec<(Vec<f64>, Found)> = Vec::new();
        for (&i, res) in todo.iter().zip(searched) {
            let (gap, found) = res?;
            worst = worst.max(gap);
            match found {
                None => {
                    gap_cache.insert(facets[i].0.clone(), gap);
                }
                Some(f) => {
                    let z = frame.to_reduced(&f.y);
                    if builder.max_distance(&z) > NOVELTY_TOL
                        && !ids.contains_key(&key(&z))
                        && !fresh.iter().any(|(w, _)| norm(&sub(w, &z)) <= NOVELTY_TOL)
                    {
                        fresh.push((z, f));
                    }
                }
            }
        }
        for (k, _) in &facets {
            if let Some(&g) = gap_cache.get(k) {
                worst = worst.max(g);
            }
        }
        let expansion = worst / diag;
        let added: Vec<Vec<f64>> = fresh.iter().map(|(z, _)| z.clone()).collect();
        for (z, f) in fresh {
            ids.insert(key(&z), zs.len());
            zs.push(z);
            vertices.push(f.y);
            witnesses.push(f.x);
        }
        if !added.is_empty() {
            builder.add(&added)?;
        }
        trace.records.push(IterationRecord {
            iteration,
            vertex_count: zs.len(),
            expansion,
            facets_searched: todo.len(),
            wall_seconds: t0.elapsed().as_secs_f64(),
        });
        observe(trace.records.last().unwrap(), &vertices);
        log::debug!("pve iteration {iteration}: {} vertices, expansion {expansion:.3e}", zs.len());
        if expansion < cfg.epsilon || added.is_empty() {
            converged = expansion < cfg.epsilon;
            break;
        }
        if zs.len() >= cfg.max_vertices {
            break;
        }
    }
    let z_hull = builder.snapshot()?;
    let ys = z_hull.vertices.iter().map(|z| vertices[ids[&key(z)]].clone()).collect();
    let hull = frame.lift_hull(&z_hull, ys);
    Ok(PveResult {
        hull,
        vertices,
        witnesses,
        trace,
        converged,
        affine_dim: r,
    })
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}
