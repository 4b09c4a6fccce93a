use std::collections::{HashMap, HashSet};

use super::{bbox_diagonal, facet_normal, Facet, HullError, VertexHull, RANK_TOL};
use crate::linalg::{dot, norm, sub, OrthoBasis};

/// Visibility threshold relative to the input bounding-box diagonal.
const VISIBLE_REL: f64 = 1e-11;
/// Normals closer than this are treated as the same hyperplane.
const MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Face {
    verts: Vec<usize>,
    /// `nbr[k]` is the face across the ridge opposite `verts[k]`.
    nbr: Vec<usize>,
    normal: Vec<f64>,
    /// `normal . (x - center) <= offset`.
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

/// Incremental simplicial hull.
#[derive(Debug, Clone)]
pub struct HullBuilder {
    d: usize,
    pts: Vec<Vec<f64>>,
    seen: HashSet<Vec<u64>>,
    center: Vec<f64>,
    eps: f64,
    faces: Vec<Face>,
    stamp: Vec<u32>,
    epoch: u32,
    // one-dimensional hulls keep only the extreme indices
    line: Option<(usize, usize)>,
}

fn key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|v| (v + 0.0).to_bits()).collect()
}

impl HullBuilder {
    pub fn new(points: &[Vec<f64>]) -> Result<Self, HullError> {
        let d = points.first().map_or(0, |p| p.len());
        if d == 0 {
            return Err(HullError::InvalidInput("empty point set".into()));
        }
        let mut b = HullBuilder {
            d,
            pts: Vec::new(),
            seen: HashSet::new(),
            center: vec![0.0; d],
            eps: 0.0,
            faces: Vec::new(),
            stamp: Vec::new(),
            epoch: 0,
            line: None,
        };
        for p in points {
            b.check_point(p)?;
            if b.seen.insert(key(p)) {
                b.pts.push(p.clone());
            }
        }
        let diag = bbox_diagonal(&b.pts);
        b.eps = VISIBLE_REL * diag.max(f64::MIN_POSITIVE);
        if d == 1 {
            let mut lo = 0;
            let mut hi = 0;
            for (i, p) in b.pts.iter().enumerate() {
                if p[0] < b.pts[lo][0] {
                    lo = i;
                }
                if p[0] > b.pts[hi][0] {
                    hi = i;
                }
            }
            if lo == hi {
                return Err(HullError::DegenerateDimension { rank: 0 });
            }
            b.line = Some((lo, hi));
            return Ok(b);
        }
        let simplex = b.initial_simplex(diag)?;
        b.build_simplex(&simplex)?;
        let rest: Vec<usize> = (0..b.pts.len()).filter(|i| !simplex.contains(i)).collect();
        b.assign(rest, 0..b.faces.len());
        b.expand()?;
        Ok(b)
    }

    fn check_point(&self, p: &[f64]) -> Result<(), HullError> {
        if p.len() != self.d {
            return Err(HullError::InvalidInput(format!(
                "point of dimension {} in a {}-dimensional set",
                p.len(),
                self.d
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(HullError::InvalidInput("non-finite coordinate".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Adds points and restores the hull.
    pub fn add(&mut self, points: &[Vec<f64>]) -> Result<(), HullError> {
        let mut fresh = Vec::new();
        for p in points {
            self.check_point(p)?;
            if self.seen.insert(key(p)) {
                fresh.push(self.pts.len());
                self.pts.push(p.clone());
            }
        }
        if let Some((lo, hi)) = self.line.as_mut() {
            for &i in &fresh {
                if self.pts[i][0] < self.pts[*lo][0] {
                    *lo = i;
                }
                if self.pts[i][0] > self.pts[*hi][0] {
                    *hi = i;
                }
            }
            return Ok(());
        }
        let n = self.faces.len();
        self.assign(fresh, 0..n);
        self.expand()
    }

    /// Largest signed distance of `p` above any current face.
    pub fn max_distance(&self, p: &[f64]) -> f64 {
        if let Some((lo, hi)) = self.line {
            return (self.pts[lo][0] - p[0]).max(p[0] - self.pts[hi][0]);
        }
        let q = sub(p, &self.center);
        self.faces
            .iter()
            .filter(|f| f.alive)
            .map(|f| dot(&f.normal, &q) - f.offset)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn initial_simplex(&self, diag: f64) -> Result<Vec<usize>, HullError> {
        let d = self.d;
        let mut first = 0;
        for (i, p) in self.pts.iter().enumerate() {
            if p.iter().zip(&self.pts[first]).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne())
                == Some(std::cmp::Ordering::Less)
            {
                first = i;
            }
        }
        let origin = self.pts[first].clone();
        let mut chosen = vec![first];
        let mut basis = OrthoBasis::new(d);
        while chosen.len() <= d {
            let mut best: Option<(usize, f64)> = None;
            for (i, p) in self.pts.iter().enumerate() {
                let r = norm(&basis.residual(&sub(p, &origin)));
                if best.map_or(true, |(_, br)| r > br) {
                    best = Some((i, r));
                }
            }
            let (i, r) = best.unwrap();
            if r <= RANK_TOL * diag || !basis.try_add(&sub(&self.pts[i], &origin), RANK_TOL) {
                return Err(HullError::DegenerateDimension {
                    rank: chosen.len() - 1,
                });
            }
            chosen.push(i);
        }
        Ok(chosen)
    }

    fn plane(&self, verts: &[usize]) -> Result<(Vec<f64>, f64), HullError> {
        let block: Vec<Vec<f64>> = verts.iter().map(|&v| sub(&self.pts[v], &self.center)).collect();
        let origin = vec![0.0; self.d];
        let (alpha, b) = match facet_normal(&block, &origin) {
            Ok(ab) => ab,
            Err(_) => return self.plane_by_complement(&block),
        };
        let n = norm(&alpha);
        Ok((alpha.iter().map(|v| v / n).collect(), b / n))
    }

    fn plane_by_complement(&self, block: &[Vec<f64>]) -> Result<(Vec<f64>, f64), HullError> {
        let mut basis = OrthoBasis::new(self.d);
        for p in &block[1..] {
            basis.try_add(&sub(p, &block[0]), 1e-14);
        }
        if basis.rank() != self.d - 1 {
            return Err(HullError::Numerical("facet vertices are affinely dependent".into()));
        }
        let mut n = basis.complement().pop().unwrap();
        let mut off = dot(&n, &block[0]);
        if off < 0.0 {
            n.iter_mut().for_each(|v| *v = -*v);
            off = -off;
        }
        Ok((n, off))
    }

    fn new_face(&mut self, verts: Vec<usize>) -> Result<usize, HullError> {
        let (normal, offset) = self.plane(&verts)?;
        let d = self.d;
        self.faces.push(Face {
            verts,
            nbr: vec![usize::MAX; d],
            normal,
            offset,
            outside: Vec::new(),
            alive: true,
        });
        self.stamp.push(0);
        Ok(self.faces.len() - 1)
    }

    fn build_simplex(&mut self, s: &[usize]) -> Result<(), HullError> {
        let d = self.d;
        for k in 0..d {
            for (c, p) in self.center.iter_mut().zip(&self.pts[s[k]]) {
                *c += p;
            }
        }
        for (c, p) in self.center.iter_mut().zip(&self.pts[s[d]]) {
            *c = (*c + p) / (d + 1) as f64;
        }
        for k in 0..=d {
            let verts: Vec<usize> = (0..=d).filter(|&j| j != k).map(|j| s[j]).collect();
            self.new_face(verts)?;
        }
        for k in 0..=d {
            let nbr: Vec<usize> = (0..=d).filter(|&j| j != k).collect();
            self.faces[k].nbr = nbr;
        }
        Ok(())
    }

    fn dist(&self, f: usize, p: usize) -> f64 {
        let face = &self.faces[f];
        let q = &self.pts[p];
        face.normal
            .iter()
            .zip(q.iter().zip(&self.center))
            .map(|(n, (x, c))| n * (x - c))
            .sum::<f64>()
            - face.offset
    }

    fn assign(&mut self, points: Vec<usize>, faces: std::ops::Range<usize>) {
        for p in points {
            for f in faces.clone() {
                if self.faces[f].alive && self.dist(f, p) > self.eps {
                    self.faces[f].outside.push(p);
                    break;
                }
            }
        }
    }

    fn expand(&mut self) -> Result<(), HullError> {
        let mut i = 0;
        while i < self.faces.len() {
            if self.faces[i].alive && !self.faces[i].outside.is_empty() {
                self.process(i)?;
            }
            i += 1;
        }
        Ok(())
    }

    fn process(&mut self, start: usize) -> Result<(), HullError> {
        let d = self.d;
        let apex = {
            let face = &self.faces[start];
            let mut best = face.outside[0];
            let mut bd = f64::NEG_INFINITY;
            for &p in &face.outside {
                let dd = self.dist(start, p);
                if dd > bd {
                    bd = dd;
                    best = p;
                }
            }
            best
        };

        // visible region by flood fill
        self.epoch += 1;
        let epoch = self.epoch;
        let mut visible = vec![start];
        self.stamp[start] = epoch;
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        let mut q = 0;
        while q < visible.len() {
            let f = visible[q];
            q += 1;
            for k in 0..d {
                let g = self.faces[f].nbr[k];
                if self.stamp[g] == epoch {
                    continue;
                }
                if self.stamp[g] == epoch.wrapping_neg() {
                    horizon.push((f, k));
                    continue;
                }
                if self.dist(g, apex) > self.eps {
                    self.stamp[g] = epoch;
                    visible.push(g);
                } else {
                    self.stamp[g] = epoch.wrapping_neg();
                    horizon.push((f, k));
                }
            }
        }

        let mut orphans: Vec<usize> = Vec::new();
        for &f in &visible {
            self.faces[f].alive = false;
            orphans.extend(self.faces[f].outside.drain(..));
        }
        orphans.retain(|&p| p != apex);

        let first_new = self.faces.len();
        let mut ridges: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
        for (f, k) in horizon {
            let mut verts = self.faces[f].verts.clone();
            verts[k] = apex;
            let other = self.faces[f].nbr[k];
            let nf = self.new_face(verts)?;
            self.faces[nf].nbr[k] = other;
            let slot = self.faces[other]
                .nbr
                .iter()
                .position(|&x| x == f)
                .ok_or_else(|| HullError::Numerical("broken face adjacency".into()))?;
            self.faces[other].nbr[slot] = nf;
            for j in 0..d {
                if j == k {
                    continue;
                }
                let mut ridge: Vec<usize> = self.faces[nf]
                    .verts
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, &v)| v)
                    .collect();
                ridge.sort_unstable();
                if let Some((g, gj)) = ridges.remove(&ridge) {
                    self.faces[nf].nbr[j] = g;
                    self.faces[g].nbr[gj] = nf;
                } else {
                    ridges.insert(ridge, (nf, j));
                }
            }
        }
        if !ridges.is_empty() {
            return Err(HullError::Numerical("horizon is not a closed ridge cycle".into()));
        }
        let end = self.faces.len();
        self.assign(orphans, first_new..end);
        Ok(())
    }

    /// Current hull with non-extreme points removed and coplanar faces merged.
    pub fn snapshot(&self) -> Result<VertexHull, HullError> {
        let d = self.d;
        if let Some((lo, hi)) = self.line {
            let (a, b) = (self.pts[lo][0], self.pts[hi][0]);
            return Ok(VertexHull {
                dim: 1,
                vertices: vec![vec![a], vec![b]],
                facets: vec![
                    Facet {
                        normal: vec![-1.0],
                        offset: -a,
                        vertices: vec![0],
                    },
                    Facet {
                        normal: vec![1.0],
                        offset: b,
                        vertices: vec![1],
                    },
                ],
                interior_point: vec![0.5 * (a + b)],
            });
        }
        let alive: Vec<usize> = (0..self.faces.len()).filter(|&f| self.faces[f].alive).collect();

        // extreme-point test: incident normals must span the space
        let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
        for &f in &alive {
            for &v in &self.faces[f].verts {
                incident.entry(v).or_default().push(f);
            }
        }
        let mut extreme: Vec<usize> = incident
            .iter()
            .filter(|(_, fs)| {
                let mut basis = OrthoBasis::new(d);
                for &f in fs.iter() {
                    basis.try_add(&self.faces[f].normal, MERGE_TOL);
                    if basis.rank() == d {
                        return true;
                    }
                }
                false
            })
            .map(|(&v, _)| v)
            .collect();
        extreme.sort_by(|&a, &b| lex(&self.pts[a], &self.pts[b]));
        let out_index: HashMap<usize, usize> = extreme.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let vertices: Vec<Vec<f64>> = extreme.iter().map(|&v| self.pts[v].clone()).collect();
        let mut centroid = vec![0.0; d];
        for v in &vertices {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= vertices.len() as f64);

        // merge coplanar neighbours
        let pos: HashMap<usize, usize> = alive.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let mut parent: Vec<usize> = (0..alive.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (i, &f) in alive.iter().enumerate() {
            for &g in &self.faces[f].nbr {
                let j = pos[&g];
                if j > i && norm(&sub(&self.faces[f].normal, &self.faces[g].normal)) <= MERGE_TOL {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut group_of: HashMap<usize, usize> = HashMap::new();
        for i in 0..alive.len() {
            let r = find(&mut parent, i);
            let gi = *group_of.entry(r).or_insert_with(|| {
                groups.push((i, Vec::new()));
                groups.len() - 1
            });
            groups[gi].1.push(i);
        }

        let mut facets = Vec::with_capacity(groups.len());
        for (rep, members) in groups {
            let mut verts: Vec<usize> = members
                .iter()
                .flat_map(|&i| self.faces[alive[i]].verts.iter().copied())
                .filter_map(|v| out_index.get(&v).copied())
                .collect();
            verts.sort_unstable();
            verts.dedup();
            let face = &self.faces[alive[rep]];
            let (normal, offset) = match self.reported_plane(&verts, &vertices, &centroid) {
                Some(p) => p,
                None => {
                    // fall back to the internal plane, moved to original coordinates
                    (face.normal.clone(), face.offset + dot(&face.normal, &self.center))
                }
            };
            facets.push(Facet {
                normal,
                offset,
                vertices: verts,
            });
        }
        facets.sort_by(|a, b| lex(&a.normal, &b.normal).then(a.offset.total_cmp(&b.offset)));
        Ok(VertexHull {
            dim: d,
            vertices,
            facets,
            interior_point: centroid,
        })
    }

    /// Unit outward plane through `d` well-spread facet vertices, computed in
    /// the frame centred on the vertex centroid.
    fn reported_plane(&self, verts: &[usize], vertices: &[Vec<f64>], centroid: &[f64]) -> Option<(Vec<f64>, f64)> {
        let d = self.d;
        if verts.len() < d {
            return None;
        }
        let shifted: Vec<Vec<f64>> = verts.iter().map(|&v| sub(&vertices[v], centroid)).collect();
        let mut chosen = vec![0usize];
        let mut basis = OrthoBasis::new(d);
        while chosen.len() < d {
            let mut best: Option<(usize, f64)> = None;
            for (i, p) in shifted.iter().enumerate() {
                let r = norm(&basis.residual(&sub(p, &shifted[0])));
                if best.map_or(true, |(_, br)| r > br) {
                    best = Some((i, r));
                }
            }
            let (i, _) = best?;
            if !basis.try_add(&sub(&shifted[i], &shifted[0]), RANK_TOL) {
                return None;
            }
            chosen.push(i);
        }
        let block: Vec<Vec<f64>> = chosen.iter().map(|&i| shifted[i].clone()).collect();
        let (alpha, b) = facet_normal(&block, &vec![0.0; d]).ok()?;
        let n = norm(&alpha);
        let normal: Vec<f64> = alpha.iter().map(|v| v / n).collect();
        let offset = b / n + dot(&normal, centroid);
        Some((normal, offset))
    }
}

fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}
