//! Newest-vertex bisection with conforming closure.
//!
//! Each tet carries its vertices in refinement order `(x0, x1, x2, x3)` and a
//! generation `k`; it is bisected at edge `(x0, xd)` with `d = 3 - k mod 3`,
//! producing `(x0, .., x_{d-1}, z, x_{d+1}, .., x3)` and
//! `(x1, .., xd, z, x_{d+1}, .., x3)` at generation `k + 1`.

use rustc_hash::FxHashMap;

use super::{Bisection, Region, TetMesh};
use crate::error::{Error, Result};
use crate::geometry::{self, Point, TET_EDGES};

/// Closure sweeps before giving up; a compatible initial mesh needs only a
/// handful.
const MAX_SWEEPS: usize = 200;

struct Refiner {
    vertices: Vec<Point>,
    elems: Vec<Bisection>,
    regions: Vec<Region>,
    midpoints: FxHashMap<(usize, usize), usize>,
}

impl Refiner {
    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&z) = self.midpoints.get(&key) {
            return z;
        }
        let z = self.vertices.len();
        self.vertices
            .push(geometry::midpoint(&self.vertices[a], &self.vertices[b]));
        self.midpoints.insert(key, z);
        z
    }

    /// Bisect element `t` in place; the second child is appended.
    fn bisect(&mut self, t: usize) {
        let Bisection { order: o, level } = self.elems[t];
        let d = 3 - (level as usize % 3);
        let (a, b) = self.elems[t].edge();
        let z = self.midpoint(a, b);
        let (c1, c2) = match d {
            3 => ([o[0], o[1], o[2], z], [o[1], o[2], o[3], z]),
            2 => ([o[0], o[1], z, o[3]], [o[1], o[2], z, o[3]]),
            _ => ([o[0], z, o[2], o[3]], [o[1], z, o[2], o[3]]),
        };
        let level = level.wrapping_add(1);
        self.elems[t] = Bisection { order: c1, level };
        self.elems.push(Bisection { order: c2, level });
        self.regions.push(self.regions[t]);
    }

    fn has_split_edge(&self, t: usize) -> bool {
        let o = &self.elems[t].order;
        TET_EDGES.iter().any(|&(i, j)| {
            let (a, b) = (o[i].min(o[j]), o[i].max(o[j]));
            self.midpoints.contains_key(&(a, b))
        })
    }
}

/// Bisect every marked tet once, then bisect further until no tet has a
/// split edge. Children inherit the parent's region.
pub fn refine(mesh: &TetMesh, marked: &[usize]) -> Result<TetMesh> {
    if let Some(&bad) = marked.iter().find(|&&t| t >= mesh.num_tets()) {
        return Err(Error::Mesh(format!(
            "marked tet {bad} out of range ({} tets)",
            mesh.num_tets()
        )));
    }
    if mesh.num_tets() == 0 || marked.is_empty() {
        return Ok(mesh.clone());
    }
    let mut r = Refiner {
        vertices: mesh.vertices.clone(),
        elems: mesh.bisection.clone(),
        regions: mesh.regions.clone(),
        midpoints: FxHashMap::default(),
    };
    let mut marked = marked.to_vec();
    marked.sort_unstable();
    marked.dedup();
    for &t in &marked {
        r.bisect(t);
    }

    let mut sweeps = 0;
    loop {
        let mut changed = false;
        let mut t = 0;
        while t < r.elems.len() {
            while r.has_split_edge(t) {
                r.bisect(t);
                changed = true;
            }
            t += 1;
        }
        if !changed {
            break;
        }
        sweeps += 1;
        if sweeps > MAX_SWEEPS {
            return Err(Error::Mesh(
                "bisection closure did not terminate; the initial refinement edges are incompatible".into(),
            ));
        }
    }
    TetMesh::from_bisection(r.vertices, r.elems, r.regions)
}
