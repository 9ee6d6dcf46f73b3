//! Conforming tetrahedral meshes with region and face classification.
//!
//! Orientation conventions:
//! - every stored tet has positive signed volume;
//! - an interior face records `(first, second)` tets and a unit normal that
//!   points from `second` into `first`;
//! - on the solid surface `first` is the fluid-side tet, so the normal points
//!   out of the solid;
//! - on the inner PML boundary `first` is the PML tet, so the normal points
//!   out of the physical box;
//! - on the outer boundary the normal points out of the domain.

mod faces;
mod generate;
mod gmsh;
mod refine;

pub use faces::classify_faces;
pub use generate::{generate_box_mesh, RegionClassifier};
pub use gmsh::{import_msh, PhysicalMap};
pub use refine::refine;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Point, TET_EDGES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    Elastic,
    Acoustic,
    Pml,
}

impl Region {
    /// Regions carrying the pressure unknown.
    pub fn is_fluid(self) -> bool {
        !matches!(self, Region::Elastic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaceTag {
    InterfaceGammaS,
    PmlInnerBoundaryB,
    OuterGamma,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Sorted global vertex indices.
    pub vertices: [usize; 3],
    pub first: usize,
    pub second: Option<usize>,
    pub tag: FaceTag,
    pub normal: Point,
    pub area: f64,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.second.is_none()
    }
}

/// Newest-vertex bisection state: vertices in refinement order and the
/// generation counter that selects the refinement edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Bisection {
    pub order: [usize; 4],
    pub level: u8,
}

impl Bisection {
    /// Refinement edge as an ordered pair of global vertices.
    pub fn edge(&self) -> (usize, usize) {
        let d = 3 - (self.level as usize % 3);
        (self.order[0], self.order[d])
    }
}

#[derive(Debug, Clone)]
pub struct TetMesh {
    pub vertices: Vec<Point>,
    pub tets: Vec<[usize; 4]>,
    pub regions: Vec<Region>,
    pub faces: Vec<Face>,
    /// `tet_faces[t][i]` is the face opposite local vertex `i`.
    pub tet_faces: Vec<[usize; 4]>,
    pub(crate) bisection: Vec<Bisection>,
}

impl TetMesh {
    /// Build a mesh from raw connectivity. Tets are reoriented to positive
    /// volume, refinement edges are initialized to the longest edge and faces
    /// are classified.
    pub fn from_parts(vertices: Vec<Point>, tets: Vec<[usize; 4]>, regions: Vec<Region>) -> Result<Self> {
        if tets.len() != regions.len() {
            return Err(Error::Mesh(format!(
                "{} tets but {} region tags",
                tets.len(),
                regions.len()
            )));
        }
        let mut bisection = Vec::with_capacity(tets.len());
        for (t, tet) in tets.iter().enumerate() {
            if tet.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!("tet {t} references a missing vertex")));
            }
            bisection.push(longest_edge_order(&vertices, tet));
        }
        Self::from_bisection(vertices, bisection, regions)
    }

    pub(crate) fn from_bisection(
        vertices: Vec<Point>,
        bisection: Vec<Bisection>,
        regions: Vec<Region>,
    ) -> Result<Self> {
        let mut tets = Vec::with_capacity(bisection.len());
        for (t, b) in bisection.iter().enumerate() {
            let mut tet = b.order;
            let [a, bb, c, d] = tet.map(|v| &vertices[v]);
            let det = geometry::det6(a, bb, c, d);
            let scale = geometry::diameter(&[*a, *bb, *c, *d]).powi(3);
            if !(det.abs() > 1e-14 * scale) {
                return Err(Error::Degenerate(t));
            }
            if det < 0.0 {
                tet.swap(2, 3);
            }
            tets.push(tet);
        }
        let mut mesh = TetMesh {
            vertices,
            tets,
            regions,
            faces: Vec::new(),
            tet_faces: Vec::new(),
            bisection,
        };
        let (faces, tet_faces) = faces::build_faces(&mesh)?;
        mesh.faces = faces;
        mesh.tet_faces = tet_faces;
        Ok(mesh)
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn tet_points(&self, t: usize) -> [Point; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn face_points(&self, f: usize) -> [Point; 3] {
        self.faces[f].vertices.map(|v| self.vertices[v])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tet_points(t);
        geometry::signed_volume(&a, &b, &c, &d)
    }

    pub fn tet_diameter(&self, t: usize) -> f64 {
        geometry::diameter(&self.tet_points(t))
    }

    pub fn face_diameter(&self, f: usize) -> f64 {
        geometry::diameter(&self.face_points(f))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_tets()).map(|t| self.tet_volume(t)).sum()
    }

    pub fn region_volume(&self, region: Region) -> f64 {
        (0..self.num_tets())
            .filter(|&t| self.regions[t] == region)
            .map(|t| self.tet_volume(t))
            .sum()
    }

    pub fn count_faces(&self, tag: FaceTag) -> usize {
        self.faces.iter().filter(|f| f.tag == tag).count()
    }

    pub fn has_region(&self, region: Region) -> bool {
        self.regions.contains(&region)
    }

    /// Local index in `tet` of the vertex not on face `f`.
    pub fn opposite_local(&self, tet: usize, f: usize) -> usize {
        self.tet_faces[tet]
            .iter()
            .position(|&g| g == f)
            .expect("face not attached to tet")
    }

    /// Smallest interior dihedral angle over all tets, in radians.
    pub fn min_dihedral_angle(&self) -> f64 {
        (0..self.num_tets())
            .map(|t| min_dihedral(&self.tet_points(t)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Check the conformity invariant: every face is shared by one or two
    /// tets and single-owner faces lie on `boundary`.
    pub fn check_conforming(&self, boundary: Option<&geometry::Aabb>) -> Result<()> {
        for (i, f) in self.faces.iter().enumerate() {
            if f.second.is_none() {
                if let Some(b) = boundary {
                    let pts = self.face_points(i);
                    let c = geometry::barycenter(&pts);
                    if !b.on_boundary(&c, 1e-9) {
                        return Err(Error::Mesh(format!("face {:?} is a hanging interior face", f.vertices)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Order a tet so its longest edge is `(order[0], order[3])`; ties broken by
/// the smaller sorted global index pair.
fn longest_edge_order(vertices: &[Point], tet: &[usize; 4]) -> Bisection {
    let mut best = (0, 1);
    let mut best_key = (f64::NEG_INFINITY, usize::MAX, usize::MAX);
    for &(i, j) in &TET_EDGES {
        let len = geometry::dist(&vertices[tet[i]], &vertices[tet[j]]);
        let (a, b) = (tet[i].min(tet[j]), tet[i].max(tet[j]));
        let better = len > best_key.0 + 1e-12 * len
            || ((len - best_key.0).abs() <= 1e-12 * len && (a, b) < (best_key.1, best_key.2));
        if better {
            best = (i, j);
            best_key = (len, a, b);
        }
    }
    let (i, j) = best;
    let (lo, hi) = if tet[i] < tet[j] { (tet[i], tet[j]) } else { (tet[j], tet[i]) };
    let mut rest: Vec<usize> = (0..4).filter(|&k| k != i && k != j).map(|k| tet[k]).collect();
    rest.sort_unstable();
    Bisection {
        order: [lo, rest[0], rest[1], hi],
        level: 0,
    }
}

pub(crate) fn min_dihedral(p: &[Point; 4]) -> f64 {
    let mut best = f64::INFINITY;
    for &(i, j) in &TET_EDGES {
        let others: Vec<usize> = (0..4).filter(|&k| k != i && k != j).collect();
        let (k, l) = (others[0], others[1]);
        let e = geometry::sub(&p[j], &p[i]);
        let n1 = geometry::cross(&e, &geometry::sub(&p[k], &p[i]));
        let n2 = geometry::cross(&e, &geometry::sub(&p[l], &p[i]));
        let c = geometry::dot(&n1, &n2) / (geometry::norm(&n1) * geometry::norm(&n2));
        best = best.min(c.clamp(-1.0, 1.0).acos());
    }
    best
}
