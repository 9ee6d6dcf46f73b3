use serde::{Deserialize, Serialize};

use super::{Bisection, Region, TetMesh};
use crate::error::{Error, Result};
use crate::geometry::{self, Aabb, Point};

/// Closed-form region predicates built from axis-aligned boxes.
///
/// A point is elastic if it lies in some `solid` box and in no `cavity`;
/// otherwise it is acoustic inside `physical` (or everywhere when
/// `physical` is absent) and PML outside it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionClassifier {
    #[serde(default)]
    pub solid: Vec<Aabb>,
    #[serde(default)]
    pub cavities: Vec<Aabb>,
    #[serde(default)]
    pub physical: Option<Aabb>,
}

impl RegionClassifier {
    pub fn single_region() -> Self {
        Self::default()
    }

    pub fn classify(&self, x: &Point) -> Region {
        let in_solid = self.solid.iter().any(|b| b.contains_open(x))
            && !self.cavities.iter().any(|b| b.contains_open(x));
        if in_solid {
            Region::Elastic
        } else if self.physical.is_none_or(|b| b.contains_open(x)) {
            Region::Acoustic
        } else {
            Region::Pml
        }
    }
}

/// Kuhn triangulation of a structured grid: each cube is split into six
/// tets around its main diagonal, ordered along the coordinate path from the
/// lowest to the highest corner. This ordering is a valid starting point for
/// newest-vertex bisection.
pub fn generate_box_mesh(outer: &Aabb, h: f64, classifier: &RegionClassifier) -> Result<TetMesh> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::param("h", format!("mesh size must be positive, got {h}")));
    }
    let ext = outer.extent();
    if ext.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Mesh(format!("outer box {outer:?} has no volume")));
    }
    let n: [usize; 3] = ext.map(|e| ((e / h).round() as usize).max(1));
    let idx = |i: usize, j: usize, k: usize| i + (n[0] + 1) * (j + (n[1] + 1) * k);

    let mut vertices = Vec::with_capacity((n[0] + 1) * (n[1] + 1) * (n[2] + 1));
    for k in 0..=n[2] {
        for j in 0..=n[1] {
            for i in 0..=n[0] {
                let c = [i, j, k];
                vertices.push(std::array::from_fn(|d| {
                    if c[d] == n[d] {
                        outer.max[d]
                    } else {
                        outer.min[d] + ext[d] * c[d] as f64 / n[d] as f64
                    }
                }));
            }
        }
    }

    const PATHS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut bisection = Vec::with_capacity(6 * n[0] * n[1] * n[2]);
    let mut regions = Vec::with_capacity(6 * n[0] * n[1] * n[2]);
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                for path in PATHS {
                    let mut c = [i, j, k];
                    let mut order = [idx(i, j, k); 4];
                    for (s, &axis) in path.iter().enumerate() {
                        c[axis] += 1;
                        order[s + 1] = idx(c[0], c[1], c[2]);
                    }
                    let pts = order.map(|v| vertices[v]);
                    let t = bisection.len();
                    regions.push(classify_tet(classifier, &pts, t)?);
                    bisection.push(Bisection { order, level: 0 });
                }
            }
        }
    }
    TetMesh::from_bisection(vertices, bisection, regions)
}

/// Classify a tet by its barycenter, rejecting it if any vertex pulled
/// slightly toward the barycenter lands in another region.
fn classify_tet(classifier: &RegionClassifier, pts: &[Point; 4], t: usize) -> Result<Region> {
    let c = geometry::barycenter(pts);
    let region = classifier.classify(&c);
    for p in pts {
        let q = geometry::add(&c, &geometry::scale(&geometry::sub(p, &c), 1.0 - 1e-9));
        let r = classifier.classify(&q);
        if r != region {
            return Err(Error::Straddle {
                tet: t,
                detail: format!("barycenter {c:?} is {region:?} but vertex {p:?} is {r:?}"),
            });
        }
    }
    Ok(region)
}
