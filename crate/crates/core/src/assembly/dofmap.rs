use crate::error::{Error, Result};
use crate::mesh::{Region, TetMesh};
use crate::C64;

const NONE: usize = usize::MAX;

/// P1 degrees of freedom: one pressure unknown per fluid-side vertex, three
/// displacement unknowns per solid-side vertex. Pressure dofs come first in
/// ascending vertex order, then displacement dofs grouped by vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    p_of_vertex: Vec<usize>,
    u_of_vertex: Vec<usize>,
    pub p_vertices: Vec<usize>,
    pub u_vertices: Vec<usize>,
}

pub fn build_dof_map(mesh: &TetMesh) -> DofMap {
    let nv = mesh.num_vertices();
    let mut fluid = vec![false; nv];
    let mut solid = vec![false; nv];
    for (tet, &r) in mesh.tets.iter().zip(&mesh.regions) {
        let mark = if r.is_fluid() { &mut fluid } else { &mut solid };
        for &v in tet {
            mark[v] = true;
        }
    }
    let number = |flags: &[bool]| {
        let mut of_vertex = vec![NONE; nv];
        let mut vertices = Vec::new();
        for v in 0..nv {
            if flags[v] {
                of_vertex[v] = vertices.len();
                vertices.push(v);
            }
        }
        (of_vertex, vertices)
    };
    let (p_of_vertex, p_vertices) = number(&fluid);
    let (u_of_vertex, u_vertices) = number(&solid);
    DofMap {
        p_of_vertex,
        u_of_vertex,
        p_vertices,
        u_vertices,
    }
}

impl DofMap {
    /// Pressure dof count `N_p`.
    pub fn n_p(&self) -> usize {
        self.p_vertices.len()
    }

    /// Displacement dof count `N_u` (three per solid vertex).
    pub fn n_u(&self) -> usize {
        3 * self.u_vertices.len()
    }

    pub fn len(&self) -> usize {
        self.n_p() + self.n_u()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn p_dof(&self, v: usize) -> Option<usize> {
        match self.p_of_vertex[v] {
            NONE => None,
            i => Some(i),
        }
    }

    /// Index of `v` among solid vertices.
    pub fn u_slot(&self, v: usize) -> Option<usize> {
        match self.u_of_vertex[v] {
            NONE => None,
            i => Some(i),
        }
    }

    pub fn u_dof(&self, v: usize, component: usize) -> Option<usize> {
        self.u_slot(v).map(|s| self.n_p() + 3 * s + component)
    }

    /// Reject meshes that cannot host the coupled problem.
    pub fn require_coupled(&self, mesh: &TetMesh) -> Result<()> {
        if !mesh.has_region(Region::Elastic) {
            return Err(Error::Mesh("coupled problem needs an elastic region".into()));
        }
        if !mesh.has_region(Region::Acoustic) {
            return Err(Error::Mesh("coupled problem needs an acoustic region".into()));
        }
        Ok(())
    }
}

/// Discrete pressure and displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub p: Vec<C64>,
    pub u: Vec<[C64; 3]>,
}

impl FieldPair {
    pub fn zeros(dofs: &DofMap) -> Self {
        Self {
            p: vec![C64::new(0.0, 0.0); dofs.n_p()],
            u: vec![[C64::new(0.0, 0.0); 3]; dofs.u_vertices.len()],
        }
    }

    pub fn from_solution(dofs: &DofMap, x: &[C64]) -> Self {
        let np = dofs.n_p();
        Self {
            p: x[..np].to_vec(),
            u: x[np..].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        }
    }

    /// Nodal interpolant of given pressure and displacement functions.
    pub fn interpolate(
        mesh: &TetMesh,
        dofs: &DofMap,
        p: impl Fn(&[f64; 3]) -> C64,
        u: impl Fn(&[f64; 3]) -> [C64; 3],
    ) -> Self {
        Self {
            p: dofs.p_vertices.iter().map(|&v| p(&mesh.vertices[v])).collect(),
            u: dofs.u_vertices.iter().map(|&v| u(&mesh.vertices[v])).collect(),
        }
    }

    pub fn to_vector(&self) -> Vec<C64> {
        let mut x = self.p.clone();
        x.extend(self.u.iter().flatten());
        x
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            p: self.p.iter().map(|&v| v * s).collect(),
            u: self.u.iter().map(|c| c.map(|v| v * s)).collect(),
        }
    }

    /// Pressure at a fluid-side vertex.
    pub fn pressure_at(&self, dofs: &DofMap, v: usize) -> C64 {
        self.p[dofs.p_dof(v).expect("vertex carries no pressure dof")]
    }

    pub fn displacement_at(&self, dofs: &DofMap, v: usize) -> [C64; 3] {
        self.u[dofs.u_slot(v).expect("vertex carries no displacement dof")]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_tets() -> TetMesh {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ];
        TetMesh::from_parts(v, vec![[0, 1, 2, 3], [0, 2, 1, 4]], vec![Region::Elastic, Region::Acoustic]).unwrap()
    }

    #[test]
    fn single_acoustic_tet() {
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let m = TetMesh::from_parts(v, vec![[0, 1, 2, 3]], vec![Region::Acoustic]).unwrap();
        let d = build_dof_map(&m);
        assert_eq!((d.n_p(), d.n_u()), (4, 0));
        assert!(d.require_coupled(&m).is_err());
    }

    #[test]
    fn shared_interface_vertices() {
        let m = two_tets();
        let d = build_dof_map(&m);
        assert_eq!(d.n_p(), 4);
        assert_eq!(d.n_u(), 12);
        for v in [0, 1, 2] {
            assert!(d.p_dof(v).is_some() && d.u_slot(v).is_some());
        }
        assert!(d.p_dof(3).is_none());
        assert!(d.u_slot(4).is_none());
        assert_eq!(d.u_dof(0, 2), Some(4 + 2));
        d.require_coupled(&m).unwrap();
        assert_eq!(build_dof_map(&two_tets()), d);
    }
}
