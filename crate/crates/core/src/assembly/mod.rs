//! Global assembly of the truncated coupled problem.

mod dofmap;
mod element;
pub mod sparse;

pub use dofmap::{build_dof_map, DofMap, FieldPair};
pub use element::{
    coupling_face, elastic_stiffness, element_acoustic, element_elastic, vector_mass, Mat12, Mat3x9, Mat4, Mat9x3,
};
pub use sparse::CsrMatrix;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::materials::{PhysicsConfig, PmlProfile};
use crate::mesh::{FaceTag, Region, TetMesh};
use crate::quadrature::{tet_degree4, tet_point, tri_degree5, tri_point};
use crate::scenarios::Scenario;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<C64>,
    /// Constrained dofs with their prescribed values, ascending.
    pub constrained: Vec<(usize, C64)>,
}

impl ComplexSparseSystem {
    pub fn dim(&self) -> usize {
        self.matrix.n
    }
}

/// Coupling blocks of solid-surface face `f`, checking its tag.
pub fn coupling_faces(mesh: &TetMesh, f: usize, physics: &PhysicsConfig) -> Result<(Mat3x9, Mat9x3)> {
    let face = &mesh.faces[f];
    if face.tag != FaceTag::InterfaceGammaS {
        return Err(Error::Assembly(format!("face {f} is {:?}, not on the solid surface", face.tag)));
    }
    Ok(coupling_face(&mesh.face_points(f), &face.normal, physics))
}

fn sparsity(mesh: &TetMesh, dofs: &DofMap) -> CsrMatrix {
    let mut pat = sparse::PatternBuilder::new(dofs.len());
    for (tet, &r) in mesh.tets.iter().zip(&mesh.regions) {
        let d = element_dofs(dofs, tet, r);
        pat.add_block(&d, &d);
    }
    for face in mesh.faces.iter().filter(|f| f.tag == FaceTag::InterfaceGammaS) {
        let (p, u) = face_dofs(dofs, &face.vertices);
        pat.add_block(&p, &u);
        pat.add_block(&u, &p);
    }
    pat.build()
}

fn element_dofs(dofs: &DofMap, tet: &[usize; 4], region: Region) -> Vec<usize> {
    if region.is_fluid() {
        tet.iter().map(|&v| dofs.p_dof(v).expect("fluid vertex without dof")).collect()
    } else {
        tet.iter()
            .flat_map(|&v| (0..3).map(move |c| dofs.u_dof(v, c).expect("solid vertex without dof")))
            .collect()
    }
}

fn face_dofs(dofs: &DofMap, verts: &[usize; 3]) -> (Vec<usize>, Vec<usize>) {
    let p = verts.iter().map(|&v| dofs.p_dof(v).expect("interface vertex without p dof")).collect();
    let u = verts
        .iter()
        .flat_map(|&v| (0..3).map(move |c| dofs.u_dof(v, c).expect("interface vertex without u dof")))
        .collect();
    (p, u)
}

/// Assemble the matrix and right-hand side without boundary constraints.
///
/// The right-hand side is `-int g q` over the fluid plus the interface data
/// terms `-int g_N q - int g_T . v` on the solid surface.
pub fn assemble(
    mesh: &TetMesh,
    dofs: &DofMap,
    physics: &PhysicsConfig,
    profile: &PmlProfile,
    scenario: &Scenario,
) -> Result<ComplexSparseSystem> {
    assemble_ordered(mesh, dofs, physics, profile, scenario, 0..mesh.num_tets())
}

/// [`assemble`] with an explicit element visiting order.
pub fn assemble_ordered(
    mesh: &TetMesh,
    dofs: &DofMap,
    physics: &PhysicsConfig,
    profile: &PmlProfile,
    scenario: &Scenario,
    order: impl IntoIterator<Item = usize>,
) -> Result<ComplexSparseSystem> {
    let mut matrix = sparsity(mesh, dofs);
    let mut rhs = vec![C64::new(0.0, 0.0); dofs.len()];
    let with_source = matches!(scenario, Scenario::PlaneWavePml(_));

    for t in order {
        let region = mesh.regions[t];
        let pts = mesh.tet_points(t);
        let tet = &mesh.tets[t];
        let d = element_dofs(dofs, tet, region);
        let local = if region.is_fluid() {
            let m = element_acoustic(&pts, region, physics, profile).map_err(|e| retag(e, t))?;
            for i in 0..4 {
                for j in 0..4 {
                    matrix.add(d[i], d[j], m[(i, j)]);
                }
            }
            None
        } else {
            Some(element_elastic(&pts, physics).map_err(|e| retag(e, t))?)
        };
        if let Some(m) = local {
            for i in 0..12 {
                for j in 0..12 {
                    matrix.add(d[i], d[j], m[(i, j)]);
                }
            }
        }
        if with_source && region == Region::Pml {
            let vol = mesh.tet_volume(t);
            let rule = tet_degree4();
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let g = scenario.source(&tet_point(&pts, l), region, physics, profile)?;
                for i in 0..4 {
                    rhs[d[i]] -= g * (w * vol * l[i]);
                }
            }
        }
    }

    for (f, face) in mesh.faces.iter().enumerate() {
        if face.tag != FaceTag::InterfaceGammaS {
            continue;
        }
        let (c_pu, c_up) = coupling_faces(mesh, f, physics)?;
        let (p, u) = face_dofs(dofs, &face.vertices);
        for i in 0..3 {
            for k in 0..9 {
                matrix.add(p[i], u[k], c_pu[(i, k)]);
                matrix.add(u[k], p[i], c_up[(k, i)]);
            }
        }
        if scenario.has_interface_data() {
            let pts = mesh.face_points(f);
            let rule = tri_degree5();
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let x = tri_point(&pts, l);
                let (g_n, g_t) = scenario.interface_data(&x, &face.normal, physics)?;
                let wa = w * face.area;
                for i in 0..3 {
                    rhs[p[i]] -= g_n * (wa * l[i]);
                    for c in 0..3 {
                        rhs[u[3 * i + c]] -= g_t[c] * (wa * l[i]);
                    }
                }
            }
        }
    }

    Ok(ComplexSparseSystem {
        matrix,
        rhs,
        constrained: Vec::new(),
    })
}

fn retag(e: Error, t: usize) -> Error {
    match e {
        Error::Degenerate(_) => Error::Degenerate(t),
        other => other,
    }
}

/// Impose `p = value_fn(x)` at every pressure vertex of faces tagged `tag`:
/// constrained rows become identity rows and their columns are eliminated
/// into the right-hand side.
pub fn apply_dirichlet(
    system: &mut ComplexSparseSystem,
    mesh: &TetMesh,
    dofs: &DofMap,
    tag: FaceTag,
    value_fn: impl Fn(&Point) -> Result<C64>,
) -> Result<()> {
    let n = system.dim();
    let mut prescribed: Vec<Option<C64>> = vec![None; n];
    for face in mesh.faces.iter().filter(|f| f.tag == tag) {
        for &v in &face.vertices {
            let Some(dof) = dofs.p_dof(v) else { continue };
            if prescribed[dof].is_none() {
                let x = mesh.vertices[v];
                let val = value_fn(&x)?;
                if !(val.re.is_finite() && val.im.is_finite()) {
                    return Err(Error::Assembly(format!("non-finite boundary value at {x:?}")));
                }
                prescribed[dof] = Some(val);
            }
        }
    }
    for &(dof, val) in &system.constrained {
        prescribed[dof].get_or_insert(val);
    }

    let a = &mut system.matrix;
    for r in 0..n {
        let (s, e) = (a.row_ptr[r], a.row_ptr[r + 1]);
        if let Some(val) = prescribed[r] {
            for k in s..e {
                a.values[k] = if a.col_idx[k] == r { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            }
            system.rhs[r] = val;
        } else {
            for k in s..e {
                if let Some(val) = prescribed[a.col_idx[k]] {
                    system.rhs[r] -= a.values[k] * val;
                    a.values[k] = C64::new(0.0, 0.0);
                }
            }
        }
    }
    system.constrained = prescribed
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    Ok(())
}

/// Assemble and constrain the outer boundary to the scenario's data.
pub fn assemble_constrained(
    mesh: &TetMesh,
    dofs: &DofMap,
    physics: &PhysicsConfig,
    profile: &PmlProfile,
    scenario: &Scenario,
) -> Result<ComplexSparseSystem> {
    let mut sys = assemble(mesh, dofs, physics, profile, scenario)?;
    apply_dirichlet(&mut sys, mesh, dofs, FaceTag::OuterGamma, |x| scenario.boundary_value(x))?;
    Ok(sys)
}
