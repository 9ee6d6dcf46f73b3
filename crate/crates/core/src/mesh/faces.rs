use super::{Face, FaceTag, Region, TetMesh};
use crate::error::{Error, Result};
use crate::geometry::{self, TET_FACES};

/// Recompute face tags, adjacency and normals from region tags alone.
pub fn classify_faces(mesh: &TetMesh) -> Result<Vec<Face>> {
    build_faces(mesh).map(|(faces, _)| faces)
}

pub(super) fn build_faces(mesh: &TetMesh) -> Result<(Vec<Face>, Vec<[usize; 4]>)> {
    let mut keyed: Vec<([usize; 3], usize, u8)> = Vec::with_capacity(4 * mesh.num_tets());
    for (t, tet) in mesh.tets.iter().enumerate() {
        for (lf, loc) in TET_FACES.iter().enumerate() {
            let mut key = loc.map(|i| tet[i]);
            key.sort_unstable();
            keyed.push((key, t, lf as u8));
        }
    }
    keyed.sort_unstable();

    let mut faces = Vec::with_capacity(keyed.len() / 2 + 16);
    let mut tet_faces = vec![[usize::MAX; 4]; mesh.num_tets()];
    let mut i = 0;
    while i < keyed.len() {
        let mut j = i + 1;
        while j < keyed.len() && keyed[j].0 == keyed[i].0 {
            j += 1;
        }
        let key = keyed[i].0;
        let owners = &keyed[i..j];
        if owners.len() > 2 {
            return Err(Error::Mesh(format!(
                "face {key:?} shared by {} tets (non-conforming)",
                owners.len()
            )));
        }
        let fi = faces.len();
        for &(_, t, lf) in owners {
            tet_faces[t][lf as usize] = fi;
        }
        faces.push(make_face(mesh, key, owners)?);
        i = j;
    }
    Ok((faces, tet_faces))
}

fn make_face(mesh: &TetMesh, key: [usize; 3], owners: &[([usize; 3], usize, u8)]) -> Result<Face> {
    let pts = key.map(|v| mesh.vertices[v]);
    let area = geometry::triangle_area(&pts[0], &pts[1], &pts[2]);
    let outward = |t: usize, lf: u8| -> geometry::Point {
        let opp = mesh.vertices[mesh.tets[t][lf as usize]];
        let mut n = geometry::cross(&geometry::sub(&pts[1], &pts[0]), &geometry::sub(&pts[2], &pts[0]));
        let s = geometry::norm(&n);
        n = geometry::scale(&n, 1.0 / s);
        if geometry::dot(&n, &geometry::sub(&opp, &pts[0])) > 0.0 {
            n = geometry::scale(&n, -1.0);
        }
        n
    };

    if let [(_, t, lf)] = owners {
        return Ok(Face {
            vertices: key,
            first: *t,
            second: None,
            tag: FaceTag::OuterGamma,
            normal: outward(*t, *lf),
            area,
        });
    }

    let (ta, la) = (owners[0].1, owners[0].2);
    let (tb, lb) = (owners[1].1, owners[1].2);
    let (ra, rb) = (mesh.regions[ta], mesh.regions[tb]);
    use Region::*;
    // (first, second, tag); the normal is the outward normal of `second`
    let (first, second, tag) = match (ra, rb) {
        (Elastic, Pml) | (Pml, Elastic) => {
            return Err(Error::Mesh(format!(
                "face {key:?} separates elastic tet {} from PML tet {}",
                if ra == Elastic { ta } else { tb },
                if ra == Pml { ta } else { tb }
            )))
        }
        (Elastic, Acoustic) => ((tb, lb), (ta, la), FaceTag::InterfaceGammaS),
        (Acoustic, Elastic) => ((ta, la), (tb, lb), FaceTag::InterfaceGammaS),
        (Acoustic, Pml) => ((tb, lb), (ta, la), FaceTag::PmlInnerBoundaryB),
        (Pml, Acoustic) => ((ta, la), (tb, lb), FaceTag::PmlInnerBoundaryB),
        _ => {
            let (lo, hi) = if ta < tb { ((ta, la), (tb, lb)) } else { ((tb, lb), (ta, la)) };
            (lo, hi, FaceTag::None)
        }
    };
    Ok(Face {
        vertices: key,
        first: first.0,
        second: Some(second.0),
        tag,
        normal: outward(second.0, second.1),
        area,
    })
}
