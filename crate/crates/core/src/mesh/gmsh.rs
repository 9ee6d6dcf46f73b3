//! Gmsh MSH 2.2 ASCII reader.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{FaceTag, Region, TetMesh};
use crate::error::{Error, Result};

/// Physical-group ids mapped onto regions and face tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalMap {
    #[serde(default = "default_elastic")]
    pub elastic: Vec<i64>,
    #[serde(default = "default_acoustic")]
    pub acoustic: Vec<i64>,
    #[serde(default = "default_pml")]
    pub pml: Vec<i64>,
    #[serde(default)]
    pub interface: Vec<i64>,
    #[serde(default)]
    pub pml_boundary: Vec<i64>,
    #[serde(default)]
    pub outer: Vec<i64>,
}

fn default_elastic() -> Vec<i64> {
    vec![1]
}
fn default_acoustic() -> Vec<i64> {
    vec![2]
}
fn default_pml() -> Vec<i64> {
    vec![3]
}

impl Default for PhysicalMap {
    fn default() -> Self {
        Self {
            elastic: default_elastic(),
            acoustic: default_acoustic(),
            pml: default_pml(),
            interface: Vec::new(),
            pml_boundary: Vec::new(),
            outer: Vec::new(),
        }
    }
}

impl PhysicalMap {
    fn region(&self, tag: i64) -> Option<Region> {
        if self.elastic.contains(&tag) {
            Some(Region::Elastic)
        } else if self.acoustic.contains(&tag) {
            Some(Region::Acoustic)
        } else if self.pml.contains(&tag) {
            Some(Region::Pml)
        } else {
            None
        }
    }

    fn face_tag(&self, tag: i64) -> Option<FaceTag> {
        if self.interface.contains(&tag) {
            Some(FaceTag::InterfaceGammaS)
        } else if self.pml_boundary.contains(&tag) {
            Some(FaceTag::PmlInnerBoundaryB)
        } else if self.outer.contains(&tag) {
            Some(FaceTag::OuterGamma)
        } else {
            None
        }
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        loop {
            match self.inner.next() {
                Some((i, l)) => {
                    self.line = i + 1;
                    let l = l.trim();
                    if !l.is_empty() {
                        return Ok(l);
                    }
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Msh {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        let l = self.next()?;
        if l != token {
            return Err(self.err(format!("expected `{token}`, found `{l}`")));
        }
        Ok(())
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }
}

/// Parse MSH 2.2 ASCII text. Tetrahedra (type 4) carry region tags through
/// their physical group; triangles (type 2) are checked against the inferred
/// face tags when their group is listed in `map`. Points and lines are
/// ignored; other element types are rejected.
pub fn import_msh(text: &str, map: &PhysicalMap) -> Result<TetMesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let mut nodes: Option<(Vec<[f64; 3]>, HashMap<i64, usize>)> = None;
    let mut tets = Vec::new();
    let mut regions = Vec::new();
    let mut triangles: Vec<([i64; 3], FaceTag, usize)> = Vec::new();
    let mut saw_format = false;

    while let Ok(header) = lines.next() {
        match header {
            "$MeshFormat" => {
                let l = lines.next()?;
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() < 3 || !f[0].starts_with("2.2") {
                    return Err(lines.err(format!("unsupported format `{l}`, need 2.2")));
                }
                if f[1] != "0" {
                    return Err(lines.err("binary MSH is not supported"));
                }
                lines.expect("$EndMeshFormat")?;
                saw_format = true;
            }
            "$Nodes" => {
                let n: usize = {
                    let l = lines.next()?;
                    lines.parse(l)?
                };
                let mut coords = Vec::with_capacity(n);
                let mut ids = HashMap::with_capacity(n);
                for _ in 0..n {
                    let l = lines.next()?;
                    let f: Vec<&str> = l.split_whitespace().collect();
                    if f.len() != 4 {
                        return Err(lines.err("node line needs `id x y z`"));
                    }
                    let id: i64 = lines.parse(f[0])?;
                    let x = [lines.parse(f[1])?, lines.parse(f[2])?, lines.parse(f[3])?];
                    if ids.insert(id, coords.len()).is_some() {
                        return Err(lines.err(format!("duplicate node id {id}")));
                    }
                    coords.push(x);
                }
                lines.expect("$EndNodes")?;
                nodes = Some((coords, ids));
            }
            "$Elements" => {
                let Some((_, ids)) = nodes.as_ref() else {
                    return Err(lines.err("$Elements before $Nodes"));
                };
                let n: usize = {
                    let l = lines.next()?;
                    lines.parse(l)?
                };
                for _ in 0..n {
                    let l = lines.next()?;
                    let f: Vec<i64> = l
                        .split_whitespace()
                        .map(|s| lines.parse(s))
                        .collect::<Result<_>>()?;
                    if f.len() < 3 {
                        return Err(lines.err("truncated element line"));
                    }
                    let (ty, ntags) = (f[1], f[2] as usize);
                    let tags = f.get(3..3 + ntags).ok_or_else(|| lines.err("truncated tag list"))?;
                    let conn = &f[3 + ntags..];
                    let physical = tags.first().copied().unwrap_or(0);
                    let node = |id: i64| ids.get(&id).copied().ok_or_else(|| lines.err(format!("unknown node {id}")));
                    match ty {
                        4 => {
                            if conn.len() != 4 {
                                return Err(lines.err("tetrahedron needs 4 nodes"));
                            }
                            let region = map
                                .region(physical)
                                .ok_or_else(|| lines.err(format!("tetrahedron physical group {physical} not mapped to a region")))?;
                            tets.push([node(conn[0])?, node(conn[1])?, node(conn[2])?, node(conn[3])?]);
                            regions.push(region);
                        }
                        2 => {
                            if conn.len() != 3 {
                                return Err(lines.err("triangle needs 3 nodes"));
                            }
                            if let Some(tag) = map.face_tag(physical) {
                                triangles.push(([conn[0], conn[1], conn[2]], tag, lines.line));
                            }
                        }
                        1 | 15 => {}
                        other => {
                            return Err(lines.err(format!("unsupported element type {other}")));
                        }
                    }
                }
                lines.expect("$EndElements")?;
            }
            other if other.starts_with("$") => {
                // skip unknown sections such as $PhysicalNames
                let end = format!("$End{}", &other[1..]);
                while lines.next()? != end {}
            }
            other => return Err(lines.err(format!("unexpected content `{other}`"))),
        }
    }

    if !saw_format {
        return Err(lines.err("missing $MeshFormat"));
    }
    let Some((coords, ids)) = nodes else {
        return Err(lines.err("missing $Nodes"));
    };
    if tets.is_empty() {
        return Err(lines.err("no tetrahedra"));
    }
    let mesh = TetMesh::from_parts(coords, tets, regions).map_err(|e| Error::Msh {
        line: 0,
        msg: e.to_string(),
    })?;

    if !triangles.is_empty() {
        let by_key: HashMap<[usize; 3], usize> = mesh
            .faces
            .iter()
            .enumerate()
            .map(|(i, f)| (f.vertices, i))
            .collect();
        for (conn, tag, line) in triangles {
            let mut key = [ids[&conn[0]], ids[&conn[1]], ids[&conn[2]]];
            key.sort_unstable();
            let Some(&fi) = by_key.get(&key) else {
                return Err(Error::Msh {
                    line,
                    msg: "tagged triangle is not a face of the volume mesh".into(),
                });
            };
            if mesh.faces[fi].tag != tag {
                return Err(Error::Msh {
                    line,
                    msg: format!("triangle tagged {tag:?} but the adjacent regions give {:?}", mesh.faces[fi].tag),
                });
            }
        }
    }
    Ok(mesh)
}
