//! Legacy ASCII VTK 3.0 unstructured grids.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::assembly::{DofMap, FieldPair};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{Region, TetMesh};

const VTK_TETRA: u32 = 10;

/// Contents of a legacy file restricted to what [`write_fields`] emits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VtkData {
    pub title: String,
    pub points: Vec<Point>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u32>,
    pub point_scalars: BTreeMap<String, Vec<f64>>,
    pub point_vectors: BTreeMap<String, Vec<[f64; 3]>>,
    pub cell_scalars: BTreeMap<String, Vec<f64>>,
}

fn region_id(r: Region) -> f64 {
    match r {
        Region::Elastic => 0.0,
        Region::Acoustic => 1.0,
        Region::Pml => 2.0,
    }
}

/// Point data `p_re`, `p_im`, `p_abs` (zero where there is no pressure) and
/// vectors `u_re`, `u_im` (zero off the solid); cell data `region` and, if
/// given, `eta`.
pub fn write_fields(mesh: &TetMesh, dofs: &DofMap, fields: &FieldPair, eta: Option<&[f64]>) -> String {
    let mut s = String::new();
    let nv = mesh.num_vertices();
    let nt = mesh.num_tets();
    s.push_str("# vtk DataFile Version 3.0\nacoustic-elastic fields\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nv} double");
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
    }
    let _ = writeln!(s, "CELLS {nt} {}", 5 * nt);
    for t in &mesh.tets {
        let _ = writeln!(s, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "{VTK_TETRA}");
    }

    let _ = writeln!(s, "CELL_DATA {nt}");
    s.push_str("SCALARS region double 1\nLOOKUP_TABLE default\n");
    for r in &mesh.regions {
        let _ = writeln!(s, "{}", region_id(*r));
    }
    if let Some(eta) = eta {
        s.push_str("SCALARS eta double 1\nLOOKUP_TABLE default\n");
        for e in eta {
            let _ = writeln!(s, "{e}");
        }
    }

    let p: Vec<Option<_>> = (0..nv).map(|v| dofs.p_dof(v).map(|d| fields.p[d])).collect();
    let u: Vec<Option<_>> = (0..nv).map(|v| dofs.u_slot(v).map(|k| fields.u[k])).collect();
    let _ = writeln!(s, "POINT_DATA {nv}");
    for (name, f) in [
        ("p_re", (|z: crate::C64| z.re) as fn(crate::C64) -> f64),
        ("p_im", |z| z.im),
        ("p_abs", |z| z.norm()),
    ] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in &p {
            let _ = writeln!(s, "{}", v.map(f).unwrap_or(0.0));
        }
    }
    for (name, im) in [("u_re", false), ("u_im", true)] {
        let _ = writeln!(s, "VECTORS {name} double");
        for v in &u {
            let c = v.map(|c| c.map(|z| if im { z.im } else { z.re })).unwrap_or([0.0; 3]);
            let _ = writeln!(s, "{} {} {}", c[0], c[1], c[2]);
        }
    }
    s
}

struct Tokens<'a> {
    it: std::iter::Skip<std::iter::Enumerate<std::str::Lines<'a>>>,
    pending: std::collections::VecDeque<&'a str>,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<&'a str> {
        while self.pending.is_empty() {
            let (i, l) = self.it.next()?;
            self.line = i + 1;
            self.pending.extend(l.split_whitespace());
        }
        self.pending.pop_front()
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Mesh(format!("vtk line {}: {msg}", self.line))
    }

    fn word(&mut self) -> Result<&'a str> {
        self.next().ok_or_else(|| self.err("unexpected end of file"))
    }

    fn expect(&mut self, w: &str) -> Result<()> {
        let got = self.word()?;
        if got.eq_ignore_ascii_case(w) {
            Ok(())
        } else {
            Err(self.err(format!("expected {w}, found {got}")))
        }
    }

    fn parse<T: std::str::FromStr>(&mut self) -> Result<T> {
        let w = self.word()?;
        w.parse().map_err(|_| self.err(format!("cannot parse {w:?}")))
    }
}

/// Read a file written by [`write_fields`] (any legacy ASCII unstructured
/// grid with double scalars and vectors).
pub fn read_vtk(text: &str) -> Result<VtkData> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if !header.starts_with("# vtk DataFile Version") {
        return Err(Error::Mesh("vtk line 1: missing header".into()));
    }
    let title = lines.next().unwrap_or_default().to_string();
    let mut t = Tokens {
        it: text.lines().enumerate().skip(2),
        pending: Default::default(),
        line: 2,
    };
    t.expect("ASCII")?;
    t.expect("DATASET")?;
    t.expect("UNSTRUCTURED_GRID")?;
    let mut d = VtkData {
        title,
        ..Default::default()
    };
    let mut section: Option<(bool, usize)> = None;
    while let Some(kw) = t.next() {
        match kw.to_ascii_uppercase().as_str() {
            "POINTS" => {
                let n: usize = t.parse()?;
                t.word()?;
                for _ in 0..n {
                    d.points.push([t.parse()?, t.parse()?, t.parse()?]);
                }
            }
            "CELLS" => {
                let n: usize = t.parse()?;
                let _total: usize = t.parse()?;
                for _ in 0..n {
                    let k: usize = t.parse()?;
                    let c = (0..k).map(|_| t.parse()).collect::<Result<Vec<usize>>>()?;
                    if c.iter().any(|&i| i >= d.points.len()) {
                        return Err(t.err("cell references a missing point"));
                    }
                    d.cells.push(c);
                }
            }
            "CELL_TYPES" => {
                let n: usize = t.parse()?;
                for _ in 0..n {
                    d.cell_types.push(t.parse()?);
                }
            }
            "CELL_DATA" => section = Some((false, t.parse()?)),
            "POINT_DATA" => section = Some((true, t.parse()?)),
            "SCALARS" => {
                let (on_points, n) = section.ok_or_else(|| t.err("SCALARS outside a data section"))?;
                let name = t.word()?.to_string();
                t.word()?;
                let mut next = t.word()?;
                if next.parse::<usize>().is_ok() {
                    next = t.word()?;
                }
                if !next.eq_ignore_ascii_case("LOOKUP_TABLE") {
                    return Err(t.err("expected LOOKUP_TABLE"));
                }
                t.word()?;
                let vals = (0..n).map(|_| t.parse()).collect::<Result<Vec<f64>>>()?;
                let map = if on_points { &mut d.point_scalars } else { &mut d.cell_scalars };
                map.insert(name, vals);
            }
            "VECTORS" => {
                let (on_points, n) = section.ok_or_else(|| t.err("VECTORS outside a data section"))?;
                if !on_points {
                    return Err(t.err("cell vectors are not supported"));
                }
                let name = t.word()?.to_string();
                t.word()?;
                let vals = (0..n)
                    .map(|_| Ok([t.parse()?, t.parse()?, t.parse()?]))
                    .collect::<Result<Vec<[f64; 3]>>>()?;
                d.point_vectors.insert(name, vals);
            }
            other => return Err(t.err(format!("unsupported keyword {other}"))),
        }
    }
    if d.cell_types.len() != d.cells.len() {
        return Err(Error::Mesh("vtk: CELL_TYPES count differs from CELLS".into()));
    }
    Ok(d)
}
