//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adaptive::AdaptiveConfig;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point};
use crate::materials::{PhysicsConfig, PmlProfile};
use crate::mesh::{generate_box_mesh, import_msh, PhysicalMap, Region, RegionClassifier, TetMesh};
use crate::scenarios::{verify_compatibility, ManufacturedSolution, PlaneWave, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioConfig {
    /// Point source at `x0` outside the domain; `kappa` and `omega` come
    /// from the physics section.
    ManufacturedDirichlet { x0: Point },
    PlaneWavePml,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    Box {
        domain: Aabb,
        h: f64,
        #[serde(default)]
        solid: Vec<Aabb>,
        #[serde(default)]
        cavities: Vec<Aabb>,
        #[serde(default)]
        physical: Option<Aabb>,
    },
    /// Gmsh 2.2 ASCII file; relative paths are resolved against the
    /// directory of the configuration file.
    Msh {
        path: PathBuf,
        #[serde(default)]
        physical_map: PhysicalMap,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub write_fields: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            write_fields: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub geometry: GeometryConfig,
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub pml: Option<PmlProfile>,
    #[serde(default)]
    pub adaptive: AdaptiveConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Seed for randomized diagnostics.
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

fn located(text: &str, e: Error) -> Error {
    let field = match &e {
        Error::Param { field, .. } => Some(*field),
        Error::Compatibility { .. } => Some("physics"),
        _ => None,
    };
    match field.and_then(|f| key_line(text, f)) {
        Some(line) => Error::Config(format!("config line {line}: {e}")),
        None => Error::Config(format!("config: {e}")),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

impl RunConfig {
    /// Parse and validate; errors carry the line of the offending entry.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate().map_err(|e| located(text, e))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        self.adaptive.validate()?;
        if let GeometryConfig::Box { domain, h, .. } = &self.geometry {
            if !(*h > 0.0 && h.is_finite()) {
                return Err(Error::param("h", "must be positive"));
            }
            if domain.extent().iter().any(|&e| !(e > 0.0)) {
                return Err(Error::param("domain", "box must have positive extent"));
            }
        }
        match (&self.scenario, &self.pml) {
            (ScenarioConfig::ManufacturedDirichlet { x0 }, pml) => {
                if pml.is_some() {
                    return Err(Error::param("pml", "the manufactured scenario runs without a layer"));
                }
                verify_compatibility(&self.physics)?;
                if let GeometryConfig::Box { domain, physical, .. } = &self.geometry {
                    if domain.contains_closed(x0, 1e-12) {
                        return Err(Error::param("x0", "source point must lie outside the domain"));
                    }
                    if physical.is_some() {
                        return Err(Error::param("physical", "the manufactured scenario has no PML region"));
                    }
                }
            }
            (ScenarioConfig::PlaneWavePml, None) => {
                return Err(Error::param("pml", "plane-wave scattering needs a PML profile"));
            }
            (ScenarioConfig::PlaneWavePml, Some(p)) => {
                p.validate()?;
                if let GeometryConfig::Box { domain, physical, .. } = &self.geometry {
                    let Some(b) = physical else {
                        return Err(Error::param("physical", "plane-wave scattering needs the physical box"));
                    };
                    for j in 0..3 {
                        let (l, d) = (p.half_widths[j], p.thickness[j]);
                        if !(close(b.min[j], -l) && close(b.max[j], l)) {
                            return Err(Error::param("physical", format!("axis {j} must span [-L, L] with L = {l}")));
                        }
                        if !(close(domain.min[j], -l - d) && close(domain.max[j], l + d)) {
                            return Err(Error::param("domain", format!("axis {j} must span [-(L + d), L + d] = ±{}", l + d)));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<TetMesh> {
        let mesh = match &self.geometry {
            GeometryConfig::Box {
                domain,
                h,
                solid,
                cavities,
                physical,
            } => {
                let classifier = RegionClassifier {
                    solid: solid.clone(),
                    cavities: cavities.clone(),
                    physical: *physical,
                };
                generate_box_mesh(domain, *h, &classifier)?
            }
            GeometryConfig::Msh { path, physical_map } => {
                let full = if path.is_absolute() { path.clone() } else { self.base_dir.join(path) };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Error::Config(format!("cannot read mesh {}: {e}", full.display())))?;
                import_msh(&text, physical_map)?
            }
        };
        if let ScenarioConfig::ManufacturedDirichlet { x0 } = &self.scenario {
            if mesh.has_region(Region::Pml) {
                return Err(Error::param("pml", "the manufactured scenario has no PML region"));
            }
            let mut bb = Aabb::new(mesh.vertices[0], mesh.vertices[0]);
            for v in &mesh.vertices {
                for j in 0..3 {
                    bb.min[j] = bb.min[j].min(v[j]);
                    bb.max[j] = bb.max[j].max(v[j]);
                }
            }
            if bb.contains_closed(x0, 1e-12) {
                return Err(Error::param("x0", "source point must lie outside the mesh bounding box"));
            }
        }
        if let (ScenarioConfig::PlaneWavePml, Some(p)) = (&self.scenario, &self.pml) {
            let reach = p.half_widths.iter().zip(&p.thickness).map(|(l, d)| l + d);
            for v in &mesh.vertices {
                for (t, r) in v.iter().zip(reach.clone()) {
                    if t.abs() > r * (1.0 + 1e-9) {
                        return Err(Error::OutsideDomain(*v));
                    }
                }
            }
        }
        Ok(mesh)
    }

    /// The layer profile; a non-stretching one sized to the domain when
    /// no layer is configured.
    pub fn profile(&self) -> PmlProfile {
        match (&self.pml, &self.geometry) {
            (Some(p), _) => *p,
            (None, GeometryConfig::Box { domain, .. }) => {
                let r = domain.min.iter().chain(&domain.max).fold(0.0f64, |m, t| m.max(t.abs()));
                PmlProfile::disabled(r)
            }
            (None, GeometryConfig::Msh { .. }) => PmlProfile::disabled(1.0),
        }
    }

    pub fn scenario(&self) -> Scenario {
        match &self.scenario {
            ScenarioConfig::ManufacturedDirichlet { x0 } => Scenario::ManufacturedDirichlet(ManufacturedSolution {
                x0: *x0,
                kappa: self.physics.kappa,
                omega: self.physics.omega,
            }),
            ScenarioConfig::PlaneWavePml => Scenario::PlaneWavePml(PlaneWave {
                kappa: self.physics.kappa,
            }),
        }
    }
}
