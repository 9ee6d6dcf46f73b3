//! Run configuration, result files and the batch driver.

mod config;
pub mod vtk;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{GeometryConfig, OutputConfig, RunConfig, ScenarioConfig};

use crate::adaptive::{run_afem_with, ConvergenceHistory, IterationRecord, StopReason};
use crate::error::{Error, Result};
use crate::estimator::EstimatorReport;
use crate::assembly::build_dof_map;
use crate::materials::PmlProfile;
use crate::mesh::{FaceTag, Region, TetMesh};
use crate::scenarios::verify_compatibility;

pub const CSV_HEADER: &str = "iter,N_p,N_u,eta_p,eta_u,eps_fem,eps_pml,err_p,err_u,seconds";

pub fn csv_row(r: &IterationRecord) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.iter,
        r.n_p,
        r.n_u,
        r.eta_p,
        r.eta_u,
        r.eps_fem,
        r.eps_pml,
        opt(r.err_p),
        opt(r.err_u),
        r.seconds
    )
}

pub fn convergence_csv(history: &ConvergenceHistory) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in &history.records {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct PmlDiagnostics {
    pub alpha0: f64,
    pub gamma1: f64,
    pub sigma: f64,
    pub bound: f64,
    pub boundary_misfit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorSummary {
    pub eta_total: f64,
    pub eta_p_total: f64,
    pub eta_u_total: f64,
    pub eps_fem: f64,
    pub eps_pml: f64,
    pub boundary_interp_term: f64,
    pub max_eta: f64,
}

impl From<&EstimatorReport> for EstimatorSummary {
    fn from(r: &EstimatorReport) -> Self {
        Self {
            eta_total: r.eta_total,
            eta_p_total: r.eta_p_total,
            eta_u_total: r.eta_u_total,
            eps_fem: r.eps_fem,
            eps_pml: r.eps_pml,
            boundary_interp_term: r.boundary_interp_term,
            max_eta: r.eta_per_tet.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Contents of `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub status: String,
    pub stop_reason: Option<StopReason>,
    pub error: Option<String>,
    pub iterations: usize,
    pub final_record: Option<IterationRecord>,
    pub estimator: Option<EstimatorSummary>,
    pub pml: Option<PmlDiagnostics>,
    /// How the norms that are not directly computable were replaced.
    pub norms: NormChoices,
    pub config: RunConfig,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormChoices {
    pub boundary_interpolation: &'static str,
    pub pml_boundary: &'static str,
}

const NORMS: NormChoices = NormChoices {
    boundary_interpolation: "sqrt(sum over outer faces of |v|^2_L2(e) / h_e + |grad_T v|^2_L2(e)), v = p_inc - I_h p_inc",
    pml_boundary: "L2 norm of p_h - p_inc on the inner PML boundary",
};

pub fn pml_diagnostics(profile: &PmlProfile, kappa: f64, report: &EstimatorReport) -> Option<PmlDiagnostics> {
    (report.pml_bound > 0.0).then(|| PmlDiagnostics {
        alpha0: profile.alpha0(),
        gamma1: profile.gamma1(),
        sigma: profile.sigma0,
        bound: profile.bound(kappa, profile.sigma0),
        boundary_misfit: report.pml_boundary_misfit,
    })
}

/// Command-line overrides of the configured output section.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub out_dir: Option<PathBuf>,
    pub write_fields: bool,
    pub quiet: bool,
}

/// Files produced by a successful [`run`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub history: ConvergenceHistory,
    pub stop: StopReason,
    pub vtk_files: Vec<PathBuf>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.into()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Load `config_path`, run the adaptive loop and write `convergence.csv`,
/// `report.json` and optionally `fields_NNNN.vtk` into the output
/// directory. Rows are flushed as iterations finish, so a failed run leaves
/// its partial table behind.
pub fn run(config_path: &Path, overrides: &RunOverrides) -> Result<RunOutcome> {
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(d) = &overrides.out_dir {
        cfg.output.directory = d.clone();
    }
    cfg.output.write_fields |= overrides.write_fields;
    if overrides.quiet {
        cfg.adaptive.progress = false;
    }
    run_config(&cfg)
}

pub fn run_config(cfg: &RunConfig) -> Result<RunOutcome> {
    let out = if cfg.output.directory.is_absolute() {
        cfg.output.directory.clone()
    } else {
        cfg.base_dir.join(&cfg.output.directory)
    };
    std::fs::create_dir_all(&out)?;
    let mesh = cfg.build_mesh()?;
    let profile = cfg.profile();
    let scenario = cfg.scenario();

    let mut csv = BufWriter::new(File::create(out.join("convergence.csv"))?);
    writeln!(csv, "{CSV_HEADER}")?;
    csv.flush()?;
    let mut vtk_files = Vec::new();
    let mut last_pml = None;
    let result = run_afem_with(&mesh, &cfg.physics, &profile, &scenario, &cfg.adaptive, |v| {
        writeln!(csv, "{}", csv_row(v.record))?;
        csv.flush()?;
        if cfg.output.write_fields {
            let path = out.join(format!("fields_{:04}.vtk", v.record.iter));
            std::fs::write(&path, vtk::write_fields(v.mesh, v.dofs, v.fields, Some(&v.report.eta_per_tet)))?;
            vtk_files.push(path);
        }
        last_pml = pml_diagnostics(&profile, cfg.physics.kappa, v.report);
        Ok(())
    });
    drop(csv);

    match result {
        Ok(run) => {
            let report = RunReport {
                status: "completed".into(),
                stop_reason: Some(run.stop),
                error: None,
                iterations: run.history.records.len(),
                final_record: run.history.last().cloned(),
                estimator: Some((&run.report).into()),
                pml: pml_diagnostics(&profile, cfg.physics.kappa, &run.report),
                norms: NORMS,
                config: cfg.clone(),
                history: run.history.records.clone(),
            };
            write_json(&out.join("report.json"), &report)?;
            Ok(RunOutcome {
                out_dir: out,
                history: run.history,
                stop: run.stop,
                vtk_files,
            })
        }
        Err(abort) => {
            let report = RunReport {
                status: "aborted".into(),
                stop_reason: None,
                error: Some(abort.error.to_string()),
                iterations: abort.history.records.len(),
                final_record: abort.history.last().cloned(),
                estimator: None,
                pml: last_pml,
                norms: NORMS,
                config: cfg.clone(),
                history: abort.history.records.clone(),
            };
            write_json(&out.join("report.json"), &report)?;
            Err(abort.error)
        }
    }
}

/// Counts, region volumes and face tag summary of a mesh.
pub fn mesh_summary(mesh: &TetMesh) -> String {
    let dofs = build_dof_map(mesh);
    let mut s = format!(
        "vertices {}\ntets {}\nfaces {}\n",
        mesh.num_vertices(),
        mesh.num_tets(),
        mesh.faces.len()
    );
    for r in [Region::Elastic, Region::Acoustic, Region::Pml] {
        let n = mesh.regions.iter().filter(|&&x| x == r).count();
        s.push_str(&format!("region {r:?}: tets {n}, volume {:.6}\n", mesh.region_volume(r)));
    }
    for tag in [FaceTag::InterfaceGammaS, FaceTag::PmlInnerBoundaryB, FaceTag::OuterGamma, FaceTag::None] {
        s.push_str(&format!("faces {tag:?}: {}\n", mesh.count_faces(tag)));
    }
    s.push_str(&format!(
        "unknowns: pressure {}, displacement {}\nmin dihedral angle {:.3} deg\n",
        dofs.n_p(),
        dofs.n_u(),
        mesh.min_dihedral_angle().to_degrees()
    ));
    s
}

/// Compatibility of the manufactured pair and the PML error bound.
pub fn check_summary(cfg: &RunConfig) -> String {
    let ph = &cfg.physics;
    let defect = ph.kappa.powi(2) * (ph.lambda + 2.0 * ph.mu) - ph.omega.powi(2);
    let mut s = format!("compatibility defect kappa^2 (lambda + 2 mu) - omega^2 = {defect:e}");
    s.push_str(match verify_compatibility(ph) {
        Ok(()) => " (ok)\n",
        Err(_) if cfg.scenario().manufactured().is_some() => " (violated)\n",
        Err(_) => " (not required in this mode)\n",
    });
    match &cfg.pml {
        Some(p) => {
            s.push_str(&format!(
                "pml: alpha0 {:.6}, gamma1 {:.6}, bound(sigma = sigma0 = {}) {:.6e}\n",
                p.alpha0(),
                p.gamma1(),
                p.sigma0,
                p.bound(ph.kappa, p.sigma0)
            ));
        }
        None => s.push_str("pml: none\n"),
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows() {
        let r = IterationRecord {
            iter: 2,
            n_p: 10,
            n_u: 6,
            n_tets: 4,
            eta_p: 0.5,
            eta_u: 0.25,
            eta_total: 0.6,
            eps_fem: 0.7,
            eps_pml: 0.0,
            err_p: None,
            err_u: None,
            solver_residual: 1e-14,
            solver_iterations: 0,
            seconds: 1.5,
        };
        assert_eq!(csv_row(&r), "2,10,6,0.5,0.25,0.7,0,,,1.5");
        let with_err = IterationRecord {
            err_p: Some(0.125),
            err_u: Some(1e-3),
            ..r
        };
        assert_eq!(csv_row(&with_err), "2,10,6,0.5,0.25,0.7,0,0.125,0.001,1.5");
        let h = ConvergenceHistory { records: vec![with_err] };
        assert!(convergence_csv(&h).starts_with("iter,N_p,N_u,eta_p,eta_u,eps_fem,eps_pml,err_p,err_u,seconds\n2,"));
    }
}
