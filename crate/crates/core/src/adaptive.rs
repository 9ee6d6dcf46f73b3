//! The adaptive loop: solve, estimate, mark, refine.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_constrained, build_dof_map, DofMap, FieldPair};
use crate::error::{Error, Result};
use crate::estimator::{global_report, EstimatorReport};
use crate::materials::{PhysicsConfig, PmlProfile};
use crate::mesh::{refine, TetMesh};
use crate::scenarios::{h1_errors, Scenario};
use crate::solver::{solve_with, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveConfig {
    /// Stop once `eps_fem` falls to this value.
    pub epsilon: f64,
    /// Bulk marking fraction in `(0, 1)`.
    pub tau: f64,
    pub max_iterations: usize,
    /// Stop once the total number of unknowns reaches this value.
    pub max_dofs: usize,
    pub solver_tol: f64,
    pub solver: SolverOptions,
    /// Print one line per iteration on standard output.
    pub progress: bool,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            tau: 0.5,
            max_iterations: 20,
            max_dofs: 200_000,
            solver_tol: 1e-10,
            solver: SolverOptions::default(),
            progress: true,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param("epsilon", "must be finite and nonnegative"));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::param("tau", "must lie in (0, 1)"));
        }
        if self.max_dofs == 0 {
            return Err(Error::param("max_dofs", "must be positive"));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1.0) {
            return Err(Error::param("solver_tol", "must lie in (0, 1)"));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub n_p: usize,
    pub n_u: usize,
    pub n_tets: usize,
    pub eta_p: f64,
    pub eta_u: f64,
    pub eta_total: f64,
    pub eps_fem: f64,
    pub eps_pml: f64,
    pub err_p: Option<f64>,
    pub err_u: Option<f64>,
    pub solver_residual: f64,
    pub solver_iterations: usize,
    pub seconds: f64,
}

impl IterationRecord {
    pub fn dofs(&self) -> usize {
        self.n_p + self.n_u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    MaxIterations,
    MaxDofs,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceHistory {
    pub records: Vec<IterationRecord>,
}

impl ConvergenceHistory {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

/// Outcome of a completed adaptive run; the final mesh and fields are kept.
#[derive(Debug, Clone)]
pub struct AfemRun {
    pub history: ConvergenceHistory,
    pub stop: StopReason,
    pub mesh: TetMesh,
    pub dofs: DofMap,
    pub fields: FieldPair,
    pub report: EstimatorReport,
}

/// A failed adaptive run with the records gathered before the failure.
#[derive(Debug, thiserror::Error)]
#[error("adaptive loop aborted after {} iterations: {error}", history.records.len())]
pub struct AfemAbort {
    pub error: Error,
    pub history: ConvergenceHistory,
}

/// Bulk marking: the smallest set `S`, taken greedily by decreasing
/// indicator with ties to the lower index, such that
/// `(sum_S eta^2)^{1/2} > tau (sum eta^2)^{1/2}`.
pub fn mark(etas: &[f64], tau: f64) -> Result<Vec<usize>> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::param("tau", "must lie in (0, 1)"));
    }
    if etas.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
        return Err(Error::param("etas", "indicators must be finite and nonnegative"));
    }
    let total: f64 = etas.iter().map(|e| e * e).sum();
    if total == 0.0 {
        return Err(Error::NothingToMark);
    }
    let target = tau * tau * total;
    let mut order: Vec<usize> = (0..etas.len()).collect();
    order.sort_by(|&a, &b| etas[b].total_cmp(&etas[a]).then(a.cmp(&b)));
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for t in order {
        marked.push(t);
        acc += etas[t] * etas[t];
        if acc > target {
            break;
        }
    }
    Ok(marked)
}

struct Solved {
    dofs: DofMap,
    fields: FieldPair,
    report: EstimatorReport,
    record: IterationRecord,
}

fn step(
    iter: usize,
    mesh: &TetMesh,
    physics: &PhysicsConfig,
    profile: &PmlProfile,
    scenario: &Scenario,
    config: &AdaptiveConfig,
) -> Result<Solved> {
    let start = Instant::now();
    let dofs = build_dof_map(mesh);
    dofs.require_coupled(mesh)?;
    let system = assemble_constrained(mesh, &dofs, physics, profile, scenario)?;
    let solved = solve_with(&system, config.solver_tol, &config.solver)?;
    drop(system);
    let fields = FieldPair::from_solution(&dofs, &solved.solution);
    let report = global_report(mesh, &dofs, &fields, physics, profile, scenario)?;
    let (err_p, err_u) = match scenario.manufactured() {
        Some(m) => {
            let (p, u) = h1_errors(mesh, &dofs, &fields, m)?;
            (Some(p), Some(u))
        }
        None => (None, None),
    };
    let record = IterationRecord {
        iter,
        n_p: dofs.n_p(),
        n_u: dofs.n_u(),
        n_tets: mesh.num_tets(),
        eta_p: report.eta_p_total,
        eta_u: report.eta_u_total,
        eta_total: report.eta_total,
        eps_fem: report.eps_fem,
        eps_pml: report.eps_pml,
        err_p,
        err_u,
        solver_residual: solved.relative_residual,
        solver_iterations: solved.iterations,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Solved {
        dofs,
        fields,
        report,
        record,
    })
}

fn progress_line(r: &IterationRecord) -> String {
    let mut s = format!(
        "iter {:>3}  N_p {:>8}  N_u {:>8}  eta_p {:.4e}  eta_u {:.4e}  eps_fem {:.4e}  eps_pml {:.4e}",
        r.iter, r.n_p, r.n_u, r.eta_p, r.eta_u, r.eps_fem, r.eps_pml
    );
    if let (Some(p), Some(u)) = (r.err_p, r.err_u) {
        s.push_str(&format!("  err_p {p:.4e}  err_u {u:.4e}"));
    }
    s.push_str(&format!("  {:.2}s", r.seconds));
    s
}

/// Read-only view of one finished iteration, handed to observers.
#[derive(Debug, Clone, Copy)]
pub struct IterationView<'a> {
    pub record: &'a IterationRecord,
    pub mesh: &'a TetMesh,
    pub dofs: &'a DofMap,
    pub fields: &'a FieldPair,
    pub report: &'a EstimatorReport,
}

/// Run the adaptive loop from `mesh0`. The first record is the solve on the
/// initial mesh; at most `max_iterations` refinements follow.
pub fn run_afem(
    mesh0: &TetMesh,
    physics: &PhysicsConfig,
    profile: &PmlProfile,
    scenario: &Scenario,
    config: &AdaptiveConfig,
) -> std::result::Result<AfemRun, AfemAbort> {
    run_afem_with(mesh0, physics, profile, scenario, config, |_| Ok(()))
}

/// [`run_afem`] calling `observer` after every solve; an observer error
/// aborts the loop.
pub fn run_afem_with(
    mesh0: &TetMesh,
    physics: &PhysicsConfig,
    profile: &PmlProfile,
    scenario: &Scenario,
    config: &AdaptiveConfig,
    mut observer: impl FnMut(IterationView<'_>) -> Result<()>,
) -> std::result::Result<AfemRun, AfemAbort> {
    let mut history = ConvergenceHistory::default();
    let abort = |error: Error, history: &ConvergenceHistory| AfemAbort {
        error,
        history: history.clone(),
    };
    let checks = config
        .validate()
        .and_then(|_| physics.validate())
        .and_then(|_| profile.validate());
    if let Err(e) = checks {
        return Err(abort(e, &history));
    }
    let mut mesh = mesh0.clone();
    let mut iter = 0;
    loop {
        let solved = step(iter, &mesh, physics, profile, scenario, config).map_err(|e| abort(e, &history))?;
        if config.progress {
            println!("{}", progress_line(&solved.record));
        }
        let stop = if solved.record.eps_fem <= config.epsilon {
            Some(StopReason::Tolerance)
        } else if iter >= config.max_iterations {
            Some(StopReason::MaxIterations)
        } else if solved.record.dofs() >= config.max_dofs {
            Some(StopReason::MaxDofs)
        } else {
            None
        };
        history.records.push(solved.record.clone());
        observer(IterationView {
            record: &solved.record,
            mesh: &mesh,
            dofs: &solved.dofs,
            fields: &solved.fields,
            report: &solved.report,
        })
        .map_err(|e| abort(e, &history))?;
        if let Some(stop) = stop {
            return Ok(AfemRun {
                history,
                stop,
                mesh,
                dofs: solved.dofs,
                fields: solved.fields,
                report: solved.report,
            });
        }
        let marked = mark(&solved.report.eta_hat_per_tet, config.tau).map_err(|e| abort(e, &history))?;
        mesh = refine(&mesh, &marked).map_err(|e| abort(e, &history))?;
        iter += 1;
    }
}
