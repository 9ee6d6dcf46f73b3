//! Linear solvers for the assembled complex system.
//!
//! Systems up to [`SolverOptions::direct_limit`] unknowns are factored with a
//! sparse LU; larger ones go through restarted GMRES with an ILU(0)
//! preconditioner. Both paths enforce the same relative residual contract.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::assembly::{ComplexSparseSystem, CsrMatrix};
use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    DirectLu,
    GmresIlu0,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationStats {
    pub method: SolverMethod,
    pub matrix_nnz: usize,
    /// Nonzeros of the factors over nonzeros of the matrix, when known.
    pub fill_ratio: Option<f64>,
    /// Peak resident set size of the process after the solve, when the
    /// platform reports it.
    pub peak_memory_bytes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<C64>,
    pub relative_residual: f64,
    /// Krylov iterations; 0 for the direct path.
    pub iterations: usize,
    pub factorization_stats: FactorizationStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Largest system handled by the direct factorization.
    pub direct_limit: usize,
    pub restart: usize,
    pub max_iterations: usize,
    /// Iterative refinement steps allowed after the direct solve.
    pub refinement_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            direct_limit: 100_000,
            restart: 150,
            max_iterations: 20_000,
            refinement_steps: 3,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restart == 0 {
            return Err(Error::param("restart", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::param("max_iterations", "must be positive"));
        }
        Ok(())
    }
}

/// Solve with default options.
pub fn solve(system: &ComplexSparseSystem, tol: f64) -> Result<SolveReport> {
    solve_with(system, tol, &SolverOptions::default())
}

pub fn solve_with(system: &ComplexSparseSystem, tol: f64, opts: &SolverOptions) -> Result<SolveReport> {
    check_input(system, tol)?;
    opts.validate()?;
    let a = &system.matrix;
    let b = &system.rhs;
    let b_norm = norm(b);
    let mut report = if b_norm == 0.0 {
        SolveReport {
            solution: vec![C64::new(0.0, 0.0); a.n],
            relative_residual: 0.0,
            iterations: 0,
            factorization_stats: stats(SolverMethod::DirectLu, a, Some(0.0)),
        }
    } else if a.n <= opts.direct_limit {
        direct(a, b, tol, opts)?
    } else {
        gmres(a, b, tol, opts)?
    };
    for &(dof, val) in &system.constrained {
        report.solution[dof] = val;
    }
    if b_norm > 0.0 {
        report.relative_residual = relative_residual(a, &report.solution, b);
        if !(report.relative_residual <= tol) {
            return Err(Error::NoConvergence {
                best_residual: report.relative_residual,
                iterations: report.iterations,
            });
        }
    }
    report.factorization_stats.peak_memory_bytes = peak_memory();
    Ok(report)
}

fn check_input(system: &ComplexSparseSystem, tol: f64) -> Result<()> {
    let a = &system.matrix;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::param("tol", "must lie in (0, 1)"));
    }
    if a.row_ptr.len() != a.n + 1 || system.rhs.len() != a.n {
        return Err(Error::Solver(format!(
            "matrix of order {} with {} row pointers and rhs of length {}",
            a.n,
            a.row_ptr.len(),
            system.rhs.len()
        )));
    }
    if a.col_idx.iter().any(|&c| c >= a.n) {
        return Err(Error::Solver("column index out of range".into()));
    }
    if !a.values.iter().chain(&system.rhs).all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Solver("non-finite entry in matrix or rhs".into()));
    }
    for r in 0..a.n {
        if a.row_ptr[r] == a.row_ptr[r + 1] || a.row(r).1.iter().all(|v| v.norm() == 0.0) {
            return Err(Error::Solver(format!("row {r} is structurally empty")));
        }
    }
    Ok(())
}

fn stats(method: SolverMethod, a: &CsrMatrix, fill_ratio: Option<f64>) -> FactorizationStats {
    FactorizationStats {
        method,
        matrix_nnz: a.nnz(),
        fill_ratio,
        peak_memory_bytes: None,
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `||b - A x|| / ||b||`.
pub fn relative_residual(a: &CsrMatrix, x: &[C64], b: &[C64]) -> f64 {
    let ax = a.mul(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (q - p).norm_sqr()).sum::<f64>().sqrt();
    r / norm(b)
}

fn peak_memory() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn direct(a: &CsrMatrix, b: &[C64], tol: f64, opts: &SolverOptions) -> Result<SolveReport> {
    faer::set_global_parallelism(faer::Par::Seq);
    let n = a.n;
    let mut triplets = Vec::with_capacity(a.nnz());
    for r in 0..n {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            if v != C64::new(0.0, 0.0) {
                triplets.push(Triplet::new(r, c, v));
            }
        }
    }
    let csc = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Solver(format!("cannot build sparse matrix: {e:?}")))?;
    drop(triplets);
    let lu = csc
        .sp_lu()
        .map_err(|e| Error::Solver(format!("LU factorization failed (singular or structurally deficient): {e:?}")))?;

    let solve_vec = |rhs: &[C64]| -> Vec<C64> {
        let m = Mat::<C64>::from_fn(n, 1, |i, _| rhs[i]);
        let x = lu.solve(&m);
        (0..n).map(|i| x[(i, 0)]).collect()
    };
    let mut x = solve_vec(b);
    if !x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Solver("LU factorization is singular".into()));
    }
    let mut res = relative_residual(a, &x, b);
    for _ in 0..opts.refinement_steps {
        if res <= 0.1 * tol {
            break;
        }
        let ax = a.mul(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let dx = solve_vec(&r);
        let cand: Vec<C64> = x.iter().zip(&dx).map(|(p, q)| p + q).collect();
        let cand_res = relative_residual(a, &cand, b);
        if !(cand_res < res) {
            break;
        }
        x = cand;
        res = cand_res;
    }
    Ok(SolveReport {
        solution: x,
        relative_residual: res,
        iterations: 0,
        factorization_stats: stats(SolverMethod::DirectLu, a, None),
    })
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
/// `L` has a unit diagonal and is stored below the diagonal, `U` on and above.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag = vec![usize::MAX; n];
        for r in 0..n {
            for k in lu.row_ptr[r]..lu.row_ptr[r + 1] {
                if lu.col_idx[k] == r {
                    diag[r] = k;
                }
            }
            if diag[r] == usize::MAX {
                return Err(Error::Solver(format!("row {r} has no diagonal entry")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (s, e) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in s..e {
                pos[lu.col_idx[k]] = k;
            }
            for k in s..e {
                let c = lu.col_idx[k];
                if c >= i {
                    break;
                }
                let piv = lu.values[diag[c]];
                let lik = lu.values[k] / piv;
                lu.values[k] = lik;
                for kk in diag[c] + 1..lu.row_ptr[c + 1] {
                    let p = pos[lu.col_idx[kk]];
                    if p != usize::MAX {
                        let u = lu.values[kk];
                        lu.values[p] -= lik * u;
                    }
                }
            }
            for k in s..e {
                pos[lu.col_idx[k]] = usize::MAX;
            }
            let d = lu.values[diag[i]];
            if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
                return Err(Error::Solver(format!("zero pivot at row {i} in ILU(0)")));
            }
        }
        Ok(Self { lu, diag })
    }

    /// Overwrite `x` with `(LU)^{-1} x`.
    pub fn apply(&self, x: &mut [C64]) {
        let a = &self.lu;
        for i in 0..a.n {
            let mut s = x[i];
            for k in a.row_ptr[i]..self.diag[i] {
                s -= a.values[k] * x[a.col_idx[k]];
            }
            x[i] = s;
        }
        for i in (0..a.n).rev() {
            let mut s = x[i];
            for k in self.diag[i] + 1..a.row_ptr[i + 1] {
                s -= a.values[k] * x[a.col_idx[k]];
            }
            x[i] = s / a.values[self.diag[i]];
        }
    }
}

fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(p, q)| p.conj() * q).sum()
}

/// Right-preconditioned restarted GMRES, so the monitored residual is the
/// true one.
fn gmres(a: &CsrMatrix, b: &[C64], tol: f64, opts: &SolverOptions) -> Result<SolveReport> {
    let n = a.n;
    let m = opts.restart.min(n).max(1);
    let prec = Ilu0::new(a)?;
    let b_norm = norm(b);
    let target = 0.5 * tol * b_norm;
    let zero = C64::new(0.0, 0.0);

    let mut x = vec![zero; n];
    let mut best = (f64::INFINITY, x.clone());
    let mut iters = 0;
    let mut w = vec![zero; n];
    let mut stagnant_cycles = 0;

    while iters < opts.max_iterations {
        a.matvec(&x, &mut w);
        let r: Vec<C64> = b.iter().zip(&w).map(|(p, q)| p - q).collect();
        let beta = norm(&r);
        if beta < best.0 {
            if beta > 0.999 * best.0 {
                stagnant_cycles += 1;
            } else {
                stagnant_cycles = 0;
            }
            best = (beta, x.clone());
        } else {
            stagnant_cycles += 1;
        }
        if beta <= target || stagnant_cycles >= 5 {
            break;
        }
        let mut v: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|z| z / beta).collect());
        let mut h = vec![vec![zero; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![zero; m];
        let mut g = vec![zero; m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k = 0;
        while k < m && iters < opts.max_iterations {
            let mut z = v[k].clone();
            prec.apply(&mut z);
            a.matvec(&z, &mut w);
            for (i, vi) in v.iter().enumerate() {
                let hik = dotc(vi, &w);
                h[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= hik * vj;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = C64::new(hn, 0.0);
            for i in 0..k {
                let (x0, y0) = (h[i][k], h[i + 1][k]);
                h[i][k] = cs[i] * x0 + sn[i] * y0;
                h[i + 1][k] = -sn[i].conj() * x0 + cs[i] * y0;
            }
            let (ak, bk) = (h[k][k], h[k + 1][k]);
            let rr = (ak.norm_sqr() + bk.norm_sqr()).sqrt();
            if ak.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = C64::new(1.0, 0.0);
            } else {
                cs[k] = ak.norm() / rr;
                sn[k] = ak / ak.norm() * bk.conj() / rr;
            }
            h[k][k] = cs[k] * ak + sn[k] * bk;
            h[k + 1][k] = zero;
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] *= cs[k];
            iters += 1;
            k += 1;
            if g[k].norm() <= target || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|z| z / hn).collect());
        }
        let mut y = vec![zero; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![zero; n];
        for (yi, vi) in y.iter().zip(&v) {
            for (u, vv) in update.iter_mut().zip(vi) {
                *u += yi * vv;
            }
        }
        prec.apply(&mut update);
        for (xi, u) in x.iter_mut().zip(&update) {
            *xi += u;
        }
    }
    a.matvec(&x, &mut w);
    let final_res = norm(&b.iter().zip(&w).map(|(p, q)| p - q).collect::<Vec<_>>());
    if final_res < best.0 {
        best = (final_res, x);
    }
    let rel = best.0 / b_norm;
    if !(rel <= tol) {
        return Err(Error::NoConvergence {
            best_residual: rel,
            iterations: iters,
        });
    }
    Ok(SolveReport {
        solution: best.1,
        relative_residual: rel,
        iterations: iters,
        factorization_stats: stats(SolverMethod::GmresIlu0, a, Some(1.0)),
    })
}
