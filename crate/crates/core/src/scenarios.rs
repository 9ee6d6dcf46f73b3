//! Model problems: a manufactured point-source pair for verification and
//! plane-wave scattering with a PML.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::assembly::{DofMap, FieldPair};
use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::materials::{stress, PhysicsConfig, PmlProfile};
use crate::mesh::{Region, TetMesh};
use crate::quadrature::{tet_degree4, tet_point};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// `p(x) = exp(i kappa |x - x0|) / |x - x0|` with `u = omega^2 grad p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedSolution {
    pub x0: Point,
    pub kappa: f64,
    pub omega: f64,
}

impl ManufacturedSolution {
    fn radial(&self, x: &Point) -> Result<(f64, Point)> {
        let d = geometry::sub(x, &self.x0);
        let r = geometry::norm(&d);
        if !(r > 0.0) {
            return Err(Error::param("x0", "evaluation point coincides with the source"));
        }
        Ok((r, geometry::scale(&d, 1.0 / r)))
    }

    pub fn pressure(&self, x: &Point) -> Result<C64> {
        let (r, _) = self.radial(x)?;
        Ok((I * self.kappa * r).exp() / r)
    }

    pub fn gradient(&self, x: &Point) -> Result<[C64; 3]> {
        let (r, e) = self.radial(x)?;
        let p = (I * self.kappa * r).exp() / r;
        let dp = p * (I * self.kappa - 1.0 / r);
        Ok(e.map(|c| dp * c))
    }

    pub fn hessian(&self, x: &Point) -> Result<Matrix3<C64>> {
        let (r, e) = self.radial(x)?;
        let p = (I * self.kappa * r).exp() / r;
        let s = I * self.kappa - 1.0 / r;
        let f1 = p * s;
        let f2 = p * (s * s + 1.0 / (r * r));
        Ok(Matrix3::from_fn(|i, j| {
            let ee = e[i] * e[j];
            let delta = if i == j { 1.0 } else { 0.0 };
            f2 * ee + f1 / r * (delta - ee)
        }))
    }

    pub fn displacement(&self, x: &Point) -> Result<[C64; 3]> {
        let w2 = self.omega * self.omega;
        Ok(self.gradient(x)?.map(|g| g * w2))
    }

    /// `(grad u)_{ij} = omega^2 d^2 p / dx_i dx_j`.
    pub fn displacement_gradient(&self, x: &Point) -> Result<Matrix3<C64>> {
        Ok(self.hessian(x)? * C64::new(self.omega * self.omega, 0.0))
    }

    /// Kinematic and traction defects of the exact pair on the solid
    /// surface: `g_N = n.grad p - rho_a omega^2 n.u`, `g_T = -p n - sigma(u) n`.
    pub fn interface_data(&self, x: &Point, n1: &Point, physics: &PhysicsConfig) -> Result<(C64, [C64; 3])> {
        let p = self.pressure(x)?;
        let g = self.gradient(x)?;
        let u = self.displacement(x)?;
        let w2 = physics.rho_a * physics.omega * physics.omega;
        let g_n = (0..3).map(|i| n1[i] * (g[i] - u[i] * w2)).sum();
        let sig = stress(&self.displacement_gradient(x)?, physics.lambda, physics.mu);
        let g_t = std::array::from_fn(|i| -p * n1[i] - (0..3).map(|j| sig[(i, j)] * n1[j]).sum::<C64>());
        Ok((g_n, g_t))
    }
}

/// Check `kappa^2 (lambda + 2 mu) = omega^2`, under which `omega^2 grad p`
/// solves the constant-coefficient Navier equation.
pub fn verify_compatibility(physics: &PhysicsConfig) -> Result<()> {
    let defect = physics.kappa.powi(2) * (physics.lambda + 2.0 * physics.mu) - physics.omega.powi(2);
    if defect.abs() > 1e-12 * physics.omega.powi(2).max(1.0) {
        return Err(Error::Compatibility { defect });
    }
    Ok(())
}

/// `p_inc(x) = exp(-i kappa x_3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneWave {
    pub kappa: f64,
}

impl PlaneWave {
    pub fn value(&self, x: &Point) -> C64 {
        (-I * self.kappa * x[2]).exp()
    }

    pub fn gradient(&self, x: &Point) -> [C64; 3] {
        let p = self.value(x);
        [C64::new(0.0, 0.0), C64::new(0.0, 0.0), -I * self.kappa * p]
    }

    /// Diagonal of the Hessian.
    pub fn hessian_diagonal(&self, x: &Point) -> [C64; 3] {
        let p = self.value(x);
        [C64::new(0.0, 0.0), C64::new(0.0, 0.0), -p * self.kappa * self.kappa]
    }
}

pub fn plane_wave(x: &Point, kappa: f64) -> C64 {
    PlaneWave { kappa }.value(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scenario {
    /// PML-free run with exact Dirichlet data and exact interface defects.
    ManufacturedDirichlet(ManufacturedSolution),
    /// Plane-wave incidence with the outer boundary set to `p_inc`.
    PlaneWavePml(PlaneWave),
}

impl Scenario {
    pub fn manufactured(&self) -> Option<&ManufacturedSolution> {
        match self {
            Scenario::ManufacturedDirichlet(m) => Some(m),
            _ => None,
        }
    }

    /// Dirichlet data on the outer boundary.
    pub fn boundary_value(&self, x: &Point) -> Result<C64> {
        match self {
            Scenario::ManufacturedDirichlet(m) => m.pressure(x),
            Scenario::PlaneWavePml(w) => Ok(w.value(x)),
        }
    }

    pub fn boundary_gradient(&self, x: &Point) -> Result<[C64; 3]> {
        match self {
            Scenario::ManufacturedDirichlet(m) => m.gradient(x),
            Scenario::PlaneWavePml(w) => Ok(w.gradient(x)),
        }
    }

    /// Inhomogeneous interface data `(g_N, g_T)`; zero for plane waves.
    pub fn interface_data(&self, x: &Point, n1: &Point, physics: &PhysicsConfig) -> Result<(C64, [C64; 3])> {
        match self {
            Scenario::ManufacturedDirichlet(m) => m.interface_data(x, n1, physics),
            Scenario::PlaneWavePml(_) => Ok((C64::new(0.0, 0.0), [C64::new(0.0, 0.0); 3])),
        }
    }

    pub fn has_interface_data(&self) -> bool {
        matches!(self, Scenario::ManufacturedDirichlet(_))
    }

    /// Volume source `g` of the truncated problem at `x` in a tet of `region`.
    pub fn source(&self, x: &Point, region: Region, physics: &PhysicsConfig, profile: &PmlProfile) -> Result<C64> {
        match self {
            Scenario::PlaneWavePml(w) => evaluate_g(x, region, w, physics, profile),
            Scenario::ManufacturedDirichlet(_) => {
                if region == Region::Elastic {
                    return Err(Error::Assembly("pressure source requested in the solid".into()));
                }
                Ok(C64::new(0.0, 0.0))
            }
        }
    }
}

/// `g = div(A grad p_inc) + kappa^2 b p_inc` in the layer, zero in the
/// physical box.
pub fn evaluate_g(x: &Point, region: Region, wave: &PlaneWave, physics: &PhysicsConfig, profile: &PmlProfile) -> Result<C64> {
    match region {
        Region::Elastic => Err(Error::Assembly(format!("source evaluated at {x:?} inside the solid"))),
        Region::Acoustic => Ok(C64::new(0.0, 0.0)),
        Region::Pml => {
            let (k, da) = profile.coefficients_with_derivatives(x)?;
            let g = wave.gradient(x);
            let h = wave.hessian_diagonal(x);
            let div: C64 = (0..3).map(|j| da[j] * g[j] + k.a[j] * h[j]).sum();
            Ok(div + k.b * physics.kappa * physics.kappa * wave.value(x))
        }
    }
}

/// H1 errors of the discrete pressure over acoustic tets and of the discrete
/// displacement over elastic tets.
pub fn h1_errors(mesh: &TetMesh, dofs: &DofMap, fields: &FieldPair, exact: &ManufacturedSolution) -> Result<(f64, f64)> {
    let rule = tet_degree4();
    let (mut ep, mut eu) = (0.0, 0.0);
    for t in 0..mesh.num_tets() {
        let region = mesh.regions[t];
        if region == Region::Pml {
            continue;
        }
        let pts = mesh.tet_points(t);
        let (grads, vol) = geometry::p1_gradients(&pts);
        let tet = mesh.tets[t];
        let mut acc = 0.0;
        match region {
            Region::Acoustic => {
                let vals = tet.map(|v| fields.pressure_at(dofs, v));
                let gh: [C64; 3] = std::array::from_fn(|d| (0..4).map(|k| vals[k] * grads[k][d]).sum());
                for (l, w) in rule.points.iter().zip(&rule.weights) {
                    let x = tet_point(&pts, l);
                    let ph: C64 = (0..4).map(|k| vals[k] * l[k]).sum();
                    let g = exact.gradient(&x)?;
                    let mut s = (exact.pressure(&x)? - ph).norm_sqr();
                    for d in 0..3 {
                        s += (g[d] - gh[d]).norm_sqr();
                    }
                    acc += w * s;
                }
                ep += acc.max(0.0) * vol;
            }
            _ => {
                let vals = tet.map(|v| fields.displacement_at(dofs, v));
                let gh = Matrix3::from_fn(|c, d| (0..4).map(|k| vals[k][c] * grads[k][d]).sum::<C64>());
                for (l, w) in rule.points.iter().zip(&rule.weights) {
                    let x = tet_point(&pts, l);
                    let u = exact.displacement(&x)?;
                    let gu = exact.displacement_gradient(&x)?;
                    let mut s = 0.0;
                    for c in 0..3 {
                        let uh: C64 = (0..4).map(|k| vals[k][c] * l[k]).sum();
                        s += (u[c] - uh).norm_sqr();
                    }
                    s += (gu - gh).norm_squared();
                    acc += w * s;
                }
                eu += acc.max(0.0) * vol;
            }
        }
    }
    Ok((ep.sqrt(), eu.sqrt()))
}

/// Least-squares slope of `log(err)` against `log(n)`.
pub fn fit_rate(history: &[(f64, f64)]) -> Result<f64> {
    if history.len() < 2 {
        return Err(Error::param("history", "need at least two records"));
    }
    if history.iter().any(|&(n, e)| !(n > 0.0 && e > 0.0)) {
        return Err(Error::param("history", "entries must be positive"));
    }
    let xs: Vec<f64> = history.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<f64> = history.iter().map(|r| r.1.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("history", "all N values are equal"));
    }
    Ok(sxy / sxx)
}
