//! Residual-based a posteriori error indicators.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::assembly::{DofMap, FieldPair};
use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::materials::{stress, PhysicsConfig, PmlProfile};
use crate::mesh::{FaceTag, Region, TetMesh};
use crate::quadrature::{tet_degree4, tet_point, tri_degree5, tri_point};
use crate::scenarios::Scenario;
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    /// `eta_K` for every tet.
    pub eta_per_tet: Vec<f64>,
    /// `eta_K` plus the boundary interpolation term on the tet's outer faces.
    pub eta_hat_per_tet: Vec<f64>,
    /// Root-sum-square of `eta_K` over all tets.
    pub eta_total: f64,
    /// Root-sum-square over acoustic and PML tets.
    pub eta_p_total: f64,
    /// Root-sum-square over elastic tets.
    pub eta_u_total: f64,
    pub eps_fem: f64,
    pub eps_pml: f64,
    /// Interpolation error of the outer boundary data in the discrete
    /// `H^{1/2}` surrogate norm.
    pub boundary_interp_term: f64,
    /// `||p_h - p_inc||` in `L^2` of the inner PML boundary.
    pub pml_boundary_misfit: f64,
    pub pml_bound: f64,
}

/// One face contribution to [`eta_local`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceTerm {
    pub h_e: f64,
    /// `||J_e||` in `L^2(e)`.
    pub jump: f64,
    pub on_interface: bool,
}

/// `(||h_K R_K||^2 + 1/2 sum h_e ||J_e||^2 + sum_{Gamma_s} h_e ||J_e||^2)^{1/2}`.
pub fn eta_local(residual: f64, faces: &[FaceTerm]) -> f64 {
    let mut s = residual * residual;
    for f in faces {
        let w = if f.on_interface { 1.0 } else { 0.5 };
        s += w * f.h_e * f.jump * f.jump;
    }
    s.sqrt()
}

/// `sum_j dA_jj/dx_j (grad p)_j` for a constant gradient, the only part of
/// `div(A grad p)` that survives for piecewise linear `p`.
pub fn pml_flux_divergence(x: &Point, grad: &[C64; 3], profile: &PmlProfile) -> Result<C64> {
    let (_, da) = profile.coefficients_with_derivatives(x)?;
    Ok((0..3).map(|j| da[j] * grad[j]).sum())
}

/// Squared norms of `v = f - I_h f` on a triangle, with `I_h` the linear
/// interpolant at the vertices: `(||v||^2_{L^2}, |v|^2_{H^1})`, the latter
/// with the tangential gradient.
pub fn interpolation_defect(
    pts: &[Point; 3],
    value: impl Fn(&Point) -> Result<C64>,
    gradient: impl Fn(&Point) -> Result<[C64; 3]>,
) -> Result<(f64, f64)> {
    let n = geometry::cross(&geometry::sub(&pts[1], &pts[0]), &geometry::sub(&pts[2], &pts[0]));
    let area2 = geometry::norm(&n);
    let n = geometry::scale(&n, 1.0 / area2);
    let nodal = [value(&pts[0])?, value(&pts[1])?, value(&pts[2])?];
    let mut grad_i = [C64::new(0.0, 0.0); 3];
    for i in 0..3 {
        let (b, c) = (pts[(i + 1) % 3], pts[(i + 2) % 3]);
        let g = geometry::scale(&geometry::cross(&n, &geometry::sub(&c, &b)), 1.0 / area2);
        for d in 0..3 {
            grad_i[d] += nodal[i] * g[d];
        }
    }
    let rule = tri_degree5();
    let area = 0.5 * area2;
    let (mut l2, mut h1) = (0.0, 0.0);
    for (l, w) in rule.points.iter().zip(&rule.weights) {
        let x = tri_point(pts, l);
        let ih: C64 = (0..3).map(|k| nodal[k] * l[k]).sum();
        l2 += w * (value(&x)? - ih).norm_sqr();
        let g = gradient(&x)?;
        let gn: C64 = (0..3).map(|d| g[d] * n[d]).sum();
        h1 += w * (0..3).map(|d| (g[d] - gn * n[d] - grad_i[d]).norm_sqr()).sum::<f64>();
    }
    Ok((l2 * area, h1 * area))
}

/// Borrowed inputs shared by the indicator computations.
#[derive(Debug, Clone, Copy)]
pub struct Estimator<'a> {
    pub mesh: &'a TetMesh,
    pub dofs: &'a DofMap,
    pub fields: &'a FieldPair,
    pub physics: &'a PhysicsConfig,
    pub profile: &'a PmlProfile,
    pub scenario: &'a Scenario,
}

impl<'a> Estimator<'a> {
    fn pressure(&self, t: usize) -> ([C64; 4], [C64; 3]) {
        let (grads, _) = geometry::p1_gradients(&self.mesh.tet_points(t));
        let vals = self.mesh.tets[t].map(|v| self.fields.pressure_at(self.dofs, v));
        let g = std::array::from_fn(|d| (0..4).map(|k| vals[k] * grads[k][d]).sum());
        (vals, g)
    }

    fn displacement(&self, t: usize) -> ([[C64; 3]; 4], Matrix3<C64>) {
        let (grads, _) = geometry::p1_gradients(&self.mesh.tet_points(t));
        let vals = self.mesh.tets[t].map(|v| self.fields.displacement_at(self.dofs, v));
        let g = Matrix3::from_fn(|c, d| (0..4).map(|k| vals[k][c] * grads[k][d]).sum::<C64>());
        (vals, g)
    }

    fn traction(&self, t: usize, nu: &Point) -> Vector3<C64> {
        let (_, g) = self.displacement(t);
        let nu = Vector3::new(nu[0], nu[1], nu[2]).map(|v| C64::new(v, 0.0));
        stress(&g, self.physics.lambda, self.physics.mu) * nu
    }

    /// `A grad p_h . nu` from tet `t` at `x`.
    fn normal_flux(&self, t: usize, x: &Point, nu: &Point) -> Result<C64> {
        let (_, g) = self.pressure(t);
        let a = match self.mesh.regions[t] {
            Region::Pml => self.profile.coefficients(x)?.a,
            _ => [C64::new(1.0, 0.0); 3],
        };
        Ok((0..3).map(|d| a[d] * g[d] * nu[d]).sum())
    }

    /// `||h_K R_K||` in `L^2(K)`.
    pub fn element_residual(&self, t: usize) -> Result<f64> {
        let mesh = self.mesh;
        let pts = mesh.tet_points(t);
        let vol = mesh.tet_volume(t);
        let h = mesh.tet_diameter(t);
        let region = mesh.regions[t];
        let rule = tet_degree4();
        let k2 = self.physics.kappa * self.physics.kappa;
        let mut acc = 0.0;
        if region.is_fluid() {
            let (vals, g) = self.pressure(t);
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let x = tet_point(&pts, l);
                let ph: C64 = (0..4).map(|k| vals[k] * l[k]).sum();
                let src = self.scenario.source(&x, region, self.physics, self.profile)?;
                let r = if region == Region::Pml {
                    let b = self.profile.coefficients(&x)?.b;
                    pml_flux_divergence(&x, &g, self.profile)? + b * k2 * ph - src
                } else {
                    ph * k2 - src
                };
                acc += w * r.norm_sqr();
            }
        } else {
            let (vals, _) = self.displacement(t);
            let w2 = self.physics.omega * self.physics.omega;
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let s: f64 = (0..3)
                    .map(|c| ((0..4).map(|k| vals[k][c] * l[k]).sum::<C64>() * w2).norm_sqr())
                    .sum();
                acc += w * s;
            }
        }
        Ok(h * (acc.max(0.0) * vol).sqrt())
    }

    /// `||J_e||` in `L^2(e)` for an interior face away from the solid surface.
    pub fn face_jump_interior(&self, f: usize) -> Result<f64> {
        let face = &self.mesh.faces[f];
        let Some(k2) = face.second else {
            return Err(Error::Mesh(format!("face {f} is on the outer boundary")));
        };
        if face.tag == FaceTag::InterfaceGammaS {
            return Err(Error::Mesh(format!("face {f} is on the solid surface")));
        }
        let k1 = face.first;
        let nu = face.normal;
        if self.mesh.regions[k1] == Region::Elastic {
            let j = self.traction(k1, &nu) - self.traction(k2, &nu);
            return Ok(j.norm() * face.area.sqrt());
        }
        let pts = self.mesh.face_points(f);
        let rule = tri_degree5();
        let mut acc = 0.0;
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let x = tri_point(&pts, l);
            let j = self.normal_flux(k1, &x, &nu)? - self.normal_flux(k2, &x, &nu)?;
            acc += w * j.norm_sqr();
        }
        Ok((acc.max(0.0) * face.area).sqrt())
    }

    /// Kinematic and traction defects `(||J_N||, ||J_T||)` on a solid
    /// surface face, with the scenario's interface data subtracted.
    pub fn face_jump_interface(&self, f: usize) -> Result<(f64, f64)> {
        let face = &self.mesh.faces[f];
        if face.tag != FaceTag::InterfaceGammaS {
            return Err(Error::Mesh(format!("face {f} is {:?}, not on the solid surface", face.tag)));
        }
        let (k1, k2) = (face.first, face.second.expect("solid surface face with one side"));
        let nu = face.normal;
        let (_, gp) = self.pressure(k1);
        let dp: C64 = (0..3).map(|d| gp[d] * nu[d]).sum();
        let sn = self.traction(k2, &nu);
        let pv = face.vertices.map(|v| self.fields.pressure_at(self.dofs, v));
        let uv = face.vertices.map(|v| self.fields.displacement_at(self.dofs, v));
        let rw2 = self.physics.rho_a * self.physics.omega * self.physics.omega;
        let pts = self.mesh.face_points(f);
        let rule = tri_degree5();
        let (mut an, mut at) = (0.0, 0.0);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let x = tri_point(&pts, l);
            let ph: C64 = (0..3).map(|k| pv[k] * l[k]).sum();
            let uh: [C64; 3] = std::array::from_fn(|c| (0..3).map(|k| uv[k][c] * l[k]).sum());
            let (g_n, g_t) = self.scenario.interface_data(&x, &nu, self.physics)?;
            let un: C64 = (0..3).map(|c| uh[c] * nu[c]).sum();
            an += w * (dp - un * rw2 - g_n).norm_sqr();
            at += w * (0..3).map(|c| (-ph * nu[c] - sn[c] - g_t[c]).norm_sqr()).sum::<f64>();
        }
        Ok(((an.max(0.0) * face.area).sqrt(), (at.max(0.0) * face.area).sqrt()))
    }

    /// `h_e^{-1} ||v||^2 + |v|^2_{H^1}` for an outer boundary face.
    pub fn boundary_face_term(&self, f: usize) -> Result<f64> {
        let (l2, h1) = interpolation_defect(
            &self.mesh.face_points(f),
            |x| self.scenario.boundary_value(x),
            |x| self.scenario.boundary_gradient(x),
        )?;
        Ok(l2 / self.mesh.face_diameter(f) + h1)
    }

    /// `||p_h - p_inc||^2` over a face of the inner PML boundary.
    fn pml_misfit_sq(&self, f: usize) -> Result<f64> {
        let Scenario::PlaneWavePml(wave) = self.scenario else {
            return Ok(0.0);
        };
        let face = &self.mesh.faces[f];
        let pv = face.vertices.map(|v| self.fields.pressure_at(self.dofs, v));
        let pts = self.mesh.face_points(f);
        let rule = tri_degree5();
        let mut acc = 0.0;
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let x = tri_point(&pts, l);
            let ph: C64 = (0..3).map(|k| pv[k] * l[k]).sum();
            acc += w * (ph - wave.value(&x)).norm_sqr();
        }
        Ok(acc * face.area)
    }

    pub fn report(&self) -> Result<EstimatorReport> {
        let mesh = self.mesh;
        let nt = mesh.num_tets();
        let mut sq = vec![0.0; nt];
        for (t, s) in sq.iter_mut().enumerate() {
            *s = self.element_residual(t)?.powi(2);
        }
        let mut gamma = vec![0.0; nt];
        let mut gamma_total = 0.0;
        let mut misfit = 0.0;
        for (f, face) in mesh.faces.iter().enumerate() {
            let h_e = mesh.face_diameter(f);
            match face.tag {
                FaceTag::InterfaceGammaS => {
                    let (jn, jt) = self.face_jump_interface(f)?;
                    sq[face.first] += h_e * jn * jn;
                    sq[face.second.expect("solid surface face with one side")] += h_e * jt * jt;
                }
                FaceTag::OuterGamma => {
                    let c = self.boundary_face_term(f)?;
                    gamma[face.first] += c;
                    gamma_total += c;
                }
                _ => {}
            }
            if face.tag == FaceTag::PmlInnerBoundaryB {
                misfit += self.pml_misfit_sq(f)?;
            }
            if let (Some(k2), true) = (face.second, face.tag != FaceTag::InterfaceGammaS) {
                let j = self.face_jump_interior(f)?;
                let c = 0.5 * h_e * j * j;
                sq[face.first] += c;
                sq[k2] += c;
            }
        }
        let eta_per_tet: Vec<f64> = sq.iter().map(|s| s.sqrt()).collect();
        let eta_hat_per_tet = eta_per_tet.iter().zip(&gamma).map(|(e, g)| e + g.sqrt()).collect();
        let (mut ep, mut eu) = (0.0, 0.0);
        for (s, r) in sq.iter().zip(&mesh.regions) {
            if *r == Region::Elastic {
                eu += s;
            } else {
                ep += s;
            }
        }
        let eta_total = sq.iter().sum::<f64>().sqrt();
        let boundary_interp_term = gamma_total.sqrt();
        let pml_boundary_misfit = misfit.sqrt();
        let has_pml = mesh.has_region(Region::Pml) && self.profile.sigma0 > 0.0;
        let pml_bound = if has_pml {
            self.profile.bound(self.physics.kappa, self.profile.sigma0)
        } else {
            0.0
        };
        Ok(EstimatorReport {
            eta_per_tet,
            eta_hat_per_tet,
            eta_total,
            eta_p_total: ep.sqrt(),
            eta_u_total: eu.sqrt(),
            eps_fem: eta_total + boundary_interp_term,
            eps_pml: pml_bound * pml_boundary_misfit,
            boundary_interp_term,
            pml_boundary_misfit,
            pml_bound,
        })
    }
}

pub fn global_report(
    mesh: &TetMesh,
    dofs: &DofMap,
    fields: &FieldPair,
    physics: &PhysicsConfig,
    profile: &PmlProfile,
    scenario: &Scenario,
) -> Result<EstimatorReport> {
    Estimator {
        mesh,
        dofs,
        fields,
        physics,
        profile,
        scenario,
    }
    .report()
}
