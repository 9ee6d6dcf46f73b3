//! Element and face matrices of the coupled sesquilinear form.
//!
//! Row index is the test function, column index the trial function. All P1
//! basis functions are real, so conjugation of the test side is a no-op.

use nalgebra::{Matrix3, SMatrix};

use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::materials::{stress, PhysicsConfig, PmlProfile};
use crate::mesh::Region;
use crate::quadrature::{tet_degree2, tet_degree4, tet_point, tri_degree2};
use crate::C64;

pub type Mat4 = SMatrix<C64, 4, 4>;
pub type Mat12 = SMatrix<C64, 12, 12>;
pub type Mat3x9 = SMatrix<C64, 3, 9>;
pub type Mat9x3 = SMatrix<C64, 9, 3>;

fn gradients(pts: &[Point; 4], tet: usize) -> Result<([Point; 4], f64)> {
    let (g, vol) = geometry::p1_gradients(pts);
    let scale = geometry::diameter(pts).powi(3);
    if !(vol > 1e-14 * scale) {
        return Err(Error::Degenerate(tet));
    }
    Ok((g, vol))
}

/// `int_K A grad(phi_j) . grad(phi_i) - kappa^2 b phi_j phi_i`.
///
/// Acoustic tets use `A = I`, `b = 1` and the four-point rule; PML tets
/// evaluate the stretching at the points of the eleven-point rule.
pub fn element_acoustic(
    pts: &[Point; 4],
    region: Region,
    physics: &PhysicsConfig,
    profile: &PmlProfile,
) -> Result<Mat4> {
    let (g, vol) = gradients(pts, 0)?;
    let k2 = physics.kappa * physics.kappa;
    let mut m = Mat4::zeros();
    match region {
        Region::Acoustic => {
            let rule = tet_degree2();
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                for i in 0..4 {
                    for j in 0..4 {
                        let s = geometry::dot(&g[j], &g[i]) - k2 * l[j] * l[i];
                        m[(i, j)] += C64::new(w * vol * s, 0.0);
                    }
                }
            }
        }
        Region::Pml => {
            let rule = tet_degree4();
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let c = profile.coefficients(&tet_point(pts, l))?;
                for i in 0..4 {
                    for j in 0..4 {
                        let stiff: C64 = (0..3).map(|d| c.a[d] * (g[j][d] * g[i][d])).sum();
                        m[(i, j)] += (stiff - c.b * (k2 * l[j] * l[i])) * (w * vol);
                    }
                }
            }
        }
        Region::Elastic => {
            return Err(Error::Assembly("acoustic element requested on an elastic tet".into()));
        }
    }
    Ok(m)
}

/// `int_K sigma(phi_j e_b) : grad(phi_i e_a)` at local index `3 i + a`.
pub fn elastic_stiffness(pts: &[Point; 4], lambda: f64, mu: f64) -> Result<Mat12> {
    let (g, vol) = gradients(pts, 0)?;
    let mut k = Mat12::zeros();
    for j in 0..4 {
        for b in 0..3 {
            // grad(phi_j e_b) has row b equal to grad(phi_j)
            let mut grad = Matrix3::<C64>::zeros();
            for d in 0..3 {
                grad[(b, d)] = C64::new(g[j][d], 0.0);
            }
            let sig = stress(&grad, lambda, mu);
            for i in 0..4 {
                for a in 0..3 {
                    let v: C64 = (0..3).map(|d| sig[(a, d)] * g[i][d]).sum();
                    k[(3 * i + a, 3 * j + b)] = v * vol;
                }
            }
        }
    }
    Ok(k)
}

/// `int_K phi_j phi_i delta_ab`.
pub fn vector_mass(pts: &[Point; 4]) -> Result<Mat12> {
    let (_, vol) = gradients(pts, 0)?;
    let mut m = Mat12::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let v = if i == j { vol / 10.0 } else { vol / 20.0 };
            for a in 0..3 {
                m[(3 * i + a, 3 * j + a)] = C64::new(v, 0.0);
            }
        }
    }
    Ok(m)
}

/// `int_K sigma(u) : grad(v) - omega^2 u . v`.
pub fn element_elastic(pts: &[Point; 4], physics: &PhysicsConfig) -> Result<Mat12> {
    let k = elastic_stiffness(pts, physics.lambda, physics.mu)?;
    let m = vector_mass(pts)?;
    Ok(k - m * C64::new(physics.omega * physics.omega, 0.0))
}

/// Interface coupling on a solid-surface triangle with unit normal `n1`
/// pointing out of the solid:
/// `C_pu[i, 3j + c] = rho_a omega^2 int n1_c phi_j phi_i` and
/// `C_up[3i + c, j] = int phi_j n1_c phi_i`.
pub fn coupling_face(pts: &[Point; 3], n1: &Point, physics: &PhysicsConfig) -> (Mat3x9, Mat9x3) {
    let area = geometry::triangle_area(&pts[0], &pts[1], &pts[2]);
    let rule = tri_degree2();
    let mut mass = [[0.0; 3]; 3];
    for (l, w) in rule.points.iter().zip(&rule.weights) {
        for i in 0..3 {
            for j in 0..3 {
                mass[i][j] += w * area * l[i] * l[j];
            }
        }
    }
    let rw2 = physics.rho_a * physics.omega * physics.omega;
    let mut c_pu = Mat3x9::zeros();
    let mut c_up = Mat9x3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            for c in 0..3 {
                let v = n1[c] * mass[i][j];
                c_pu[(i, 3 * j + c)] = C64::new(rw2 * v, 0.0);
                c_up[(3 * i + c, j)] = C64::new(v, 0.0);
            }
        }
    }
    (c_pu, c_up)
}
