//! Physical parameters, Hooke's law and the PML stretching.
//!
//! The layer uses the power profile `sigma_j(t) = sigma0 ((|t| - L_j) / d_j)^m`
//! for `L_j <= |t| <= L_j + d_j`, stretching `alpha_j = 1 + i sigma_j`, and the
//! coefficients `A = diag(a2 a3 / a1, a1 a3 / a2, a1 a2 / a3)`,
//! `b = a1 a2 a3` of the stretched Helmholtz operator
//! `div(A grad p) + kappa^2 b p`.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub kappa: f64,
    pub omega: f64,
    pub lambda: f64,
    pub mu: f64,
    pub rho_a: f64,
}

impl PhysicsConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("kappa", self.kappa),
            ("omega", self.omega),
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("rho_a", self.rho_a),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(field, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmlProfile {
    /// Half-widths `L_j` of the physical box `B`.
    pub half_widths: [f64; 3],
    /// Layer thicknesses `d_j`.
    pub thickness: [f64; 3],
    pub sigma0: f64,
    pub m: u32,
}

impl PmlProfile {
    pub fn uniform(half_width: f64, thickness: f64, sigma0: f64, m: u32) -> Self {
        Self {
            half_widths: [half_width; 3],
            thickness: [thickness; 3],
            sigma0,
            m,
        }
    }

    /// A profile that never stretches, for PML-free runs.
    pub fn disabled(half_width: f64) -> Self {
        Self::uniform(half_width, 1.0, 0.0, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.half_widths.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::param("half_widths", "every L_j must be positive"));
        }
        if self.thickness.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::param("thickness", "every d_j must be positive"));
        }
        if !(self.sigma0 >= 0.0 && self.sigma0.is_finite()) {
            return Err(Error::param("sigma0", "must be non-negative"));
        }
        if self.m < 1 {
            return Err(Error::param("m", "power must be at least 1"));
        }
        Ok(())
    }

    fn check_axis(&self, t: f64, axis: usize) -> Result<(f64, f64)> {
        let (l, d) = (self.half_widths[axis], self.thickness[axis]);
        if t.abs() > (l + d) * (1.0 + 1e-12) {
            let mut x = [0.0; 3];
            x[axis] = t;
            return Err(Error::OutsideDomain(x));
        }
        Ok((l, d))
    }

    /// `sigma_j(t)` for `axis` in `0..3`.
    pub fn sigma(&self, t: f64, axis: usize) -> Result<f64> {
        let (l, d) = self.check_axis(t, axis)?;
        let s = t.abs() - l;
        Ok(if s <= 0.0 {
            0.0
        } else {
            self.sigma0 * (s / d).powi(self.m as i32)
        })
    }

    /// `d sigma_j / dt`.
    pub fn sigma_derivative(&self, t: f64, axis: usize) -> Result<f64> {
        let (l, d) = self.check_axis(t, axis)?;
        let s = t.abs() - l;
        Ok(if s <= 0.0 {
            0.0
        } else {
            let m = self.m as i32;
            self.sigma0 * m as f64 * (s / d).powi(m - 1) / d * t.signum()
        })
    }

    /// `alpha_0 = max |alpha_j|` on the outer boundary.
    pub fn alpha0(&self) -> f64 {
        (1.0 + self.sigma0 * self.sigma0).sqrt()
    }

    /// `max_j L_j`.
    pub fn max_half_width(&self) -> f64 {
        self.half_widths.iter().cloned().fold(0.0, f64::max)
    }

    /// `gamma_1 = min_j d_j / sqrt(sum_j (2 L_j + d_j)^2)`.
    pub fn gamma1(&self) -> f64 {
        let dmin = self.thickness.iter().cloned().fold(f64::INFINITY, f64::min);
        let s: f64 = (0..3)
            .map(|j| (2.0 * self.half_widths[j] + self.thickness[j]).powi(2))
            .sum();
        dmin / s.sqrt()
    }

    /// Layer reflection diagnostic `alpha0^3 (1 + kappa L)^3 exp(-gamma1 kappa sigma)`,
    /// taken with unit constant.
    pub fn bound(&self, kappa: f64, sigma: f64) -> f64 {
        let l = self.max_half_width();
        self.alpha0().powi(3) * (1.0 + kappa * l).powi(3) * (-self.gamma1() * kappa * sigma).exp()
    }

    /// Whether [`Self::bound`] is below `budget`.
    pub fn bound_within(&self, kappa: f64, sigma: f64, budget: f64) -> bool {
        self.bound(kappa, sigma) < budget
    }

    /// Coefficients of the stretched operator at `x`.
    pub fn coefficients(&self, x: &Point) -> Result<PmlCoefficients> {
        Ok(self.coefficients_with_derivatives(x)?.0)
    }

    /// Coefficients together with `d A_jj / d x_j` for each `j`.
    pub fn coefficients_with_derivatives(&self, x: &Point) -> Result<(PmlCoefficients, [C64; 3])> {
        let mut alpha = [C64::new(1.0, 0.0); 3];
        let mut dalpha = [C64::new(0.0, 0.0); 3];
        for j in 0..3 {
            alpha[j] = C64::new(1.0, self.sigma(x[j], j)?);
            dalpha[j] = C64::new(0.0, self.sigma_derivative(x[j], j)?);
        }
        let b = alpha[0] * alpha[1] * alpha[2];
        let mut a = [C64::new(0.0, 0.0); 3];
        let mut da = [C64::new(0.0, 0.0); 3];
        for j in 0..3 {
            let (k, l) = ((j + 1) % 3, (j + 2) % 3);
            let others = alpha[k] * alpha[l];
            a[j] = others / alpha[j];
            da[j] = -others * dalpha[j] / (alpha[j] * alpha[j]);
        }
        Ok((PmlCoefficients { a, b, alpha }, da))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlCoefficients {
    /// Diagonal of `A`.
    pub a: [C64; 3],
    pub b: C64,
    pub alpha: [C64; 3],
}

/// Cauchy stress `2 mu eps(u) + lambda tr(eps(u)) I` from a displacement
/// gradient `(grad u)_{ij} = d u_i / d x_j`.
pub fn stress(grad_u: &Matrix3<C64>, lambda: f64, mu: f64) -> Matrix3<C64> {
    let eps = (grad_u + grad_u.transpose()) * C64::new(0.5, 0.0);
    let tr = eps.trace();
    eps * C64::new(2.0 * mu, 0.0) + Matrix3::identity() * (tr * lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex2() -> PmlProfile {
        PmlProfile::uniform(0.6, 0.4, 16.0, 2)
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn sigma_values() {
        let p = ex2();
        assert_eq!(p.sigma(0.3, 0).unwrap(), 0.0);
        assert_eq!(p.sigma(1.0, 0).unwrap(), 16.0);
        // 0.8, 0.6, 0.4 are not dyadic; agreement is to rounding
        assert!((p.sigma(0.8, 2).unwrap() - 4.0).abs() <= 4.0 * 4.0 * f64::EPSILON);
        assert!((p.sigma(-0.8, 1).unwrap() - 4.0).abs() <= 4.0 * 4.0 * f64::EPSILON);
        let dyadic = PmlProfile::uniform(0.5, 0.5, 16.0, 2);
        assert_eq!(dyadic.sigma(0.75, 0).unwrap(), 4.0);
        assert!(p.sigma(1.1, 0).is_err());
    }

    #[test]
    fn coefficient_examples() {
        let p = ex2();
        let k = p.coefficients(&[0.0; 3]).unwrap();
        assert_eq!(k.a, [c(1.0, 0.0); 3]);
        assert_eq!(k.b, c(1.0, 0.0));

        let k = p.coefficients(&[0.8, 0.0, 0.0]).unwrap();
        let tol = 1e-14;
        assert!((k.a[0] - c(1.0 / 17.0, -4.0 / 17.0)).norm() < tol);
        assert!((k.a[1] - c(1.0, 4.0)).norm() < tol);
        assert!((k.a[2] - c(1.0, 4.0)).norm() < tol);
        assert!((k.b - c(1.0, 4.0)).norm() < tol);

        let k = p.coefficients(&[0.8, 0.8, 0.8]).unwrap();
        for a in k.a {
            assert!((a - c(1.0, 4.0)).norm() < 1e-13);
        }
        // (1+4i)^3 = (-15+8i)(1+4i)
        assert!((k.b - c(-47.0, -52.0)).norm() < 1e-13 * 70.0);
    }

    #[test]
    fn disabled_profile_is_identity() {
        let p = PmlProfile::uniform(0.6, 0.4, 0.0, 2);
        for x in [[0.9, -0.95, 1.0], [0.0, 0.7, 0.0]] {
            let k = p.coefficients(&x).unwrap();
            assert_eq!(k.a, [c(1.0, 0.0); 3]);
            assert_eq!(k.b, c(1.0, 0.0));
        }
    }

    #[test]
    fn gamma1_values() {
        assert!((ex2().gamma1() - 0.4 / (3f64.sqrt() * 1.6)).abs() < 1e-15);
        assert!((ex2().gamma1() - 0.144338).abs() < 1e-6);
        let p = PmlProfile::uniform(0.5, 1.0, 16.0, 2);
        assert!((p.gamma1() - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-15);
        let mut q = ex2();
        q.half_widths = q.half_widths.map(|l| 3.7 * l);
        q.thickness = q.thickness.map(|d| 3.7 * d);
        assert!((q.gamma1() - ex2().gamma1()).abs() < 1e-15);
    }

    #[test]
    fn bound_values() {
        let p = ex2();
        let a0 = 257f64.sqrt();
        assert!((p.bound(2.0, 0.0) - a0.powi(3) * 2.2f64.powi(3)).abs() < 1e-9);
        let v = p.bound(2.0, 16.0);
        assert!((v / 433.0 - 1.0).abs() < 0.01, "{v}");
        assert!(!p.bound_within(2.0, 16.0, 1e-8));
        let off = PmlProfile::uniform(0.6, 0.4, 0.0, 2);
        let g = off.gamma1();
        assert!((off.bound(2.0, 3.0) - 2.2f64.powi(3) * (-g * 6.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn stress_examples() {
        let id = Matrix3::<C64>::identity();
        let s = stress(&id, 0.5, 0.25);
        assert!((s - id * c(2.0, 0.0)).norm() < 1e-15);

        let mut rot = Matrix3::<C64>::zeros();
        rot[(0, 1)] = c(1.0, 0.5);
        rot[(1, 0)] = c(-1.0, -0.5);
        rot[(2, 0)] = c(0.3, 0.0);
        rot[(0, 2)] = c(-0.3, 0.0);
        assert_eq!(stress(&rot, 0.5, 0.25), Matrix3::zeros());

        let mut shear = Matrix3::<C64>::zeros();
        shear[(0, 1)] = c(1.0, 0.0);
        let s = stress(&shear, 0.5, 0.25);
        let mut expect = Matrix3::<C64>::zeros();
        expect[(0, 1)] = c(0.25, 0.0);
        expect[(1, 0)] = c(0.25, 0.0);
        assert_eq!(s, expect);
    }

    #[test]
    fn alpha_continuous_at_layer_start() {
        let p = ex2();
        for j in 0..3 {
            let lo = p.sigma(0.6 - 1e-12, j).unwrap();
            let hi = p.sigma(0.6 + 1e-12, j).unwrap();
            assert!((hi - lo).abs() < 1e-20);
        }
    }

    proptest! {
        #[test]
        fn product_of_a_is_b(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
            let k = ex2().coefficients(&[x, y, z]).unwrap();
            let prod = k.a[0] * k.a[1] * k.a[2];
            prop_assert!((prod - k.b).norm() <= 1e-12 * k.b.norm());
        }

        #[test]
        fn stress_symmetric_and_linear(v in proptest::collection::vec(-2.0f64..2.0, 36), s in -3.0f64..3.0) {
            let g1 = Matrix3::from_fn(|i, j| c(v[3 * i + j], v[9 + 3 * i + j]));
            let g2 = Matrix3::from_fn(|i, j| c(v[18 + 3 * i + j], v[27 + 3 * i + j]));
            let a = stress(&g1, 0.7, 1.3);
            prop_assert_eq!(a, a.transpose());
            let lin = stress(&(g1 * c(s, 0.0) + g2), 0.7, 1.3);
            let sum = a * c(s, 0.0) + stress(&g2, 0.7, 1.3);
            prop_assert!((lin - sum).norm() < 1e-12);
        }
    }
}
