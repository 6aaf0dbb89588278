//! Scalar Helmholtz Green's function `g(x, y) = e^{ik|x−y|} / (4π|x−y|)` and
//! its closed-form derivatives.
//!
//! Every kernel here depends on `x − y` only through `r = |x − y|` and the
//! unit vector `r̂`, so derivatives use the radial form
//! `∂ᵢ∂ⱼ f(r) = f''(r) r̂ᵢr̂ⱼ + f'(r)/r (δᵢⱼ − r̂ᵢr̂ⱼ)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::vector::{CMat3, CVec3, Vec3};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Value, gradient (in `x`) and Hessian (in `x`) at one pair of points.
#[derive(Clone, Copy, Debug)]
pub struct KernelEval {
    pub g: Complex64,
    pub grad: CVec3,
    pub hess: CMat3,
}

/// Radial pieces shared by all kernels for separation `r > 0`.
#[derive(Clone, Copy, Debug)]
struct Radial {
    g: Complex64,
    /// `ik − 1/r`, so that `g' = g·u`.
    u: Complex64,
    inv_r: f64,
}

#[inline]
fn radial(r: f64, k: Complex64) -> Radial {
    let inv_r = 1.0 / r;
    let g = (I * k * r).exp() * (inv_r / (4.0 * PI));
    Radial {
        g,
        u: I * k - inv_r,
        inv_r,
    }
}

#[inline]
fn separation(x: Vec3, y: Vec3) -> Result<(Vec3, f64)> {
    let d = x - y;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::Singularity(x));
    }
    Ok((d, r))
}

pub fn eval_g(x: Vec3, y: Vec3, k: Complex64) -> Result<Complex64> {
    let (_, r) = separation(x, y)?;
    Ok(radial(r, k).g)
}

/// `∇ₓg = g (ik − 1/r) (x − y)/r`.
pub fn grad_g(x: Vec3, y: Vec3, k: Complex64) -> Result<CVec3> {
    let (d, r) = separation(x, y)?;
    Ok(grad_from(d, r, k))
}

#[inline]
pub(crate) fn grad_from(d: Vec3, r: f64, k: Complex64) -> CVec3 {
    let rad = radial(r, k);
    CVec3::from(d) * (rad.g * rad.u * rad.inv_r)
}

pub fn hessian_g(x: Vec3, y: Vec3, k: Complex64) -> Result<CMat3> {
    let (d, r) = separation(x, y)?;
    let rad = radial(r, k);
    let f1 = rad.g * rad.u * rad.inv_r;
    let f2 = rad.g * (rad.u * rad.u + rad.inv_r * rad.inv_r);
    Ok(CMat3::identity_plus_outer(f1, f2 - f1, d * rad.inv_r))
}

pub fn kernel(x: Vec3, y: Vec3, k: Complex64) -> Result<KernelEval> {
    let (d, r) = separation(x, y)?;
    let rad = radial(r, k);
    let f1 = rad.g * rad.u * rad.inv_r;
    let f2 = rad.g * (rad.u * rad.u + rad.inv_r * rad.inv_r);
    Ok(KernelEval {
        g: rad.g,
        grad: CVec3::from(d) * f1,
        hess: CMat3::identity_plus_outer(f1, f2 - f1, d * rad.inv_r),
    })
}

/// Coefficients of `k²g·I + ∇∇g = α I + β r̂r̂ᵀ` at separation `r`.
///
/// This 3×3 block maps a dipole moment `V` at `y` to `∇×[∇g(·, y), V]` at `x`.
#[inline]
pub(crate) fn dipole_coefficients(r: f64, k: Complex64) -> (Complex64, Complex64) {
    let rad = radial(r, k);
    let f1 = rad.g * rad.u * rad.inv_r;
    let f2 = rad.g * (rad.u * rad.u + rad.inv_r * rad.inv_r);
    (k * k * rad.g + f1, f2 - f1)
}

/// The full block `k²g(x,y)·I + ∇∇g(x,y)`.
pub fn dipole_block(x: Vec3, y: Vec3, k: Complex64) -> Result<CMat3> {
    let (d, r) = separation(x, y)?;
    let (alpha, beta) = dipole_coefficients(r, k);
    Ok(CMat3::identity_plus_outer(alpha, beta, d * (1.0 / r)))
}

/// `∇ₓ×[∇ₓg(x, y), V] = k²g V + (V, ∇)∇g` for `x ≠ y`.
pub fn curl_dipole_kernel(x: Vec3, y: Vec3, k: Complex64, v: CVec3) -> Result<CVec3> {
    let (d, r) = separation(x, y)?;
    Ok(apply_dipole(d, r, k, v))
}

#[inline]
pub(crate) fn apply_dipole(d: Vec3, r: f64, k: Complex64, v: CVec3) -> CVec3 {
    let (alpha, beta) = dipole_coefficients(r, k);
    let rhat = d * (1.0 / r);
    v * alpha + CVec3::from(rhat) * (beta * v.dot_real(rhat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    fn point() -> impl Strategy<Value = Vec3> {
        prop::array::uniform3(-1.0f64..1.0).prop_map(Vec3::from)
    }

    #[test]
    fn closed_form_values() {
        let g = eval_g(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!((g - c(1.0 / (4.0 * PI), 0.0)).norm() < 1e-16);
        assert!((g.re - 0.079_577_5).abs() < 1e-7);
        let g = eval_g(Vec3::new(0.0, PI, 0.0), Vec3::ZERO, c(1.0, 0.0)).unwrap();
        assert!((g - c(-1.0 / (4.0 * PI * PI), 0.0)).norm() < 1e-16);
    }

    #[test]
    fn coincident_points_are_an_error() {
        let p = Vec3::new(0.3, 0.1, 0.2);
        let k = c(1.0, 0.0);
        assert!(matches!(eval_g(p, p, k), Err(Error::Singularity(_))));
        assert!(grad_g(p, p, k).is_err());
        assert!(hessian_g(p, p, k).is_err());
        assert!(curl_dipole_kernel(p, p, k, CVec3::ZERO).is_err());
    }

    #[test]
    fn static_gradient_and_hessian() {
        let k = c(0.0, 0.0);
        let x = Vec3::new(1.0, 0.0, 0.0);
        let gr = grad_g(x, Vec3::ZERO, k).unwrap();
        assert!((gr - CVec3::from(Vec3::new(-1.0 / (4.0 * PI), 0.0, 0.0))).norm() < 1e-16);
        // ∂²(1/4πr) at r = x̂: diag(2, −1, −1)/(4π)
        let h = hessian_g(x, Vec3::ZERO, k).unwrap();
        let want = [2.0, -1.0, -1.0];
        for i in 0..3 {
            for j in 0..3 {
                let w = if i == j { want[i] / (4.0 * PI) } else { 0.0 };
                assert!((h.0[i][j] - c(w, 0.0)).norm() < 1e-16, "entry {i}{j}");
            }
        }
    }

    /// Central difference of `eval_g` in `x` along axis `a`.
    fn fd_grad(x: Vec3, y: Vec3, k: Complex64, a: usize, h: f64) -> Complex64 {
        let e = Vec3::axis(a) * h;
        (eval_g(x + e, y, k).unwrap() - eval_g(x - e, y, k).unwrap()) / (2.0 * h)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let k = c(2.0, 0.0);
        let x = Vec3::new(0.0, 0.0, 0.5);
        let gr = grad_g(x, Vec3::ZERO, k).unwrap();
        for a in 0..3 {
            let fd = fd_grad(x, Vec3::ZERO, k, a, 1e-5);
            let scale = gr.norm();
            assert!((gr[a] - fd).norm() / scale < 1e-8, "axis {a}");
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let k = c(1.3, 0.2);
        let (x, y) = (Vec3::new(0.3, -0.2, 0.45), Vec3::new(-0.1, 0.1, 0.0));
        let h = hessian_g(x, y, k).unwrap();
        let step = 1e-4;
        for i in 0..3 {
            for j in 0..3 {
                let (ei, ej) = (Vec3::axis(i) * step, Vec3::axis(j) * step);
                let g = |p: Vec3| eval_g(p, y, k).unwrap();
                let fd = (g(x + ei + ej) - g(x + ei - ej) - g(x - ei + ej) + g(x - ei - ej))
                    / (4.0 * step * step);
                assert!((h.0[i][j] - fd).norm() / h.max_abs() < 1e-6, "entry {i}{j}");
            }
        }
    }

    #[test]
    fn curl_kernel_matches_finite_difference_curl() {
        let k = c(1.0, 0.0);
        let (x, y) = (Vec3::new(0.4, 0.1, -0.3), Vec3::new(0.0, 0.2, 0.1));
        let v = CVec3::new(c(1.0, 0.5), c(-0.3, 0.2), c(0.7, -1.0));
        let field = |p: Vec3| grad_g(p, y, k).unwrap().cross(v);
        let step = 1e-5;
        let d = |comp: usize, axis: usize| {
            let e = Vec3::axis(axis) * step;
            (field(x + e)[comp] - field(x - e)[comp]) / (2.0 * step)
        };
        let fd = CVec3::new(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
        let got = curl_dipole_kernel(x, y, k, v).unwrap();
        assert!((got - fd).norm() / got.norm() < 1e-6);
        assert_eq!(curl_dipole_kernel(x, y, k, CVec3::ZERO).unwrap(), CVec3::ZERO);
    }

    #[test]
    fn helmholtz_residual_sixth_order() {
        // 7-point 6th-order second-derivative stencil per axis.
        const W: [f64; 4] = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
        let k = c(1.5, 0.1);
        let (x, y) = (Vec3::new(0.5, 0.2, -0.1), Vec3::ZERO);
        let g = |p: Vec3| eval_g(p, y, k).unwrap();
        let mut previous = f64::INFINITY;
        for step in [2e-2, 1e-2] {
            let mut lap = g(x) * (3.0 * W[0]);
            for a in 0..3 {
                for (m, w) in W.iter().enumerate().skip(1) {
                    let e = Vec3::axis(a) * (m as f64 * step);
                    lap += (g(x + e) + g(x - e)) * *w;
                }
            }
            lap /= step * step;
            let resid = (lap + k * k * g(x)).norm() / (k * k * g(x)).norm();
            assert!(resid < 1e-6, "step {step}: {resid}");
            // O(step⁶) truncation: halving the step shrinks it by ~64.
            assert!(resid < previous / 20.0);
            previous = resid;
        }
    }

    #[test]
    fn radiation_condition_decay() {
        let k = c(1.0, 0.0);
        let dir = Vec3::new(0.48, 0.6, 0.64);
        let sommerfeld = |r: f64| {
            let x = dir * r;
            let dgdr = grad_g(x, Vec3::ZERO, k).unwrap().dot_real(dir);
            (r * (dgdr - c(0.0, 1.0) * k * eval_g(x, Vec3::ZERO, k).unwrap())).norm()
        };
        assert!(sommerfeld(1e3) <= 1e-2 * sommerfeld(10.0));
    }

    #[test]
    fn smooth_in_wavenumber() {
        let (x, y) = (Vec3::new(0.3, 0.0, 0.4), Vec3::ZERO);
        let g0 = eval_g(x, y, c(1.0, 0.0)).unwrap();
        let g1 = eval_g(x, y, c(1.0 + 1e-6, 0.0)).unwrap();
        assert!((g1 - g0).norm() <= 1e-6);
    }

    proptest! {
        #[test]
        fn symmetry_and_trace_identity(x in point(), y in point(), kr in 0.0f64..3.0, ki in 0.0f64..0.5) {
            prop_assume!((x - y).norm() > 1e-3);
            let k = c(kr, ki);
            prop_assert_eq!(eval_g(x, y, k).unwrap(), eval_g(y, x, k).unwrap());
            let gxy = grad_g(x, y, k).unwrap();
            let gyx = grad_g(y, x, k).unwrap();
            prop_assert!((gxy + gyx).norm() <= 1e-14 * gxy.norm());
            let e = kernel(x, y, k).unwrap();
            prop_assert_eq!(e.hess, e.hess.transpose());
            let g = e.g;
            let tr = e.hess.trace();
            prop_assert!(rel(tr, -k * k * g) < 1e-12 || (tr + k * k * g).norm() < 1e-12 * e.hess.max_abs());
        }

        #[test]
        fn curl_kernel_is_linear(x in point(), y in point(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
            prop_assume!((x - y).norm() > 1e-2);
            let k = c(1.0, 0.0);
            let v1 = CVec3::new(c(1.0, 0.2), c(0.0, -1.0), c(0.5, 0.5));
            let v2 = CVec3::new(c(-0.3, 0.0), c(2.0, 1.0), c(0.0, 0.1));
            let lhs = curl_dipole_kernel(x, y, k, v1 * a + v2 * b).unwrap();
            let rhs = curl_dipole_kernel(x, y, k, v1).unwrap() * a + curl_dipole_kernel(x, y, k, v2).unwrap() * b;
            prop_assert!((lhs - rhs).norm() <= 1e-13 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn block_equals_k2g_plus_hessian() {
        let k = c(0.8, 0.05);
        let (x, y) = (Vec3::new(0.1, 0.2, 0.3), Vec3::new(-0.2, 0.0, 0.15));
        let e = kernel(x, y, k).unwrap();
        let want = e.hess + CMat3::diagonal(k * k * e.g);
        let got = dipole_block(x, y, k).unwrap();
        assert!((got - want).max_abs() < 1e-13 * want.max_abs());
    }
}
