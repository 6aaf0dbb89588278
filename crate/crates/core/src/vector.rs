//! Real and complex 3-vectors and complex 3×3 matrices.
//!
//! `dot` is the bilinear product `(u, v) = Σ uᵢvᵢ` (no conjugation) and
//! `cross` is the bracket `[u, v] = u × v`, so identities such as
//! `[N, [E, N]] = E − N (E, N)` hold verbatim for complex fields.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A point or direction in ℝ³. Serializes as `[x, y, z]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Component `i` (0, 1, 2) as a mutable-free accessor.
    pub fn component(self, i: usize) -> f64 {
        self.to_array()[i]
    }

    /// Unit vector along axis `i`.
    pub fn axis(i: usize) -> Vec3 {
        let mut a = [0.0; 3];
        a[i] = 1.0;
        a.into()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Complex 3-vector. Serializes as `[[re, im], [re, im], [re, im]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[Complex64; 3]", into = "[Complex64; 3]")]
pub struct CVec3 {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl CVec3 {
    pub const ZERO: CVec3 = CVec3 {
        x: ZERO,
        y: ZERO,
        z: ZERO,
    };

    pub const fn new(x: Complex64, y: Complex64, z: Complex64) -> Self {
        CVec3 { x, y, z }
    }

    pub fn from_real(v: Vec3) -> Self {
        CVec3::new(v.x.into(), v.y.into(), v.z.into())
    }

    /// Bilinear product `(u, v)`, no conjugation.
    pub fn dot(self, o: CVec3) -> Complex64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn dot_real(self, o: Vec3) -> Complex64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: CVec3) -> CVec3 {
        CVec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    /// Euclidean (Hermitian) norm.
    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()
    }

    pub fn scale(self, s: Complex64) -> CVec3 {
        CVec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn to_array(self) -> [Complex64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.to_array().iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl From<[Complex64; 3]> for CVec3 {
    fn from(a: [Complex64; 3]) -> Self {
        CVec3::new(a[0], a[1], a[2])
    }
}

impl From<CVec3> for [Complex64; 3] {
    fn from(v: CVec3) -> Self {
        v.to_array()
    }
}

impl From<Vec3> for CVec3 {
    fn from(v: Vec3) -> Self {
        CVec3::from_real(v)
    }
}

impl Index<usize> for CVec3 {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("CVec3 index {i} out of range"),
        }
    }
}

impl Add for CVec3 {
    type Output = CVec3;
    fn add(self, o: CVec3) -> CVec3 {
        CVec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for CVec3 {
    fn add_assign(&mut self, o: CVec3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for CVec3 {
    type Output = CVec3;
    fn sub(self, o: CVec3) -> CVec3 {
        CVec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for CVec3 {
    fn sub_assign(&mut self, o: CVec3) {
        self.x -= o.x;
        self.y -= o.y;
        self.z -= o.z;
    }
}

impl Mul<Complex64> for CVec3 {
    type Output = CVec3;
    fn mul(self, s: Complex64) -> CVec3 {
        self.scale(s)
    }
}

impl Mul<f64> for CVec3 {
    type Output = CVec3;
    fn mul(self, s: f64) -> CVec3 {
        CVec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for CVec3 {
    type Output = CVec3;
    fn neg(self) -> CVec3 {
        CVec3::new(-self.x, -self.y, -self.z)
    }
}

/// Complex 3×3 matrix, row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CMat3(pub [[Complex64; 3]; 3]);

impl CMat3 {
    pub fn zeros() -> Self {
        CMat3([[ZERO; 3]; 3])
    }

    pub fn identity() -> Self {
        Self::diagonal(Complex64::new(1.0, 0.0))
    }

    pub fn diagonal(d: Complex64) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = d;
        }
        m
    }

    /// `alpha·I + beta·u uᵀ` for a real vector `u`.
    pub fn identity_plus_outer(alpha: Complex64, beta: Complex64, u: Vec3) -> Self {
        let u = u.to_array();
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = beta * (u[i] * u[j]);
            }
            m.0[i][i] += alpha;
        }
        m
    }

    pub fn mul_vec(&self, v: CVec3) -> CVec3 {
        let r = |i: usize| self.0[i][0] * v.x + self.0[i][1] * v.y + self.0[i][2] * v.z;
        CVec3::new(r(0), r(1), r(2))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                t.0[i][j] = self.0[j][i];
            }
        }
        t
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|c| *c *= s);
        m
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl Add for CMat3 {
    type Output = CMat3;
    fn add(self, o: CMat3) -> CMat3 {
        let mut m = self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] += o.0[i][j];
            }
        }
        m
    }
}

impl Sub for CMat3 {
    type Output = CMat3;
    fn sub(self, o: CMat3) -> CMat3 {
        self + o.scale(Complex64::new(-1.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cvec() -> impl Strategy<Value = CVec3> {
        prop::array::uniform6(-2.0f64..2.0)
            .prop_map(|a| CVec3::new(c(a[0], a[1]), c(a[2], a[3]), c(a[4], a[5])))
    }

    fn unit() -> impl Strategy<Value = Vec3> {
        (0.0f64..std::f64::consts::PI, 0.0f64..std::f64::consts::TAU).prop_map(|(t, p)| {
            Vec3::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos())
        })
    }

    proptest! {
        #[test]
        fn cross_is_antisymmetric(u in cvec(), v in cvec()) {
            prop_assert!((u.cross(v) + v.cross(u)).norm() < 1e-14);
            prop_assert!(u.cross(u).norm() < 1e-14);
        }

        #[test]
        fn cross_is_orthogonal_to_factor(u in cvec(), v in cvec()) {
            prop_assert!(u.dot(u.cross(v)).norm() < 1e-13);
        }

        #[test]
        fn tangential_projection_identity(e in cvec(), n in unit()) {
            // [N, [E, N]] = E − N (E, N)
            let nc = CVec3::from(n);
            let lhs = nc.cross(e.cross(nc));
            let rhs = e - nc.scale(e.dot(nc));
            prop_assert!((lhs - rhs).norm() < 1e-14 * (1.0 + e.norm()) * 4.0);
        }

        #[test]
        fn double_cross_of_tangential_is_negation(s in cvec(), n in unit()) {
            let nc = CVec3::from(n);
            let tangential = s - nc.scale(s.dot(nc));
            let lhs = nc.cross(nc.cross(tangential));
            prop_assert!((lhs + tangential).norm() < 1e-14 * (1.0 + s.norm()) * 4.0);
        }
    }

    #[test]
    fn outer_product_matrix_acts_as_expected() {
        let u = Vec3::new(0.0, 0.6, 0.8);
        let m = CMat3::identity_plus_outer(c(2.0, 0.0), c(0.0, 1.0), u);
        let v = CVec3::from(Vec3::new(1.0, 1.0, 1.0));
        let got = m.mul_vec(v);
        let expect = v * c(2.0, 0.0) + CVec3::from(u) * c(0.0, 1.4);
        assert!((got - expect).norm() < 1e-15);
        assert_eq!(m.transpose(), m);
    }
}
