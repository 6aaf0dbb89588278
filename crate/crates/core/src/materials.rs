//! Boundary-impedance function `h(x)` and particle density `N(x)` over Ω.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::SimDomain;
use crate::error::{Error, Result};
use crate::vector::Vec3;
use crate::voxel::{FiniteCheck, GridSpec, Lerp, VoxelGrid};

/// Monomial `coef · xᵃ yᵇ zᶜ` with `powers = [a, b, c]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm<T> {
    pub coef: T,
    pub powers: [u32; 3],
}

/// A field sampler over Ω: analytic preset or trilinear voxel grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldPreset<T> {
    Constant {
        value: T,
    },
    /// `background + amplitude · exp(−|x − center|² / (2 width²))`.
    Gaussian {
        amplitude: T,
        center: Vec3,
        width: f64,
        background: T,
    },
    Polynomial {
        terms: Vec<PolyTerm<T>>,
    },
    Voxel(VoxelGrid<T>),
}

impl<T: Lerp + FiniteCheck> FieldPreset<T> {
    pub fn eval(&self, p: Vec3) -> T {
        match self {
            FieldPreset::Constant { value } => *value,
            FieldPreset::Gaussian {
                amplitude,
                center,
                width,
                background,
            } => {
                let r2 = (p - *center).dot(p - *center);
                *background + *amplitude * (-r2 / (2.0 * width * width)).exp()
            }
            FieldPreset::Polynomial { terms } => {
                let mut it = terms.iter().map(|t| {
                    let m = p.x.powi(t.powers[0] as i32)
                        * p.y.powi(t.powers[1] as i32)
                        * p.z.powi(t.powers[2] as i32);
                    t.coef * m
                });
                let first = it.next().expect("polynomial validated non-empty");
                it.fold(first, |acc, v| acc + v)
            }
            FieldPreset::Voxel(grid) => grid.interpolate(p),
        }
    }

    fn check_finite(&self) -> Result<()> {
        match self {
            FieldPreset::Voxel(grid) => grid.validate(),
            FieldPreset::Polynomial { terms } if terms.is_empty() => {
                Err(Error::Data("polynomial preset has no terms".into()))
            }
            FieldPreset::Gaussian { width, .. } if !(*width > 0.0) => {
                Err(Error::Data(format!("gaussian width must be positive, got {width}")))
            }
            _ => Ok(()),
        }
    }

    pub fn constant_value(&self) -> Option<T> {
        match self {
            FieldPreset::Constant { value } => Some(*value),
            _ => None,
        }
    }
}

/// `h` and `N` over the domain. Both vanish outside Ω.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFields", into = "RawFields")]
pub struct MaterialFields {
    domain: SimDomain,
    h: FieldPreset<Complex64>,
    n: FieldPreset<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawFields {
    domain: SimDomain,
    h: FieldPreset<Complex64>,
    n: FieldPreset<f64>,
}

impl TryFrom<RawFields> for MaterialFields {
    type Error = Error;
    fn try_from(r: RawFields) -> Result<Self> {
        MaterialFields::new(r.domain, r.h, r.n)
    }
}

impl From<MaterialFields> for RawFields {
    fn from(m: MaterialFields) -> Self {
        RawFields {
            domain: m.domain,
            h: m.h,
            n: m.n,
        }
    }
}

/// Resolution of the sampling check applied to analytic presets.
const CHECK_NODES: usize = 9;

impl MaterialFields {
    pub fn new(domain: SimDomain, h: FieldPreset<Complex64>, n: FieldPreset<f64>) -> Result<Self> {
        h.check_finite()?;
        n.check_finite()?;
        let fields = MaterialFields { domain, h, n };
        fields.check_admissible()?;
        Ok(fields)
    }

    pub fn constant(domain: SimDomain, h: Complex64, n: f64) -> Result<Self> {
        Self::new(
            domain,
            FieldPreset::Constant { value: h },
            FieldPreset::Constant { value: n },
        )
    }

    /// `Re h ≥ 0` and `N ≥ 0`. Voxel grids are checked node by node (trilinear
    /// blending preserves both bounds); analytic presets are checked on a
    /// sampling lattice.
    fn check_admissible(&self) -> Result<()> {
        let bad_h = |v: &Complex64| v.re < 0.0;
        let bad_n = |v: &f64| *v < 0.0;
        let h_violation = match &self.h {
            FieldPreset::Voxel(g) => g.values.iter().position(bad_h).map(|i| g.spec.point_at(i)),
            preset => self.check_points().find(|&p| bad_h(&preset.eval(p))),
        };
        if let Some(p) = h_violation {
            return Err(Error::Data(format!("Re h < 0 at {p:?}")));
        }
        let n_violation = match &self.n {
            FieldPreset::Voxel(g) => g.values.iter().position(bad_n).map(|i| g.spec.point_at(i)),
            preset => self.check_points().find(|&p| bad_n(&preset.eval(p))),
        };
        if let Some(p) = n_violation {
            return Err(Error::Data(format!("N < 0 at {p:?}")));
        }
        Ok(())
    }

    fn check_points(&self) -> impl Iterator<Item = Vec3> {
        let spec = GridSpec::spanning(&self.domain, [CHECK_NODES; 3]).expect("domain validated");
        (0..spec.len()).map(move |i| spec.point_at(i))
    }

    pub fn domain(&self) -> &SimDomain {
        &self.domain
    }

    pub fn h_preset(&self) -> &FieldPreset<Complex64> {
        &self.h
    }

    pub fn n_preset(&self) -> &FieldPreset<f64> {
        &self.n
    }

    /// `(h(x), N(x))`, or `(0, 0)` outside Ω.
    pub fn sample(&self, x: Vec3) -> (Complex64, f64) {
        if !self.domain.contains(x) {
            return (Complex64::new(0.0, 0.0), 0.0);
        }
        (self.h.eval(x), self.n.eval(x))
    }

    pub fn h(&self, x: Vec3) -> Complex64 {
        self.sample(x).0
    }

    pub fn density(&self, x: Vec3) -> f64 {
        self.sample(x).1
    }

    /// `N` when it is a constant preset.
    pub fn constant_density(&self) -> Option<f64> {
        self.n.constant_value()
    }

    /// Upper bound of `N` over Ω (exact for constant and voxel presets,
    /// sampled on a fine lattice otherwise).
    pub fn max_density(&self) -> f64 {
        match &self.n {
            FieldPreset::Constant { value } => *value,
            FieldPreset::Voxel(g) => g.values.iter().copied().fold(0.0, f64::max),
            FieldPreset::Gaussian {
                amplitude,
                background,
                ..
            } => (background + amplitude.max(0.0)).max(*background),
            preset => {
                let spec = GridSpec::spanning(&self.domain, [33; 3]).expect("domain validated");
                spec.points().map(|p| preset.eval(p)).fold(0.0, f64::max)
            }
        }
    }
}

/// Free-function form of [`MaterialFields::sample`].
pub fn sample_materials(fields: &MaterialFields, x: Vec3) -> (Complex64, f64) {
    fields.sample(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constant_preset_inside_and_outside() {
        let f = MaterialFields::constant(SimDomain::unit_cube(), c(0.1), 5.0).unwrap();
        assert_eq!(f.sample(Vec3::new(0.5, 0.2, 0.9)), (c(0.1), 5.0));
        assert_eq!(f.sample(Vec3::new(1.5, 0.2, 0.9)), (c(0.0), 0.0));
        assert_eq!(sample_materials(&f, Vec3::new(-1e-9, 0.0, 0.0)), (c(0.0), 0.0));
    }

    #[test]
    fn voxel_density_interpolates() {
        let spec = GridSpec::spanning(&SimDomain::unit_cube(), [2; 3]).unwrap();
        let n = VoxelGrid::from_fn(spec, |p| p.x);
        let f = MaterialFields::new(
            SimDomain::unit_cube(),
            FieldPreset::Constant { value: c(0.0) },
            FieldPreset::Voxel(n),
        )
        .unwrap();
        assert!((f.density(Vec3::new(0.5, 0.5, 0.5)) - 0.5).abs() < 1e-15);
        assert_eq!(f.max_density(), 1.0);
    }

    #[test]
    fn rejects_inadmissible_fields() {
        let d = SimDomain::unit_cube();
        assert!(MaterialFields::constant(d, Complex64::new(-0.1, 1.0), 1.0).is_err());
        assert!(MaterialFields::constant(d, c(0.1), -1.0).is_err());
        let spec = GridSpec::spanning(&d, [2; 3]).unwrap();
        let mut n = VoxelGrid::from_fn(spec, |_| 1.0);
        n.values[5] = f64::NAN;
        let err = MaterialFields::new(d, FieldPreset::Constant { value: c(0.0) }, FieldPreset::Voxel(n));
        assert!(matches!(err, Err(Error::Data(_))));
        let poly = FieldPreset::Polynomial {
            terms: vec![PolyTerm {
                coef: -1.0,
                powers: [1, 0, 0],
            }],
        };
        assert!(MaterialFields::new(d, FieldPreset::Constant { value: c(0.0) }, poly).is_err());
    }

    #[test]
    fn analytic_presets_evaluate() {
        let g: FieldPreset<f64> = FieldPreset::Gaussian {
            amplitude: 2.0,
            center: Vec3::new(0.5, 0.5, 0.5),
            width: 0.1,
            background: 1.0,
        };
        assert_eq!(g.eval(Vec3::new(0.5, 0.5, 0.5)), 3.0);
        let p: FieldPreset<Complex64> = FieldPreset::Polynomial {
            terms: vec![
                PolyTerm { coef: c(1.0), powers: [0, 0, 0] },
                PolyTerm { coef: Complex64::new(0.0, 2.0), powers: [1, 2, 0] },
            ],
        };
        let v = p.eval(Vec3::new(0.5, 2.0, 7.0));
        assert_eq!(v, Complex64::new(1.0, 4.0));
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<FieldPreset<Complex64>>(&text).unwrap(), p);
    }
}
