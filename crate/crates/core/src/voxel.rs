//! Uniform node grids carrying scalar or vector samples.
//!
//! Values are stored with `x` varying fastest: `index = i + nx (j + ny k)`.
//! Grids serialize as `{dims, origin, spacing, values}`; complex values
//! appear as `[re, im]` pairs.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::SimDomain;
use crate::error::{Error, Result};
use crate::vector::{CVec3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: [usize; 3],
    pub origin: Vec3,
    pub spacing: Vec3,
}

impl GridSpec {
    pub fn new(dims: [usize; 3], origin: Vec3, spacing: Vec3) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::param("dims", format!("all dimensions must be positive, got {dims:?}")));
        }
        if (0..3).any(|i| !(spacing.component(i) > 0.0)) {
            return Err(Error::param("spacing", format!("must be positive, got {spacing:?}")));
        }
        Ok(GridSpec {
            dims,
            origin,
            spacing,
        })
    }

    /// Centers of the `n[0]×n[1]×n[2]` cells partitioning `domain`.
    pub fn cell_centers(domain: &SimDomain, n: [usize; 3]) -> Result<Self> {
        let e = domain.extent();
        let spacing = Vec3::new(e.x / n[0] as f64, e.y / n[1] as f64, e.z / n[2] as f64);
        GridSpec::new(n, domain.min() + spacing * 0.5, spacing)
    }

    /// Grid whose nodes include both corners of `domain`.
    pub fn spanning(domain: &SimDomain, n: [usize; 3]) -> Result<Self> {
        if n.iter().any(|&d| d < 2) {
            return Err(Error::param("dims", "a spanning grid needs at least 2 nodes per axis"));
        }
        let e = domain.extent();
        let spacing = Vec3::new(
            e.x / (n[0] - 1) as f64,
            e.y / (n[1] - 1) as f64,
            e.z / (n[2] - 1) as f64,
        );
        GridSpec::new(n, domain.min(), spacing)
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(
            self.origin.x + i as f64 * self.spacing.x,
            self.origin.y + j as f64 * self.spacing.y,
            self.origin.z + k as f64 * self.spacing.z,
        )
    }

    pub fn point_at(&self, idx: usize) -> Vec3 {
        let [i, j, k] = self.unravel(idx);
        self.point(i, j, k)
    }

    pub fn points(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..self.len()).map(move |idx| self.point_at(idx))
    }
}

/// Values that can be blended linearly.
pub trait Lerp: Copy + Add<Output = Self> + Mul<f64, Output = Self> {}
impl<T: Copy + Add<Output = T> + Mul<f64, Output = T>> Lerp for T {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid<T> {
    #[serde(flatten)]
    pub spec: GridSpec,
    pub values: Vec<T>,
}

impl<T: Copy> VoxelGrid<T> {
    pub fn new(spec: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Dimension {
                expected: spec.len(),
                got: values.len(),
            });
        }
        Ok(VoxelGrid { spec, values })
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(Vec3) -> T) -> Self {
        let values = spec.points().map(&mut f).collect();
        VoxelGrid { spec, values }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.values[self.spec.index(i, j, k)]
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(&T) -> U) -> VoxelGrid<U> {
        VoxelGrid {
            spec: self.spec,
            values: self.values.iter().map(f).collect(),
        }
    }
}

impl<T: Lerp> VoxelGrid<T> {
    /// Trilinear interpolation; queries beyond the node extent are clamped
    /// to the nearest boundary node plane.
    pub fn interpolate(&self, p: Vec3) -> T {
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let n = self.spec.dims[a];
            let t = (p.component(a) - self.spec.origin.component(a)) / self.spec.spacing.component(a);
            if n == 1 || t <= 0.0 {
                base[a] = 0;
                frac[a] = 0.0;
            } else if t >= (n - 1) as f64 {
                base[a] = n - 2;
                frac[a] = 1.0;
            } else {
                let f = t.floor();
                base[a] = f as usize;
                frac[a] = t - f;
            }
        }
        let corner = |di: usize, dj: usize, dk: usize| {
            let i = (base[0] + di).min(self.spec.dims[0] - 1);
            let j = (base[1] + dj).min(self.spec.dims[1] - 1);
            let k = (base[2] + dk).min(self.spec.dims[2] - 1);
            self.get(i, j, k)
        };
        let lerp = |a: T, b: T, t: f64| a * (1.0 - t) + b * t;
        let [fx, fy, fz] = frac;
        let c00 = lerp(corner(0, 0, 0), corner(1, 0, 0), fx);
        let c10 = lerp(corner(0, 1, 0), corner(1, 1, 0), fx);
        let c01 = lerp(corner(0, 0, 1), corner(1, 0, 1), fx);
        let c11 = lerp(corner(0, 1, 1), corner(1, 1, 1), fx);
        lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
    }
}

/// Values that can be checked for NaN/∞ on import.
pub trait FiniteCheck {
    fn all_finite(&self) -> bool;
}

impl FiniteCheck for f64 {
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl FiniteCheck for Complex64 {
    fn all_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl FiniteCheck for CVec3 {
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl<T: FiniteCheck> VoxelGrid<T> {
    /// Rejects grids whose value count is wrong or that contain NaN/∞ entries.
    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.spec.len() {
            return Err(Error::Data(format!(
                "voxel grid declares {} values but holds {}",
                self.spec.len(),
                self.values.len()
            )));
        }
        if let Some(bad) = self.values.iter().position(|v| !v.all_finite()) {
            return Err(Error::Data(format!(
                "non-finite voxel value at {:?}",
                self.spec.unravel(bad)
            )));
        }
        Ok(())
    }
}

impl<T> VoxelGrid<T>
where
    T: FiniteCheck + Serialize + for<'de> Deserialize<'de>,
{
    pub fn from_json(text: &str) -> Result<Self> {
        let grid: VoxelGrid<T> = serde_json::from_str(text)?;
        GridSpec::new(grid.spec.dims, grid.spec.origin, grid.spec.spacing)?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(crate::export::to_json_string(self)?)
    }
}
