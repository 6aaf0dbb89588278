use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::Vec3;

/// Axis-aligned box Ω that contains every particle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain", into = "RawDomain")]
pub struct SimDomain {
    min: Vec3,
    max: Vec3,
}

#[derive(Serialize, Deserialize)]
struct RawDomain {
    min: Vec3,
    max: Vec3,
}

impl TryFrom<RawDomain> for SimDomain {
    type Error = Error;
    fn try_from(r: RawDomain) -> Result<Self> {
        SimDomain::new(r.min, r.max)
    }
}

impl From<SimDomain> for RawDomain {
    fn from(d: SimDomain) -> Self {
        RawDomain {
            min: d.min,
            max: d.max,
        }
    }
}

impl SimDomain {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        let ok = (0..3).all(|i| {
            let (lo, hi) = (min.component(i), max.component(i));
            lo.is_finite() && hi.is_finite() && lo < hi
        });
        if !ok {
            return Err(Error::param(
                "domain",
                format!("min {min:?} must be componentwise below max {max:?}"),
            ));
        }
        Ok(SimDomain { min, max })
    }

    pub fn unit_cube() -> Self {
        SimDomain {
            min: Vec3::ZERO,
            max: Vec3::new(1.0, 1.0, 1.0),
        }
    }

    pub fn min(&self) -> Vec3 {
        self.min
    }

    pub fn max(&self) -> Vec3 {
        self.max
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Closed-box membership.
    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|i| {
            let v = p.component(i);
            v >= self.min.component(i) && v <= self.max.component(i)
        })
    }

    /// Euclidean distance from `p` to the box (zero inside).
    pub fn distance(&self, p: Vec3) -> f64 {
        let d: [f64; 3] = std::array::from_fn(|i| {
            let v = p.component(i);
            (self.min.component(i) - v).max(v - self.max.component(i)).max(0.0)
        });
        Vec3::from(d).norm()
    }

    /// The eight half-boxes, indexed by bit `i` selecting the upper half of axis `i`.
    pub fn octants(&self) -> [SimDomain; 8] {
        let c = self.center();
        std::array::from_fn(|o| {
            let pick = |i: usize| {
                if o >> i & 1 == 1 {
                    (c.component(i), self.max.component(i))
                } else {
                    (self.min.component(i), c.component(i))
                }
            };
            let (x, y, z) = (pick(0), pick(1), pick(2));
            SimDomain {
                min: Vec3::new(x.0, y.0, z.0),
                max: Vec3::new(x.1, y.1, z.1),
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(SimDomain::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 1.0)).is_err());
        assert!(SimDomain::new(Vec3::new(1.0, 1.0, 1.0), Vec3::ZERO).is_err());
        assert!(serde_json::from_str::<SimDomain>(r#"{"min":[0,0,0],"max":[1,1,-1]}"#).is_err());
    }

    #[test]
    fn octants_tile_the_box() {
        let d = SimDomain::new(Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 2.0, 4.0)).unwrap();
        let total: f64 = d.octants().iter().map(|o| o.volume()).sum();
        assert!((total - d.volume()).abs() < 1e-12);
        assert_eq!(d.distance(d.center()), 0.0);
        assert!((d.distance(Vec3::new(2.0, 1.0, 2.0)) - 1.0).abs() < 1e-15);
    }
}
