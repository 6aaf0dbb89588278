//! Incident fields `E₀` with analytic curls.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{CVec3, Vec3};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Anything that can serve as the field driving the scatterers.
///
/// Solvers only need point values and the curl; `H₀ = ∇×E₀ / (iωμ₀)`.
pub trait IncidentField: Sync {
    fn e(&self, k: Complex64, x: Vec3) -> CVec3;
    fn curl_e(&self, k: Complex64, x: Vec3) -> CVec3;
}

/// `E₀(x) = ℰ e^{ik α·x}` with `|α| = 1` and `α·ℰ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWave", into = "RawWave")]
pub struct PlaneWave {
    direction: Vec3,
    polarization: CVec3,
}

#[derive(Serialize, Deserialize)]
struct RawWave {
    direction: Vec3,
    polarization: CVec3,
}

impl TryFrom<RawWave> for PlaneWave {
    type Error = Error;
    fn try_from(r: RawWave) -> Result<Self> {
        PlaneWave::new(r.direction, r.polarization)
    }
}

impl From<PlaneWave> for RawWave {
    fn from(w: PlaneWave) -> Self {
        RawWave {
            direction: w.direction,
            polarization: w.polarization,
        }
    }
}

impl PlaneWave {
    pub fn new(direction: Vec3, polarization: CVec3) -> Result<Self> {
        let n = direction.norm();
        if !((n - 1.0).abs() <= 1e-12) {
            return Err(Error::param("direction", format!("must be a unit vector, |alpha| = {n}")));
        }
        let overlap = polarization.dot_real(direction).norm();
        if overlap > 1e-12 {
            return Err(Error::param(
                "polarization",
                format!("must be transverse to the direction, |alpha·E| = {overlap:.3e}"),
            ));
        }
        Ok(PlaneWave {
            direction,
            polarization,
        })
    }

    /// `α = ẑ`, `ℰ = amplitude · x̂`.
    pub fn along_z(amplitude: Complex64) -> Self {
        PlaneWave {
            direction: Vec3::new(0.0, 0.0, 1.0),
            polarization: CVec3::new(amplitude, 0.0.into(), 0.0.into()),
        }
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn polarization(&self) -> CVec3 {
        self.polarization
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        PlaneWave {
            direction: self.direction,
            polarization: self.polarization * s,
        }
    }

    fn phase(&self, k: Complex64, x: Vec3) -> Complex64 {
        (I * k * self.direction.dot(x)).exp()
    }
}

impl IncidentField for PlaneWave {
    fn e(&self, k: Complex64, x: Vec3) -> CVec3 {
        self.polarization * self.phase(k, x)
    }

    /// `ik [α, ℰ] e^{ik α·x}`.
    fn curl_e(&self, k: Complex64, x: Vec3) -> CVec3 {
        CVec3::from(self.direction).cross(self.polarization) * (I * k * self.phase(k, x))
    }
}

/// Sum of plane waves, e.g. a standing wave from two counter-propagating ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Superposition(pub Vec<PlaneWave>);

impl Superposition {
    /// `ℰ (e^{ikz} + e^{−ikz})` polarized along `x̂`: its curl vanishes on `z = 0`.
    pub fn standing_wave_z(amplitude: Complex64) -> Self {
        let up = PlaneWave::along_z(amplitude);
        let down = PlaneWave::new(Vec3::new(0.0, 0.0, -1.0), up.polarization()).expect("transverse");
        Superposition(vec![up, down])
    }
}

impl IncidentField for Superposition {
    fn e(&self, k: Complex64, x: Vec3) -> CVec3 {
        self.0.iter().fold(CVec3::ZERO, |acc, w| acc + w.e(k, x))
    }

    fn curl_e(&self, k: Complex64, x: Vec3) -> CVec3 {
        self.0.iter().fold(CVec3::ZERO, |acc, w| acc + w.curl_e(k, x))
    }
}

/// Spatially constant field; its curl is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformField(pub CVec3);

impl IncidentField for UniformField {
    fn e(&self, _k: Complex64, _x: Vec3) -> CVec3 {
        self.0
    }

    fn curl_e(&self, _k: Complex64, _x: Vec3) -> CVec3 {
        CVec3::ZERO
    }
}

impl<T: IncidentField + ?Sized> IncidentField for &T {
    fn e(&self, k: Complex64, x: Vec3) -> CVec3 {
        (**self).e(k, x)
    }

    fn curl_e(&self, k: Complex64, x: Vec3) -> CVec3 {
        (**self).curl_e(k, x)
    }
}

/// `E₀` of a plane wave.
pub fn eval_e0(wave: &PlaneWave, k: Complex64, x: Vec3) -> CVec3 {
    wave.e(k, x)
}

/// `∇×E₀` of a plane wave.
pub fn curl_e0(wave: &PlaneWave, k: Complex64, x: Vec3) -> CVec3 {
    wave.curl_e(k, x)
}
