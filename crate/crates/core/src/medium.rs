//! Ambient medium parameters and the quantities derived from them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Homogeneous host medium. Units are free; the defaults are normalized
/// (`ε₀ = μ₀ = 1`, `σ₀ = 0`, `ω = 1`, hence `k = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    pub eps0: f64,
    pub mu0: f64,
    #[serde(default)]
    pub sigma0: f64,
    pub omega: f64,
}

impl Default for MediumParams {
    fn default() -> Self {
        MediumParams {
            eps0: 1.0,
            mu0: 1.0,
            sigma0: 0.0,
            omega: 1.0,
        }
    }
}

impl MediumParams {
    pub fn new(eps0: f64, mu0: f64, sigma0: f64, omega: f64) -> Result<Self> {
        let m = MediumParams {
            eps0,
            mu0,
            sigma0,
            omega,
        };
        m.validate()?;
        Ok(m)
    }

    /// Lossless medium with `ε₀ = μ₀ = 1` and wavenumber `k`.
    pub fn normalized(k: f64) -> Self {
        MediumParams {
            omega: k,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive and finite, got {v}")))
            }
        };
        positive("omega", self.omega)?;
        positive("eps0", self.eps0)?;
        positive("mu0", self.mu0)?;
        if !(self.sigma0 >= 0.0 && self.sigma0.is_finite()) {
            return Err(Error::param(
                "sigma0",
                format!("must be non-negative, got {}", self.sigma0),
            ));
        }
        Ok(())
    }

    /// `ε₀ + iσ₀/ω`.
    pub fn complex_permittivity(&self) -> Complex64 {
        Complex64::new(self.eps0, self.sigma0 / self.omega)
    }

    /// Wavenumber `k` with `k² = ω²(ε₀ + iσ₀/ω)μ₀` and `Im k ≥ 0`.
    pub fn wavenumber(&self) -> Result<Complex64> {
        self.validate()?;
        Ok(wavenumber_unchecked(self))
    }

    /// `8πi / (3ωμ₀)`: the coupling constant multiplying every dipole sum.
    pub fn coupling(&self) -> Complex64 {
        Complex64::new(0.0, 8.0 * PI / (3.0 * self.omega * self.mu0))
    }

    /// `iωμ₀`, the factor relating `∇×E` to `H`.
    pub fn i_omega_mu(&self) -> Complex64 {
        Complex64::new(0.0, self.omega * self.mu0)
    }
}

pub(crate) fn wavenumber_unchecked(m: &MediumParams) -> Complex64 {
    let k2 = m.complex_permittivity() * (m.omega * m.omega * m.mu0);
    // The principal root already has Re ≥ 0; with Im k² ≥ 0 that puts the
    // root in the first quadrant, which is the outgoing branch.
    let k = k2.sqrt();
    if k.im < 0.0 {
        -k
    } else {
        k
    }
}

/// Free-function form of [`MediumParams::wavenumber`].
pub fn wavenumber(medium: &MediumParams) -> Result<Complex64> {
    medium.wavenumber()
}
