//! Particle clouds realizing a prescribed density `N(x)` and impedance `h(x)`.
//!
//! Particles are balls of common radius `a`. Their number in a region `Δ`
//! follows `a^{κ−2} ∫_Δ N dx` and each carries `ζ_m = h(x_m)/a^κ`.
//!
//! Constant densities give a uniform cubic lattice with spacing
//! `d = (a^{2−κ}/N)^{1/3}` centered in the box. Varying densities thin a
//! lattice built for `max N`, keeping each node with probability
//! `N(x)/max N` from a seeded ChaCha stream.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::SimDomain;
use crate::error::{Error, Result};
use crate::materials::MaterialFields;
use crate::vector::Vec3;

/// Seed used by [`place_particles`] for non-constant densities.
pub const DEFAULT_SEED: u64 = 0x5ca7_7e25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCloud", into = "RawCloud")]
pub struct ParticleCloud {
    centers: Vec<Vec3>,
    a: f64,
    kappa: f64,
    zeta: Vec<Complex64>,
    h_at_centers: Vec<Complex64>,
    placement: Option<Placement>,
}

/// What the placement aimed for, kept for the count diagnostics.
#[derive(Clone, Debug, PartialEq)]
struct Placement {
    domain: SimDomain,
    lattice_spacing: f64,
    expected_octant_counts: [f64; 8],
}

#[derive(Serialize, Deserialize)]
struct RawCloud {
    centers: Vec<Vec3>,
    a: f64,
    kappa: f64,
    zeta: Vec<Complex64>,
}

impl TryFrom<RawCloud> for ParticleCloud {
    type Error = Error;
    fn try_from(r: RawCloud) -> Result<Self> {
        if r.zeta.len() != r.centers.len() {
            return Err(Error::Dimension {
                expected: r.centers.len(),
                got: r.zeta.len(),
            });
        }
        let scale = r.a.powf(r.kappa);
        let h = r.zeta.iter().map(|z| z * scale).collect();
        ParticleCloud::new(r.centers, r.a, r.kappa, h)
    }
}

impl From<ParticleCloud> for RawCloud {
    fn from(c: ParticleCloud) -> Self {
        RawCloud {
            centers: c.centers,
            a: c.a,
            kappa: c.kappa,
            zeta: c.zeta,
        }
    }
}

fn check_radius_and_kappa(a: f64, kappa: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::param("a", format!("radius must be positive, got {a}")));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::param("kappa", format!("must lie in (0, 1), got {kappa}")));
    }
    Ok(())
}

impl ParticleCloud {
    /// Cloud from explicit centers and impedance values `h(x_m)`.
    pub fn new(centers: Vec<Vec3>, a: f64, kappa: f64, h_at_centers: Vec<Complex64>) -> Result<Self> {
        check_radius_and_kappa(a, kappa)?;
        if h_at_centers.len() != centers.len() {
            return Err(Error::Dimension {
                expected: centers.len(),
                got: h_at_centers.len(),
            });
        }
        if let Some(i) = centers.iter().position(|c| !c.is_finite()) {
            return Err(Error::Data(format!("center {i} is not finite")));
        }
        if let Some(i) = h_at_centers.iter().position(|h| !(h.re >= 0.0 && h.im.is_finite())) {
            return Err(Error::Data(format!("impedance at particle {i} violates Re h >= 0")));
        }
        let scale = a.powf(kappa);
        let zeta = h_at_centers.iter().map(|h| h / scale).collect();
        Ok(ParticleCloud {
            centers,
            a,
            kappa,
            zeta,
            h_at_centers,
            placement: None,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn zeta(&self) -> &[Complex64] {
        &self.zeta
    }

    pub fn h_at_centers(&self) -> &[Complex64] {
        &self.h_at_centers
    }

    /// Lattice spacing used by the placement, if the cloud was placed.
    pub fn lattice_spacing(&self) -> Option<f64> {
        self.placement.as_ref().map(|p| p.lattice_spacing)
    }

    /// Per-particle weights `a^{2−κ} h(x_m)` of the dipole sums.
    pub fn weights(&self) -> Vec<Complex64> {
        let s = self.a.powf(2.0 - self.kappa);
        self.h_at_centers.iter().map(|h| h * s).collect()
    }

    /// Same centers and `h`, different incident-independent scaling of `h`.
    pub fn with_h(&self, h_at_centers: Vec<Complex64>) -> Result<Self> {
        let mut c = ParticleCloud::new(self.centers.clone(), self.a, self.kappa, h_at_centers)?;
        c.placement = self.placement.clone();
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(crate::export::to_json_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Number of lattice nodes along an axis of length `len`, and the offset
/// that centers them.
fn axis_nodes(len: f64, d: f64) -> (usize, f64) {
    let n = (len / d + 1e-9).floor() as usize;
    let offset = if n == 0 { 0.0 } else { 0.5 * (len - (n - 1) as f64 * d) };
    (n, offset)
}

/// Places particles of radius `a` with the default seed.
pub fn place_particles(domain: &SimDomain, fields: &MaterialFields, a: f64, kappa: f64) -> Result<ParticleCloud> {
    place_particles_seeded(domain, fields, a, kappa, DEFAULT_SEED)
}

/// Places particles of radius `a`; `seed` only affects non-constant densities.
pub fn place_particles_seeded(
    domain: &SimDomain,
    fields: &MaterialFields,
    a: f64,
    kappa: f64,
    seed: u64,
) -> Result<ParticleCloud> {
    check_radius_and_kappa(a, kappa)?;
    let n_max = fields.max_density();
    let volume_per_particle = a.powf(2.0 - kappa);
    let expected = expected_octant_counts(domain, fields, volume_per_particle);
    if n_max <= 0.0 {
        let mut cloud = ParticleCloud::new(Vec::new(), a, kappa, Vec::new())?;
        cloud.placement = Some(Placement {
            domain: *domain,
            lattice_spacing: f64::INFINITY,
            expected_octant_counts: expected,
        });
        return Ok(cloud);
    }
    let d = (volume_per_particle / n_max).cbrt();
    if d <= 2.0 * a {
        return Err(Error::Overlap {
            spacing: d,
            two_a: 2.0 * a,
        });
    }
    let e = domain.extent();
    let axes: Vec<(usize, f64)> = (0..3).map(|i| axis_nodes(e.component(i), d)).collect();
    if axes.iter().any(|&(n, _)| n == 0) {
        return Err(Error::param(
            "a",
            format!("lattice spacing {d:.4e} exceeds the domain extent; no particle fits"),
        ));
    }
    let constant = fields.constant_density().is_some();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min = domain.min();
    let mut centers = Vec::new();
    let mut hs = Vec::new();
    for k in 0..axes[2].0 {
        for j in 0..axes[1].0 {
            for i in 0..axes[0].0 {
                let x = Vec3::new(
                    min.x + axes[0].1 + i as f64 * d,
                    min.y + axes[1].1 + j as f64 * d,
                    min.z + axes[2].1 + k as f64 * d,
                );
                let (h, n) = fields.sample(x);
                let keep = if constant {
                    n > 0.0
                } else {
                    // Always draw so the stream position depends only on the node.
                    let u: f64 = rng.random();
                    n > 0.0 && u < n / n_max
                };
                if keep {
                    centers.push(x);
                    hs.push(h);
                }
            }
        }
    }
    let mut cloud = ParticleCloud::new(centers, a, kappa, hs)?;
    cloud.placement = Some(Placement {
        domain: *domain,
        lattice_spacing: d,
        expected_octant_counts: expected,
    });
    Ok(cloud)
}

/// `a^{κ−2} ∫ N` over each octant by an 8³ midpoint rule (exact for constant N).
fn expected_octant_counts(domain: &SimDomain, fields: &MaterialFields, volume_per_particle: f64) -> [f64; 8] {
    const Q: usize = 8;
    let mut out = [0.0; 8];
    for (o, oct) in domain.octants().iter().enumerate() {
        let e = oct.extent();
        let cell = Vec3::new(e.x / Q as f64, e.y / Q as f64, e.z / Q as f64);
        let mut sum = 0.0;
        for k in 0..Q {
            for j in 0..Q {
                for i in 0..Q {
                    let p = oct.min()
                        + Vec3::new((i as f64 + 0.5) * cell.x, (j as f64 + 0.5) * cell.y, (k as f64 + 0.5) * cell.z);
                    sum += fields.density(p);
                }
            }
        }
        out[o] = sum * oct.volume() / (Q * Q * Q) as f64 / volume_per_particle;
    }
    out
}

/// Octant index matching [`SimDomain::octants`] ordering.
fn octant_of(domain: &SimDomain, p: Vec3) -> usize {
    let c = domain.center();
    (p.x >= c.x) as usize + 2 * (p.y >= c.y) as usize + 4 * (p.z >= c.z) as usize
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudDiagnostics {
    pub m: usize,
    /// Smallest nearest-neighbour distance; `+∞` for a single particle.
    pub d_min: f64,
    pub d_mean: f64,
    /// `a / d_min`.
    pub a_over_d: f64,
    /// `|k| a`.
    pub ka: f64,
    /// `|realized − expected| / expected` per octant; absolute count where
    /// nothing was expected. Empty when the cloud was not placed here.
    pub count_error: Vec<f64>,
}

/// Nearest-neighbour distance of every particle.
pub fn nearest_neighbor_distances(centers: &[Vec3]) -> Vec<f64> {
    centers
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &y)| (x - y).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn diagnose(cloud: &ParticleCloud, k: Complex64) -> CloudDiagnostics {
    let nn = nearest_neighbor_distances(&cloud.centers);
    let m = nn.len();
    let d_min = nn.iter().copied().fold(f64::INFINITY, f64::min);
    let d_mean = if m == 0 { f64::INFINITY } else { nn.iter().sum::<f64>() / m as f64 };
    let count_error = match &cloud.placement {
        Some(p) => {
            let mut realized = [0usize; 8];
            for &c in &cloud.centers {
                realized[octant_of(&p.domain, c)] += 1;
            }
            realized
                .iter()
                .zip(&p.expected_octant_counts)
                .map(|(&r, &e)| if e > 0.0 { (r as f64 - e).abs() / e } else { r as f64 })
                .collect()
        }
        None => Vec::new(),
    };
    CloudDiagnostics {
        m,
        d_min,
        d_mean,
        a_over_d: if d_min.is_finite() { cloud.a / d_min } else { 0.0 },
        ka: k.norm() * cloud.a,
        count_error,
    }
}
