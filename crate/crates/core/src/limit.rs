//! The limiting equation for `W = ∇×E` as the particles shrink, solved by
//! midpoint collocation, and the effective medium it describes.
//!
//! Collocation uses the same dipole kernel as the particle system with
//! weights `w_p = h(y_p) N(y_p) |c_p|` and the self-cell left out. With one
//! particle per cell both discretizations give the same matrix.
//!
//! The effective medium is `Ψ = 1 + c·hN`, `μ = μ₀/Ψ`, `K² = k²/Ψ` with
//! `c = 8πi/(3ωμ₀)`.
//!
//! Dropping the self-cell makes each node see the field of its neighbours
//! only, so on its own node lattice the discrete field obeys the
//! local-field dispersion [`local_field_k2`] rather than `K²`; the gap is
//! second order in `c·hN`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::SimDomain;
use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::incident::IncidentField;
use crate::interaction::{DipoleSystem, Exclusion, FieldSample, FieldSource};
use crate::las::{solve, CurlSolution, LasSystem, SolveOptions};
use crate::materials::MaterialFields;
use crate::medium::MediumParams;
use crate::vector::{CVec3, Vec3};
use crate::voxel::{GridSpec, VoxelGrid};

/// Threshold of the `Ψ = 0` pole test.
pub const PSI_POLE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollocationGrid {
    pub spec: GridSpec,
    pub cell_volume: f64,
    pub h: Vec<Complex64>,
    pub n: Vec<f64>,
    pub weights: Vec<Complex64>,
}

impl CollocationGrid {
    pub fn new(domain: &SimDomain, fields: &MaterialFields, cells_per_axis: usize) -> Result<Self> {
        if cells_per_axis < 2 {
            return Err(Error::param(
                "cells_per_axis",
                format!("need at least 2 cells per axis, got {cells_per_axis}"),
            ));
        }
        let spec = GridSpec::cell_centers(domain, [cells_per_axis; 3])?;
        let cell_volume = spec.spacing.x * spec.spacing.y * spec.spacing.z;
        let (h, n): (Vec<Complex64>, Vec<f64>) = spec.points().map(|p| fields.sample(p)).unzip();
        let weights = h.iter().zip(&n).map(|(h, n)| h * (n * cell_volume)).collect();
        Ok(CollocationGrid {
            spec,
            cell_volume,
            h,
            n,
            weights,
        })
    }

    pub fn nodes(&self) -> Vec<Vec3> {
        self.spec.points().collect()
    }

    pub fn len(&self) -> usize {
        self.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.is_empty()
    }

    /// Exclusion of the cell containing the query point.
    pub fn self_cell(&self) -> Exclusion {
        Exclusion::Cell(self.spec.spacing * 0.5)
    }
}

pub struct LimitSolution {
    pub grid: CollocationGrid,
    pub system: LasSystem,
    /// `W_p` in the `P` slot, `−c w_p W_p` in the `Q` slot.
    pub curl: CurlSolution,
}

impl LimitSolution {
    pub fn w(&self) -> &[CVec3] {
        &self.curl.p
    }
}

/// Collocation of the limiting equation on `cells_per_axis³` cells.
pub fn solve_limit(
    domain: &SimDomain,
    fields: &MaterialFields,
    medium: &MediumParams,
    incident: &dyn IncidentField,
    cells_per_axis: usize,
    opts: &SolveOptions,
) -> Result<LimitSolution> {
    let grid = CollocationGrid::new(domain, fields, cells_per_axis)?;
    let dipoles = DipoleSystem::new(grid.nodes(), &grid.weights, medium)?;
    let mut system = LasSystem::from_dipoles(dipoles, incident);
    let curl = solve(&mut system, opts)?;
    Ok(LimitSolution { grid, system, curl })
}

/// `E`, `H` at `x`; the cell containing `x` is left out and reported
/// through [`FieldSample::dropped_terms`].
pub fn eval_limit_field(
    solution: &LimitSolution,
    medium: &MediumParams,
    incident: &dyn IncidentField,
    x: Vec3,
) -> FieldSample {
    let sample = solution.system.dipoles.field(
        x,
        solution.w(),
        medium,
        incident,
        solution.grid.self_cell(),
        FieldSource::Limit,
    );
    if sample.dropped_terms > 0 {
        log::debug!("probe {x:?} lies inside a weighted collocation cell; self-cell dropped");
    }
    sample
}

pub fn eval_limit_fields(
    solution: &LimitSolution,
    medium: &MediumParams,
    incident: &dyn IncidentField,
    probes: &[Vec3],
) -> Vec<FieldSample> {
    probes
        .par_iter()
        .map(|&x| eval_limit_field(solution, medium, incident, x))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveMedium {
    pub psi: VoxelGrid<Complex64>,
    pub mu: VoxelGrid<Complex64>,
    pub k2: VoxelGrid<Complex64>,
}

fn check_pole(psi: &VoxelGrid<Complex64>) -> Result<()> {
    for (i, p) in psi.values.iter().enumerate() {
        if *p == Complex64::new(0.0, 0.0) || p.norm() < PSI_POLE {
            return Err(Error::Pole {
                index: psi.spec.unravel(i),
                magnitude: p.norm(),
            });
        }
    }
    Ok(())
}

impl EffectiveMedium {
    fn from_psi(psi: VoxelGrid<Complex64>, medium: &MediumParams) -> Result<Self> {
        check_pole(&psi)?;
        let k = medium.wavenumber()?;
        let mu0 = Complex64::new(medium.mu0, 0.0);
        Ok(EffectiveMedium {
            mu: psi.map(|p| mu0 / p),
            k2: psi.map(|p| k * k / p),
            psi,
        })
    }

    /// Spatially constant `Ψ` on `spec`.
    pub fn uniform(spec: GridSpec, psi: Complex64, medium: &MediumParams) -> Result<Self> {
        Self::from_psi(VoxelGrid::from_fn(spec, |_| psi), medium)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.psi.spec
    }

    /// CSV with columns `x,y,z,Re(Psi),Im(Psi),Re(mu),Im(mu),Re(K2),Im(K2)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,z,Re(Psi),Im(Psi),Re(mu),Im(mu),Re(K2),Im(K2)\n");
        for (i, p) in self.psi.spec.points().enumerate() {
            let cols = [
                p.x,
                p.y,
                p.z,
                self.psi.values[i].re,
                self.psi.values[i].im,
                self.mu.values[i].re,
                self.mu.values[i].im,
                self.k2.values[i].re,
                self.k2.values[i].im,
            ];
            let line: Vec<String> = cols.iter().map(|v| fmt_f64(*v)).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }
}

/// `Ψ`, `μ`, `K²` sampled on `spec`.
pub fn effective_medium(fields: &MaterialFields, medium: &MediumParams, spec: GridSpec) -> Result<EffectiveMedium> {
    let c = medium.coupling();
    let psi = VoxelGrid::from_fn(spec, |p| {
        let (h, n) = fields.sample(p);
        Complex64::new(1.0, 0.0) + c * h * n
    });
    EffectiveMedium::from_psi(psi, medium)
}

/// Density used when designing `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensityChoice {
    Constant(f64),
    Grid(VoxelGrid<f64>),
}

impl DensityChoice {
    fn at(&self, idx: usize) -> f64 {
        match self {
            DensityChoice::Constant(n) => *n,
            DensityChoice::Grid(g) => g.values[idx],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub voxels: usize,
    /// Voxels with `Re h = 0` and `h ≠ 0`: admissible but lossless.
    pub lossless: usize,
    pub negative_re_h: Vec<[usize; 3]>,
    /// Voxels with `N = 0` where `μ ≠ μ₀`; `h` is set to zero there.
    pub zero_density: Vec<[usize; 3]>,
}

/// `h = (3ωμ₀/(8πi)) (μ₀/μ − 1)/N` on the grid of `target_mu`.
pub fn design_materials(
    target_mu: &VoxelGrid<Complex64>,
    medium: &MediumParams,
    density: &DensityChoice,
) -> Result<(VoxelGrid<Complex64>, FeasibilityReport)> {
    medium.validate()?;
    target_mu.validate()?;
    if let DensityChoice::Grid(g) = density {
        if g.spec.dims != target_mu.spec.dims {
            return Err(Error::Dimension {
                expected: target_mu.spec.len(),
                got: g.spec.len(),
            });
        }
        g.validate()?;
    }
    // 1/(c) = 3ωμ₀/(8πi) = −i·3ωμ₀/(8π).
    let inv_c = Complex64::new(0.0, -3.0 * medium.omega * medium.mu0 / (8.0 * std::f64::consts::PI));
    let mu0 = Complex64::new(medium.mu0, 0.0);
    let mut report = FeasibilityReport {
        voxels: target_mu.values.len(),
        ..FeasibilityReport::default()
    };
    let mut values = Vec::with_capacity(target_mu.values.len());
    for (i, mu) in target_mu.values.iter().enumerate() {
        let idx = target_mu.spec.unravel(i);
        if *mu == Complex64::new(0.0, 0.0) {
            return Err(Error::ZeroPermeability { index: idx });
        }
        let contrast = mu0 / mu - 1.0;
        let n = density.at(i);
        let h = if contrast == Complex64::new(0.0, 0.0) {
            Complex64::new(0.0, 0.0)
        } else if !(n > 0.0) {
            report.zero_density.push(idx);
            Complex64::new(0.0, 0.0)
        } else {
            inv_c * contrast / n
        };
        if h.re < 0.0 {
            report.negative_re_h.push(idx);
        } else if h.re == 0.0 && h.im != 0.0 {
            report.lossless += 1;
        }
        values.push(h);
    }
    report.feasible = report.negative_re_h.is_empty() && report.zero_density.is_empty();
    Ok((VoxelGrid::new(target_mu.spec, values)?, report))
}

/// Wavenumber² of the medium seen on the collocation lattice when each node
/// excludes its own cell: `k²(1 − 2chN/3)/(1 + chN/3)`.
pub fn local_field_k2(medium: &MediumParams, hn: Complex64) -> Result<Complex64> {
    let k = medium.wavenumber()?;
    let x = medium.coupling() * hn;
    Ok(k * k * (1.0 - x * (2.0 / 3.0)) / (1.0 + x / 3.0))
}

/// Central-difference curl at interior nodes `1..n−1`; boundary entries are zero.
fn fd_curl(e: &VoxelGrid<CVec3>) -> VoxelGrid<CVec3> {
    let s = e.spec;
    let [nx, ny, nz] = s.dims;
    let h = [s.spacing.x, s.spacing.y, s.spacing.z];
    VoxelGrid {
        spec: s,
        values: (0..s.len())
            .into_par_iter()
            .map(|idx| {
                let [i, j, k] = s.unravel(idx);
                if i == 0 || j == 0 || k == 0 || i + 1 >= nx || j + 1 >= ny || k + 1 >= nz {
                    return CVec3::ZERO;
                }
                let d = |comp: usize, axis: usize| {
                    let (p, m) = match axis {
                        0 => (e.get(i + 1, j, k), e.get(i - 1, j, k)),
                        1 => (e.get(i, j + 1, k), e.get(i, j - 1, k)),
                        _ => (e.get(i, j, k + 1), e.get(i, j, k - 1)),
                    };
                    (p[comp] - m[comp]) / (2.0 * h[axis])
                };
                CVec3::new(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1))
            })
            .collect(),
    }
}

fn fd_gradient(f: &VoxelGrid<Complex64>, i: usize, j: usize, k: usize) -> CVec3 {
    let s = f.spec;
    CVec3::new(
        (f.get(i + 1, j, k) - f.get(i - 1, j, k)) / (2.0 * s.spacing.x),
        (f.get(i, j + 1, k) - f.get(i, j - 1, k)) / (2.0 * s.spacing.y),
        (f.get(i, j, k + 1) - f.get(i, j, k - 1)) / (2.0 * s.spacing.z),
    )
}

/// Pointwise residual of `∇×∇×E − K²E + [∇Ψ/Ψ, ∇×E] = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeResidual {
    /// `|residual|` on the interior nodes `2..n−2` of the input grid.
    pub residual: VoxelGrid<f64>,
    /// `|K²E|` on the same nodes.
    pub scale: VoxelGrid<f64>,
}

impl PdeResidual {
    /// `rms(residual) / rms(|K²E|)`.
    pub fn relative_rms(&self) -> f64 {
        let num: f64 = self.residual.values.iter().map(|v| v * v).sum();
        let den: f64 = self.scale.values.iter().map(|v| v * v).sum();
        (num / den).sqrt()
    }

    pub fn max(&self) -> f64 {
        self.residual.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Finite-difference residual of the effective-medium equation. `E` and the
/// medium must share one grid with at least 5 nodes per axis.
pub fn pde_residual(e: &VoxelGrid<CVec3>, medium: &EffectiveMedium) -> Result<PdeResidual> {
    let s = e.spec;
    if s.dims.iter().any(|&n| n < 5) {
        return Err(Error::Stencil { dims: s.dims });
    }
    if medium.spec() != &s {
        return Err(Error::Data("field and effective medium are sampled on different grids".into()));
    }
    e.validate()?;
    let curl = fd_curl(e);
    let curl2 = fd_curl(&curl);
    let inner = GridSpec::new(
        [s.dims[0] - 4, s.dims[1] - 4, s.dims[2] - 4],
        s.point(2, 2, 2),
        s.spacing,
    )?;
    let (res, scale): (Vec<f64>, Vec<f64>) = (0..inner.len())
        .into_par_iter()
        .map(|idx| {
            let [a, b, c] = inner.unravel(idx);
            let (i, j, k) = (a + 2, b + 2, c + 2);
            let psi = medium.psi.get(i, j, k);
            let k2e = e.get(i, j, k) * medium.k2.get(i, j, k);
            let log_grad = fd_gradient(&medium.psi, i, j, k) * psi.inv();
            let r = curl2.get(i, j, k) - k2e + log_grad.cross(curl.get(i, j, k));
            (r.norm(), k2e.norm())
        })
        .unzip();
    Ok(PdeResidual {
        residual: VoxelGrid::new(inner, res)?,
        scale: VoxelGrid::new(inner, scale)?,
    })
}

/// Samples a field on every node of `spec`.
pub fn sample_field(spec: GridSpec, f: impl Fn(Vec3) -> CVec3 + Sync) -> VoxelGrid<CVec3> {
    VoxelGrid {
        spec,
        values: (0..spec.len()).into_par_iter().map(|i| f(spec.point_at(i))).collect(),
    }
}
