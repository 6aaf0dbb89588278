//! Linear algebraic system for the curls `P_m = (∇×E)(x_m)` at the particle
//! centers, and the field representation built from its solution.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::grad_g;
use crate::incident::IncidentField;
use crate::interaction::{DipoleSystem, Exclusion, FieldSample, FieldSource};
use crate::linalg::{condition_estimate, gmres, relative_residual, DenseMatrix, GmresOptions, LinearOperator, LuFactors};
use crate::medium::MediumParams;
use crate::particles::{nearest_neighbor_distances, ParticleCloud};
use crate::vector::{CVec3, Vec3};

/// Condition estimates above this trigger an ill-conditioning warning.
pub const ILL_CONDITIONED: f64 = 1e12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    #[default]
    Auto,
    Direct,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverUsed {
    Direct,
    Iterative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub solver: SolverChoice,
    /// Relative residual target; `None` means 1e−10 direct, 1e−8 iterative.
    pub tolerance: Option<f64>,
    /// Largest unknown count solved directly under [`SolverChoice::Auto`].
    pub direct_limit: usize,
    pub restart: usize,
    pub max_iterations: usize,
    /// Power-iteration rounds of the condition estimate.
    pub condition_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            solver: SolverChoice::Auto,
            tolerance: None,
            direct_limit: 6000,
            restart: 60,
            max_iterations: 600,
            condition_iterations: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurlSolution {
    #[serde(rename = "P")]
    pub p: Vec<CVec3>,
    #[serde(rename = "Q")]
    pub q: Vec<CVec3>,
    pub residual_norm: f64,
    pub condition_estimate: f64,
    pub solver_used: SolverUsed,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub warnings: Vec<String>,
}

impl CurlSolution {
    pub fn to_json(&self) -> Result<String> {
        Ok(crate::export::to_json_string(self)?)
    }
}

/// The assembled system for one cloud and one incident field.
pub struct LasSystem {
    pub dipoles: DipoleSystem,
    /// Explicit matrix; absent when only the matrix-free path is needed.
    pub matrix: Option<DenseMatrix>,
    pub rhs: Vec<Complex64>,
}

impl LasSystem {
    /// Builds the interaction data and right-hand side without forming the matrix.
    pub fn prepare(cloud: &ParticleCloud, medium: &MediumParams, incident: &dyn IncidentField) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::param("cloud", "no particles to solve for"));
        }
        let dipoles = DipoleSystem::new(cloud.centers().to_vec(), &cloud.weights(), medium)?;
        Ok(Self::from_dipoles(dipoles, incident))
    }

    /// System for arbitrary nodes and strengths, driven by `curl E₀`.
    pub fn from_dipoles(dipoles: DipoleSystem, incident: &dyn IncidentField) -> Self {
        let rhs = dipoles.rhs(incident);
        LasSystem {
            dipoles,
            matrix: None,
            rhs,
        }
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn matrix_or_assemble(&mut self) -> &DenseMatrix {
        if self.matrix.is_none() {
            self.matrix = Some(self.dipoles.assemble());
        }
        self.matrix.as_ref().expect("assembled above")
    }
}

/// Forms the `3M×3M` matrix and the right-hand side `curl E₀(x_j)`.
pub fn assemble_system(cloud: &ParticleCloud, medium: &MediumParams, incident: &dyn IncidentField) -> Result<LasSystem> {
    let mut sys = LasSystem::prepare(cloud, medium, incident)?;
    sys.matrix_or_assemble();
    Ok(sys)
}

/// Solves for `P`, then sets `Q_m = −c a^{2−κ} h(x_m) P_m`.
pub fn solve(system: &mut LasSystem, opts: &SolveOptions) -> Result<CurlSolution> {
    let n = system.dim();
    let direct = match opts.solver {
        SolverChoice::Direct => true,
        SolverChoice::Iterative => false,
        SolverChoice::Auto => n <= opts.direct_limit,
    };
    let mut warnings = Vec::new();
    let (x, residual, cond, used, iterations, history) = if direct {
        let tol = opts.tolerance.unwrap_or(1e-10);
        let rhs = system.rhs.clone();
        let a = system.matrix_or_assemble();
        let lu = LuFactors::new(a)?;
        let mut x = lu.solve(&rhs);
        let mut res = relative_residual(a, &x, &rhs);
        if res > tol {
            // One step of iterative refinement.
            let ax = a.matvec(&x);
            let r: Vec<Complex64> = rhs.iter().zip(&ax).map(|(b, y)| b - y).collect();
            let dx = lu.solve(&r);
            x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
            res = relative_residual(a, &x, &rhs);
        }
        let cond = condition_estimate(a, &lu, opts.condition_iterations);
        if res > tol {
            return Err(Error::Convergence {
                iterations: 1,
                residual: res,
                history: vec![res],
            });
        }
        (x, res, cond, SolverUsed::Direct, 1, vec![res])
    } else {
        let gm = GmresOptions {
            tolerance: opts.tolerance.unwrap_or(1e-8),
            restart: opts.restart,
            max_iterations: opts.max_iterations,
        };
        let op: &dyn LinearOperator = match &system.matrix {
            Some(m) => m,
            None => &system.dipoles,
        };
        let out = gmres(op, &system.rhs, &gm)?;
        let res = relative_residual(op, &out.x, &system.rhs);
        (out.x, res, out.hessenberg_condition, SolverUsed::Iterative, out.iterations, out.history)
    };
    if cond > ILL_CONDITIONED {
        let msg = format!("condition estimate {cond:.3e} exceeds {ILL_CONDITIONED:.0e}; parameters may be invalid");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let p = DipoleSystem::to_vectors(&x);
    let q = p
        .iter()
        .zip(system.dipoles.strengths())
        .map(|(p, s)| *p * -*s)
        .collect();
    Ok(CurlSolution {
        p,
        q,
        residual_norm: residual,
        condition_estimate: cond,
        solver_used: used,
        iterations,
        residual_history: history,
        warnings,
    })
}

/// Assembles (when needed) and solves in one call.
pub fn solve_cloud(
    cloud: &ParticleCloud,
    medium: &MediumParams,
    incident: &dyn IncidentField,
    opts: &SolveOptions,
) -> Result<(LasSystem, CurlSolution)> {
    let mut sys = LasSystem::prepare(cloud, medium, incident)?;
    let sol = solve(&mut sys, opts)?;
    Ok((sys, sol))
}

/// Default effective-field exclusion radius, `2a`.
pub fn default_exclusion(cloud: &ParticleCloud) -> Exclusion {
    Exclusion::Radius(2.0 * cloud.a())
}

/// `E` and `H` at `x` from a solved system.
pub fn eval_field(
    solution: &CurlSolution,
    cloud: &ParticleCloud,
    medium: &MediumParams,
    incident: &dyn IncidentField,
    x: Vec3,
) -> Result<FieldSample> {
    let dipoles = DipoleSystem::new(cloud.centers().to_vec(), &cloud.weights(), medium)?;
    Ok(dipoles.field(x, &solution.p, medium, incident, default_exclusion(cloud), FieldSource::Las))
}

/// Batch evaluation on many probes with an explicit exclusion rule.
pub fn eval_fields(
    system: &LasSystem,
    solution: &CurlSolution,
    medium: &MediumParams,
    incident: &dyn IncidentField,
    probes: &[Vec3],
    exclusion: Exclusion,
) -> Vec<FieldSample> {
    probes
        .par_iter()
        .map(|&x| {
            system
                .dipoles
                .field(x, &solution.p, medium, incident, exclusion, FieldSource::Las)
        })
        .collect()
}

/// `max(a/d, |k|a)`: how far the cloud is from the regime where the second
/// sum of the field expansion is negligible.
pub fn ratio_bound(a: f64, d: f64, k_abs: f64) -> f64 {
    let a_over_d = if d.is_finite() { a / d } else { 0.0 };
    a_over_d.max(k_abs * a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeglectReport {
    /// `max_m |[∇g(x_n, x_m), Q_m]|` with `x_n` the nearest neighbour of `x_m`.
    pub j1: f64,
    /// `max_m a·max(1/d³, |k|²/d)·|Q_m|`.
    pub j2: f64,
    pub d_min: f64,
    pub a_over_d: f64,
    pub ka: f64,
    pub ratio_bound: f64,
}

pub fn neglect_estimates(cloud: &ParticleCloud, medium: &MediumParams, solution: &CurlSolution) -> Result<NeglectReport> {
    let k = medium.wavenumber()?;
    let a = cloud.a();
    let centers = cloud.centers();
    let nn = nearest_neighbor_distances(centers);
    let d_min = nn.iter().copied().fold(f64::INFINITY, f64::min);
    let mut j1: f64 = 0.0;
    let mut j2: f64 = 0.0;
    for (m, &xm) in centers.iter().enumerate() {
        let d = nn[m];
        if !d.is_finite() {
            continue;
        }
        let neighbour = centers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != m)
            .min_by(|(_, p), (_, q)| (**p - xm).norm().total_cmp(&(**q - xm).norm()))
            .map(|(_, &p)| p)
            .expect("finite distance implies a neighbour");
        let qm = solution.q[m];
        j1 = j1.max(grad_g(neighbour, xm, k)?.cross(qm).norm());
        j2 = j2.max(a * (1.0 / d.powi(3)).max(k.norm_sqr() / d) * qm.norm());
    }
    Ok(NeglectReport {
        j1,
        j2,
        d_min,
        a_over_d: if d_min.is_finite() { a / d_min } else { 0.0 },
        ka: k.norm() * a,
        ratio_bound: ratio_bound(a, d_min, k.norm()),
    })
}
