//! Single impedance sphere solved by a Nyström discretization of its
//! surface integral equation `σ = Aσ + f`.
//!
//! The surface density `σ` is tangential. With `E = E_e + ∫ [∇g(x,t), σ(t)] dt`
//! outside the sphere, the impedance condition becomes
//!
//! `Aσ = −2 [N, [∫[N,[∇g, σ]] dt, N]] − 2ζ iωε (∫ g σ dt)_tan`,
//! `f = 2 [f_e, N]`, `f_e = [N,[E_e,N]] − (ζ/(iωμ₀)) [∇×E_e, N]`.
//!
//! The mesh is a product rule: Gauss–Legendre in `cos θ` times the uniform
//! rule in `φ`, with `2n` azimuthal nodes per ring. Singular self-terms are
//! simply left out.
//!
//! For a small sphere the total moment `Q = ∫σ` approaches
//! `−c (h/a^κ) a² ∇×E_e(0)`; see [`verify_asymptotics`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::grad_from;
use crate::incident::IncidentField;
use crate::linalg::{norm2, relative_residual, DenseMatrix, LuFactors};
use crate::medium::MediumParams;
use crate::quadrature::gauss_legendre;
use crate::vector::{CVec3, Vec3};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative tolerance of the tangentiality check on input densities.
pub const TANGENTIAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SphereMesh {
    pub a: f64,
    pub n_theta: usize,
    pub points: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub e_theta: Vec<Vec3>,
    pub e_phi: Vec<Vec3>,
}

impl SphereMesh {
    /// Sphere of radius `a` at the origin with `n_theta × 2n_theta` nodes.
    pub fn new(a: f64, n_theta: usize) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::param("a", format!("sphere radius must be positive, got {a}")));
        }
        if n_theta < 2 {
            return Err(Error::param("n_theta", "need at least 2 latitude rings"));
        }
        let n_phi = 2 * n_theta;
        let (x, w) = gauss_legendre(n_theta);
        let len = n_theta * n_phi;
        let mut mesh = SphereMesh {
            a,
            n_theta,
            points: Vec::with_capacity(len),
            normals: Vec::with_capacity(len),
            weights: Vec::with_capacity(len),
            e_theta: Vec::with_capacity(len),
            e_phi: Vec::with_capacity(len),
        };
        for (ct, wt) in x.iter().zip(&w) {
            let st = (1.0 - ct * ct).sqrt();
            for j in 0..n_phi {
                let phi = 2.0 * PI * (j as f64 + 0.5) / n_phi as f64;
                let (sp, cp) = phi.sin_cos();
                let n = Vec3::new(st * cp, st * sp, *ct);
                mesh.normals.push(n);
                mesh.points.push(n * a);
                mesh.weights.push(a * a * wt * 2.0 * PI / n_phi as f64);
                mesh.e_theta.push(Vec3::new(ct * cp, ct * sp, -st));
                mesh.e_phi.push(Vec3::new(-sp, cp, 0.0));
            }
        }
        Ok(mesh)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w_i N_i ⊗ N_i`, which should equal `(4πa²/3) I`.
    pub fn normal_moment(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (n, w) in self.normals.iter().zip(&self.weights) {
            let n = n.to_array();
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += w * n[i] * n[j];
                }
            }
        }
        m
    }

    fn tangent(&self, i: usize, b: usize) -> Vec3 {
        if b == 0 {
            self.e_theta[i]
        } else {
            self.e_phi[i]
        }
    }

    fn density_from(&self, v: &[Complex64]) -> SurfaceDensity {
        let n = self.len();
        SurfaceDensity(
            (0..n)
                .map(|i| CVec3::from(self.e_theta[i]) * v[i] + CVec3::from(self.e_phi[i]) * v[n + i])
                .collect(),
        )
    }

    fn to_coefficients(&self, s: &SurfaceDensity) -> Vec<Complex64> {
        let n = self.len();
        let mut v = vec![Complex64::new(0.0, 0.0); 2 * n];
        for i in 0..n {
            v[i] = s.0[i].dot_real(self.e_theta[i]);
            v[n + i] = s.0[i].dot_real(self.e_phi[i]);
        }
        v
    }
}

/// Tangential complex vectors at the mesh nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDensity(pub Vec<CVec3>);

impl SurfaceDensity {
    /// Largest `|(N_i, σ_i)|`.
    pub fn max_normal_part(&self, mesh: &SphereMesh) -> (usize, f64) {
        self.0
            .iter()
            .zip(&mesh.normals)
            .map(|(s, n)| s.dot_real(*n).norm())
            .enumerate()
            .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc })
    }

    pub fn check_tangential(&self, mesh: &SphereMesh, tol: f64) -> Result<()> {
        if self.0.len() != mesh.len() {
            return Err(Error::Dimension {
                expected: mesh.len(),
                got: self.0.len(),
            });
        }
        let scale = self.0.iter().map(|s| s.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let (node, normal_part) = self.max_normal_part(mesh);
        if normal_part > tol * scale {
            return Err(Error::NotTangential { node, normal_part });
        }
        Ok(())
    }

    /// `Σ w_i σ_i`.
    pub fn moment(&self, mesh: &SphereMesh) -> CVec3 {
        self.0
            .iter()
            .zip(&mesh.weights)
            .fold(CVec3::ZERO, |acc, (s, w)| acc + *s * *w)
    }
}

fn tangential(v: CVec3, n: Vec3) -> CVec3 {
    let n = CVec3::from(n);
    n.cross(v.cross(n))
}

/// `f(s) = 2 [f_e(s), N_s]` at every node.
pub fn build_rhs(mesh: &SphereMesh, incident: &dyn IncidentField, medium: &MediumParams, zeta: Complex64) -> Result<SurfaceDensity> {
    let k = medium.wavenumber()?;
    let factor = zeta / medium.i_omega_mu();
    Ok(SurfaceDensity(
        mesh.points
            .iter()
            .zip(&mesh.normals)
            .map(|(&s, &n)| {
                let nc = CVec3::from(n);
                let fe = tangential(incident.e(k, s), n) - incident.curl_e(k, s).cross(nc) * factor;
                fe.cross(nc) * 2.0
            })
            .collect(),
    ))
}

/// Coefficients of the two scalar kernels in `Aσ`.
struct Kernels {
    k: Complex64,
    /// `−2ζ iωε`.
    single: Complex64,
}

impl Kernels {
    fn new(medium: &MediumParams, zeta: Complex64) -> Result<Self> {
        Ok(Kernels {
            k: medium.wavenumber()?,
            single: -2.0 * zeta * I * medium.omega * medium.complex_permittivity(),
        })
    }

    /// Contribution of density `v` at node `j` to `Aσ` at node `i`, before
    /// tangential projection.
    #[inline]
    fn pair(&self, mesh: &SphereMesh, i: usize, j: usize, v: CVec3) -> CVec3 {
        let d = mesh.points[i] - mesh.points[j];
        let r = d.norm();
        let grad = grad_from(d, r, self.k);
        let g = (I * self.k * r).exp() / (4.0 * PI * r);
        let n = mesh.normals[i];
        // [N, [∇g, v]] = ∇g (N, v) − v (N, ∇g).
        let double = grad * v.dot_real(n) - v * grad.dot_real(n);
        (double * -2.0 + v * (self.single * g)) * mesh.weights[j]
    }
}

/// `Aσ` evaluated matrix-free.
pub fn apply_a(mesh: &SphereMesh, sigma: &SurfaceDensity, medium: &MediumParams, zeta: Complex64) -> Result<SurfaceDensity> {
    sigma.check_tangential(mesh, TANGENTIAL_TOL)?;
    let kern = Kernels::new(medium, zeta)?;
    Ok(SurfaceDensity(
        (0..mesh.len())
            .into_par_iter()
            .map(|i| {
                let acc = (0..mesh.len())
                    .filter(|&j| j != i)
                    .fold(CVec3::ZERO, |acc, j| acc + kern.pair(mesh, i, j, sigma.0[j]));
                tangential(acc, mesh.normals[i])
            })
            .collect(),
    ))
}

/// `A` in the local tangent bases `(e_θ, e_φ)`, as a `2n×2n` matrix.
pub fn assemble_a(mesh: &SphereMesh, medium: &MediumParams, zeta: Complex64) -> Result<DenseMatrix> {
    let kern = Kernels::new(medium, zeta)?;
    let n = mesh.len();
    let dim = 2 * n;
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    data.par_chunks_mut(dim).enumerate().for_each(|(row, out)| {
        let (a, i) = (row / n, row % n);
        let ta = mesh.tangent(i, a);
        for j in 0..n {
            if j == i {
                continue;
            }
            for b in 0..2 {
                let v = CVec3::from(mesh.tangent(j, b));
                out[b * n + j] = kern.pair(mesh, i, j, v).dot_real(ta);
            }
        }
    });
    DenseMatrix::from_row_major(dim, data)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereSolution {
    pub sigma: SurfaceDensity,
    #[serde(rename = "Q")]
    pub q: CVec3,
    /// `‖(I − A)σ − f‖ / ‖f‖`.
    pub residual: f64,
}

/// Solves `(I − A)σ = f` densely and integrates `Q = Σ w_i σ_i`.
pub fn solve_sphere(
    mesh: &SphereMesh,
    medium: &MediumParams,
    zeta: Complex64,
    incident: &dyn IncidentField,
) -> Result<SphereSolution> {
    let f = build_rhs(mesh, incident, medium, zeta)?;
    let rhs = mesh.to_coefficients(&f);
    let a = assemble_a(mesh, medium, zeta)?;
    let dim = a.dim();
    let data: Vec<Complex64> = a
        .as_slice()
        .iter()
        .enumerate()
        .map(|(idx, v)| if idx / dim == idx % dim { 1.0 - v } else { -v })
        .collect();
    let system = DenseMatrix::from_row_major(dim, data)?;
    let lu = LuFactors::new(&system).map_err(|_| {
        Error::Singular("I − A is singular on this mesh; the isolated-sphere problem should be uniquely solvable".into())
    })?;
    let x = lu.solve(&rhs);
    let residual = if norm2(&rhs) > 0.0 { relative_residual(&system, &x, &rhs) } else { 0.0 };
    let sigma = mesh.density_from(&x);
    let q = sigma.moment(mesh);
    Ok(SphereSolution { sigma, q, residual })
}

/// `−c (h/a^κ) a² ∇×E_e(0)`.
pub fn asymptotic_moment(
    a: f64,
    kappa: f64,
    h: Complex64,
    medium: &MediumParams,
    incident: &dyn IncidentField,
) -> Result<CVec3> {
    let k = medium.wavenumber()?;
    let zeta = h / a.powf(kappa);
    Ok(incident.curl_e(k, Vec3::ZERO) * (-medium.coupling() * zeta * (a * a)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub a: Vec<f64>,
    pub rel_error: Vec<f64>,
    #[serde(rename = "Q_oracle")]
    pub q_oracle: Vec<CVec3>,
    #[serde(rename = "Q_asym")]
    pub q_asym: Vec<CVec3>,
    /// `|0.5 Σ w f − Q_asym| / |Q_asym|` per radius.
    pub half_rhs_error: Vec<f64>,
    /// `(Q_oracle, Q̄_asym) / |Q_asym|²` per radius.
    pub ratio: Vec<Complex64>,
    pub n_theta: usize,
    pub decreasing: bool,
}

impl AsymptoticsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(crate::export::to_json_string(self)?)
    }
}

/// Oracle moments against the asymptotic formula along `a_sequence`,
/// without judging the trend.
pub fn asymptotics_report(
    a_sequence: &[f64],
    kappa: f64,
    h: Complex64,
    medium: &MediumParams,
    incident: &dyn IncidentField,
    n_theta: usize,
) -> Result<AsymptoticsReport> {
    let mut rep = AsymptoticsReport {
        a: a_sequence.to_vec(),
        rel_error: Vec::new(),
        q_oracle: Vec::new(),
        q_asym: Vec::new(),
        half_rhs_error: Vec::new(),
        ratio: Vec::new(),
        n_theta,
        decreasing: true,
    };
    for &a in a_sequence {
        let mesh = SphereMesh::new(a, n_theta)?;
        let zeta = h / a.powf(kappa);
        let sol = solve_sphere(&mesh, medium, zeta, incident)?;
        let qa = asymptotic_moment(a, kappa, h, medium, incident)?;
        let half = build_rhs(&mesh, incident, medium, zeta)?.moment(&mesh) * 0.5;
        let qa2 = qa.norm_sqr();
        let conj = CVec3::new(qa.x.conj(), qa.y.conj(), qa.z.conj());
        rep.rel_error.push((sol.q - qa).norm() / qa.norm());
        rep.half_rhs_error.push((half - qa).norm() / qa.norm());
        rep.ratio.push(sol.q.dot(conj) / qa2);
        rep.q_oracle.push(sol.q);
        rep.q_asym.push(qa);
    }
    rep.decreasing = rep.rel_error.windows(2).all(|w| w[1] < w[0]);
    Ok(rep)
}

/// As [`asymptotics_report`], failing when the error does not strictly
/// decrease along the sequence.
pub fn verify_asymptotics(
    a_sequence: &[f64],
    kappa: f64,
    h: Complex64,
    medium: &MediumParams,
    incident: &dyn IncidentField,
    n_theta: usize,
) -> Result<AsymptoticsReport> {
    if a_sequence.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::param("a_sequence", "radii must be strictly decreasing"));
    }
    let rep = asymptotics_report(a_sequence, kappa, h, medium, incident, n_theta)?;
    if !rep.decreasing {
        return Err(Error::AsymptoticsViolation {
            rel_error: rep.rel_error,
        });
    }
    Ok(rep)
}
