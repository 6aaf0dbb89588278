//! The dipole interaction system shared by the particle solver and the
//! collocation of the limiting equation.
//!
//! Unknowns `V_m` sit at nodes `y_m` with strengths `s_m = c·w_m`, where
//! `c = 8πi/(3ωμ₀)`. Row block `j` reads
//! `V_j + Σ_{m≠j} s_m (k²g + ∇∇g)(y_j, y_m) V_m = rhs_j`, and the field is
//! recovered from `E(x) = E₀(x) − Σ_m s_m [∇g(x, y_m), V_m]`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{apply_dipole, dipole_coefficients, grad_from};
use crate::incident::IncidentField;
use crate::linalg::{DenseMatrix, LinearOperator};
use crate::medium::MediumParams;
use crate::vector::{CVec3, Vec3};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which solver produced a field value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSource {
    Incident,
    Las,
    Limit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub x: Vec3,
    pub e: CVec3,
    pub h: CVec3,
    pub source: FieldSource,
    /// Terms left out because `x` lies inside a node's exclusion zone.
    pub dropped_terms: usize,
}

/// Rule deciding which node terms are left out of a field sum at `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exclusion {
    /// Drop nodes with `|x − y_m| ≤ radius`.
    Radius(f64),
    /// Drop nodes whose box `|x − y_m|_i ≤ half_width_i` contains `x`.
    Cell(Vec3),
}

impl Exclusion {
    fn excludes(&self, d: Vec3, r: f64) -> bool {
        if r == 0.0 {
            return true;
        }
        match *self {
            Exclusion::Radius(rad) => r <= rad,
            Exclusion::Cell(hw) => d.x.abs() <= hw.x && d.y.abs() <= hw.y && d.z.abs() <= hw.z,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DipoleSystem {
    nodes: Vec<Vec3>,
    strengths: Vec<Complex64>,
    k: Complex64,
}

/// Index pair of the first two coincident nodes, if any.
pub fn find_duplicate(nodes: &[Vec3]) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    let key = |i: usize| nodes[i].to_array();
    order.sort_by(|&i, &j| key(i).partial_cmp(&key(j)).unwrap_or(std::cmp::Ordering::Equal));
    order
        .windows(2)
        .find(|w| nodes[w[0]] == nodes[w[1]])
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
}

impl DipoleSystem {
    /// `weights` are the per-node quadrature weights `w_m`; strengths are
    /// `coupling · w_m`.
    pub fn new(nodes: Vec<Vec3>, weights: &[Complex64], medium: &MediumParams) -> Result<Self> {
        if weights.len() != nodes.len() {
            return Err(Error::Dimension {
                expected: nodes.len(),
                got: weights.len(),
            });
        }
        if let Some((_, j)) = find_duplicate(&nodes) {
            return Err(Error::Singularity(nodes[j]));
        }
        let c = medium.coupling();
        Ok(DipoleSystem {
            strengths: weights.iter().map(|w| c * w).collect(),
            nodes,
            k: medium.wavenumber()?,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn strengths(&self) -> &[Complex64] {
        &self.strengths
    }

    pub fn k(&self) -> Complex64 {
        self.k
    }

    /// `curl E₀` at every node, flattened.
    pub fn rhs(&self, incident: &dyn IncidentField) -> Vec<Complex64> {
        self.nodes
            .par_iter()
            .flat_map_iter(|&y| incident.curl_e(self.k, y).to_array())
            .collect()
    }

    /// Explicit `3M×3M` matrix, assembled in parallel over row blocks.
    pub fn assemble(&self) -> DenseMatrix {
        let m = self.nodes.len();
        let n = 3 * m;
        let mut data = vec![ZERO; n * n];
        data.par_chunks_mut(3 * n).enumerate().for_each(|(j, rows)| {
            let yj = self.nodes[j];
            for c in 0..3 {
                rows[c * n + 3 * j + c] = Complex64::new(1.0, 0.0);
            }
            for (mi, (&ym, &s)) in self.nodes.iter().zip(&self.strengths).enumerate() {
                if mi == j || s == ZERO {
                    continue;
                }
                let d = yj - ym;
                let r = d.norm();
                let (alpha, beta) = dipole_coefficients(r, self.k);
                let u = (d * (1.0 / r)).to_array();
                for a in 0..3 {
                    for b in 0..3 {
                        let diag = if a == b { alpha } else { ZERO };
                        rows[a * n + 3 * mi + b] = s * (diag + beta * (u[a] * u[b]));
                    }
                }
            }
        });
        DenseMatrix::from_row_major(n, data).expect("square by construction")
    }

    fn unpack(v: &[Complex64], m: usize) -> CVec3 {
        CVec3::new(v[3 * m], v[3 * m + 1], v[3 * m + 2])
    }

    /// `−Σ s_m [∇g(x, y_m), V_m]` and the number of excluded terms.
    pub fn scattered_e(&self, x: Vec3, v: &[CVec3], exclusion: Exclusion) -> (CVec3, usize) {
        let mut acc = CVec3::ZERO;
        let mut dropped = 0;
        for ((&y, &s), &vm) in self.nodes.iter().zip(&self.strengths).zip(v) {
            if s == ZERO {
                continue;
            }
            let d = x - y;
            let r = d.norm();
            if exclusion.excludes(d, r) {
                dropped += 1;
                continue;
            }
            acc -= grad_from(d, r, self.k).cross(vm) * s;
        }
        (acc, dropped)
    }

    /// `−Σ s_m (k²g + ∇∇g)(x, y_m) V_m`, the curl of [`Self::scattered_e`].
    pub fn scattered_curl(&self, x: Vec3, v: &[CVec3], exclusion: Exclusion) -> CVec3 {
        let mut acc = CVec3::ZERO;
        for ((&y, &s), &vm) in self.nodes.iter().zip(&self.strengths).zip(v) {
            if s == ZERO {
                continue;
            }
            let d = x - y;
            let r = d.norm();
            if exclusion.excludes(d, r) {
                continue;
            }
            acc -= apply_dipole(d, r, self.k, vm) * s;
        }
        acc
    }

    /// Total `E` and `H = ∇×E/(iωμ₀)` at `x`. With no contributing node the
    /// incident values are returned untouched.
    pub fn field(
        &self,
        x: Vec3,
        v: &[CVec3],
        medium: &MediumParams,
        incident: &dyn IncidentField,
        exclusion: Exclusion,
        source: FieldSource,
    ) -> FieldSample {
        let e0 = incident.e(self.k, x);
        let curl0 = incident.curl_e(self.k, x);
        let active = self.strengths.iter().any(|&s| s != ZERO);
        let iwm = medium.i_omega_mu();
        if !active {
            return FieldSample {
                x,
                e: e0,
                h: curl0 * iwm.inv(),
                source,
                dropped_terms: 0,
            };
        }
        let (es, dropped) = self.scattered_e(x, v, exclusion);
        let curl = curl0 + self.scattered_curl(x, v, exclusion);
        FieldSample {
            x,
            e: e0 + es,
            h: curl * iwm.inv(),
            source,
            dropped_terms: dropped,
        }
    }

    pub fn to_vectors(v: &[Complex64]) -> Vec<CVec3> {
        (0..v.len() / 3).map(|m| Self::unpack(v, m)).collect()
    }
}

impl LinearOperator for DipoleSystem {
    fn dim(&self) -> usize {
        3 * self.nodes.len()
    }

    /// Matrix-free product; each row block is summed on the fly.
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let vs = Self::to_vectors(x);
        let blocks: Vec<CVec3> = self
            .nodes
            .par_iter()
            .enumerate()
            .map(|(j, &yj)| {
                let mut acc = vs[j];
                for (mi, ((&ym, &s), &vm)) in self.nodes.iter().zip(&self.strengths).zip(&vs).enumerate() {
                    if mi == j || s == ZERO {
                        continue;
                    }
                    let d = yj - ym;
                    acc += apply_dipole(d, d.norm(), self.k, vm) * s;
                }
                acc
            })
            .collect();
        blocks.iter().flat_map(|b| b.to_array()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::dipole_block;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn system() -> DipoleSystem {
        let nodes = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.3, 0.1, 0.0),
            Vec3::new(-0.2, 0.4, 0.5),
            Vec3::new(0.1, -0.3, 0.2),
        ];
        let w = vec![c(0.1, 0.0), c(0.0, 0.2), c(0.05, -0.1), ZERO];
        DipoleSystem::new(nodes, &w, &MediumParams::default()).unwrap()
    }

    #[test]
    fn assembled_matrix_matches_matrix_free_product() {
        let s = system();
        let a = s.assemble();
        let x: Vec<Complex64> = (0..12).map(|i| c(i as f64 * 0.3 - 1.0, (i % 4) as f64)).collect();
        let dense = a.matvec(&x);
        let free = s.apply(&x);
        for (p, q) in dense.iter().zip(&free) {
            assert!((p - q).norm() < 1e-14);
        }
    }

    #[test]
    fn blocks_use_the_dipole_kernel_and_are_reciprocal() {
        let s = system();
        let a = s.assemble();
        let coupling = MediumParams::default().coupling();
        let k = s.k();
        let b = dipole_block(s.nodes()[0], s.nodes()[1], k).unwrap();
        let w1 = c(0.0, 0.2);
        for r in 0..3 {
            for col in 0..3 {
                assert!((a.get(r, 3 + col) - coupling * w1 * b.0[r][col]).norm() < 1e-15);
                // (j, m) block equals the transpose of (m, j) up to the weights.
                let w0 = c(0.1, 0.0);
                assert!((a.get(r, 3 + col) / w1 - a.get(3 + col, r) / w0).norm() < 1e-13);
            }
        }
        // Zero-weight node contributes nothing to other rows.
        for r in 0..9 {
            for col in 9..12 {
                assert_eq!(a.get(r, col), ZERO);
            }
        }
    }

    #[test]
    fn duplicate_nodes_are_singular() {
        let nodes = vec![Vec3::new(0.1, 0.2, 0.3), Vec3::ZERO, Vec3::new(0.1, 0.2, 0.3)];
        let w = vec![c(1.0, 0.0); 3];
        assert!(matches!(
            DipoleSystem::new(nodes, &w, &MediumParams::default()),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn exclusion_rules() {
        let s = system();
        let v = vec![CVec3::from(Vec3::new(1.0, 0.0, 0.0)); 4];
        let (_, dropped) = s.scattered_e(Vec3::new(0.01, 0.0, 0.0), &v, Exclusion::Radius(0.02));
        assert_eq!(dropped, 1);
        let (_, dropped) = s.scattered_e(Vec3::new(0.01, 0.0, 0.0), &v, Exclusion::Cell(Vec3::new(0.005, 0.1, 0.1)));
        assert_eq!(dropped, 0);
        let (_, dropped) = s.scattered_e(Vec3::ZERO, &v, Exclusion::Radius(0.0));
        assert_eq!(dropped, 1);
    }
}
