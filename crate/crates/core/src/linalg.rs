//! Dense and Krylov solvers for complex square systems.

use faer::linalg::solvers::{Solve, SolveCore};
use faer::prelude::*;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        DenseMatrix { n, data }
    }

    pub fn from_row_major(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(DenseMatrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    fn view(&self) -> MatRef<'_, Complex64> {
        MatRef::from_row_major_slice(&self.data, self.n, self.n)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        self.data
            .par_chunks(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Aᴴ x`.
    pub fn adjoint_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let col = Mat::from_fn(self.n, 1, |i, _| x[i]);
        let y = self.view().adjoint() * &col;
        (0..self.n).map(|i| y[(i, 0)]).collect()
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Anything that can apply a square matrix to a vector.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matvec(x)
    }
}

pub fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖A x − b‖ / ‖b‖` (or `‖A x − b‖` when `b = 0`).
pub fn relative_residual(op: &dyn LinearOperator, x: &[Complex64], b: &[Complex64]) -> f64 {
    let ax = op.apply(x);
    let r: Vec<Complex64> = ax.iter().zip(b).map(|(a, b)| a - b).collect();
    let nb = norm2(b);
    if nb > 0.0 {
        norm2(&r) / nb
    } else {
        norm2(&r)
    }
}

/// Partial-pivoting LU factorization.
pub struct LuFactors {
    n: usize,
    lu: faer::linalg::solvers::PartialPivLu<Complex64>,
}

impl LuFactors {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let lu = a.view().partial_piv_lu();
        let f = LuFactors { n: a.n, lu };
        // A zero pivot shows up as non-finite output.
        let probe = f.solve(&vec![Complex64::new(1.0, 0.0); a.n]);
        if probe.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Singular("LU factorization produced a zero pivot".into()));
        }
        Ok(f)
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solves `Aᴴ x = b`.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_transpose_in_place_with_conj(faer::Conj::Yes, rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Deterministic non-trivial start vector.
fn start_vector(n: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + (i % 7) as f64 * 0.1, ((i % 5) as f64 - 2.0) * 0.05))
        .collect();
    normalize(&mut v);
    v
}

/// `‖A‖₂` from power iteration on `AᴴA`.
pub fn norm2_estimate(a: &DenseMatrix, iterations: usize) -> f64 {
    let mut v = start_vector(a.n);
    let mut s2 = 0.0;
    for _ in 0..iterations {
        let mut w = a.adjoint_matvec(&a.matvec(&v));
        s2 = normalize(&mut w);
        v = w;
    }
    s2.sqrt()
}

/// 2-norm condition estimate from power iterations on `AᴴA` and `(AᴴA)⁻¹`.
pub fn condition_estimate(a: &DenseMatrix, lu: &LuFactors, iterations: usize) -> f64 {
    let n = a.n;
    if n == 0 {
        return 1.0;
    }
    let mut v = start_vector(n);
    let mut smax2 = 0.0;
    for _ in 0..iterations {
        let mut w = a.adjoint_matvec(&a.matvec(&v));
        smax2 = normalize(&mut w);
        v = w;
    }
    let mut v = start_vector(n);
    let mut inv_smin2 = 0.0;
    for _ in 0..iterations {
        let mut w = lu.solve(&lu.solve_adjoint(&v));
        inv_smin2 = normalize(&mut w);
        v = w;
    }
    (smax2 * inv_smin2).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmresOptions {
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            tolerance: 1e-8,
            restart: 60,
            max_iterations: 600,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    /// Relative residual estimate after each inner iteration.
    pub history: Vec<f64>,
    /// `σ_max/σ_min` of the first cycle's Hessenberg matrix.
    pub hessenberg_condition: f64,
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    // Returns (c, s) with [c, s; −s̄, c]·[a; b] = [r; 0].
    let na = a.norm();
    if b.norm() == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, b.conj() / b.norm());
    }
    let t = (na * na + b.norm_sqr()).sqrt();
    let c = na / t;
    let s = (a / na) * b.conj() / t;
    (c, s)
}

/// Restarted GMRES from a zero initial guess.
pub fn gmres(op: &dyn LinearOperator, b: &[Complex64], opts: &GmresOptions) -> Result<GmresOutcome> {
    let n = op.dim();
    if b.len() != n {
        return Err(Error::Dimension { expected: n, got: b.len() });
    }
    let bnorm = norm2(b);
    let mut x = vec![ZERO; n];
    let mut history = Vec::new();
    let mut hess_cond = f64::NAN;
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            x,
            iterations: 0,
            history,
            hessenberg_condition: 1.0,
        });
    }
    let m = opts.restart.max(1).min(n.max(1));
    let mut total = 0;
    loop {
        let ax = op.apply(&x);
        let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = normalize(&mut r);
        if beta / bnorm <= opts.tolerance {
            history.push(beta / bnorm);
            break;
        }
        let mut basis = vec![r];
        let mut h = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut raw_h = vec![vec![ZERO; m]; m + 1];
        let mut used = 0;
        for j in 0..m {
            let mut w = op.apply(&basis[j]);
            for (i, v) in basis.iter().enumerate() {
                let hij: Complex64 = v.iter().zip(&w).map(|(v, w)| v.conj() * w).sum();
                h[i][j] = hij;
                w.iter_mut().zip(v).for_each(|(w, v)| *w -= hij * v);
            }
            let hn = normalize(&mut w);
            h[j + 1][j] = Complex64::new(hn, 0.0);
            for i in 0..=j + 1 {
                raw_h[i][j] = h[i][j];
            }
            for i in 0..j {
                let t = h[i][j] * cs[i] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i].conj() * h[i][j] + h[i + 1][j] * cs[i];
                h[i][j] = t;
            }
            let (c, s) = givens(h[j][j], h[j + 1][j]);
            cs[j] = c;
            sn[j] = s;
            h[j][j] = h[j][j] * c + s * h[j + 1][j];
            h[j + 1][j] = ZERO;
            g[j + 1] = -s.conj() * g[j];
            g[j] *= c;
            total += 1;
            used = j + 1;
            let rel = g[j + 1].norm() / bnorm;
            history.push(rel);
            basis.push(w);
            if rel <= opts.tolerance || hn == 0.0 || total >= opts.max_iterations {
                break;
            }
        }
        if hess_cond.is_nan() {
            let hm = Mat::from_fn(used + 1, used, |i, j| raw_h[i][j]);
            if let Ok(sv) = hm.singular_values() {
                let smax = sv.iter().copied().fold(0.0, f64::max);
                let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
                hess_cond = smax / smin;
            }
        }
        let mut y = vec![ZERO; used];
        for i in (0..used).rev() {
            let s: Complex64 = (i + 1..used).map(|k| h[i][k] * y[k]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            x.iter_mut().zip(&basis[k]).for_each(|(x, v)| *x += yk * v);
        }
        let last = *history.last().unwrap_or(&f64::INFINITY);
        if last <= opts.tolerance {
            break;
        }
        if total >= opts.max_iterations {
            let true_res = relative_residual(op, &x, b);
            return Err(Error::Convergence {
                iterations: total,
                residual: true_res,
                history,
            });
        }
    }
    Ok(GmresOutcome {
        x,
        iterations: total,
        history,
        hessenberg_condition: if hess_cond.is_nan() { 1.0 } else { hess_cond },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn test_matrix(n: usize) -> DenseMatrix {
        let data = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                let off = c(((i * 7 + j * 3) % 11) as f64 - 5.0, ((i + 2 * j) % 5) as f64 - 2.0) * (0.3 / n as f64);
                if i == j {
                    c(1.0, 0.2) + off
                } else {
                    off
                }
            })
            .collect();
        DenseMatrix::from_row_major(n, data).unwrap()
    }

    #[test]
    fn lu_solves_and_adjoint_solves() {
        let a = test_matrix(40);
        let b: Vec<Complex64> = (0..40).map(|i| c(i as f64, 1.0)).collect();
        let lu = LuFactors::new(&a).unwrap();
        let x = lu.solve(&b);
        assert!(relative_residual(&a, &x, &b) < 1e-13);
        let y = lu.solve_adjoint(&b);
        let back = a.adjoint_matvec(&y);
        let err: f64 = back.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-11);
    }

    #[test]
    fn condition_of_diagonal_matrix() {
        let mut data = vec![ZERO; 9];
        data[0] = c(1.0, 0.0);
        data[4] = c(0.0, 10.0);
        data[8] = c(-100.0, 0.0);
        let a = DenseMatrix::from_row_major(3, data).unwrap();
        let lu = LuFactors::new(&a).unwrap();
        let k = condition_estimate(&a, &lu, 30);
        assert!((k - 100.0).abs() / 100.0 < 1e-6, "{k}");
        let id = DenseMatrix::identity(5);
        assert!((condition_estimate(&id, &LuFactors::new(&id).unwrap(), 5) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DenseMatrix::from_row_major(2, vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert!(matches!(LuFactors::new(&a), Err(Error::Singular(_))));
    }

    #[test]
    fn gmres_matches_lu() {
        let a = test_matrix(80);
        let b: Vec<Complex64> = (0..80).map(|i| c((i as f64).sin(), (i as f64).cos())).collect();
        let direct = LuFactors::new(&a).unwrap().solve(&b);
        let opts = GmresOptions {
            tolerance: 1e-12,
            restart: 10,
            max_iterations: 500,
        };
        let out = gmres(&a, &b, &opts).unwrap();
        assert!(relative_residual(&a, &out.x, &b) < 1e-11);
        let diff: f64 = out.x.iter().zip(&direct).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff / norm2(&direct) < 1e-10);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        assert!(out.hessenberg_condition >= 1.0);
    }

    #[test]
    fn gmres_reports_non_convergence() {
        // Shift operator: Krylov space of e₀ never reaches e_{n−1} early.
        struct Shift(usize);
        impl LinearOperator for Shift {
            fn dim(&self) -> usize {
                self.0
            }
            fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
                let mut y = vec![ZERO; self.0];
                for i in 0..self.0 {
                    y[(i + 1) % self.0] = x[i];
                }
                y
            }
        }
        let mut b = vec![ZERO; 50];
        b[0] = c(1.0, 0.0);
        let opts = GmresOptions {
            tolerance: 1e-10,
            restart: 5,
            max_iterations: 20,
        };
        match gmres(&Shift(50), &b, &opts) {
            Err(Error::Convergence { iterations, history, .. }) => {
                assert_eq!(iterations, 20);
                assert_eq!(history.len(), 20);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
