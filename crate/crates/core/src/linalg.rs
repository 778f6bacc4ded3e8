//! Dense complex matrices and the iterative solvers used by the frame and
//! matrix-algebra modules.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = Complex64 { re: 1.0, im: 0.0 };

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub n: usize,
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        CMatrix { n, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &CMatrix) -> Self {
        CMatrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &CMatrix) -> Self {
        CMatrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn adjoint_matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.n];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        out
    }

    /// Dense product, ikj loop order.
    pub fn matmul(&self, other: &CMatrix) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let orow = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Principal submatrix on the given indices.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    /// LU inverse; `None` when a pivot vanishes.
    pub fn inverse(&self) -> Option<Self> {
        self.to_nalgebra().try_inverse().map(|m| Self::from_nalgebra(&m))
    }

    /// Largest singular value by power iteration on `A*A`.
    pub fn spectral_norm(&self, tol: f64, max_iter: usize) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let mut v: Vec<C64> = (0..n).map(|i| C64::new(1.0 + (i as f64 * 0.7).sin() * 0.5, (i as f64 * 1.3).cos() * 0.5)).collect();
        normalize(&mut v);
        let mut lam = 0.0;
        for _ in 0..max_iter {
            let w = self.adjoint_matvec(&self.matvec(&v));
            let next = vec_norm(&w);
            if next == 0.0 {
                return 0.0;
            }
            v = w.into_iter().map(|x| x / next).collect();
            if (next - lam).abs() <= tol * next {
                lam = next;
                break;
            }
            lam = next;
        }
        lam.sqrt()
    }
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [C64]) {
    let n = vec_norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let eig = nalgebra::SymmetricEigen::new(m.to_nalgebra());
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

// ---------------------------------------------------------------------------
// Conjugate gradient

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<C64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Conjugate gradient for a Hermitian positive-definite operator given as a
/// closure, in the Euclidean inner product scaled by `weight`.
/// Stops once `‖r‖ ≤ tol`.
pub fn conjugate_gradient(
    mut apply: impl FnMut(&[C64]) -> Vec<C64>,
    b: &[C64],
    weight: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let ip = |u: &[C64], v: &[C64]| dot(u, v) * weight;
    let mut x = vec![ZERO; b.len()];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = ip(&r, &r).re;
    let mut it = 0;
    while rr.sqrt() > tol {
        if it >= max_iter {
            return Err(Error::NoConvergence { iterations: it, last_change: rr.sqrt() });
        }
        let ap = apply(&p);
        let curv = ip(&p, &ap).re;
        if curv <= 0.0 {
            return Err(Error::NotPositiveDefinite { curvature: curv });
        }
        let a = rr / curv;
        for i in 0..x.len() {
            x[i] += p[i] * a;
            r[i] -= ap[i] * a;
        }
        let rr_new = ip(&r, &r).re;
        let beta = rr_new / rr;
        for i in 0..p.len() {
            p[i] = r[i] + p[i] * beta;
        }
        rr = rr_new;
        it += 1;
    }
    Ok(CgOutcome { solution: x, iterations: it, residual: rr.sqrt() })
}

// ---------------------------------------------------------------------------
// FFT plans of arbitrary length

/// Cache of FFT plans keyed by length, with a d-dimensional (d ≤ 2) driver
/// over cubes of side `m`.
pub struct FftCache {
    planner: FftPlanner<f64>,
    fwd: HashMap<usize, Arc<dyn Fft<f64>>>,
    inv: HashMap<usize, Arc<dyn Fft<f64>>>,
}

impl Default for FftCache {
    fn default() -> Self {
        Self::new()
    }
}

impl FftCache {
    pub fn new() -> Self {
        FftCache { planner: FftPlanner::new(), fwd: HashMap::new(), inv: HashMap::new() }
    }

    pub fn plan(&mut self, m: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
        let (map, planner) = if inverse { (&mut self.inv, &mut self.planner) } else { (&mut self.fwd, &mut self.planner) };
        map.entry(m)
            .or_insert_with(|| if inverse { planner.plan_fft_inverse(m) } else { planner.plan_fft_forward(m) })
            .clone()
    }

    /// Unnormalized transform of a row-major `m^d` array in place.
    pub fn process(&mut self, data: &mut [C64], m: usize, d: usize, inverse: bool) {
        let plan = self.plan(m, inverse);
        plan.process(data);
        if d == 2 {
            let mut col = vec![ZERO; m];
            for c in 0..m {
                for r in 0..m {
                    col[r] = data[r * m + c];
                }
                plan.process(&mut col);
                for r in 0..m {
                    data[r * m + c] = col[r];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cg_solves_diagonal_system() {
        let diag = [1.0, 2.0, 5.0, 10.0];
        let b: Vec<C64> = vec![C64::new(1.0, 1.0), C64::new(2.0, 0.0), C64::new(0.0, 5.0), C64::new(-1.0, 0.0)];
        let out = conjugate_gradient(
            |v| v.iter().zip(diag).map(|(x, d)| x * d).collect(),
            &b,
            1.0,
            1e-13,
            100,
        )
        .unwrap();
        for ((x, bb), d) in out.solution.iter().zip(&b).zip(diag) {
            assert!((x * d - bb).norm() < 1e-12);
        }
    }

    #[test]
    fn cg_on_scaled_identity_divides() {
        let b: Vec<C64> = (0..6).map(|i| C64::new(i as f64, 1.0)).collect();
        let out = conjugate_gradient(|v| v.iter().map(|x| x * 3.5).collect(), &b, 1.0, 1e-14, 10).unwrap();
        assert_eq!(out.iterations, 1);
        for (x, bb) in out.solution.iter().zip(&b) {
            assert!((x - bb / 3.5).norm() < 1e-14);
        }
    }

    #[test]
    fn cg_flags_indefinite_operator() {
        let b = vec![ONE, ONE];
        let r = conjugate_gradient(|v| vec![v[0], -v[1] * 3.0], &b, 1.0, 1e-12, 10);
        assert!(matches!(r, Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn inverse_and_product() {
        let a = CMatrix::from_fn(4, |i, j| if i == j { C64::new(2.0, 0.0) } else { C64::new(0.1 * (i + j) as f64, 0.05) });
        let inv = a.inverse().unwrap();
        assert!(inv.matmul(&a).max_abs_diff(&CMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = CMatrix::from_fn(3, |i, j| if i == j { C64::new([1.0, -4.0, 2.0][i], 0.0) } else { ZERO });
        assert!((a.spectral_norm(1e-14, 1000) - 4.0).abs() < 1e-8);
    }

    #[test]
    fn hermitian_spectrum() {
        let a = CMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => C64::new(2.0, 0.0),
            (1, 1) => C64::new(2.0, 0.0),
            (0, 1) => C64::new(0.0, 1.0),
            _ => C64::new(0.0, -1.0),
        });
        let ev = hermitian_eigenvalues(&a);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }
}
