//! Discretization of the d-torus and complex fields sampled on it.
//!
//! Conventions used throughout the crate:
//!
//! * spatial samples `t_m = m·L/n` per axis, row-major over axes;
//! * frequencies `η_q = 2π·q/L` with `q ∈ [−n/2, n/2)` stored in FFT order;
//! * forward transform `F(η) = Σ_t f(t)·e^{−iη·t}·dx^d`;
//! * inverse transform `f(t) = L^{−d}·Σ_η F(η)·e^{iη·t}`;
//! * inner product `⟨f, g⟩ = Σ_t f·conj(g)·dx^d = L^{−d}·Σ_η F·conj(G)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling of the torus `[0, L)^d` by `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

impl GridSpec {
    pub fn new(d: usize, n: usize, length: f64) -> Result<Self> {
        let g = GridSpec { d, n, length };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d != 1 && self.d != 2 {
            return Err(Error::Invalid(format!("dimension must be 1 or 2, got {}", self.d)));
        }
        if self.n < 4 || !self.n.is_power_of_two() {
            return Err(Error::Invalid(format!(
                "samples per axis must be a power of two >= 4, got {}",
                self.n
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::Invalid(format!("side length must be positive, got {}", self.length)));
        }
        Ok(())
    }

    /// Total number of samples `n^d`.
    pub fn total(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Frequency grid spacing `2π/L`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Signed frequency index of FFT slot `i` along one axis.
    pub fn freq_index(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// FFT slot of a signed frequency index (taken modulo n).
    pub fn freq_slot(&self, q: i64) -> usize {
        q.rem_euclid(self.n as i64) as usize
    }

    /// Frequency value of FFT slot `i` along one axis.
    pub fn freq(&self, i: usize) -> f64 {
        self.dxi() * self.freq_index(i) as f64
    }

    /// Per-axis frequencies in FFT order.
    pub fn axis_freqs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.freq(i)).collect()
    }

    /// Per-axis spatial sample positions.
    pub fn axis_positions(&self) -> Vec<f64> {
        (0..self.n).map(|i| i as f64 * self.dx()).collect()
    }

    /// Multi-index of a flat row-major position.
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        if self.d == 1 {
            [flat, 0]
        } else {
            [flat / self.n, flat % self.n]
        }
    }

    pub fn flatten(&self, idx: [usize; 2]) -> usize {
        if self.d == 1 {
            idx[0]
        } else {
            idx[0] * self.n + idx[1]
        }
    }

    /// Frequency vector of a flat spectral slot (unused axes are zero).
    pub fn freq_vec(&self, flat: usize) -> [f64; 2] {
        let [a, b] = self.unflatten(flat);
        if self.d == 1 {
            [self.freq(a), 0.0]
        } else {
            [self.freq(a), self.freq(b)]
        }
    }

    pub fn position_vec(&self, flat: usize) -> [f64; 2] {
        let [a, b] = self.unflatten(flat);
        let dx = self.dx();
        if self.d == 1 {
            [a as f64 * dx, 0.0]
        } else {
            [a as f64 * dx, b as f64 * dx]
        }
    }

    /// Nearest grid frequency to `xi` along one axis (ties round away from zero).
    pub fn snap_freq(&self, xi: f64) -> f64 {
        (xi / self.dxi()).round() * self.dxi()
    }

    /// `dx^d`, the quadrature weight of a spatial sample.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    /// `L^d`, the torus volume.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.d as i32)
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "(d={}, n={}, L={}) vs (d={}, n={}, L={})",
                self.d, self.n, self.length, other.d, other.n, other.length
            )));
        }
        Ok(())
    }
}

/// Minimal-image distance of a coordinate difference on a circle of length `l`.
pub fn torus_diff(a: f64, b: f64, l: f64) -> f64 {
    let mut t = (a - b).abs().rem_euclid(l);
    if t > 0.5 * l {
        t = l - t;
    }
    t
}

// ---------------------------------------------------------------------------
// FFT plumbing

/// Cached forward/inverse FFT plans for one grid.
#[derive(Clone)]
pub struct Transform {
    grid: GridSpec,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("grid", &self.grid).finish()
    }
}

impl Transform {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Transform {
            grid,
            fwd: planner.plan_fft_forward(grid.n),
            inv: planner.plan_fft_inverse(grid.n),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n;
        if self.grid.d == 1 {
            plan.process(data);
            return;
        }
        plan.process(data); // all rows
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = data[r * n + c];
            }
            plan.process(&mut col);
            for r in 0..n {
                data[r * n + c] = col[r];
            }
        }
    }

    /// Spectrum `F(η_q)` of spatial samples, scaled by `dx^d`.
    pub fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut data = values.to_vec();
        self.run(&mut data, &self.fwd);
        let s = self.grid.cell_volume();
        data.iter_mut().for_each(|v| *v *= s);
        data
    }

    /// Spatial samples from a spectrum, scaled by `L^{−d}`.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut data = spectrum.to_vec();
        self.run(&mut data, &self.inv);
        let s = 1.0 / self.grid.volume();
        data.iter_mut().for_each(|v| *v *= s);
        data
    }
}

/// Frequency-domain inner product `L^{−d}·Σ F·conj(G)`.
pub fn spectral_inner(grid: &GridSpec, f: &[Complex64], g: &[Complex64]) -> Complex64 {
    let s: Complex64 = f.iter().zip(g).map(|(a, b)| a * b.conj()).sum();
    s / grid.volume()
}

// ---------------------------------------------------------------------------
// Sampled fields

/// A complex function sampled on the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl SampledField {
    pub fn zeros(grid: GridSpec) -> Self {
        SampledField { grid, values: vec![Complex64::new(0.0, 0.0); grid.total()] }
    }

    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.total() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} samples",
                values.len(),
                grid.total()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Invalid("field contains non-finite values".into()));
        }
        Ok(SampledField { grid, values })
    }

    /// Samples `f(t)` at every grid point; `t` has `d` meaningful components.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.total()).map(|i| f(grid.position_vec(i))).collect();
        SampledField { grid, values }
    }

    pub fn from_spectrum(grid: GridSpec, spectrum: &[Complex64]) -> Self {
        SampledField { grid, values: Transform::new(grid).inverse(spectrum) }
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        Transform::new(self.grid).forward(&self.values)
    }

    pub fn inner(&self, other: &SampledField) -> Complex64 {
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        s * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        SampledField { grid: self.grid, values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &SampledField) -> Self {
        SampledField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &SampledField) -> Self {
        SampledField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &SampledField) -> Self {
        SampledField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        }
    }

    /// Circular shift by whole samples: `out(t) = self(t − shift·dx)`.
    pub fn shifted(&self, shift: [i64; 2]) -> Self {
        let g = self.grid;
        let n = g.n as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); g.total()];
        for (i, v) in self.values.iter().enumerate() {
            let [a, b] = g.unflatten(i);
            let na = (a as i64 + shift[0]).rem_euclid(n) as usize;
            let nb = if g.d == 2 { (b as i64 + shift[1]).rem_euclid(n) as usize } else { 0 };
            out[g.flatten([na, nb])] = *v;
        }
        SampledField { grid: g, values: out }
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(1, 64, 8.0).unwrap()
    }

    #[test]
    fn frequency_grid_layout() {
        let g = grid();
        assert_eq!(g.freq_index(0), 0);
        assert_eq!(g.freq_index(31), 31);
        assert_eq!(g.freq_index(32), -32);
        assert!((g.freq(32) + g.nyquist()).abs() < 1e-12);
        assert_eq!(g.freq_slot(-1), 63);
    }

    #[test]
    fn transforms_round_trip_and_parseval() {
        for g in [grid(), GridSpec::new(2, 16, 4.0).unwrap()] {
            let f = SampledField::from_fn(g, |t| Complex64::new((t[0] * 1.3).sin(), t[1].cos() * 0.5));
            let spec = f.spectrum();
            let back = SampledField::from_spectrum(g, &spec);
            for (a, b) in f.values.iter().zip(&back.values) {
                assert!((a - b).norm() < 1e-12);
            }
            let lhs = f.norm().powi(2);
            let rhs = spectral_inner(&g, &spec, &spec).re;
            assert!((lhs - rhs).abs() < 1e-10 * lhs);
        }
    }

    #[test]
    fn forward_matches_continuous_convention() {
        let g = grid();
        let q = 3usize;
        let xi = g.freq(q);
        let f = SampledField::from_fn(g, |t| Complex64::from_polar(1.0, xi * t[0]));
        let spec = f.spectrum();
        assert!((spec[q] - Complex64::new(g.length, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn torus_difference_is_minimal_image() {
        assert!((torus_diff(0.5, 7.5, 8.0) - 1.0).abs() < 1e-12);
        assert!((torus_diff(3.0, 1.0, 8.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(3, 64, 1.0).is_err());
        assert!(GridSpec::new(1, 100, 1.0).is_err());
        assert!(GridSpec::new(1, 64, 0.0).is_err());
    }
}
