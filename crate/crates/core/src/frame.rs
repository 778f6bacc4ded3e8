//! Dispersive wave packets, analysis and synthesis over a lattice, the
//! Gramian, frame bounds and the canonical dual frame.
//!
//! Every packet is handled in the frequency domain. A lattice center `ξ_c`
//! with `m` translates per axis contributes `Ψ_{c,j}(η) = a_c(η)·e^{−i x_j·(η−ξ_c)}`
//! with `x_j = j·L/m`, so analysis and synthesis at one center reduce to an
//! `m`-point FFT of the spectrum folded modulo `m`.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PhasePoint, SubdyadicLattice};
use crate::grid::{GridSpec, SampledField, Transform};
use crate::linalg::{conjugate_gradient, hermitian_eigenvalues, CMatrix, FftCache, C64, ZERO};
use crate::window::Window;

/// Default node cap for dense matrices.
pub const DEFAULT_DENSE_CAP: usize = 20000;

/// Gabor coefficients aligned with the node order of a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub values: Vec<C64>,
}

impl CoefficientField {
    pub fn zeros(len: usize) -> Self {
        CoefficientField { values: vec![ZERO; len] }
    }

    pub fn unit(len: usize, w: usize) -> Self {
        let mut c = Self::zeros(len);
        c.values[w] = C64::new(1.0, 0.0);
        c
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `Σ a·conj(b)`.
    pub fn inner(&self, other: &CoefficientField) -> C64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum()
    }
}

// ---------------------------------------------------------------------------
// Packet spectra

/// Sparse spectrum of one packet family: amplitudes on the support and the
/// unwrapped signed frequency indices they sit at.
#[derive(Debug, Clone)]
struct CenterPlan {
    slots: Vec<usize>,
    qidx: Vec<[i64; 2]>,
    amp: Vec<f64>,
    fold: Vec<usize>,
    m: usize,
}

/// Normalized amplitudes `φ̂((η−ξ)/s)` of a dilated window around `xi`, on
/// the frequency grid. Errors if the support would wrap past Nyquist.
fn dilated_support(window: &Window, xi: [f64; 2], scale: f64) -> Result<(Vec<usize>, Vec<[i64; 2]>, Vec<f64>)> {
    let g = window.grid;
    let reach = window.spec.annulus_outer * scale;
    let top = (0..g.d).map(|a| xi[a].abs()).fold(0.0, f64::max);
    if top + reach > g.nyquist() + 1e-12 {
        return Err(Error::ScaleOverflow {
            freq: (xi[0] * xi[0] + xi[1] * xi[1]).sqrt(),
            reach: top + reach,
            nyquist: g.nyquist(),
        });
    }
    let dxi = g.dxi();
    let half = g.n as i64 / 2;
    let range = |a: usize| -> (i64, i64) {
        if a >= g.d {
            return (0, 0);
        }
        let lo = ((xi[a] - reach) / dxi).ceil() as i64;
        let hi = ((xi[a] + reach) / dxi).floor() as i64;
        (lo.max(-half), hi.min(half - 1))
    };
    let (r0, r1) = (range(0), range(1));
    let mut slots = Vec::new();
    let mut qidx = Vec::new();
    let mut raw = Vec::new();
    for qa in r0.0..=r0.1 {
        for qb in r1.0..=r1.1 {
            let da = qa as f64 * dxi - xi[0];
            let db = if g.d == 2 { qb as f64 * dxi - xi[1] } else { 0.0 };
            let v = window.profile_at((da * da + db * db).sqrt() / scale);
            if v > 0.0 {
                let slot = if g.d == 1 { g.freq_slot(qa) } else { g.freq_slot(qa) * g.n + g.freq_slot(qb) };
                slots.push(slot);
                qidx.push([qa, qb]);
                raw.push(v);
            }
        }
    }
    let energy: f64 = raw.iter().map(|v| v * v).sum::<f64>() / g.volume();
    if energy <= 0.0 {
        return Err(Error::Invalid(format!("packet at {xi:?} has empty discrete support")));
    }
    let norm = energy.sqrt();
    Ok((slots, qidx, raw.into_iter().map(|v| v / norm).collect()))
}

/// Dense spectrum of the unit-norm packet at `(x, ξ)` with dilation `scale`.
pub fn packet_spectrum(window: &Window, x: [f64; 2], xi: [f64; 2], scale: f64) -> Result<Vec<C64>> {
    let g = window.grid;
    let (slots, qidx, amp) = dilated_support(window, xi, scale)?;
    let mut out = vec![ZERO; g.total()];
    let dxi = g.dxi();
    for ((s, q), a) in slots.iter().zip(&qidx).zip(&amp) {
        let mut phase = 0.0;
        for ax in 0..g.d {
            phase -= x[ax] * (q[ax] as f64 * dxi - xi[ax]);
        }
        out[*s] = C64::from_polar(*a, phase);
    }
    Ok(out)
}

fn as_pair(v: &[f64]) -> [f64; 2] {
    [v.first().copied().unwrap_or(0.0), v.get(1).copied().unwrap_or(0.0)]
}

/// Unit-norm dispersive packet `φ_{x₀,ξ₀}` sampled on the window's grid.
pub fn make_packet(center: &PhasePoint, window: &Window, alpha: f64) -> Result<SampledField> {
    let norm = center.freq_norm();
    if norm == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let scale = norm.powf(1.0 - alpha);
    let spec = packet_spectrum(window, as_pair(&center.x), as_pair(&center.xi), scale)?;
    Ok(SampledField::from_spectrum(window.grid, &spec))
}

/// `V_φ f(x, ξ) = ⟨f, φ_{x,ξ}⟩` at an arbitrary phase-space point.
pub fn stft_at(f: &SampledField, p: &PhasePoint, window: &Window, alpha: f64) -> Result<C64> {
    f.grid.check_same(&window.grid)?;
    let spectrum = f.spectrum();
    stft_from_spectrum(&spectrum, p, window, alpha)
}

/// As [`stft_at`] with the spectrum of `f` already computed.
pub fn stft_from_spectrum(spectrum: &[C64], p: &PhasePoint, window: &Window, alpha: f64) -> Result<C64> {
    let g = window.grid;
    let norm = p.freq_norm();
    if norm == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let xi = as_pair(&p.xi);
    let x = as_pair(&p.x);
    let (slots, qidx, amp) = dilated_support(window, xi, norm.powf(1.0 - alpha))?;
    let dxi = g.dxi();
    let mut acc = ZERO;
    for ((s, q), a) in slots.iter().zip(&qidx).zip(&amp) {
        let mut phase = 0.0;
        for ax in 0..g.d {
            phase += x[ax] * (q[ax] as f64 * dxi - xi[ax]);
        }
        acc += spectrum[*s] * C64::from_polar(*a, phase);
    }
    Ok(acc / g.volume())
}

// ---------------------------------------------------------------------------
// Frame over a lattice

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsMethod {
    PowerIteration,
    FullSpectrum,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub method: BoundsMethod,
    pub tol: f64,
    pub iterations_upper: usize,
    pub iterations_lower: usize,
    /// Signals are band-limited to `|η| ≤ band_radius`.
    pub band_radius: f64,
    pub band_size: usize,
}

impl FrameBounds {
    pub fn ratio(&self) -> f64 {
        self.upper / self.lower
    }
}

/// Packets of one window over one lattice, with cached FFT plans.
pub struct Frame<'a> {
    pub lattice: &'a SubdyadicLattice,
    pub window: &'a Window,
    plans: Vec<CenterPlan>,
    fft: RefCell<FftCache>,
    transform: Transform,
}

impl<'a> Frame<'a> {
    pub fn new(lattice: &'a SubdyadicLattice, window: &'a Window) -> Result<Self> {
        lattice.grid.check_same(&window.grid)?;
        let g = lattice.grid;
        let mut plans = Vec::with_capacity(lattice.centers.len());
        for c in &lattice.centers {
            let (slots, qidx, amp) = dilated_support(window, c.xi, c.scale)?;
            let m = c.m as i64;
            let fold = qidx
                .iter()
                .map(|q| {
                    let a = (q[0] - c.index[0]).rem_euclid(m) as usize;
                    if g.d == 1 {
                        a
                    } else {
                        a * c.m + (q[1] - c.index[1]).rem_euclid(m) as usize
                    }
                })
                .collect();
            plans.push(CenterPlan { slots, qidx, amp, fold, m: c.m });
        }
        Ok(Frame { lattice, window, plans, fft: RefCell::new(FftCache::new()), transform: Transform::new(g) })
    }

    pub fn grid(&self) -> GridSpec {
        self.lattice.grid
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    /// Dense spectrum of packet `w`.
    pub fn packet_spectrum(&self, w: usize) -> Vec<C64> {
        let g = self.grid();
        let node = &self.lattice.nodes[w];
        let c = &self.lattice.centers[node.center];
        let plan = &self.plans[node.center];
        let x = as_pair(&node.point.x);
        let dxi = g.dxi();
        let mut out = vec![ZERO; g.total()];
        for ((s, q), a) in plan.slots.iter().zip(&plan.qidx).zip(&plan.amp) {
            let mut phase = 0.0;
            for ax in 0..g.d {
                phase -= x[ax] * (q[ax] as f64 * dxi - c.xi[ax]);
            }
            out[*s] = C64::from_polar(*a, phase);
        }
        out
    }

    pub fn packet(&self, w: usize) -> SampledField {
        SampledField { grid: self.grid(), values: self.transform.inverse(&self.packet_spectrum(w)) }
    }

    /// Coefficients `⟨f, ψ_w⟩` from the spectrum of `f`.
    pub fn analyze_spectrum(&self, spectrum: &[C64]) -> Vec<C64> {
        let g = self.grid();
        let inv_vol = 1.0 / g.volume();
        let mut out = vec![ZERO; self.len()];
        let mut fft = self.fft.borrow_mut();
        for (c, plan) in self.lattice.centers.iter().zip(&self.plans) {
            let size = plan.m.pow(g.d as u32);
            let mut buf = vec![ZERO; size];
            for k in 0..plan.slots.len() {
                buf[plan.fold[k]] += spectrum[plan.slots[k]] * plan.amp[k];
            }
            fft.process(&mut buf, plan.m, g.d, true);
            for (j, &w) in c.nodes.iter().enumerate() {
                out[w] = buf[j] * inv_vol;
            }
        }
        out
    }

    /// Spectrum of `Σ_w c_w ψ_w`.
    pub fn synthesize_spectrum(&self, coeffs: &[C64]) -> Vec<C64> {
        let g = self.grid();
        let mut out = vec![ZERO; g.total()];
        let mut fft = self.fft.borrow_mut();
        for (c, plan) in self.lattice.centers.iter().zip(&self.plans) {
            let mut buf: Vec<C64> = c.nodes.iter().map(|&w| coeffs[w]).collect();
            fft.process(&mut buf, plan.m, g.d, false);
            for k in 0..plan.slots.len() {
                out[plan.slots[k]] += buf[plan.fold[k]] * plan.amp[k];
            }
        }
        out
    }

    pub fn analyze(&self, f: &SampledField) -> Result<CoefficientField> {
        f.grid.check_same(&self.grid())?;
        Ok(CoefficientField { values: self.analyze_spectrum(&self.transform.forward(&f.values)) })
    }

    pub fn synthesize(&self, c: &CoefficientField) -> Result<SampledField> {
        if c.len() != self.len() {
            return Err(Error::GridMismatch(format!("{} coefficients for {} nodes", c.len(), self.len())));
        }
        let spec = self.synthesize_spectrum(&c.values);
        Ok(SampledField { grid: self.grid(), values: self.transform.inverse(&spec) })
    }

    pub fn frame_operator_spectrum(&self, spectrum: &[C64]) -> Vec<C64> {
        self.synthesize_spectrum(&self.analyze_spectrum(spectrum))
    }

    /// `S f = Σ_w ⟨f, ψ_w⟩ ψ_w`.
    pub fn apply_frame_operator(&self, f: &SampledField) -> Result<SampledField> {
        f.grid.check_same(&self.grid())?;
        let spec = self.frame_operator_spectrum(&self.transform.forward(&f.values));
        Ok(SampledField { grid: self.grid(), values: self.transform.inverse(&spec) })
    }

    // -----------------------------------------------------------------------
    // band-limited subspace

    /// Radius of the band on which frame bounds are taken: the largest
    /// frequency-center norm of the lattice.
    pub fn band_radius(&self) -> f64 {
        self.lattice.max_center_freq()
    }

    /// Spectral slots inside the band.
    pub fn band_slots(&self) -> Vec<usize> {
        let g = self.grid();
        let r = self.band_radius() + 1e-9;
        (0..g.total())
            .filter(|&q| {
                let v = g.freq_vec(q);
                (v[0] * v[0] + v[1] * v[1]).sqrt() <= r
            })
            .collect()
    }

    fn band_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.grid().total()];
        for q in self.band_slots() {
            mask[q] = true;
        }
        mask
    }

    /// `P S P` on spectra, with `P` the band projector.
    fn band_operator(&self, mask: &[bool], spectrum: &[C64]) -> Vec<C64> {
        let masked: Vec<C64> = spectrum.iter().zip(mask).map(|(v, &m)| if m { *v } else { ZERO }).collect();
        let mut out = self.frame_operator_spectrum(&masked);
        out.iter_mut().zip(mask).for_each(|(v, &m)| {
            if !m {
                *v = ZERO
            }
        });
        out
    }

    /// Extreme eigenvalues of the frame operator on the band-limited subspace.
    pub fn frame_bounds(&self, tol: f64, method: BoundsMethod, max_iter: usize) -> Result<FrameBounds> {
        if !(tol > 0.0) {
            return Err(Error::Invalid("tolerance must be positive".into()));
        }
        let mask = self.band_mask();
        let band = self.band_slots();
        let base = FrameBounds {
            lower: 0.0,
            upper: 0.0,
            method,
            tol,
            iterations_upper: 0,
            iterations_lower: 0,
            band_radius: self.band_radius(),
            band_size: band.len(),
        };
        match method {
            BoundsMethod::FullSpectrum => {
                let k = band.len();
                let mut m = CMatrix::zeros(k);
                let mut e = vec![ZERO; self.grid().total()];
                for (col, &q) in band.iter().enumerate() {
                    e[q] = C64::new(1.0, 0.0);
                    let img = self.band_operator(&mask, &e);
                    e[q] = ZERO;
                    for (row, &p) in band.iter().enumerate() {
                        m.set(row, col, img[p]);
                    }
                }
                let ev = hermitian_eigenvalues(&m);
                Ok(FrameBounds { lower: ev[0], upper: ev[k - 1], ..base })
            }
            BoundsMethod::PowerIteration => {
                let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
                let start: Vec<C64> = mask
                    .iter()
                    .map(|&m| {
                        if m {
                            C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
                        } else {
                            ZERO
                        }
                    })
                    .collect();
                let (upper, it_up) = power_iteration(|v| self.band_operator(&mask, v), &start, tol, max_iter)?;
                let shift = upper * 1.01;
                let (top, it_lo) = power_iteration(
                    |v| {
                        let s = self.band_operator(&mask, v);
                        v.iter().zip(&s).zip(&mask).map(|((x, y), &m)| if m { x * shift - y } else { ZERO }).collect()
                    },
                    &start,
                    tol,
                    max_iter,
                )?;
                let lower = shift - top;
                if lower <= 0.0 {
                    return Err(Error::NotPositiveDefinite { curvature: lower });
                }
                Ok(FrameBounds { lower, upper, iterations_upper: it_up, iterations_lower: it_lo, ..base })
            }
        }
    }

    /// Solves `P S P x = P b` by conjugate gradient, residual ≤ tol·‖P b‖.
    pub fn solve_band(&self, rhs: &[C64], tol: f64, max_iter: usize) -> Result<Vec<C64>> {
        let mask = self.band_mask();
        self.solve_band_masked(&mask, rhs, tol, max_iter)
    }

    fn solve_band_masked(&self, mask: &[bool], rhs: &[C64], tol: f64, max_iter: usize) -> Result<Vec<C64>> {
        let weight = 1.0 / self.grid().volume();
        let b: Vec<C64> = rhs.iter().zip(mask).map(|(v, &m)| if m { *v } else { ZERO }).collect();
        let bnorm = (b.iter().map(|v| v.norm_sqr()).sum::<f64>() * weight).sqrt();
        if bnorm == 0.0 {
            return Ok(b);
        }
        let out = conjugate_gradient(|v| self.band_operator(mask, v), &b, weight, tol * bnorm, max_iter)?;
        Ok(out.solution)
    }

    /// Spectra of the canonical dual frame on the band-limited subspace.
    pub fn dual_spectra(&self, tol: f64, max_iter: usize) -> Result<Vec<Vec<C64>>> {
        let mask = self.band_mask();
        (0..self.len()).map(|w| self.solve_band_masked(&mask, &self.packet_spectrum(w), tol, max_iter)).collect()
    }

    /// Canonical dual frame `φ̃_w = (P S P)^{−1} P ψ_w`.
    pub fn dual_frame(&self, tol: f64, max_iter: usize) -> Result<Vec<SampledField>> {
        Ok(self
            .dual_spectra(tol, max_iter)?
            .into_iter()
            .map(|s| SampledField { grid: self.grid(), values: self.transform.inverse(&s) })
            .collect())
    }

    /// Gramian `G[w,z] = ⟨ψ_w, ψ_z⟩`.
    pub fn gramian(&self, cap: usize) -> Result<CMatrix> {
        if self.len() > cap {
            return Err(Error::TooLarge { nodes: self.len(), cap });
        }
        pair_matrix(self, self, None)
    }
}

/// Power iteration returning the dominant Rayleigh quotient and iterations.
fn power_iteration(
    mut apply: impl FnMut(&[C64]) -> Vec<C64>,
    start: &[C64],
    tol: f64,
    max_iter: usize,
) -> Result<(f64, usize)> {
    let norm = |v: &[C64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let n0 = norm(start);
    let mut v: Vec<C64> = start.iter().map(|x| x / n0).collect();
    let mut lam = f64::NAN;
    for it in 1..=max_iter {
        let w = apply(&v);
        let rq: f64 = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        let nw = norm(&w);
        if nw == 0.0 {
            return Ok((0.0, it));
        }
        v = w.into_iter().map(|x| x / nw).collect();
        if (rq - lam).abs() <= tol * rq.abs() {
            return Ok((rq, it));
        }
        lam = rq;
    }
    Err(Error::NoConvergence { iterations: max_iter, last_change: lam })
}

// ---------------------------------------------------------------------------
// Pair matrices

const FOLD_LIMIT: usize = 1 << 22;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `P[w,z] = L^{−d}·Σ_η h(η)·Ψ^A_w(η)·conj(Ψ^B_z(η))`, i.e. `⟨T_h ψ^A_w, ψ^B_z⟩`
/// for the Fourier multiplier `h` (identity when `kernel` is `None`).
/// Both frames must share the grid and node count.
pub fn pair_matrix(a: &Frame, b: &Frame, kernel: Option<&[C64]>) -> Result<CMatrix> {
    a.grid().check_same(&b.grid())?;
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("pair matrix of {} and {} nodes", a.len(), b.len())));
    }
    let g = a.grid();
    let d = g.d;
    let n = a.len();
    let inv_vol = 1.0 / g.volume();
    let mut out = CMatrix::zeros(n);
    let mut fft = FftCache::new();
    let mut dense_a = vec![0.0f64; g.total()];

    for (ca, pa) in a.lattice.centers.iter().zip(&a.plans) {
        for (s, v) in pa.slots.iter().zip(&pa.amp) {
            dense_a[*s] = *v;
        }
        for (cb, pb) in b.lattice.centers.iter().zip(&b.plans) {
            // overlap weights w_q = h·a·b on the shared support
            let mut overlap: Vec<([i64; 2], C64)> = Vec::new();
            for ((s, q), vb) in pb.slots.iter().zip(&pb.qidx).zip(&pb.amp) {
                let va = dense_a[*s];
                if va == 0.0 {
                    continue;
                }
                let h = kernel.map_or(C64::new(1.0, 0.0), |k| k[*s]);
                let wq = h * (va * vb);
                if wq != ZERO {
                    overlap.push((*q, wq));
                }
            }
            if overlap.is_empty() {
                continue;
            }
            let (ma, mb) = (pa.m, pb.m);
            let ell = ma / gcd(ma, mb) * mb;
            let ta = ma.pow(d as u32);
            let tb = mb.pow(d as u32);
            // per-translate phases e^{2πi j·q_a/M_a} and e^{−2πi l·q_b/M_b}
            let phase = |m: usize, qc: [i64; 2], sign: f64, t: usize| -> Vec<C64> {
                (0..t)
                    .map(|j| {
                        let ja = if d == 1 { [j, 0] } else { [j / m, j % m] };
                        let mut ph = 0.0;
                        for ax in 0..d {
                            ph += ((ja[ax] as i64 * qc[ax]).rem_euclid(m as i64)) as f64 / m as f64;
                        }
                        C64::from_polar(1.0, sign * 2.0 * PI * ph)
                    })
                    .collect()
            };
            let ph_a = phase(ma, ca.index, 1.0, ta);
            let ph_b = phase(mb, cb.index, -1.0, tb);
            if ell.pow(d as u32) <= FOLD_LIMIT {
                let size = ell.pow(d as u32);
                let mut buf = vec![ZERO; size];
                for (q, wq) in &overlap {
                    let i0 = q[0].rem_euclid(ell as i64) as usize;
                    let idx = if d == 1 { i0 } else { i0 * ell + q[1].rem_euclid(ell as i64) as usize };
                    buf[idx] += *wq;
                }
                fft.process(&mut buf, ell, d, false);
                let (ra, rb) = (ell / ma, ell / mb);
                for j in 0..ta {
                    let ja = if d == 1 { [j, 0] } else { [j / ma, j % ma] };
                    let row = ca.nodes[j];
                    for l in 0..tb {
                        let la = if d == 1 { [l, 0] } else { [l / mb, l % mb] };
                        let m0 = (ja[0] * ra + ell - (la[0] * rb) % ell) % ell;
                        let idx = if d == 1 {
                            m0
                        } else {
                            m0 * ell + (ja[1] * ra + ell - (la[1] * rb) % ell) % ell
                        };
                        out.set(row, cb.nodes[l], ph_a[j] * ph_b[l] * buf[idx] * inv_vol);
                    }
                }
            } else {
                for j in 0..ta {
                    let ja = if d == 1 { [j, 0] } else { [j / ma, j % ma] };
                    for l in 0..tb {
                        let la = if d == 1 { [l, 0] } else { [l / mb, l % mb] };
                        let mut acc = ZERO;
                        for (q, wq) in &overlap {
                            let mut ph = 0.0;
                            for ax in 0..d {
                                ph += -(ja[ax] as f64) * (q[ax] - ca.index[ax]) as f64 / ma as f64
                                    + (la[ax] as f64) * (q[ax] - cb.index[ax]) as f64 / mb as f64;
                            }
                            acc += wq * C64::from_polar(1.0, 2.0 * PI * ph);
                        }
                        out.set(ca.nodes[j], cb.nodes[l], acc * inv_vol);
                    }
                }
            }
        }
        for s in &pa.slots {
            dense_a[*s] = 0.0;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Test signals

/// Complex Gaussian spectrum on `lo ≤ |η| ≤ hi`, normalized to unit L² norm.
pub fn random_bandlimited(grid: GridSpec, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> SampledField {
    let spectrum: Vec<C64> = (0..grid.total())
        .map(|q| {
            let v = grid.freq_vec(q);
            let r = (v[0] * v[0] + v[1] * v[1]).sqrt();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            if r >= lo && r <= hi {
                Complex64::new(re, im)
            } else {
                ZERO
            }
        })
        .collect();
    let f = SampledField::from_spectrum(grid, &spectrum);
    let n = f.norm();
    f.scale(C64::new(1.0 / n, 0.0))
}
