//! Matrices indexed by lattice nodes with polynomial off-diagonal decay in
//! the quasi-distance: seminorms, Schur bounds, decay fits and inversion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{CoefficientField, Frame};
use crate::geometry::SubdyadicLattice;
use crate::linalg::CMatrix;
use crate::modspace::{mod_norm, ModNormSpec, RadialWeight};
use crate::stats::{line_fit, weighted_line_fit};

/// Entries below this magnitude are treated as structural zeros by fits.
pub const FIT_FLOOR: f64 = 1e-14;

/// Envelope factor of the violation count.
pub const ENVELOPE_FACTOR: f64 = 10.0;

/// A dense matrix aligned with the node order of a lattice.
#[derive(Debug, Clone)]
pub struct LocalizedMatrix<'a> {
    pub lattice: &'a SubdyadicLattice,
    pub entries: CMatrix,
}

/// How a decay profile was fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Least squares through the largest entry of each unit distance shell,
    /// weighted by shell population.
    ShellEnvelope,
    /// Least squares through every entry.
    Entrywise,
}

/// Fitted bound `|A(s,t)| ≲ C(1+d)^{−N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayProfile {
    pub exponent_n: f64,
    pub constant_c: f64,
    pub fit_residual: f64,
    pub violation_fraction: f64,
    /// No entry above the fit floor: decay faster than any polynomial.
    pub superpolynomial: bool,
    pub method: FitMethod,
    pub entries_fitted: usize,
}

#[derive(Serialize, Deserialize)]
struct DecayRecord {
    #[serde(rename = "N")]
    n: Option<f64>,
    #[serde(rename = "C")]
    c: Option<f64>,
    residual: f64,
    violations: f64,
    superpolynomial: bool,
    method: FitMethod,
    entries_fitted: usize,
}

impl Serialize for DecayProfile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DecayRecord {
            n: (!self.superpolynomial).then_some(self.exponent_n),
            c: (!self.superpolynomial).then_some(self.constant_c),
            residual: self.fit_residual,
            violations: self.violation_fraction,
            superpolynomial: self.superpolynomial,
            method: self.method,
            entries_fitted: self.entries_fitted,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DecayProfile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = DecayRecord::deserialize(d)?;
        Ok(DecayProfile {
            exponent_n: r.n.unwrap_or(f64::INFINITY),
            constant_c: r.c.unwrap_or(0.0),
            fit_residual: r.residual,
            violation_fraction: r.violations,
            superpolynomial: r.superpolynomial,
            method: r.method,
            entries_fitted: r.entries_fitted,
        })
    }
}

impl DecayProfile {
    fn superpolynomial(method: FitMethod) -> Self {
        DecayProfile {
            exponent_n: f64::INFINITY,
            constant_c: 0.0,
            fit_residual: 0.0,
            violation_fraction: 0.0,
            superpolynomial: true,
            method,
            entries_fitted: 0,
        }
    }

    /// Whether the fitted exponent is at least `n` (always true when
    /// superpolynomial).
    pub fn at_least(&self, n: f64) -> bool {
        self.superpolynomial || self.exponent_n >= n
    }
}

/// Off-diagonal `(distance, |entry|)` pairs above the fit floor.
fn off_diagonal(m: &CMatrix, dist: &impl Fn(usize, usize) -> f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..m.n {
        for (j, v) in m.row(i).iter().enumerate() {
            if i == j {
                continue;
            }
            let a = v.norm();
            if a > FIT_FLOOR {
                out.push((dist(i, j), a));
            }
        }
    }
    out
}

fn violations(samples: &[(f64, f64)], n: f64, c: f64) -> f64 {
    let bad = samples.iter().filter(|(d, a)| *a > ENVELOPE_FACTOR * c * (1.0 + d).powf(-n)).count();
    bad as f64 / samples.len() as f64
}

/// Decay fit of the shell envelope: off-diagonal entries are grouped into
/// unit distance shells `k ≤ d < k+1`; each shell contributes its largest
/// entry (at the distance where it occurs) with weight equal to the number
/// of entries in the shell.
pub fn fit_samples_envelope(samples: &[(f64, f64)]) -> Result<DecayProfile> {
    if samples.is_empty() {
        return Ok(DecayProfile::superpolynomial(FitMethod::ShellEnvelope));
    }
    // shell -> (distance of max, max, population)
    let mut shells: std::collections::BTreeMap<u64, (f64, f64, usize)> = Default::default();
    for &(d, a) in samples {
        let e = shells.entry(d.floor() as u64).or_insert((d, a, 0));
        e.2 += 1;
        if a > e.1 {
            e.0 = d;
            e.1 = a;
        }
    }
    let pts: Vec<(f64, f64, f64)> =
        shells.values().map(|(d, a, n)| ((1.0 + d).log10(), a.log10(), *n as f64)).collect();
    let fit = weighted_line_fit(&pts)
        .ok_or_else(|| Error::Degenerate(format!("{} distance shell(s) cannot determine a slope", pts.len())))?;
    let n = -fit.slope;
    let c = 10f64.powf(fit.intercept);
    Ok(DecayProfile {
        exponent_n: n,
        constant_c: c,
        fit_residual: fit.residual,
        violation_fraction: violations(samples, n, c),
        superpolynomial: false,
        method: FitMethod::ShellEnvelope,
        entries_fitted: samples.len(),
    })
}

/// Decay fit through every sample.
pub fn fit_samples_entrywise(samples: &[(f64, f64)]) -> Result<DecayProfile> {
    if samples.is_empty() {
        return Ok(DecayProfile::superpolynomial(FitMethod::Entrywise));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|(d, a)| ((1.0 + d).log10(), a.log10())).collect();
    let fit = line_fit(&pts).ok_or_else(|| Error::Degenerate("all entries at one distance".into()))?;
    let n = -fit.slope;
    let c = 10f64.powf(fit.intercept);
    Ok(DecayProfile {
        exponent_n: n,
        constant_c: c,
        fit_residual: fit.residual,
        violation_fraction: violations(samples, n, c),
        superpolynomial: false,
        method: FitMethod::Entrywise,
        entries_fitted: samples.len(),
    })
}

impl<'a> LocalizedMatrix<'a> {
    pub fn new(lattice: &'a SubdyadicLattice, entries: CMatrix) -> Result<Self> {
        if entries.n != lattice.len() {
            return Err(Error::GridMismatch(format!("{}x{} matrix for {} nodes", entries.n, entries.n, lattice.len())));
        }
        Ok(LocalizedMatrix { lattice, entries })
    }

    pub fn identity(lattice: &'a SubdyadicLattice) -> Self {
        LocalizedMatrix { lattice, entries: CMatrix::identity(lattice.len()) }
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.lattice.distance(i, j)
    }

    /// `sup (1+d)^N |A(s,t)|`.
    pub fn decay_seminorm(&self, n: f64) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.entries.n {
            for (j, v) in self.entries.row(i).iter().enumerate() {
                let a = v.norm();
                if a > 0.0 {
                    best = best.max((1.0 + self.distance(i, j)).powf(n) * a);
                }
            }
        }
        best
    }

    /// Largest weighted row and column sums of `|A|·(1+d)^s`.
    pub fn row_col_sums(&self, s: f64) -> (f64, f64) {
        let n = self.entries.n;
        let mut cols = vec![0.0; n];
        let mut row_max: f64 = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for (j, v) in self.entries.row(i).iter().enumerate() {
                let a = v.norm();
                if a > 0.0 {
                    let x = a * if s == 0.0 { 1.0 } else { (1.0 + self.distance(i, j)).powf(s) };
                    row += x;
                    cols[j] += x;
                }
            }
            row_max = row_max.max(row);
        }
        (row_max, cols.into_iter().fold(0.0, f64::max))
    }

    pub fn jaffard_class_norm(&self, s: f64) -> f64 {
        let (r, c) = self.row_col_sums(s);
        r.max(c)
    }

    /// Schur bound `sqrt(rowsum · colsum)` on the ℓ² operator norm.
    pub fn schur_bound(&self) -> f64 {
        let (r, c) = self.row_col_sums(0.0);
        (r * c).sqrt()
    }

    /// Largest off-diagonal row sum of `|A|`.
    pub fn off_diagonal_schur(&self) -> f64 {
        (0..self.entries.n)
            .map(|i| self.entries.row(i).iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn operator_norm(&self) -> f64 {
        self.entries.spectral_norm(1e-12, 5000)
    }

    pub fn decay_samples(&self) -> Vec<(f64, f64)> {
        off_diagonal(&self.entries, &|i, j| self.distance(i, j))
    }

    /// Shell-envelope decay fit of the off-diagonal entries.
    pub fn fit_decay(&self) -> Result<DecayProfile> {
        fit_samples_envelope(&self.decay_samples())
    }

    /// Entrywise least-squares decay fit.
    pub fn fit_decay_entrywise(&self) -> Result<DecayProfile> {
        fit_samples_entrywise(&self.decay_samples())
    }

    pub fn product(&self, other: &LocalizedMatrix) -> LocalizedMatrix<'a> {
        LocalizedMatrix { lattice: self.lattice, entries: self.entries.matmul(&other.entries) }
    }

    /// Dense inverse with its decay profile; `Singular` when the smallest
    /// singular value does not exceed `tol`.
    pub fn invert(&self, tol: f64) -> Result<(LocalizedMatrix<'a>, DecayProfile)> {
        let inv = self.entries.inverse().ok_or(Error::Singular { sigma_min: 0.0 })?;
        let sigma_min = 1.0 / inv.spectral_norm(1e-12, 5000);
        if !(sigma_min > tol) {
            return Err(Error::Singular { sigma_min });
        }
        let m = LocalizedMatrix { lattice: self.lattice, entries: inv };
        let profile = m.fit_decay()?;
        Ok((m, profile))
    }

    /// `w_β(ξ_s)·A(s,t)·w_β(ξ_t)^{−1}`.
    pub fn conjugate_weights(&self, beta: f64) -> LocalizedMatrix<'a> {
        let w = RadialWeight { beta };
        let ws: Vec<f64> = (0..self.entries.n).map(|i| w.at(self.lattice.node_freq(i))).collect();
        LocalizedMatrix {
            lattice: self.lattice,
            entries: CMatrix::from_fn(self.entries.n, |i, j| self.entries.get(i, j) * (ws[i] / ws[j])),
        }
    }

    /// Principal submatrix on `idx`, as a plain matrix.
    pub fn submatrix(&self, idx: &[usize]) -> CMatrix {
        self.entries.submatrix(idx)
    }

    /// `A·c` and `‖A·c‖ / ‖c‖` in the weighted mixed norm.
    pub fn weighted_sequence_apply(&self, c: &CoefficientField, spec: &ModNormSpec) -> Result<(CoefficientField, f64)> {
        let out = CoefficientField { values: self.entries.matvec(&c.values) };
        let num = mod_norm(self.lattice, &out, spec)?;
        let den = mod_norm(self.lattice, c, spec)?;
        Ok((out, num / den))
    }
}

/// Decay fit of a matrix whose rows and columns are indexed by a subset of
/// lattice nodes.
pub fn fit_decay_subset(lattice: &SubdyadicLattice, m: &CMatrix, idx: &[usize]) -> Result<DecayProfile> {
    fit_samples_envelope(&off_diagonal(m, &|i, j| lattice.distance(idx[i], idx[j])))
}

/// Decay fit of the dual-cross entries `⟨φ̃_w, ψ_z⟩` for every `stride`-th
/// row `w`, each dual obtained by conjugate gradient on the band.
pub fn dual_cross_decay(frame: &Frame, stride: usize, tol: f64, max_iter: usize) -> Result<DecayProfile> {
    let lattice = frame.lattice;
    let mut samples = Vec::new();
    for w in (0..frame.len()).step_by(stride.max(1)) {
        let dual = frame.solve_band(&frame.packet_spectrum(w), tol, max_iter)?;
        for (z, v) in frame.analyze_spectrum(&dual).iter().enumerate() {
            let a = v.norm();
            if z != w && a > FIT_FLOOR {
                samples.push((lattice.distance(w, z), a));
            }
        }
    }
    fit_samples_envelope(&samples)
}

/// Greedy node subset on which the Gramian is strictly diagonally dominant:
/// every selected row keeps its off-diagonal mass within the subset ≤ `budget`.
pub fn dominant_subset(gram: &LocalizedMatrix, budget: f64, cap: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut mass: Vec<f64> = Vec::new();
    for cand in 0..gram.entries.n {
        if chosen.len() >= cap {
            break;
        }
        let links: Vec<f64> = chosen.iter().map(|&s| gram.entries.get(cand, s).norm()).collect();
        let own: f64 = links.iter().sum();
        if own > budget || mass.iter().zip(&links).any(|(m, l)| m + l > budget) {
            continue;
        }
        mass.iter_mut().zip(&links).for_each(|(m, l)| *m += l);
        chosen.push(cand);
        mass.push(own);
    }
    chosen
}

/// Measured exponent `γ` with `w₁(ξ)/w₁(η) ≤ (1+d(w,z))^γ` over node pairs at
/// distance ≥ 1.
pub fn weight_comparability_exponent(lattice: &SubdyadicLattice) -> f64 {
    let n = lattice.len();
    let f: Vec<f64> = (0..n).map(|i| 1.0 + lattice.node_freq(i)).collect();
    let mut gamma: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let d = lattice.distance(a, b);
            if d >= 1.0 {
                gamma = gamma.max((f[a] / f[b]).ln() / (1.0 + d).ln());
            }
        }
    }
    gamma
}
