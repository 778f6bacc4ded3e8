//! Wavefront-set indicator from the conic decay of the localized dispersive
//! STFT, and order-zero pseudodifferential operators for the invariance
//! experiments.
//!
//! Regularity is decided by a fitted decay exponent against a threshold, so
//! the report is an indicator on a finite grid rather than a proof.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::frame::packet_spectrum;
use crate::grid::{GridSpec, SampledField, Transform};
use crate::linalg::C64;
use crate::multiplier::smooth_step;
use crate::stats::line_fit;
use crate::window::{bump, Window};

/// Values below this are treated as exact zeros by the decay fit.
pub const DEGENERATE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WfScanConfig {
    pub cutoff_center: Vec<f64>,
    pub cutoff_radius: f64,
    pub cone_count: usize,
    pub shell_base: f64,
    pub r_min: f64,
    pub n_threshold: f64,
    /// Mesh points per axis across `center ± radius/2`.
    pub x_samples: usize,
    /// Radial samples per shell (per sector angle in d=2).
    pub xi_samples: usize,
}

/// Settings for the torus-wide indicator: a uniform mesh of cells, each
/// scanned with a cutoff centered in the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WfConfig {
    pub cells_per_axis: usize,
    /// Cutoff radius as a multiple of the cell width.
    pub cutoff_ratio: f64,
    /// Angular sectors; ignored in d=1 where the cones are the two half-lines.
    pub cone_count: usize,
    pub shell_base: f64,
    pub r_min: f64,
    pub n_threshold: f64,
    pub x_samples: usize,
    pub xi_samples: usize,
    /// Scan values below this fraction of the reference amplitude are
    /// treated as round-off and left out of the fit.
    pub noise_floor: f64,
    /// A cone whose largest value is below this fraction of the reference
    /// amplitude is reported regular: its content is too small to resolve.
    pub significance: f64,
}

impl Default for WfConfig {
    fn default() -> Self {
        WfConfig {
            cells_per_axis: 16,
            cutoff_ratio: 0.75,
            cone_count: 8,
            shell_base: std::f64::consts::SQRT_2,
            r_min: 4.0,
            n_threshold: 4.0,
            x_samples: 5,
            xi_samples: 4,
            noise_floor: 1e-12,
            significance: 1e-8,
        }
    }
}

impl WfConfig {
    pub fn cell_width(&self, grid: &GridSpec) -> f64 {
        grid.length / self.cells_per_axis as f64
    }

    pub fn cutoff_radius(&self, grid: &GridSpec) -> f64 {
        self.cutoff_ratio * self.cell_width(grid)
    }

    pub fn cones(&self, grid: &GridSpec) -> usize {
        if grid.d == 1 {
            2
        } else {
            self.cone_count
        }
    }

    pub fn cell_center(&self, grid: &GridSpec, cell: &[usize]) -> Vec<f64> {
        let w = self.cell_width(grid);
        cell.iter().map(|&i| (i as f64 + 0.5) * w).collect()
    }

    /// Scan settings for the cell with the given index.
    pub fn scan_config(&self, grid: &GridSpec, cell: &[usize]) -> WfScanConfig {
        WfScanConfig {
            cutoff_center: self.cell_center(grid, cell),
            cutoff_radius: self.cutoff_radius(grid),
            cone_count: self.cones(grid),
            shell_base: self.shell_base,
            r_min: self.r_min,
            n_threshold: self.n_threshold,
            x_samples: self.x_samples,
            xi_samples: self.xi_samples,
        }
    }

    pub fn cells(&self, grid: &GridSpec) -> Vec<Vec<usize>> {
        let k = self.cells_per_axis;
        if grid.d == 1 {
            (0..k).map(|i| vec![i]).collect()
        } else {
            (0..k * k).map(|i| vec![i / k, i % k]).collect()
        }
    }
}

/// Shell edges `R_min·base^s` up to Nyquist/2.
pub fn shell_edges(grid: &GridSpec, r_min: f64, base: f64) -> Result<Vec<f64>> {
    if !(base > 1.0) || !(r_min > 0.0) {
        return Err(Error::Invalid(format!("need shell_base > 1 and R_min > 0, got {base} / {r_min}")));
    }
    let top = grid.nyquist() / 2.0 * (1.0 + 1e-12);
    let mut edges = vec![r_min];
    while edges.last().unwrap() * base <= top {
        edges.push(edges.last().unwrap() * base);
    }
    Ok(edges)
}

/// Smooth radial cutoff with `χ(center) = 1`, vanishing at distance `radius`.
pub fn cutoff(grid: &GridSpec, center: &[f64], radius: f64) -> Vec<f64> {
    let peak = bump(0.5);
    let l = grid.length;
    (0..grid.total())
        .map(|flat| {
            let x = grid.position_vec(flat);
            let r2: f64 = (0..grid.d)
                .map(|a| {
                    let t = (x[a] - center[a] + 0.5 * l).rem_euclid(l) - 0.5 * l;
                    t * t
                })
                .sum();
            bump(0.5 + 0.5 * r2.sqrt() / radius) / peak
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanEntry {
    pub cone: usize,
    pub shell: usize,
    pub shell_lo: f64,
    pub shell_hi: f64,
    /// `|ξ|` of the sample that attained the sup.
    pub xi_at_max: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanTable {
    pub cone_count: usize,
    pub shell_count: usize,
    /// Row-major by cone, then shell.
    pub entries: Vec<ScanEntry>,
}

impl ScanTable {
    pub fn get(&self, cone: usize, shell: usize) -> &ScanEntry {
        &self.entries[cone * self.shell_count + shell]
    }
}

/// Frequency samples for `(cone, shell)`.
fn shell_samples(d: usize, cones: usize, cone: usize, lo: f64, hi: f64, radial: usize) -> Vec<[f64; 2]> {
    let radii: Vec<f64> = (0..radial).map(|i| lo * (hi / lo).powf((i as f64 + 0.5) / radial as f64)).collect();
    if d == 1 {
        let sign = if cone == 0 { 1.0 } else { -1.0 };
        return radii.into_iter().map(|r| [sign * r, 0.0]).collect();
    }
    let width = std::f64::consts::TAU / cones as f64;
    let mut out = Vec::new();
    for r in radii {
        for part in 0..3 {
            let theta = width * (cone as f64 + (part as f64 + 0.5) / 3.0);
            out.push([r * theta.cos(), r * theta.sin()]);
        }
    }
    out
}

/// Table of `sup_x |V_φ(χu)(x, ξ)|` per (cone, shell), with `x` on a small
/// mesh around the cutoff center.
pub fn localized_stft_scan(u: &SampledField, window: &Window, alpha: f64, cfg: &WfScanConfig) -> Result<ScanTable> {
    let grid = u.grid;
    grid.check_same(&window.grid)?;
    if cfg.cutoff_center.len() != grid.d {
        return Err(Error::Invalid(format!("cutoff center has {} coordinates, grid is {}-dimensional", cfg.cutoff_center.len(), grid.d)));
    }
    if cfg.cutoff_radius < 4.0 * grid.dx() {
        return Err(Error::Invalid(format!("cutoff radius {} is below four grid cells", cfg.cutoff_radius)));
    }
    if cfg.cone_count < 2 || (grid.d == 1 && cfg.cone_count != 2) {
        return Err(Error::Invalid(format!("cone_count {} invalid in dimension {}", cfg.cone_count, grid.d)));
    }
    if cfg.x_samples == 0 || cfg.xi_samples == 0 {
        return Err(Error::Invalid("x_samples and xi_samples must be positive".into()));
    }
    let edges = shell_edges(&grid, cfg.r_min, cfg.shell_base)?;
    if edges.len() < 2 {
        return Err(Error::ConeEmpty(0));
    }
    let chi = cutoff(&grid, &cfg.cutoff_center, cfg.cutoff_radius);
    let local: Vec<C64> = u.values.iter().zip(&chi).map(|(v, c)| v * c).collect();
    let spectrum = Transform::new(grid).forward(&local);

    let offsets: Vec<f64> = (0..cfg.x_samples)
        .map(|i| if cfg.x_samples == 1 { 0.0 } else { cfg.cutoff_radius * (i as f64 / (cfg.x_samples - 1) as f64 - 0.5) })
        .collect();
    let mut mesh = Vec::new();
    for &a in &offsets {
        if grid.d == 1 {
            mesh.push([cfg.cutoff_center[0] + a, 0.0]);
        } else {
            for &b in &offsets {
                mesh.push([cfg.cutoff_center[0] + a, cfg.cutoff_center[1] + b]);
            }
        }
    }

    let shells = edges.len() - 1;
    let vol = grid.volume();
    let mut entries = Vec::with_capacity(cfg.cone_count * shells);
    for cone in 0..cfg.cone_count {
        for s in 0..shells {
            let (lo, hi) = (edges[s], edges[s + 1]);
            let samples = shell_samples(grid.d, cfg.cone_count, cone, lo, hi, cfg.xi_samples);
            if samples.is_empty() {
                return Err(Error::ConeEmpty(cone));
            }
            let mut best = (0.0f64, samples[0]);
            for xi in samples {
                let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                let packet = packet_spectrum(window, [0.0, 0.0], xi, r.powf(1.0 - alpha))?;
                let support: Vec<(usize, f64, [f64; 2])> = packet
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.re != 0.0)
                    .map(|(q, a)| {
                        let eta = grid.freq_vec(q);
                        (q, a.re, [eta[0] - xi[0], eta[1] - xi[1]])
                    })
                    .collect();
                for x in &mesh {
                    let mut acc = C64::new(0.0, 0.0);
                    for (q, a, de) in &support {
                        acc += spectrum[*q] * C64::from_polar(*a, x[0] * de[0] + x[1] * de[1]);
                    }
                    let v = acc.norm() / vol;
                    if v > best.0 {
                        best = (v, xi);
                    }
                }
            }
            let xi_norm = (best.1[0] * best.1[0] + best.1[1] * best.1[1]).sqrt();
            entries.push(ScanEntry { cone, shell: s, shell_lo: lo, shell_hi: hi, xi_at_max: xi_norm, value: best.0 });
        }
    }
    Ok(ScanTable { cone_count: cfg.cone_count, shell_count: shells, entries })
}

// ---------------------------------------------------------------------------
// Decay fits and reports

fn ser_exponent<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

fn de_exponent<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeFit {
    pub cone: usize,
    /// `−slope`; `+∞` when too few values clear the floor.
    #[serde(serialize_with = "ser_exponent", deserialize_with = "de_exponent")]
    pub exponent: f64,
    #[serde(serialize_with = "ser_exponent", deserialize_with = "de_exponent")]
    pub constant: f64,
    pub degenerate: bool,
    pub singular: bool,
}

/// Least-squares slope of `log(sup)` against `log(1+|ξ|)` per cone.
pub fn decay_fit_per_cone(table: &ScanTable, n_threshold: f64) -> Result<Vec<ConeFit>> {
    decay_fit_with_floor(table, n_threshold, DEGENERATE_FLOOR, DEGENERATE_FLOOR)
}

/// As [`decay_fit_per_cone`], ignoring values below `floor`. A cone with
/// fewer than two values above the floor, or whose largest value is below
/// `significance`, is regular with an infinite exponent.
pub fn decay_fit_with_floor(table: &ScanTable, n_threshold: f64, floor: f64, significance: f64) -> Result<Vec<ConeFit>> {
    let floor = floor.max(DEGENERATE_FLOOR);
    if table.shell_count < 4 {
        return Err(Error::Invalid(format!("decay fit needs at least 4 shells, table has {}", table.shell_count)));
    }
    let mut fits = Vec::with_capacity(table.cone_count);
    for cone in 0..table.cone_count {
        let pts: Vec<(f64, f64)> = (0..table.shell_count)
            .map(|s| table.get(cone, s))
            .filter(|e| e.value >= floor)
            .map(|e| ((1.0 + e.xi_at_max).log10(), e.value.log10()))
            .collect();
        let peak = (0..table.shell_count).map(|s| table.get(cone, s).value).fold(0.0, f64::max);
        let fit = if pts.len() < 2 || peak < significance {
            ConeFit { cone, exponent: f64::INFINITY, constant: f64::INFINITY, degenerate: peak < DEGENERATE_FLOOR, singular: false }
        } else {
            let lf = line_fit(&pts).ok_or_else(|| Error::Degenerate(format!("cone {cone}: shell samples share one frequency")))?;
            let exponent = -lf.slope;
            ConeFit { cone, exponent, constant: 10f64.powf(lf.intercept), degenerate: false, singular: exponent < n_threshold }
        };
        fits.push(fit);
    }
    Ok(fits)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WfEntry {
    pub x_cell: Vec<usize>,
    pub cone_index: usize,
    #[serde(serialize_with = "ser_exponent", deserialize_with = "de_exponent")]
    pub exponent: f64,
    #[serde(serialize_with = "ser_exponent", deserialize_with = "de_exponent")]
    pub constant: f64,
    pub singular: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WavefrontReport {
    pub n_threshold: f64,
    pub cells_per_axis: usize,
    pub cone_count: usize,
    pub entries: Vec<WfEntry>,
    /// Raw scan tables, one per cell, in cell order.
    #[serde(skip)]
    pub tables: Vec<(Vec<usize>, ScanTable)>,
}

impl WavefrontReport {
    pub fn singular_set(&self) -> Vec<(Vec<usize>, usize)> {
        self.entries.iter().filter(|e| e.singular).map(|e| (e.x_cell.clone(), e.cone_index)).collect()
    }

    pub fn singular_cells(&self) -> Vec<Vec<usize>> {
        let mut cells: Vec<Vec<usize>> = self.entries.iter().filter(|e| e.singular).map(|e| e.x_cell.clone()).collect();
        cells.dedup();
        cells
    }

    /// Whether `(cell, cone)` lies within one cell and one cone of a singular pair.
    pub fn near_singular(&self, cell: &[usize], cone: usize) -> bool {
        let k = self.cells_per_axis as i64;
        let c = self.cone_count as i64;
        self.entries.iter().filter(|e| e.singular).any(|e| {
            let cells_close = e.x_cell.iter().zip(cell).all(|(&a, &b)| {
                let diff = (a as i64 - b as i64).rem_euclid(k);
                diff.min(k - diff) <= 1
            });
            let dc = (e.cone_index as i64 - cone as i64).rem_euclid(c);
            cells_close && dc.min(c - dc) <= 1
        })
    }

    /// Every singular pair of `self` is within one cell and one cone of a singular pair of `other`.
    pub fn contained_in(&self, other: &WavefrontReport) -> bool {
        self.singular_set().iter().all(|(cell, cone)| other.near_singular(cell, *cone))
    }
}

/// Scans every cell of the torus mesh and aggregates the singular pairs,
/// with the noise floor taken relative to the sup norm of `u`.
pub fn wf_indicator(u: &SampledField, window: &Window, alpha: f64, cfg: &WfConfig) -> Result<WavefrontReport> {
    wf_indicator_scaled(u, window, alpha, cfg, u.max_abs())
}

/// As [`wf_indicator`] with an explicit reference amplitude for the noise
/// floor, e.g. the input of an operator when scanning its output.
pub fn wf_indicator_scaled(u: &SampledField, window: &Window, alpha: f64, cfg: &WfConfig, reference: f64) -> Result<WavefrontReport> {
    let grid = u.grid;
    let scaled = if reference > 0.0 { u.scale(C64::new(1.0 / reference, 0.0)) } else { u.clone() };
    let mut entries = Vec::new();
    let mut tables = Vec::new();
    for cell in cfg.cells(&grid) {
        let scan = cfg.scan_config(&grid, &cell);
        let table = localized_stft_scan(&scaled, window, alpha, &scan)?;
        for fit in decay_fit_with_floor(&table, cfg.n_threshold, cfg.noise_floor, cfg.significance)? {
            entries.push(WfEntry {
                x_cell: cell.clone(),
                cone_index: fit.cone,
                exponent: fit.exponent,
                constant: fit.constant,
                singular: fit.singular,
            });
        }
        tables.push((cell, table));
    }
    Ok(WavefrontReport { n_threshold: cfg.n_threshold, cells_per_axis: cfg.cells_per_axis, cone_count: cfg.cones(&grid), entries, tables })
}

// ---------------------------------------------------------------------------
// Pseudodifferential operators

/// One separable term `g(x)·h(ξ)`, frequency factor in FFT order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolTerm {
    pub spatial: Vec<C64>,
    pub freq: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolTable {
    /// `a[x·total + q]`.
    Dense(Vec<C64>),
    Separable(Vec<SymbolTerm>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiDOSpec {
    pub grid: GridSpec,
    pub symbol: SymbolTable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolBounds {
    pub sup: f64,
    pub inf: f64,
    /// Largest difference quotient of order 1 or 2 in `x`, `ξ` or mixed.
    pub difference_constant: f64,
}

/// `1 + 0.5·exp(−|ξ|²/16)`, between 1 and 1.5 and flat at Nyquist, so the
/// periodized symbol has no kink at the wrap.
fn freq_factor(grid: &GridSpec) -> Vec<C64> {
    (0..grid.total())
        .map(|q| {
            let v = grid.freq_vec(q);
            C64::new(1.0 + 0.5 * (-(v[0] * v[0] + v[1] * v[1]) / 16.0).exp(), 0.0)
        })
        .collect()
}

impl PsiDOSpec {
    pub fn separable(grid: GridSpec, terms: Vec<SymbolTerm>) -> Result<Self> {
        for t in &terms {
            if t.spatial.len() != grid.total() || t.freq.len() != grid.total() {
                return Err(Error::GridMismatch("symbol term length differs from the grid size".into()));
            }
        }
        Ok(PsiDOSpec { grid, symbol: SymbolTable::Separable(terms) })
    }

    pub fn from_fn(grid: GridSpec, a: impl Fn([f64; 2], [f64; 2]) -> C64) -> Self {
        let t = grid.total();
        let mut values = Vec::with_capacity(t * t);
        for x in 0..t {
            let xv = grid.position_vec(x);
            for q in 0..t {
                values.push(a(xv, grid.freq_vec(q)));
            }
        }
        PsiDOSpec { grid, symbol: SymbolTable::Dense(values) }
    }

    pub fn identity(grid: GridSpec) -> Self {
        let one = vec![C64::new(1.0, 0.0); grid.total()];
        PsiDOSpec { grid, symbol: SymbolTable::Separable(vec![SymbolTerm { spatial: one.clone(), freq: one }]) }
    }

    pub fn multiplier(grid: GridSpec, symbol: Vec<C64>) -> Result<Self> {
        Self::separable(grid, vec![SymbolTerm { spatial: vec![C64::new(1.0, 0.0); grid.total()], freq: symbol }])
    }

    pub fn pointwise(grid: GridSpec, g: Vec<C64>) -> Result<Self> {
        Self::separable(grid, vec![SymbolTerm { spatial: g, freq: vec![C64::new(1.0, 0.0); grid.total()] }])
    }

    /// `(1.5 + 0.5·∏cos(2πx_i/L))·(1 + 0.5·exp(−|ξ|²/16))`, with `|a| ≥ 1`.
    pub fn elliptic(grid: GridSpec) -> Self {
        let l = grid.length;
        let g = (0..grid.total())
            .map(|flat| {
                let x = grid.position_vec(flat);
                let c: f64 = (0..grid.d).map(|a| (std::f64::consts::TAU * x[a] / l).cos()).product();
                C64::new(1.5 + 0.5 * c, 0.0)
            })
            .collect();
        PsiDOSpec { grid, symbol: SymbolTable::Separable(vec![SymbolTerm { spatial: g, freq: freq_factor(&grid) }]) }
    }

    /// `χ_far(x)·(1 + 0.5·exp(−|ξ|²/16))` with `χ_far = 0` within `L/16` of
    /// `x0`, rising smoothly to 1 at distance `3L/16`.
    pub fn spatially_vanishing(grid: GridSpec, x0: &[f64]) -> Result<Self> {
        if x0.len() != grid.d {
            return Err(Error::Invalid(format!("x0 has {} coordinates, grid is {}-dimensional", x0.len(), grid.d)));
        }
        let l = grid.length;
        let (inner, outer) = (l / 16.0, 3.0 * l / 16.0);
        let g = (0..grid.total())
            .map(|flat| {
                let x = grid.position_vec(flat);
                let r2: f64 = (0..grid.d)
                    .map(|a| {
                        let t = (x[a] - x0[a] + 0.5 * l).rem_euclid(l) - 0.5 * l;
                        t * t
                    })
                    .sum();
                C64::new(smooth_step((r2.sqrt() - inner) / (outer - inner)), 0.0)
            })
            .collect();
        Ok(PsiDOSpec { grid, symbol: SymbolTable::Separable(vec![SymbolTerm { spatial: g, freq: freq_factor(&grid) }]) })
    }

    pub fn value(&self, x: usize, q: usize) -> C64 {
        match &self.symbol {
            SymbolTable::Dense(v) => v[x * self.grid.total() + q],
            SymbolTable::Separable(terms) => terms.iter().map(|t| t.spatial[x] * t.freq[q]).sum(),
        }
    }

    pub fn to_dense(&self) -> PsiDOSpec {
        let t = self.grid.total();
        let values = (0..t * t).map(|i| self.value(i / t, i % t)).collect();
        PsiDOSpec { grid: self.grid, symbol: SymbolTable::Dense(values) }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let t = self.grid.total();
        match &self.symbol {
            SymbolTable::Dense(v) if v.len() != t * t => {
                Err(Error::GridMismatch(format!("dense symbol of {} values for {} samples", v.len(), t * t)))
            }
            SymbolTable::Separable(terms) if terms.iter().any(|s| s.spatial.len() != t || s.freq.len() != t) => {
                Err(Error::GridMismatch("symbol term length differs from the grid size".into()))
            }
            _ => Ok(()),
        }
    }

    /// Sup, inf and difference quotients up to order 2 along the first axis
    /// of `x` and `ξ`. Frequency differences skip the Nyquist wrap. For
    /// separable symbols the quotient is bounded through the factors.
    pub fn check_bounds(&self) -> Result<SymbolBounds> {
        self.validate()?;
        let g = self.grid;
        let t = g.total();
        let (hx, hxi) = (g.dx(), g.dxi());
        let xn = |x: usize, s: usize| -> usize {
            let [a, b] = g.unflatten(x);
            g.flatten([(a + s) % g.n, b])
        };
        // Next frequency along the first axis, if it does not cross Nyquist.
        let qn = |q: usize, s: i64| -> Option<usize> {
            let [a, b] = g.unflatten(q);
            let k = g.freq_index(a) + s;
            if k >= -(g.n as i64) / 2 && k < g.n as i64 / 2 {
                Some(g.flatten([g.freq_slot(k), b]))
            } else {
                None
            }
        };
        let quotients = |f: &dyn Fn(usize, usize) -> C64, xs: &[usize], qs: &[usize]| -> f64 {
            let mut best: f64 = 0.0;
            for &x in xs {
                for &q in qs {
                    let v = f(x, q);
                    let (x1, x2) = (xn(x, 1), xn(x, 2));
                    best = best.max((f(x1, q) - v).norm() / hx);
                    best = best.max((f(x2, q) - f(x1, q) * 2.0 + v).norm() / (hx * hx));
                    if let (Some(q1), Some(q2)) = (qn(q, 1), qn(q, 2)) {
                        best = best.max((f(x, q1) - v).norm() / hxi);
                        best = best.max((f(x, q2) - f(x, q1) * 2.0 + v).norm() / (hxi * hxi));
                        best = best.max((f(x1, q1) - f(x1, q) - f(x, q1) + v).norm() / (hx * hxi));
                    }
                }
            }
            best
        };
        let all: Vec<usize> = (0..t).collect();
        match &self.symbol {
            SymbolTable::Dense(_) => {
                let f = |x: usize, q: usize| self.value(x, q);
                let (mut sup, mut inf) = (0.0f64, f64::INFINITY);
                for x in 0..t {
                    for q in 0..t {
                        let v = f(x, q).norm();
                        sup = sup.max(v);
                        inf = inf.min(v);
                    }
                }
                Ok(SymbolBounds { sup, inf, difference_constant: quotients(&f, &all, &all) })
            }
            SymbolTable::Separable(terms) => {
                let (mut sup, mut inf) = (0.0f64, f64::INFINITY);
                for x in 0..t {
                    for q in 0..t {
                        let v = self.value(x, q).norm();
                        sup = sup.max(v);
                        inf = inf.min(v);
                    }
                }
                let mut diff = 0.0;
                for term in terms {
                    let gs = term.spatial.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    let hs = term.freq.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    let gx = |x: usize, _q: usize| term.spatial[x];
                    let hq = |_x: usize, q: usize| term.freq[q];
                    let dg = quotients(&gx, &all, &[0]);
                    let dh = quotients(&hq, &[0], &all);
                    diff += f64::max(dg * hs, dh * gs).max(dg * dh);
                }
                Ok(SymbolBounds { sup, inf, difference_constant: diff })
            }
        }
    }
}

/// Kohn–Nirenberg quantization `Au(x) = L^{-d} Σ_ξ a(x,ξ) û(ξ) e^{ix·ξ}`.
pub fn psido_apply(u: &SampledField, spec: &PsiDOSpec) -> Result<SampledField> {
    u.grid.check_same(&spec.grid)?;
    spec.validate()?;
    let grid = u.grid;
    let tr = Transform::new(grid);
    let spectrum = tr.forward(&u.values);
    let t = grid.total();
    let values = match &spec.symbol {
        SymbolTable::Separable(terms) => {
            let mut out = vec![C64::new(0.0, 0.0); t];
            for term in terms {
                let filtered: Vec<C64> = spectrum.iter().zip(&term.freq).map(|(a, b)| a * b).collect();
                for ((o, v), g) in out.iter_mut().zip(tr.inverse(&filtered)).zip(&term.spatial) {
                    *o += v * g;
                }
            }
            out
        }
        SymbolTable::Dense(a) => {
            let n = grid.n;
            let twiddle: Vec<C64> = (0..n).map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64)).collect();
            let vol = grid.volume();
            (0..t)
                .map(|x| {
                    let [xa, xb] = grid.unflatten(x);
                    let row = &a[x * t..(x + 1) * t];
                    let mut acc = C64::new(0.0, 0.0);
                    for q in 0..t {
                        let [qa, qb] = grid.unflatten(q);
                        let k = if grid.d == 1 { (xa * qa) % n } else { (xa * qa + xb * qb) % n };
                        acc += row[q] * spectrum[q] * twiddle[k];
                    }
                    acc / vol
                })
                .collect()
        }
    };
    SampledField::new(grid, values)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub bounds: SymbolBounds,
    pub report_u: WavefrontReport,
    pub report_au: WavefrontReport,
    /// Every singular pair of `Au` is near a singular pair of `u`.
    pub contained: bool,
    /// Every singular pair of `u` is near a singular pair of `Au`.
    pub reverse_contained: bool,
}

pub fn invariance_experiment(u: &SampledField, spec: &PsiDOSpec, window: &Window, alpha: f64, cfg: &WfConfig) -> Result<InvarianceReport> {
    let bounds = spec.check_bounds()?;
    if !bounds.sup.is_finite() || !bounds.difference_constant.is_finite() {
        return Err(Error::Invalid("symbol is not bounded with bounded differences".into()));
    }
    let au = psido_apply(u, spec)?;
    let report_u = wf_indicator(u, window, alpha, cfg)?;
    let report_au = wf_indicator_scaled(&au, window, alpha, cfg, u.max_abs())?;
    let contained = report_au.contained_in(&report_u);
    let reverse_contained = report_u.contained_in(&report_au);
    Ok(InvarianceReport { bounds, report_u, report_au, contained, reverse_contained })
}
