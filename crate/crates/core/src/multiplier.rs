//! Fourier multipliers of Miyachi type: the model symbol, pointwise and
//! averaged condition checks, application by FFT, local oscillation on
//! lattice blocks, the almost-diagonal matrix of `T_m` and the weighted
//! boundedness experiment.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{pair_matrix, random_bandlimited, Frame};
use crate::geometry::SubdyadicLattice;
use crate::grid::{GridSpec, SampledField, Transform};
use crate::jaffard::{DecayProfile, LocalizedMatrix};
use crate::linalg::{CMatrix, C64};
use crate::modspace::{mod_norm, ModNormSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    /// `|ξ|^{−β}e^{i|ξ|^α}` for `|ξ| ≥ 1`, smoothly blended to `e^{i}` at the origin.
    Model,
    /// `|ξ|^{−β}e^{i|ξ|^α}` cut off below `|ξ|^α = 1`, the cut smoothed over one grid cell.
    ModelTruncated,
    /// Values given on the frequency grid.
    CustomTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub kind: SymbolKind,
    pub alpha_inf: f64,
    pub beta_inf: f64,
    #[serde(default = "one")]
    pub alpha0: f64,
    #[serde(default)]
    pub beta0_origin: f64,
    /// Grid values in FFT order, for [`SymbolKind::CustomTable`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<C64>>,
}

fn one() -> f64 {
    1.0
}

impl MultiplierSpec {
    pub fn model(alpha: f64, beta: f64) -> Self {
        MultiplierSpec { kind: SymbolKind::Model, alpha_inf: alpha, beta_inf: beta, alpha0: 1.0, beta0_origin: 0.0, table: None }
    }

    /// Table symbol with the same value at every grid frequency.
    pub fn constant(grid: &GridSpec, value: C64) -> Self {
        MultiplierSpec {
            kind: SymbolKind::CustomTable,
            alpha_inf: 1.0,
            beta_inf: 0.0,
            alpha0: 1.0,
            beta0_origin: 0.0,
            table: Some(vec![value; grid.total()]),
        }
    }

    pub fn from_table(values: Vec<C64>, alpha: f64, beta: f64) -> Self {
        MultiplierSpec { kind: SymbolKind::CustomTable, alpha_inf: alpha, beta_inf: beta, alpha0: 1.0, beta0_origin: 0.0, table: Some(values) }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if !(self.alpha_inf > 0.0) || !self.beta_inf.is_finite() {
            return Err(Error::Invalid(format!("need alpha_inf > 0 and finite beta_inf, got {} / {}", self.alpha_inf, self.beta_inf)));
        }
        if self.kind == SymbolKind::CustomTable {
            match &self.table {
                Some(t) if t.len() == grid.total() => {}
                Some(t) => {
                    return Err(Error::GridMismatch(format!("symbol table of {} values for {} frequencies", t.len(), grid.total())))
                }
                None => return Err(Error::Invalid("custom_table symbol without a table".into())),
            }
        }
        Ok(())
    }

    /// Symbol value at an arbitrary frequency (closed-form kinds only).
    pub fn value_at(&self, xi: [f64; 2], grid: &GridSpec) -> Option<C64> {
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        match self.kind {
            SymbolKind::Model => Some(model_value(r, self.alpha_inf, self.beta_inf)),
            SymbolKind::ModelTruncated => {
                let cut = smooth_step((r - (1.0 - grid.dxi())) / grid.dxi());
                if cut == 0.0 {
                    Some(C64::new(0.0, 0.0))
                } else {
                    Some(model_outer(r, self.alpha_inf, self.beta_inf) * cut)
                }
            }
            SymbolKind::CustomTable => None,
        }
    }
}

fn model_outer(r: f64, alpha: f64, beta: f64) -> C64 {
    C64::from_polar(r.powf(-beta), r.powf(alpha))
}

/// Smooth monotone step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Model symbol with amplitude and phase blended to constants on `|ξ| ≤ 1/4`
/// and equal to the closed form on `|ξ| ≥ 3/4`.
fn model_value(r: f64, alpha: f64, beta: f64) -> C64 {
    let t = smooth_step((r - 0.25) / 0.5);
    if t == 1.0 {
        return model_outer(r, alpha, beta);
    }
    let (amp_out, ph_out) = if r > 0.0 { (r.powf(-beta), r.powf(alpha)) } else { (0.0, 0.0) };
    let amp = (1.0 - t) + t * amp_out;
    let phase = (1.0 - t) + t * ph_out;
    C64::from_polar(amp, phase)
}

/// Symbol values at every grid frequency, FFT order.
pub fn eval_symbol(spec: &MultiplierSpec, grid: &GridSpec) -> Result<Vec<C64>> {
    spec.validate(grid)?;
    if let Some(t) = &spec.table {
        return Ok(t.clone());
    }
    Ok((0..grid.total()).map(|q| spec.value_at(grid.freq_vec(q), grid).expect("closed-form kind")).collect())
}

pub fn apply_symbol(f: &SampledField, symbol: &[C64]) -> Result<SampledField> {
    if symbol.len() != f.grid.total() {
        return Err(Error::GridMismatch(format!("symbol of {} values for {} samples", symbol.len(), f.grid.total())));
    }
    let tr = Transform::new(f.grid);
    let mut spec = tr.forward(&f.values);
    spec.iter_mut().zip(symbol).for_each(|(v, m)| *v *= m);
    Ok(SampledField { grid: f.grid, values: tr.inverse(&spec) })
}

/// `T_m f = F^{−1}(m·F f)`.
pub fn apply_multiplier(f: &SampledField, spec: &MultiplierSpec) -> Result<SampledField> {
    apply_symbol(f, &eval_symbol(spec, &f.grid)?)
}

// ---------------------------------------------------------------------------
// Derivative conditions

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Per derivative order `|γ|`, the sup of the weighted derivative.
    pub max_ratio_per_order: Vec<f64>,
    /// Per dyadic shell `[2^s, 2^{s+1})`: lower edge and per-order sup.
    pub per_shell: Vec<(f64, Vec<f64>)>,
    pub threshold: f64,
    pub pass: bool,
    /// `(α, β)` the ratios are measured against.
    pub alpha: f64,
    pub beta: f64,
}

/// Multi-indices of order `k` in dimension `d`.
fn multi_indices(d: usize, k: usize) -> Vec<[usize; 2]> {
    if d == 1 {
        vec![[k, 0]]
    } else {
        (0..=k).map(|a| [a, k - a]).collect()
    }
}

/// `D^γ m` by iterated central differences with one-cell step, periodic.
fn derivative(values: &[C64], grid: &GridSpec, gamma: [usize; 2]) -> Vec<C64> {
    let n = grid.n;
    let h = grid.dxi();
    let mut cur = values.to_vec();
    for (axis, &count) in gamma.iter().enumerate().take(grid.d) {
        for _ in 0..count {
            let mut next = vec![C64::new(0.0, 0.0); cur.len()];
            for (flat, slot) in next.iter_mut().enumerate() {
                let [a, b] = grid.unflatten(flat);
                let (plus, minus) = if axis == 0 {
                    (grid.flatten([(a + 1) % n, b]), grid.flatten([(a + n - 1) % n, b]))
                } else {
                    (grid.flatten([a, (b + 1) % n]), grid.flatten([a, (b + n - 1) % n]))
                };
                *slot = (cur[plus] - cur[minus]) / (2.0 * h);
            }
            cur = next;
        }
    }
    cur
}

/// Pointwise condition measured against the symbol's own `(α, β)`.
pub fn check_pointwise_condition(spec: &MultiplierSpec, grid: &GridSpec, gamma_max: usize, threshold: f64) -> Result<ConditionReport> {
    check_pointwise_condition_with(spec, grid, gamma_max, threshold, spec.alpha_inf, spec.beta_inf)
}

/// `sup |D^γ m(ξ)|·|ξ|^{β−(α−1)|γ|}` over `2 ≤ |ξ| ≤ Nyquist/2`, per order.
pub fn check_pointwise_condition_with(
    spec: &MultiplierSpec,
    grid: &GridSpec,
    gamma_max: usize,
    threshold: f64,
    alpha: f64,
    beta: f64,
) -> Result<ConditionReport> {
    if gamma_max > 4 {
        return Err(Error::Invalid(format!("gamma_max must be at most 4, got {gamma_max}")));
    }
    let values = eval_symbol(spec, grid)?;
    let top = grid.nyquist() / 2.0;
    let shells = (top.log2().floor() as i32).max(1) as usize;
    let mut per_order = vec![0.0f64; gamma_max + 1];
    let mut per_shell: Vec<(f64, Vec<f64>)> = (1..shells).map(|s| (2f64.powi(s as i32), vec![0.0; gamma_max + 1])).collect();
    for k in 0..=gamma_max {
        for gamma in multi_indices(grid.d, k) {
            let dm = derivative(&values, grid, gamma);
            for (q, v) in dm.iter().enumerate() {
                let xi = grid.freq_vec(q);
                let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                if !(2.0..=top).contains(&r) {
                    continue;
                }
                let ratio = v.norm() * r.powf(beta - (alpha - 1.0) * k as f64);
                per_order[k] = per_order[k].max(ratio);
                let s = r.log2().floor() as usize;
                if s >= 1 && s < shells {
                    let e = &mut per_shell[s - 1].1[k];
                    *e = e.max(ratio);
                }
            }
        }
    }
    let pass = per_order.iter().all(|v| *v <= threshold);
    Ok(ConditionReport { max_ratio_per_order: per_order, per_shell, threshold, pass, alpha, beta })
}

/// Per-block values of the averaged condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AveragedBlock {
    pub center: Vec<f64>,
    pub radius: f64,
    pub distance_to_origin: f64,
    /// Per order: weighted root-mean-square derivative over the block.
    pub values: Vec<f64>,
    /// Per order: sup of `|D^γ m|` over the block's grid points, times the same weight.
    pub block_sup: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AveragedReport {
    pub report: ConditionReport,
    pub blocks: Vec<AveragedBlock>,
}

/// `dist(B,0)^{β+(1−α)|γ|}·(mean_B |D^γ m|²)^{1/2}` over the lattice's
/// corona blocks, sup per order.
pub fn check_averaged_condition(
    spec: &MultiplierSpec,
    lattice: &SubdyadicLattice,
    gamma_max: usize,
    threshold: f64,
) -> Result<AveragedReport> {
    if gamma_max > 4 {
        return Err(Error::Invalid(format!("gamma_max must be at most 4, got {gamma_max}")));
    }
    let grid = lattice.grid;
    let values = eval_symbol(spec, &grid)?;
    let (alpha, beta) = (spec.alpha_inf, spec.beta_inf);
    let derivs: Vec<Vec<Vec<C64>>> = (0..=gamma_max)
        .map(|k| multi_indices(grid.d, k).into_iter().map(|g| derivative(&values, &grid, g)).collect())
        .collect();
    let mut per_order = vec![0.0f64; gamma_max + 1];
    let mut blocks = Vec::new();
    let cr = lattice.params.block_constant * lattice.params.rho;
    for c in lattice.centers.iter().filter(|c| c.corona >= 0) {
        let radius = cr * c.scale;
        let dist = (c.freq_norm() - radius * (grid.d as f64).sqrt()).max(0.0);
        if dist <= 0.0 {
            continue;
        }
        let members: Vec<usize> = (0..grid.total())
            .filter(|&q| {
                let v = grid.freq_vec(q);
                (0..grid.d).all(|a| (v[a] - c.xi[a]).abs() <= radius)
            })
            .collect();
        let mut vals = vec![0.0; gamma_max + 1];
        let mut sups = vec![0.0; gamma_max + 1];
        for k in 0..=gamma_max {
            let w = dist.powf(beta + (1.0 - alpha) * k as f64);
            for dm in &derivs[k] {
                let mean = members.iter().map(|&q| dm[q].norm_sqr()).sum::<f64>() / members.len() as f64;
                let sup = members.iter().map(|&q| dm[q].norm()).fold(0.0, f64::max);
                vals[k] = f64::max(vals[k], w * mean.sqrt());
                sups[k] = f64::max(sups[k], w * sup);
            }
            per_order[k] = per_order[k].max(vals[k]);
        }
        blocks.push(AveragedBlock {
            center: c.xi[..grid.d].to_vec(),
            radius,
            distance_to_origin: dist,
            values: vals,
            block_sup: sups,
        });
    }
    let pass = per_order.iter().all(|v| *v <= threshold);
    Ok(AveragedReport {
        report: ConditionReport { max_ratio_per_order: per_order, per_shell: Vec::new(), threshold, pass, alpha, beta },
        blocks,
    })
}

// ---------------------------------------------------------------------------
// Lattice-level diagnostics

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OscillationRow {
    pub corona: i32,
    /// `sup_{ξ∈B} |m(ξ) − m(ξ_k)|`, maximized over the corona's centers.
    pub oscillation: f64,
    /// `|ξ_k|^{−β₀}` at the maximizing center.
    pub bound: f64,
    /// Largest oscillation/bound ratio among the corona's centers.
    pub ratio: f64,
}

/// Oscillation of `m` over each lattice block with `|ξ_k| ≥ 1`, using 4×
/// oversampling of the frequency grid for closed-form symbols.
pub fn local_oscillation(spec: &MultiplierSpec, lattice: &SubdyadicLattice) -> Result<Vec<OscillationRow>> {
    let grid = lattice.grid;
    let table = eval_symbol(spec, &grid)?;
    let cr = lattice.params.block_constant * lattice.params.rho;
    let beta0 = spec.beta_inf;
    let mut rows: std::collections::BTreeMap<i32, OscillationRow> = Default::default();
    for c in lattice.centers.iter().filter(|c| c.corona >= 0 && c.freq_norm() >= 1.0) {
        let radius = cr * c.scale;
        let at = |xi: [f64; 2]| -> C64 {
            spec.value_at(xi, &grid).unwrap_or_else(|| {
                let idx = [(xi[0] / grid.dxi()).round() as i64, (xi[1] / grid.dxi()).round() as i64];
                let slot = if grid.d == 1 { grid.freq_slot(idx[0]) } else { grid.freq_slot(idx[0]) * grid.n + grid.freq_slot(idx[1]) };
                table[slot]
            })
        };
        let m0 = at(c.xi);
        let step = if spec.table.is_some() { grid.dxi() } else { grid.dxi() / 4.0 };
        let k = (radius / step).floor() as i64;
        let span2 = if grid.d == 2 { k } else { 0 };
        let mut osc: f64 = 0.0;
        for a in -k..=k {
            for b in -span2..=span2 {
                let xi = [c.xi[0] + a as f64 * step, c.xi[1] + b as f64 * step];
                osc = osc.max((at(xi) - m0).norm());
            }
        }
        let bound = c.freq_norm().powf(-beta0);
        let ratio = osc / bound;
        let row = rows.entry(c.corona).or_insert(OscillationRow { corona: c.corona, oscillation: 0.0, bound, ratio: 0.0 });
        if ratio > row.ratio {
            *row = OscillationRow { corona: c.corona, oscillation: osc, bound, ratio };
        }
    }
    Ok(rows.into_values().collect())
}

/// `G^m[w′,w] = ⟨T_m ψ_w, ψ_{w′}⟩` and the decay profile of the matrix with
/// column `w` divided by `Q_w = |m(ξ_w)| + max(|ξ_w|, 1)^{−β₀}`.
pub fn multiplier_matrix<'a>(spec: &MultiplierSpec, frame: &Frame<'a>, cap: usize) -> Result<(LocalizedMatrix<'a>, DecayProfile)> {
    if frame.len() > cap {
        return Err(Error::TooLarge { nodes: frame.len(), cap });
    }
    let grid = frame.grid();
    let symbol = eval_symbol(spec, &grid)?;
    let p = pair_matrix(frame, frame, Some(&symbol))?;
    let gm = p.transpose();
    let lattice = frame.lattice;
    let q: Vec<f64> = (0..lattice.len())
        .map(|w| {
            let c = &lattice.centers[lattice.nodes[w].center];
            let m = spec.value_at(c.xi, &grid).unwrap_or_else(|| {
                let slot = if grid.d == 1 {
                    grid.freq_slot(c.index[0])
                } else {
                    grid.freq_slot(c.index[0]) * grid.n + grid.freq_slot(c.index[1])
                };
                symbol[slot]
            });
            m.norm() + c.freq_norm().max(1.0).powf(-spec.beta_inf)
        })
        .collect();
    let normalized = CMatrix::from_fn(gm.n, |i, j| gm.get(i, j) / q[j]);
    let profile = LocalizedMatrix::new(lattice, normalized)?.fit_decay()?;
    Ok((LocalizedMatrix::new(lattice, gm)?, profile))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub beta: f64,
    pub beta0: f64,
    pub trials: usize,
    pub sup_ratio: f64,
    pub ratios: Vec<f64>,
}

/// Ratio `‖V(T_m f)‖_{M^{2,2}_{α,β}} / ‖V f‖_{M^{2,2}_{α,β−β₀}}` for one signal.
pub fn boundedness_ratio(frame: &Frame, symbol: &[C64], f: &SampledField, beta: f64, beta0: f64) -> Result<f64> {
    let tf = apply_symbol(f, symbol)?;
    let num = mod_norm(frame.lattice, &frame.analyze(&tf)?, &ModNormSpec::new(2.0, 2.0, beta)?)?;
    let den = mod_norm(frame.lattice, &frame.analyze(f)?, &ModNormSpec::new(2.0, 2.0, beta - beta0)?)?;
    Ok(num / den)
}

/// Sup of [`boundedness_ratio`] over random band-limited signals with
/// spectrum in `[2, Nyquist/4]`.
pub fn boundedness_experiment(
    spec: &MultiplierSpec,
    frame: &Frame,
    beta: f64,
    beta0: f64,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BoundednessReport> {
    if trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    let grid = frame.grid();
    let symbol = eval_symbol(spec, &grid)?;
    let mut ratios = Vec::with_capacity(trials);
    for _ in 0..trials {
        let f = random_bandlimited(grid, 2.0, grid.nyquist() / 4.0, rng);
        ratios.push(boundedness_ratio(frame, &symbol, &f, beta, beta0)?);
    }
    let sup_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(BoundednessReport { beta, beta0, trials, sup_ratio, ratios })
}

/// Random signal with spectrum in the corona `2^k ≤ |ξ| < 2^{k+1}`.
pub fn corona_signal(grid: GridSpec, k: i32, rng: &mut ChaCha8Rng) -> SampledField {
    random_bandlimited(grid, 2f64.powi(k), 2f64.powi(k + 1) - 1e-9, rng)
}
