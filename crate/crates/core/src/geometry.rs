//! Subdyadic phase-space geometry: the quasi-distance, boxes adapted to the
//! dispersion exponent, and the corona lattice with its covering diagnostics.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{torus_diff, GridSpec};

/// Corona value used for nodes of the low-frequency patch.
pub const LOW_PATCH: i32 = -1;

/// A point `(x, ξ)` of phase space over the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Self {
        PhasePoint { x, xi }
    }

    /// Same point with spatial coordinates wrapped into `[0, L)`.
    pub fn wrapped(&self, length: f64) -> Self {
        PhasePoint { x: self.x.iter().map(|v| v.rem_euclid(length)).collect(), xi: self.xi.clone() }
    }

    pub fn freq_norm(&self) -> f64 {
        self.xi.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Dispersion exponent, block scale and block constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaParams {
    pub alpha: f64,
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default = "one")]
    pub block_constant: f64,
}

fn one() -> f64 {
    1.0
}

impl AlphaParams {
    pub fn new(alpha: f64, rho: f64, block_constant: f64) -> Result<Self> {
        let p = AlphaParams { alpha, rho, block_constant };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("rho", self.rho), ("block_constant", self.block_constant)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Frequency dilation `|ξ|^{1−α}` used for packets and blocks at `|ξ|`.
    pub fn scale_at(&self, freq_norm: f64) -> f64 {
        freq_norm.powf(1.0 - self.alpha)
    }
}

impl Default for AlphaParams {
    fn default() -> Self {
        AlphaParams { alpha: 0.5, rho: 1.0, block_constant: 1.0 }
    }
}

// ---------------------------------------------------------------------------
// Quasi-distance and blocks

fn euclid_torus(a: &[f64], b: &[f64], length: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| {
            let t = if length.is_finite() { torus_diff(*u, *v, length) } else { (u - v).abs() };
            t * t
        })
        .sum::<f64>()
        .sqrt()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// `r^{1−α}|x−y| + r^{α−1}|ξ−η|` with `r = 1 + min(|ξ|, |η|)`.
///
/// Spatial differences use the minimal image on a torus of side `length`;
/// pass `f64::INFINITY` for the flat space.
pub fn quasi_distance(w: &PhasePoint, z: &PhasePoint, alpha: f64, length: f64) -> f64 {
    let r = 1.0 + w.freq_norm().min(z.freq_norm());
    r.powf(1.0 - alpha) * euclid_torus(&w.x, &z.x, length) + r.powf(alpha - 1.0) * euclid(&w.xi, &z.xi)
}

/// Box `Q_α(x, ξ; ρ)` with per-coordinate radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub center: PhasePoint,
    pub spatial_radius: f64,
    pub freq_radius: f64,
}

impl Block {
    /// Closed per-coordinate membership with torus wrapping in space.
    pub fn contains(&self, p: &PhasePoint, length: f64) -> bool {
        let space = self.center.x.iter().zip(&p.x).all(|(c, v)| {
            let t = if length.is_finite() { torus_diff(*c, *v, length) } else { (c - v).abs() };
            t <= self.spatial_radius
        });
        space && self.center.xi.iter().zip(&p.xi).all(|(c, v)| (c - v).abs() <= self.freq_radius)
    }

    /// Lebesgue measure of the box in `ℝ^{2d}`.
    pub fn volume(&self) -> f64 {
        let d = self.center.dim() as i32;
        (2.0 * self.spatial_radius).powi(d) * (2.0 * self.freq_radius).powi(d)
    }
}

pub fn block_of(center: &PhasePoint, params: &AlphaParams) -> Result<Block> {
    let norm = center.freq_norm();
    if norm == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    Ok(block_with_scale(center.clone(), params, params.scale_at(norm)))
}

fn block_with_scale(center: PhasePoint, params: &AlphaParams, scale: f64) -> Block {
    let c = params.block_constant * params.rho;
    Block { center, spatial_radius: c / scale, freq_radius: c * scale }
}

// ---------------------------------------------------------------------------
// Lattice

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeNode {
    /// Corona index, or [`LOW_PATCH`] for the low-frequency patch.
    pub corona: i32,
    pub spatial_index: Vec<usize>,
    pub point: PhasePoint,
    pub block: Block,
    /// Index into [`SubdyadicLattice::centers`].
    pub center: usize,
}

/// One frequency center with its family of spatial translates.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqCenter {
    pub corona: i32,
    /// Signed frequency-grid indices per axis.
    pub index: [i64; 2],
    pub xi: [f64; 2],
    /// Packet dilation `|ξ|^{1−α}` (1 on the low patch).
    pub scale: f64,
    /// Translates per axis; spatial centers sit at `j·L/m`.
    pub m: usize,
    /// Node index of translate `j` (row-major over axes).
    pub nodes: Vec<usize>,
}

impl FreqCenter {
    pub fn freq_norm(&self) -> f64 {
        (self.xi[0] * self.xi[0] + self.xi[1] * self.xi[1]).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct SubdyadicLattice {
    pub params: AlphaParams,
    pub grid: GridSpec,
    pub nodes: Vec<LatticeNode>,
    pub centers: Vec<FreqCenter>,
    /// Measured maximal block multiplicity over the phase-space sample grid.
    pub overlap_bound: usize,
    /// Largest per-coordinate frequency reached by some block.
    pub covered_band: f64,
    /// Radius of the frequency ball the construction promises to cover.
    pub nominal_radius: f64,
}

/// Exported form of one node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeRecord {
    pub k: i32,
    pub j: Vec<usize>,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub spatial_radius: f64,
    pub freq_radius: f64,
}

/// Covering, overlap and separation statistics of a lattice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeReport {
    pub node_count: usize,
    pub center_count: usize,
    pub corona_count: usize,
    pub overlap_bound: usize,
    pub overlap_per_corona: Vec<(i32, usize)>,
    pub uncovered_frequencies: usize,
    pub covered_band: f64,
    pub nominal_radius: f64,
    pub separation_radius: f64,
    pub separation_bound: usize,
    pub quasi_triangle_constant: f64,
}

struct CenterDraft {
    corona: i32,
    index: [i64; 2],
    scale: f64,
}

impl SubdyadicLattice {
    /// Lattice covering every frequency up to Nyquist.
    pub fn build(grid: GridSpec, params: AlphaParams) -> Result<Self> {
        Self::construct(grid, params, None)
    }

    /// Lattice restricted to centers whose packets for a window with outer
    /// annulus radius `reach` stay inside the frequency grid.
    pub fn build_for_window(grid: GridSpec, params: AlphaParams, reach: f64) -> Result<Self> {
        Self::construct(grid, params, Some(reach))
    }

    fn construct(grid: GridSpec, params: AlphaParams, reach: Option<f64>) -> Result<Self> {
        grid.validate()?;
        params.validate()?;
        let nyq = grid.nyquist();
        if nyq < 2.0 {
            return Err(Error::GridTooCoarse { nyquist: nyq });
        }
        let fits = |xi: [f64; 2], scale: f64| -> bool {
            let top = xi[0].abs().max(xi[1].abs());
            match reach {
                None => top <= nyq + 1e-12,
                Some(c2) => top + c2 * scale <= nyq + 1e-12,
            }
        };

        let dxi = grid.dxi();
        let mut drafts: Vec<CenterDraft> = Vec::new();

        // low-frequency patch
        let lo_step = params.rho;
        let lo_count = (2.0 / lo_step).floor() as i64;
        let mut seen = BTreeSet::new();
        let axis2 = if grid.d == 2 { lo_count } else { 0 };
        for a in -lo_count..=lo_count {
            for b in -axis2..=axis2 {
                let v = [a as f64 * lo_step, b as f64 * lo_step];
                if (v[0] * v[0] + v[1] * v[1]).sqrt() > 2.0 + 1e-12 {
                    continue;
                }
                let idx = [(v[0] / dxi).round() as i64, (v[1] / dxi).round() as i64];
                let xi = [idx[0] as f64 * dxi, idx[1] as f64 * dxi];
                if fits(xi, 1.0) && seen.insert(idx) {
                    drafts.push(CenterDraft { corona: LOW_PATCH, index: idx, scale: 1.0 });
                }
            }
        }

        // coronas
        let mut k = 0i32;
        let mut any_corona = false;
        while 2f64.powi(k) <= nyq {
            let lo = 2f64.powi(k);
            let hi = 2f64.powi(k + 1);
            let step = params.rho * lo.powf(1.0 - params.alpha);
            let mut seen = BTreeSet::new();
            let mut found = Vec::new();
            for raw in corona_points(grid.d, lo, hi, step) {
                if let Some(idx) = snap_into_corona(raw, lo, hi, dxi, grid.d) {
                    let xi = [idx[0] as f64 * dxi, idx[1] as f64 * dxi];
                    let norm = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                    let scale = params.scale_at(norm);
                    if fits(xi, scale) && seen.insert(idx) {
                        found.push(CenterDraft { corona: k, index: idx, scale });
                    }
                }
            }
            if !found.is_empty() {
                any_corona = true;
            }
            drafts.extend(found);
            k += 1;
        }
        if !any_corona {
            return Err(Error::GridTooCoarse { nyquist: nyq });
        }

        Ok(Self::assemble(grid, params, drafts, reach))
    }

    fn assemble(grid: GridSpec, params: AlphaParams, mut drafts: Vec<CenterDraft>, reach: Option<f64>) -> Self {
        let nyq = grid.nyquist();
        drafts.sort_by(|a, b| a.corona.cmp(&b.corona).then(a.index.cmp(&b.index)));
        let dxi = grid.dxi();
        let l = grid.length;
        let cr = params.block_constant * params.rho;

        let mut centers: Vec<FreqCenter> = drafts
            .iter()
            .map(|dr| {
                let step = if dr.corona == LOW_PATCH {
                    params.rho
                } else {
                    params.rho * 2f64.powi(dr.corona).powf(params.alpha - 1.0)
                };
                let m = ((l / step) - 1e-9).ceil().max(1.0) as usize;
                FreqCenter {
                    corona: dr.corona,
                    index: dr.index,
                    xi: [dr.index[0] as f64 * dxi, dr.index[1] as f64 * dxi],
                    scale: dr.scale,
                    m,
                    nodes: Vec::new(),
                }
            })
            .collect();

        // nodes ordered by corona, then spatial index, then frequency center
        let mut nodes = Vec::new();
        let mut start = 0;
        while start < centers.len() {
            let k = centers[start].corona;
            let mut end = start;
            while end < centers.len() && centers[end].corona == k {
                end += 1;
            }
            let m = centers[start].m;
            let translates = m.pow(grid.d as u32);
            for jf in 0..translates {
                let j: Vec<usize> = if grid.d == 1 { vec![jf] } else { vec![jf / m, jf % m] };
                for (ci, c) in centers.iter_mut().enumerate().take(end).skip(start) {
                    let x: Vec<f64> = j.iter().map(|&ja| ja as f64 * l / m as f64).collect();
                    let xi = c.xi[..grid.d].to_vec();
                    let point = PhasePoint::new(x, xi);
                    let block = Block {
                        center: point.clone(),
                        spatial_radius: cr / c.scale,
                        freq_radius: cr * c.scale,
                    };
                    c.nodes.push(nodes.len());
                    nodes.push(LatticeNode { corona: k, spatial_index: j.clone(), point, block, center: ci });
                }
            }
            start = end;
        }

        let covered_band = centers
            .iter()
            .map(|c| c.xi[0].abs().max(c.xi[1].abs()) + cr * c.scale)
            .fold(0.0, f64::max);
        let nominal_radius = match reach {
            None => nyq,
            Some(c2) => {
                // largest r with r + c2 * r^(1-α) <= Nyquist
                let (mut lo, mut hi) = (0.0f64, nyq);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if mid + c2 * params.scale_at(mid.max(1.0)) <= nyq {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        };
        let mut lat =
            SubdyadicLattice { params, grid, nodes, centers, overlap_bound: 0, covered_band, nominal_radius };
        lat.overlap_bound = lat.overlap_scan().0;
        lat
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest `|ξ|` among frequency centers.
    pub fn max_center_freq(&self) -> f64 {
        self.centers.iter().map(|c| c.freq_norm()).fold(0.0, f64::max)
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        quasi_distance(&self.nodes[a].point, &self.nodes[b].point, self.params.alpha, self.grid.length)
    }

    /// Frequency-center norm `|ξ|` of a node.
    pub fn node_freq(&self, w: usize) -> f64 {
        self.centers[self.nodes[w].center].freq_norm()
    }

    pub fn export(&self) -> Vec<NodeRecord> {
        self.nodes
            .iter()
            .map(|n| NodeRecord {
                k: n.corona,
                j: n.spatial_index.clone(),
                x: n.point.x.clone(),
                xi: n.point.xi.clone(),
                spatial_radius: n.block.spatial_radius,
                freq_radius: n.block.freq_radius,
            })
            .collect()
    }

    // -----------------------------------------------------------------------
    // covering diagnostics

    /// Exact number of node blocks containing `p`.
    pub fn overlap_multiplicity(&self, p: &PhasePoint) -> usize {
        let l = self.grid.length;
        let mut total = 0;
        for c in &self.centers {
            let fr = self.params.block_constant * self.params.rho * c.scale;
            let inside = (0..self.grid.d).all(|a| (c.xi[a] - p.xi[a]).abs() <= fr);
            if !inside {
                continue;
            }
            let sr = self.params.block_constant * self.params.rho / c.scale;
            let mut count = 1;
            for a in 0..self.grid.d {
                count *= translates_within(p.x[a], sr, c.m, l);
            }
            total += count;
        }
        total
    }

    /// Maximum multiplicity over the spatial × frequency sample grid, the
    /// same maximum counting only the blocks of each corona, and the number
    /// of frequency samples inside the covered band that no block reaches.
    fn overlap_scan(&self) -> (usize, Vec<(i32, usize)>, usize) {
        let g = self.grid;
        let l = g.length;
        let cr = self.params.block_constant * self.params.rho;
        // per center, per axis: translate counts at every spatial sample
        let positions = g.axis_positions();
        let counts: Vec<Vec<usize>> = self
            .centers
            .iter()
            .map(|c| positions.iter().map(|&x| translates_within(x, cr / c.scale, c.m, l)).collect())
            .collect();
        let coronas: Vec<i32> = self.centers.iter().map(|c| c.corona).collect::<BTreeSet<_>>().into_iter().collect();
        let mut best = 0;
        let mut per_corona = vec![0usize; coronas.len()];
        let mut uncovered = 0;
        let band = self.covered_band;
        let radius = self.nominal_radius.min(g.nyquist());
        let spatial: Vec<[usize; 2]> = if g.d == 1 {
            (0..g.n).map(|a| [a, 0]).collect()
        } else {
            (0..g.n).flat_map(|a| (0..g.n).map(move |b| [a, b])).collect()
        };
        for q in 0..g.total() {
            let xi = g.freq_vec(q);
            let members: Vec<usize> = self
                .centers
                .iter()
                .enumerate()
                .filter(|(_, c)| (0..g.d).all(|a| (c.xi[a] - xi[a]).abs() <= cr * c.scale))
                .map(|(i, _)| i)
                .collect();
            if members.is_empty() {
                let norm = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                if xi[0].abs().max(xi[1].abs()) <= band && norm <= radius {
                    uncovered += 1;
                }
                continue;
            }
            let ks: Vec<usize> = members
                .iter()
                .map(|&c| coronas.binary_search(&self.centers[c].corona).expect("known corona"))
                .collect();
            let mut own = vec![0usize; coronas.len()];
            for x in &spatial {
                own.iter_mut().for_each(|v| *v = 0);
                let mut total = 0;
                for (&c, &k) in members.iter().zip(&ks) {
                    let m = if g.d == 1 { counts[c][x[0]] } else { counts[c][x[0]] * counts[c][x[1]] };
                    own[k] += m;
                    total += m;
                }
                best = best.max(total);
                for (p, o) in per_corona.iter_mut().zip(&own) {
                    *p = (*p).max(*o);
                }
            }
        }
        (best, coronas.into_iter().zip(per_corona).collect(), uncovered)
    }

    /// Frequency samples with `|ξ| ≤ limit` that lie in no block.
    pub fn uncovered_frequencies(&self, limit: f64) -> Vec<[f64; 2]> {
        let g = self.grid;
        let cr = self.params.block_constant * self.params.rho;
        (0..g.total())
            .map(|q| g.freq_vec(q))
            .filter(|xi| (xi[0] * xi[0] + xi[1] * xi[1]).sqrt() <= limit)
            .filter(|xi| {
                !self.centers.iter().any(|c| (0..g.d).all(|a| (c.xi[a] - xi[a]).abs() <= cr * c.scale))
            })
            .collect()
    }

    /// Maximum multiplicity counting only the blocks of each corona.
    pub fn overlap_per_corona(&self) -> Vec<(i32, usize)> {
        self.overlap_scan().1
    }

    /// Largest number of nodes inside a quasi-distance ball of radius `r0`
    /// centered at a node.
    pub fn separation_bound(&self, r0: f64) -> usize {
        let alpha = self.params.alpha;
        // The frequency part of d_α depends only on the two centers, so most
        // center pairs are ruled out before looking at translates.
        let near: Vec<Vec<usize>> = self
            .centers
            .iter()
            .map(|a| {
                self.centers
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| {
                        let r = 1.0 + a.freq_norm().min(b.freq_norm());
                        let df = euclid(&a.xi[..self.grid.d], &b.xi[..self.grid.d]);
                        r.powf(alpha - 1.0) * df <= r0
                    })
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        (0..self.len())
            .map(|a| {
                near[self.nodes[a].center]
                    .iter()
                    .flat_map(|&c| self.centers[c].nodes.iter())
                    .filter(|&&b| self.distance(a, b) <= r0)
                    .count()
            })
            .max()
            .unwrap_or(0)
    }

    /// Node counts per quasi-distance shell `[n·width, (n+1)·width)` around `w`.
    pub fn annulus_counts(&self, w: usize, shell_width: f64) -> Result<Vec<usize>> {
        if !(shell_width > 0.0) {
            return Err(Error::Invalid("shell width must be positive".into()));
        }
        const MAX_SHELLS: f64 = 1e7;
        let dist: Vec<f64> = (0..self.len()).map(|z| self.distance(w, z)).collect();
        let far = dist.iter().copied().fold(0.0, f64::max);
        if far / shell_width >= MAX_SHELLS {
            return Err(Error::Invalid(format!("shell width {shell_width} gives more than {MAX_SHELLS} shells")));
        }
        let mut counts = vec![0usize; (far / shell_width).floor() as usize + 1];
        for d in dist {
            counts[(d / shell_width).floor() as usize] += 1;
        }
        Ok(counts)
    }

    /// Sampled supremum of `d(x,z) / (d(x,y) + d(y,z))` over random node triples.
    pub fn quasi_triangle_constant(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.len();
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let (a, b, c) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
            let direct = self.distance(a, c);
            let via = self.distance(a, b) + self.distance(b, c);
            if via > 0.0 {
                worst = worst.max(direct / via);
            }
        }
        worst
    }

    pub fn report(&self) -> LatticeReport {
        let (overlap, per_corona, uncovered) = self.overlap_scan();
        let coronas: BTreeSet<i32> = self.centers.iter().map(|c| c.corona).filter(|&k| k >= 0).collect();
        LatticeReport {
            node_count: self.len(),
            center_count: self.centers.len(),
            corona_count: coronas.len(),
            overlap_bound: overlap,
            overlap_per_corona: per_corona,
            uncovered_frequencies: uncovered,
            covered_band: self.covered_band,
            nominal_radius: self.nominal_radius,
            separation_radius: self.params.rho,
            separation_bound: self.separation_bound(self.params.rho),
            quasi_triangle_constant: self.quasi_triangle_constant(20000, 7),
        }
    }
}

/// Least-squares slope of log cumulative count against log radius.
pub fn growth_exponent(counts: &[usize], shell_width: f64, shells: std::ops::Range<usize>) -> f64 {
    let mut cum = 0usize;
    let mut pts = Vec::new();
    for (n, c) in counts.iter().enumerate() {
        cum += c;
        if shells.contains(&n) {
            pts.push((((n + 1) as f64 * shell_width).ln(), (cum as f64).ln()));
        }
    }
    crate::stats::slope(&pts)
}

/// Number of translates `j·L/m` within torus distance `r` of `x`.
fn translates_within(x: f64, r: f64, m: usize, l: f64) -> usize {
    let h = l / m as f64;
    let lo = ((x - r) / h).floor() as i64 - 1;
    let hi = ((x + r) / h).ceil() as i64 + 1;
    let mut seen = BTreeSet::new();
    for j in lo..=hi {
        let jj = j.rem_euclid(m as i64);
        if torus_diff(x, jj as f64 * h, l) <= r + 1e-12 {
            seen.insert(jj);
        }
    }
    seen.len()
}

/// Unsnapped corona centers: a grid of spacing `step` anchored at `2^k` in
/// d=1 (both signs) and a square grid of spacing `step` in d=2.
fn corona_points(d: usize, lo: f64, hi: f64, step: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    if d == 1 {
        let mut i = 0;
        loop {
            let v = lo + i as f64 * step;
            if v >= hi - 1e-12 {
                break;
            }
            out.push([v, 0.0]);
            out.push([-v, 0.0]);
            i += 1;
        }
    } else {
        let r = (hi / step).ceil() as i64;
        for a in -r..=r {
            for b in -r..=r {
                let v = [a as f64 * step, b as f64 * step];
                let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
                if norm >= lo && norm < hi {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Snap to the frequency grid; if snapping leaves the corona, take the
/// nearest neighbouring grid point that lies inside it.
fn snap_into_corona(v: [f64; 2], lo: f64, hi: f64, dxi: f64, d: usize) -> Option<[i64; 2]> {
    let base = [(v[0] / dxi).round() as i64, (v[1] / dxi).round() as i64];
    let inside = |idx: [i64; 2]| {
        let n = ((idx[0] as f64 * dxi).powi(2) + (idx[1] as f64 * dxi).powi(2)).sqrt();
        n >= lo && n < hi
    };
    if inside(base) {
        return Some(base);
    }
    let mut best: Option<([i64; 2], f64)> = None;
    let span: i64 = if d == 2 { 1 } else { 0 };
    for da in -1..=1i64 {
        for db in -span..=span {
            let idx = [base[0] + da, base[1] + db];
            if !inside(idx) {
                continue;
            }
            let dist = (idx[0] as f64 * dxi - v[0]).powi(2) + (idx[1] as f64 * dxi - v[1]).powi(2);
            if best.is_none_or(|(_, b)| dist < b) {
                best = Some((idx, dist));
            }
        }
    }
    best.map(|(i, _)| i)
}
