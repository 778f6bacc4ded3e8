//! One function per subcommand. Each builds what it needs from the run
//! configuration, writes its JSON and CSV reports, and returns a one-line
//! summary for the terminal.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use subdyadic::frame::{pair_matrix, random_bandlimited, BoundsMethod, Frame, FrameBounds};
use subdyadic::geometry::SubdyadicLattice;
use subdyadic::grid::SampledField;
use subdyadic::io::{read_signal, write_signal};
use subdyadic::jaffard::{dominant_subset, dual_cross_decay, fit_decay_subset, DecayProfile, LocalizedMatrix};
use subdyadic::modspace::{mod_norm, parse_exponent, ModNormSpec};
use subdyadic::multiplier::{
    apply_symbol, boundedness_experiment, boundedness_ratio, check_averaged_condition, check_pointwise_condition_with,
    corona_signal, eval_symbol, local_oscillation, multiplier_matrix, MultiplierSpec, SymbolKind,
};
use subdyadic::signals::{generate, SignalKind};
use subdyadic::wavefront::{invariance_experiment, wf_indicator, PsiDOSpec, WavefrontReport, WfConfig};
use subdyadic::window::{build_window, second_window, Window};

use crate::config::{RunConfig, RunRecord};
use crate::error::{CliError, Result};
use crate::report::{num, Outputs};

/// Conjugate-gradient tolerance for dual solves.
const CG_TOL: f64 = 1e-13;
/// Relative tolerance for the frame-bound eigenvalue estimates.
const BOUNDS_TOL: f64 = 1e-10;

pub struct Ctx {
    pub cfg: RunConfig,
    pub rng: ChaCha8Rng,
    pub out: Outputs,
}

impl Ctx {
    pub fn new(cfg: RunConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let out = Outputs::new(&cfg.output_dir);
        Ctx { cfg, rng, out }
    }

    fn window(&self) -> Result<Window> {
        Ok(build_window(self.cfg.grid, self.cfg.window_spec)?)
    }

    fn lattice(&self) -> Result<SubdyadicLattice> {
        Ok(SubdyadicLattice::build_for_window(self.cfg.grid, self.cfg.alpha_params, self.cfg.window_spec.annulus_outer)?)
    }

    fn record(&self) -> RunRecord {
        self.cfg.record()
    }

    fn bounds(&self, frame: &Frame, method: BoundsMethod) -> Result<FrameBounds> {
        Ok(frame.frame_bounds(BOUNDS_TOL, method, self.cfg.caps.max_iterations)?)
    }

    fn check_cap(&self, nodes: usize) -> Result<()> {
        if nodes > self.cfg.caps.max_nodes {
            return Err(subdyadic::Error::TooLarge { nodes, cap: self.cfg.caps.max_nodes }.into());
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// shared arguments

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Delta,
    Step,
    GaussianBump,
    Chirp,
    RandomBandlimited,
}

/// Where a command gets its input signal: a file or a built-in generator.
#[derive(Debug, Clone, Default, Args)]
pub struct SignalArgs {
    /// Raw little-endian signal file with a `<name>.meta.json` sidecar.
    #[arg(long, conflicts_with = "kind")]
    pub signal: Option<PathBuf>,
    /// Built-in generator.
    #[arg(long, value_enum)]
    pub kind: Option<GenKind>,
    /// Comma-separated point for delta, step and gaussian-bump; defaults to
    /// 15L/32 per axis, the middle of a cell of the default wavefront mesh.
    #[arg(long, value_delimiter = ',')]
    pub center: Option<Vec<f64>>,
    /// Gaussian width.
    #[arg(long, default_value_t = 2.0)]
    pub width: f64,
    /// Dispersion exponent of the chirp; defaults to the lattice α.
    #[arg(long)]
    pub chirp_alpha: Option<f64>,
    /// Lower edge of the random band.
    #[arg(long, default_value_t = 2.0)]
    pub lo: f64,
    /// Upper edge of the random band; defaults to Nyquist/4.
    #[arg(long)]
    pub hi: Option<f64>,
}

impl SignalArgs {
    fn default_center(cfg: &RunConfig) -> Vec<f64> {
        vec![15.0 * cfg.grid.length / 32.0; cfg.grid.d]
    }

    fn signal_kind(&self, cfg: &RunConfig, kind: GenKind) -> SignalKind {
        let center = self.center.clone().unwrap_or_else(|| Self::default_center(cfg));
        match kind {
            GenKind::Delta => SignalKind::Delta { center },
            GenKind::Step => SignalKind::Step { center },
            GenKind::GaussianBump => SignalKind::GaussianBump { center, width: self.width },
            GenKind::Chirp => SignalKind::Chirp { alpha: self.chirp_alpha.unwrap_or(cfg.alpha_params.alpha) },
            GenKind::RandomBandlimited => {
                SignalKind::RandomBandlimited { lo: self.lo, hi: self.hi.unwrap_or(cfg.grid.nyquist() / 4.0) }
            }
        }
    }

    /// Loads or generates the signal; `fallback` is the generator used when
    /// neither a file nor a kind is given. Returns the signal and a label.
    fn load(&self, ctx: &mut Ctx, fallback: GenKind) -> Result<(SampledField, serde_json::Value)> {
        if let Some(path) = &self.signal {
            let f = read_signal(path)?;
            f.grid.check_same(&ctx.cfg.grid)?;
            let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            return Ok((f, json!({ "file": name })));
        }
        let kind = self.signal_kind(&ctx.cfg, self.kind.unwrap_or(fallback));
        let f = generate(ctx.cfg.grid, &kind, &mut ctx.rng)?;
        Ok((f, serde_json::to_value(&kind).expect("signal kinds serialize")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SymbolChoice {
    /// `|ξ|^-β e^{i|ξ|^α}` smoothly extended to the origin.
    Model,
    /// The same symbol cut off below `|ξ|^α = 1`.
    Truncated,
    /// Values read from `--symbol-table`.
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct SymbolArgs {
    #[arg(long, value_enum, default_value_t = SymbolChoice::Model)]
    pub symbol: SymbolChoice,
    /// Phase exponent at infinity; defaults to the lattice α.
    #[arg(long)]
    pub alpha_inf: Option<f64>,
    /// Decay exponent at infinity.
    #[arg(long, default_value_t = 0.0)]
    pub beta_inf: f64,
    /// Complex signal file holding the symbol on the frequency grid, FFT order.
    #[arg(long)]
    pub symbol_table: Option<PathBuf>,
}

impl SymbolArgs {
    fn spec(&self, cfg: &RunConfig) -> Result<MultiplierSpec> {
        let alpha = self.alpha_inf.unwrap_or(cfg.alpha_params.alpha);
        let spec = match self.symbol {
            SymbolChoice::Model => MultiplierSpec::model(alpha, self.beta_inf),
            SymbolChoice::Truncated => {
                MultiplierSpec { kind: SymbolKind::ModelTruncated, ..MultiplierSpec::model(alpha, self.beta_inf) }
            }
            SymbolChoice::Table => {
                let path = self.symbol_table.as_ref().ok_or_else(|| CliError::Usage("--symbol table needs --symbol-table".into()))?;
                let t = read_signal(path)?;
                t.grid.check_same(&cfg.grid)?;
                MultiplierSpec::from_table(t.values, alpha, self.beta_inf)
            }
        };
        spec.validate(&cfg.grid)?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args)]
pub struct WfArgs {
    /// Cells per axis of the cutoff mesh.
    #[arg(long, default_value_t = 16)]
    pub cells: usize,
    /// Cutoff radius as a multiple of the cell width.
    #[arg(long, default_value_t = 0.75)]
    pub cutoff_ratio: f64,
    /// Angular sectors in d=2.
    #[arg(long, default_value_t = 8)]
    pub cone_count: usize,
    #[arg(long, default_value_t = 4.0)]
    pub n_threshold: f64,
    #[arg(long, default_value_t = 4.0)]
    pub r_min: f64,
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub shell_base: f64,
    /// Scan with the second stock window instead of the first.
    #[arg(long)]
    pub second_window: bool,
}

impl WfArgs {
    fn config(&self) -> Result<WfConfig> {
        if self.cells == 0 || self.cone_count < 2 {
            return Err(CliError::Usage("need at least one cell and two cones".into()));
        }
        Ok(WfConfig {
            cells_per_axis: self.cells,
            cutoff_ratio: self.cutoff_ratio,
            cone_count: self.cone_count,
            n_threshold: self.n_threshold,
            r_min: self.r_min,
            shell_base: self.shell_base,
            ..WfConfig::default()
        })
    }

    fn window(&self, cfg: &RunConfig) -> Result<Window> {
        Ok(if self.second_window {
            second_window(cfg.grid, cfg.window_spec)?
        } else {
            build_window(cfg.grid, cfg.window_spec)?
        })
    }
}

fn profile_row(name: &str, p: &DecayProfile) -> Vec<String> {
    vec![
        name.to_owned(),
        num(p.exponent_n),
        num(p.constant_c),
        num(p.fit_residual),
        num(p.violation_fraction),
        p.superpolynomial.to_string(),
    ]
}

const PROFILE_HEADER: [&str; 6] = ["matrix", "N", "C", "residual", "violations", "superpolynomial"];

/// Largest entry per unit shell of the quasi-distance.
fn shell_envelope(samples: &[(f64, f64)]) -> Vec<Vec<String>> {
    let mut shells: std::collections::BTreeMap<u64, (f64, usize)> = Default::default();
    for &(d, v) in samples {
        let e = shells.entry(d.floor() as u64).or_insert((0.0, 0));
        e.0 = e.0.max(v);
        e.1 += 1;
    }
    shells.into_iter().map(|(s, (v, n))| vec![s.to_string(), num(v), n.to_string()]).collect()
}

// ---------------------------------------------------------------------------
// build-lattice

pub fn build_lattice(ctx: &mut Ctx, geometry_only: bool) -> Result<String> {
    let cfg = &ctx.cfg;
    let lattice = if geometry_only {
        SubdyadicLattice::build(cfg.grid, cfg.alpha_params)?
    } else {
        ctx.lattice()?
    };
    let report = lattice.report();
    let uniform = lattice.centers.iter().all(|c| c.scale == 1.0 && c.m == lattice.centers[0].m);
    let nodes = lattice.export();
    ctx.out.json(
        "lattice_report.json",
        &json!({
            "run": ctx.record(),
            "geometry_only": geometry_only,
            "uniform_grid": uniform,
            "report": report,
        }),
    )?;
    ctx.out.json("lattice.json", &nodes)?;
    let rows: Vec<Vec<String>> = nodes
        .iter()
        .map(|n| {
            let mut r = vec![n.k.to_string()];
            r.extend(n.x.iter().map(|v| num(*v)));
            r.extend(n.xi.iter().map(|v| num(*v)));
            r.push(num(n.spatial_radius));
            r.push(num(n.freq_radius));
            r
        })
        .collect();
    let header: Vec<&str> = if cfg.grid.d == 1 {
        vec!["corona", "x", "xi", "spatial_radius", "freq_radius"]
    } else {
        vec!["corona", "x1", "x2", "xi1", "xi2", "spatial_radius", "freq_radius"]
    };
    ctx.out.csv("lattice_nodes.csv", &header, &rows)?;
    Ok(format!(
        "{} nodes, {} frequency centers, overlap bound {}, uncovered {}",
        report.node_count, report.center_count, report.overlap_bound, report.uncovered_frequencies
    ))
}

// ---------------------------------------------------------------------------
// frame-report

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    FullSpectrum,
    PowerIteration,
}

impl From<MethodChoice> for BoundsMethod {
    fn from(m: MethodChoice) -> Self {
        match m {
            MethodChoice::FullSpectrum => BoundsMethod::FullSpectrum,
            MethodChoice::PowerIteration => BoundsMethod::PowerIteration,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FrameArgs {
    #[arg(long, value_enum, default_value_t = MethodChoice::FullSpectrum)]
    pub bounds_method: MethodChoice,
    /// Every n-th dual is solved for the dual-cross decay fit.
    #[arg(long, default_value_t = 20)]
    pub dual_stride: usize,
    #[arg(long)]
    pub skip_dual_decay: bool,
    /// Random band-limited signals for the reconstruction residual.
    #[arg(long, default_value_t = 5)]
    pub signals: usize,
}

#[derive(Serialize)]
struct DualDecay {
    stride: usize,
    profile: DecayProfile,
    inherited_bound: f64,
    meets_inherited_bound: bool,
}

pub fn frame_report(ctx: &mut Ctx, args: &FrameArgs) -> Result<String> {
    let window = ctx.window()?;
    let lattice = ctx.lattice()?;
    let frame = Frame::new(&lattice, &window)?;
    let bounds = ctx.bounds(&frame, args.bounds_method.into())?;
    let max_iter = ctx.cfg.caps.max_iterations;

    // dual reconstruction: f = S^{-1} S f on the band
    let mut residual: f64 = 0.0;
    for _ in 0..args.signals {
        let f = random_bandlimited(ctx.cfg.grid, 0.0, bounds.band_radius, &mut ctx.rng);
        let sf = frame.synthesize_spectrum(&frame.analyze_spectrum(&f.spectrum()));
        let rec = SampledField::from_spectrum(ctx.cfg.grid, &frame.solve_band(&sf, CG_TOL, max_iter)?);
        residual = residual.max(rec.sub(&f).norm() / f.norm());
    }

    ctx.check_cap(frame.len())?;
    let gram = LocalizedMatrix::new(&lattice, frame.gramian(ctx.cfg.caps.max_nodes)?)?;
    let gram_profile = gram.fit_decay()?;
    let c_star = gram.off_diagonal_schur();

    let dual = if args.skip_dual_decay {
        None
    } else {
        let profile = dual_cross_decay(&frame, args.dual_stride, CG_TOL, max_iter)?;
        let inherited_bound = gram_profile.exponent_n - 2.0 * ctx.cfg.grid.d as f64 - 0.5;
        Some(DualDecay {
            stride: args.dual_stride,
            meets_inherited_bound: profile.exponent_n >= inherited_bound,
            inherited_bound,
            profile,
        })
    };

    ctx.out.json(
        "frame_report.json",
        &json!({
            "run": ctx.record(),
            "node_count": frame.len(),
            "bounds": bounds,
            "A": bounds.lower,
            "B": bounds.upper,
            "B_over_A": bounds.ratio(),
            "gram_decay": gram_profile,
            "schur_off_diagonal_C_star": c_star,
            "dual_cross_decay": dual,
            "reconstruction": { "signals": args.signals, "max_relative_residual": residual },
        }),
    )?;
    let mut rows = vec![profile_row("gram", &gram_profile)];
    if let Some(d) = &dual {
        rows.push(profile_row("dual_cross", &d.profile));
    }
    ctx.out.csv("frame_decay.csv", &PROFILE_HEADER, &rows)?;
    ctx.out.csv(
        "frame_bounds.csv",
        &["A", "B", "B_over_A", "band_radius", "C_star", "reconstruction_residual"],
        &[vec![num(bounds.lower), num(bounds.upper), num(bounds.ratio()), num(bounds.band_radius), num(c_star), num(residual)]],
    )?;
    Ok(format!(
        "A = {:.6}, B = {:.6}, B/A = {:.3}, Gram N = {:.3}, C* = {:.3}, residual {:.2e}",
        bounds.lower,
        bounds.upper,
        bounds.ratio(),
        gram_profile.exponent_n,
        c_star,
        residual
    ))
}

// ---------------------------------------------------------------------------
// gram-decay

#[derive(Debug, Clone, Args)]
pub struct GramArgs {
    /// Off-diagonal mass allowed per row of the well-conditioned subblock.
    #[arg(long, default_value_t = 0.5)]
    pub budget: f64,
    /// Largest subblock size.
    #[arg(long, default_value_t = 600)]
    pub subblock_cap: usize,
}

pub fn gram_decay(ctx: &mut Ctx, args: &GramArgs) -> Result<String> {
    let window = ctx.window()?;
    let lattice = ctx.lattice()?;
    let frame = Frame::new(&lattice, &window)?;
    ctx.check_cap(frame.len())?;
    let gram = LocalizedMatrix::new(&lattice, frame.gramian(ctx.cfg.caps.max_nodes)?)?;
    let envelope = gram.fit_decay()?;
    let entrywise = gram.fit_decay_entrywise()?;

    let idx = dominant_subset(&gram, args.budget, args.subblock_cap);
    let sub = gram.submatrix(&idx);
    let sub_profile = fit_decay_subset(&lattice, &sub, &idx)?;
    let inv = sub.inverse().ok_or(subdyadic::Error::Singular { sigma_min: 0.0 })?;
    let inv_profile = fit_decay_subset(&lattice, &inv, &idx)?;
    let inverse_bound = sub_profile.exponent_n - 2.0 * ctx.cfg.grid.d as f64 - 0.5;

    let w2 = second_window(ctx.cfg.grid, ctx.cfg.window_spec)?;
    let f2 = Frame::new(&lattice, &w2)?;
    let cross = LocalizedMatrix::new(&lattice, pair_matrix(&frame, &f2, None)?)?.fit_decay()?;

    ctx.out.json(
        "gram_decay.json",
        &json!({
            "run": ctx.record(),
            "node_count": frame.len(),
            "gram": envelope,
            "gram_entrywise": entrywise,
            "schur_off_diagonal_C_star": gram.off_diagonal_schur(),
            "subblock": {
                "size": idx.len(),
                "budget": args.budget,
                "decay": sub_profile,
                "inverse_decay": inv_profile,
                "inverse_bound": inverse_bound,
                "meets_inverse_bound": inv_profile.exponent_n >= inverse_bound,
            },
            "cross_gram_second_window": cross,
        }),
    )?;
    ctx.out.csv(
        "gram_decay.csv",
        &PROFILE_HEADER,
        &[
            profile_row("gram", &envelope),
            profile_row("gram_entrywise", &entrywise),
            profile_row("subblock", &sub_profile),
            profile_row("subblock_inverse", &inv_profile),
            profile_row("cross_gram", &cross),
        ],
    )?;
    ctx.out.csv("gram_envelope.csv", &["shell", "max_abs_entry", "entries"], &shell_envelope(&gram.decay_samples()))?;
    Ok(format!(
        "Gram N = {:.3} (violations {:.3}%), subblock N = {:.3}, inverse N = {:.3}, cross-Gram N = {:.3}",
        envelope.exponent_n,
        100.0 * envelope.violation_fraction,
        sub_profile.exponent_n,
        inv_profile.exponent_n,
        cross.exponent_n
    ))
}

// ---------------------------------------------------------------------------
// modnorm

#[derive(Debug, Clone, Args)]
pub struct ModNormArgs {
    /// Spatial exponent, a number ≥ 1 or `inf`.
    #[arg(long, value_parser = parse_exponent, default_value = "2")]
    pub p: f64,
    /// Frequency exponent, a number ≥ 1 or `inf`.
    #[arg(long, value_parser = parse_exponent, default_value = "2")]
    pub q: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub beta: f64,
    #[command(flatten)]
    pub signal: SignalArgs,
}

pub fn modnorm(ctx: &mut Ctx, args: &ModNormArgs) -> Result<String> {
    let spec = ModNormSpec::new(args.p, args.q, args.beta)?;
    let (f, label) = args.signal.load(ctx, GenKind::RandomBandlimited)?;
    let window = ctx.window()?;
    let lattice = ctx.lattice()?;
    let frame = Frame::new(&lattice, &window)?;
    let coeffs = frame.analyze(&f)?;
    let value = mod_norm(&lattice, &coeffs, &spec)?;
    let bounds = ctx.bounds(&frame, BoundsMethod::PowerIteration)?;
    let norm = f.norm();
    let normalized = if norm > 0.0 { value / norm } else { 0.0 };
    let in_bracket = normalized >= bounds.lower.sqrt() * (1.0 - 1e-10) && normalized <= bounds.upper.sqrt() * (1.0 + 1e-10);
    ctx.out.json(
        "modnorm.json",
        &json!({
            "run": ctx.record(),
            "signal": label,
            "spec": spec,
            "value": value,
            "signal_l2_norm": norm,
            "value_over_l2_norm": normalized,
            "sqrt_A": bounds.lower.sqrt(),
            "sqrt_B": bounds.upper.sqrt(),
            "within_frame_bracket": in_bracket,
        }),
    )?;
    ctx.out.csv(
        "modnorm.csv",
        &["p", "q", "beta", "value", "l2_norm", "ratio", "sqrt_A", "sqrt_B"],
        &[vec![
            num(args.p),
            num(args.q),
            num(args.beta),
            num(value),
            num(norm),
            num(normalized),
            num(bounds.lower.sqrt()),
            num(bounds.upper.sqrt()),
        ]],
    )?;
    Ok(format!("M^{{{},{}}}_{{{}}} norm {:.6} (L2 norm {:.6})", args.p, args.q, args.beta, value, norm))
}

// ---------------------------------------------------------------------------
// multiplier

#[derive(Debug, Clone, Args)]
pub struct MultiplierArgs {
    #[command(flatten)]
    pub symbol: SymbolArgs,
    /// Weight exponent of the target modulation space.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub beta: f64,
    /// Random signals in the boundedness experiment.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Highest corona used for the single-corona weight-shift comparison.
    #[arg(long, default_value_t = 4)]
    pub max_corona: i32,
    /// Also write `T_m f` to this signal file.
    #[arg(long)]
    pub output_signal: Option<PathBuf>,
    #[command(flatten)]
    pub signal: SignalArgs,
}

pub fn multiplier(ctx: &mut Ctx, args: &MultiplierArgs) -> Result<String> {
    let spec = args.symbol.spec(&ctx.cfg)?;
    let grid = ctx.cfg.grid;
    let symbol = eval_symbol(&spec, &grid)?;
    let (f, label) = args.signal.load(ctx, GenKind::RandomBandlimited)?;
    let tf = apply_symbol(&f, &symbol)?;
    let energy_ratio = tf.norm() / f.norm();
    if let Some(p) = &args.output_signal {
        write_signal(p, &tf, Some("multiplier_output"))?;
    }

    let window = ctx.window()?;
    let lattice = ctx.lattice()?;
    let frame = Frame::new(&lattice, &window)?;
    let bounds = ctx.bounds(&frame, BoundsMethod::PowerIteration)?;
    let bracket = 10.0 * bounds.ratio().sqrt();
    let beta0 = spec.beta_inf;
    let experiment = boundedness_experiment(&spec, &frame, args.beta, beta0, args.trials, &mut ctx.rng)?;

    // single-corona signals: the shifted ratio stays bounded, the reciprocal
    // of the unshifted ratio grows like |ξ_k|^β₀
    let mut corona_rows = Vec::new();
    for k in 1..=args.max_corona {
        if 2f64.powi(k + 1) > grid.nyquist() / 2.0 {
            break;
        }
        let (mut shifted, mut unshifted) = (0.0f64, 0.0f64);
        for _ in 0..5 {
            let g = corona_signal(grid, k, &mut ctx.rng);
            shifted = shifted.max(boundedness_ratio(&frame, &symbol, &g, args.beta, beta0)?);
            unshifted = unshifted.max(1.0 / boundedness_ratio(&frame, &symbol, &g, args.beta, 0.0)?);
        }
        corona_rows.push((k, shifted, unshifted));
    }
    let oscillation = local_oscillation(&spec, &lattice)?;
    let ratios: Vec<f64> = oscillation.iter().map(|r| r.ratio).collect();
    let osc_max = ratios.iter().cloned().fold(0.0, f64::max);
    let osc_min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);

    let matrix = if frame.len() <= ctx.cfg.caps.max_nodes {
        Some(multiplier_matrix(&spec, &frame, ctx.cfg.caps.max_nodes)?.1)
    } else {
        None
    };

    ctx.out.json(
        "multiplier.json",
        &json!({
            "run": ctx.record(),
            "symbol": { "kind": spec.kind, "alpha_inf": spec.alpha_inf, "beta_inf": spec.beta_inf },
            "signal": label,
            "energy_ratio": energy_ratio,
            "A": bounds.lower,
            "B": bounds.upper,
            "bracket": bracket,
            "boundedness": {
                "beta": experiment.beta,
                "beta0": experiment.beta0,
                "trials": experiment.trials,
                "sup_ratio": experiment.sup_ratio,
                "within_bracket": experiment.sup_ratio <= bracket,
            },
            "corona_growth": corona_rows.iter().map(|(k, s, u)| json!({
                "corona": k, "shifted_ratio": s, "unshifted_inverse_ratio": u
            })).collect::<Vec<_>>(),
            "local_oscillation": {
                "rows": oscillation,
                "max_ratio": osc_max,
                "spread": osc_max / osc_min,
            },
            "normalized_matrix_decay": matrix,
        }),
    )?;
    let trials: Vec<Vec<String>> = experiment.ratios.iter().enumerate().map(|(i, r)| vec![i.to_string(), num(*r)]).collect();
    ctx.out.csv("boundedness_trials.csv", &["trial", "ratio"], &trials)?;
    let rows: Vec<Vec<String>> =
        oscillation.iter().map(|r| vec![r.corona.to_string(), num(r.oscillation), num(r.bound), num(r.ratio)]).collect();
    ctx.out.csv("oscillation.csv", &["corona", "oscillation", "bound", "ratio"], &rows)?;
    let rows: Vec<Vec<String>> = corona_rows.iter().map(|(k, s, u)| vec![k.to_string(), num(*s), num(*u)]).collect();
    ctx.out.csv("corona_growth.csv", &["corona", "shifted_ratio", "unshifted_inverse_ratio"], &rows)?;
    Ok(format!(
        "energy ratio {:.15}, sup boundedness ratio {:.4} (bracket {:.4}), oscillation spread {:.3}",
        energy_ratio,
        experiment.sup_ratio,
        bracket,
        osc_max / osc_min
    ))
}

// ---------------------------------------------------------------------------
// miyachi-check

#[derive(Debug, Clone, Args)]
pub struct MiyachiArgs {
    #[command(flatten)]
    pub symbol: SymbolArgs,
    #[arg(long, default_value_t = 4)]
    pub gamma_max: usize,
    #[arg(long, default_value_t = 100.0)]
    pub threshold: f64,
    /// Measure against this β instead of the symbol's own.
    #[arg(long, allow_hyphen_values = true)]
    pub check_beta: Option<f64>,
    /// Measure against this α instead of the symbol's own.
    #[arg(long)]
    pub check_alpha: Option<f64>,
}

pub fn miyachi_check(ctx: &mut Ctx, args: &MiyachiArgs) -> Result<String> {
    let spec = args.symbol.spec(&ctx.cfg)?;
    let alpha = args.check_alpha.unwrap_or(spec.alpha_inf);
    let beta = args.check_beta.unwrap_or(spec.beta_inf);
    let grid = ctx.cfg.grid;
    let pointwise = check_pointwise_condition_with(&spec, &grid, args.gamma_max, args.threshold, alpha, beta)?;
    let checked = MultiplierSpec { alpha_inf: alpha, beta_inf: beta, ..spec.clone() };
    let lattice = ctx.lattice()?;
    let averaged = if checked == spec {
        Some(check_averaged_condition(&spec, &lattice, args.gamma_max, args.threshold)?)
    } else {
        None
    };
    ctx.out.json(
        "miyachi_check.json",
        &json!({
            "run": ctx.record(),
            "symbol": { "kind": spec.kind, "alpha_inf": spec.alpha_inf, "beta_inf": spec.beta_inf },
            "pointwise": pointwise,
            "averaged": averaged.as_ref().map(|a| &a.report),
        }),
    )?;
    let mut header = vec!["shell_lo".to_owned()];
    header.extend((0..=args.gamma_max).map(|k| format!("order_{k}")));
    let rows: Vec<Vec<String>> = pointwise
        .per_shell
        .iter()
        .map(|(lo, v)| std::iter::once(num(*lo)).chain(v.iter().map(|x| num(*x))).collect())
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    ctx.out.csv("miyachi_shells.csv", &header, &rows)?;
    if let Some(a) = &averaged {
        let mut bh = vec!["center".to_owned(), "radius".to_owned(), "distance_to_origin".to_owned()];
        bh.extend((0..=args.gamma_max).map(|k| format!("order_{k}")));
        let rows: Vec<Vec<String>> = a
            .blocks
            .iter()
            .map(|b| {
                let mut r = vec![num(b.center[0]), num(b.radius), num(b.distance_to_origin)];
                r.extend(b.values.iter().map(|x| num(*x)));
                r
            })
            .collect();
        let bh: Vec<&str> = bh.iter().map(String::as_str).collect();
        ctx.out.csv("miyachi_blocks.csv", &bh, &rows)?;
    }
    let verdict = |p: bool| if p { "pass" } else { "fail" };
    Ok(format!(
        "pointwise {} (max ratios {:?}), averaged {}",
        verdict(pointwise.pass),
        pointwise.max_ratio_per_order.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
        averaged.as_ref().map_or("skipped", |a| verdict(a.report.pass))
    ))
}

// ---------------------------------------------------------------------------
// wavefront and psido-invariance

fn scan_rows(report: &WavefrontReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (cell, table) in &report.tables {
        let label = cell.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
        for e in &table.entries {
            rows.push(vec![
                label.clone(),
                e.cone.to_string(),
                e.shell.to_string(),
                num(e.shell_lo),
                num(e.shell_hi),
                num(e.xi_at_max),
                num(e.value),
            ]);
        }
    }
    rows
}

const SCAN_HEADER: [&str; 7] = ["x_cell", "cone", "shell", "shell_lo", "shell_hi", "xi_at_max", "value"];

#[derive(Debug, Clone, Args)]
pub struct WavefrontArgs {
    #[command(flatten)]
    pub wf: WfArgs,
    #[command(flatten)]
    pub signal: SignalArgs,
}

pub fn wavefront(ctx: &mut Ctx, args: &WavefrontArgs) -> Result<String> {
    let cfg = args.wf.config()?;
    let window = args.wf.window(&ctx.cfg)?;
    let (u, label) = args.signal.load(ctx, GenKind::Delta)?;
    let report = wf_indicator(&u, &window, ctx.cfg.alpha_params.alpha, &cfg)?;
    ctx.out.json("wavefront.json", &report.entries)?;
    ctx.out.json(
        "wavefront_summary.json",
        &json!({
            "run": ctx.record(),
            "signal": label,
            "scan": cfg,
            "second_window": args.wf.second_window,
            "singular_set": report.singular_set(),
        }),
    )?;
    ctx.out.csv("wavefront_scan.csv", &SCAN_HEADER, &scan_rows(&report))?;
    Ok(format!("singular cells {:?}, {} singular (cell, cone) pairs", report.singular_cells(), report.singular_set().len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PsiDoChoice {
    Identity,
    Elliptic,
    SpatiallyVanishing,
}

#[derive(Debug, Clone, Args)]
pub struct PsiDoArgs {
    #[arg(long, value_enum, default_value_t = PsiDoChoice::Elliptic)]
    pub operator: PsiDoChoice,
    /// Point where the spatially vanishing symbol is zero; defaults to the
    /// signal center.
    #[arg(long, value_delimiter = ',')]
    pub x0: Option<Vec<f64>>,
    #[command(flatten)]
    pub wf: WfArgs,
    #[command(flatten)]
    pub signal: SignalArgs,
}

pub fn psido_invariance(ctx: &mut Ctx, args: &PsiDoArgs) -> Result<String> {
    let grid = ctx.cfg.grid;
    let cfg = args.wf.config()?;
    let window = args.wf.window(&ctx.cfg)?;
    let (u, label) = args.signal.load(ctx, GenKind::Delta)?;
    let spec = match args.operator {
        PsiDoChoice::Identity => PsiDOSpec::identity(grid),
        PsiDoChoice::Elliptic => PsiDOSpec::elliptic(grid),
        PsiDoChoice::SpatiallyVanishing => {
            let x0 = args
                .x0
                .clone()
                .or_else(|| args.signal.center.clone())
                .unwrap_or_else(|| SignalArgs::default_center(&ctx.cfg));
            PsiDOSpec::spatially_vanishing(grid, &x0)?
        }
    };
    let r = invariance_experiment(&u, &spec, &window, ctx.cfg.alpha_params.alpha, &cfg)?;
    let equal = r.contained && r.reverse_contained;
    ctx.out.json(
        "psido_invariance.json",
        &json!({
            "run": ctx.record(),
            "signal": label,
            "operator": format!("{:?}", args.operator),
            "symbol_bounds": r.bounds,
            "singular_set_u": r.report_u.singular_set(),
            "singular_set_au": r.report_au.singular_set(),
            "contained": r.contained,
            "reverse_contained": r.reverse_contained,
            "entries_u": r.report_u.entries,
            "entries_au": r.report_au.entries,
        }),
    )?;
    let mut rows = Vec::new();
    for (which, rep) in [("u", &r.report_u), ("Au", &r.report_au)] {
        for e in &rep.entries {
            let cell = e.x_cell.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
            rows.push(vec![which.to_owned(), cell, e.cone_index.to_string(), num(e.exponent), e.singular.to_string()]);
        }
    }
    ctx.out.csv("psido_invariance.csv", &["field", "x_cell", "cone", "exponent", "singular"], &rows)?;
    Ok(format!("containment {}, reverse containment {}, two-way {}", r.contained, r.reverse_contained, equal))
}

// ---------------------------------------------------------------------------
// gen-signal

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub signal: SignalArgs,
    /// Output file; defaults to `<output_dir>/<kind>.bin`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn gen_signal(ctx: &mut Ctx, args: &GenArgs) -> Result<String> {
    let kind = args.signal.kind.ok_or_else(|| CliError::Usage("gen-signal needs --kind".into()))?;
    let sk = args.signal.signal_kind(&ctx.cfg, kind);
    let f = generate(ctx.cfg.grid, &sk, &mut ctx.rng)?;
    let path = args.out.clone().unwrap_or_else(|| ctx.cfg.output_dir.join(format!("{}.bin", sk.name())));
    write_signal(&path, &f, Some(sk.name()))?;
    Ok(format!("{} samples written to {}", f.values.len(), path.display()))
}
