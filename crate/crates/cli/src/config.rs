//! Run configuration: one JSON file whose keys can be overridden by
//! kebab-case flags mirroring the key paths (`grid.n` is `--grid-n`).

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use subdyadic::geometry::AlphaParams;
use subdyadic::window::WindowSpec;
use subdyadic::GridSpec;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    /// Largest node count for which dense matrices are assembled.
    pub max_nodes: usize,
    /// Iteration cap for power iteration and conjugate gradient.
    pub max_iterations: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_nodes: 20000, max_iterations: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub alpha_params: AlphaParams,
    pub window_spec: WindowSpec,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub caps: Caps,
    /// Accepted and recorded; computations run on the calling thread.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridSpec { d: 1, n: 1024, length: 64.0 },
            alpha_params: AlphaParams::default(),
            window_spec: WindowSpec::default(),
            seed: 0,
            output_dir: PathBuf::from("out"),
            caps: Caps::default(),
            threads: 0,
        }
    }
}

/// The part of the configuration that determines the numbers in a report.
/// The output directory is left out so that reports written to different
/// directories compare equal.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub grid: GridSpec,
    pub alpha_params: AlphaParams,
    pub window_spec: WindowSpec,
    pub seed: u64,
    pub caps: Caps,
    pub threads: usize,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON configuration file; missing keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub grid_d: Option<usize>,
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    /// Side length of the torus.
    #[arg(long = "grid-l", global = true)]
    pub grid_l: Option<f64>,
    #[arg(long, global = true)]
    pub alpha_params_alpha: Option<f64>,
    #[arg(long, global = true)]
    pub alpha_params_rho: Option<f64>,
    #[arg(long, global = true)]
    pub alpha_params_block_constant: Option<f64>,
    #[arg(long, global = true)]
    pub window_spec_annulus_inner: Option<f64>,
    #[arg(long, global = true)]
    pub window_spec_annulus_outer: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub caps_max_nodes: Option<usize>,
    #[arg(long, global = true)]
    pub caps_max_iterations: Option<usize>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_owned(), source })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config { path: path.to_owned(), message: e.to_string() })
    }

    /// Reads the configuration file if one is given, then applies the flags.
    pub fn resolve(o: &Overrides) -> Result<Self> {
        let mut c = match &o.config {
            Some(p) => Self::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = &o.$flag { c.$($field).+ = v.clone(); })*
            };
        }
        set! {
            grid_d => grid.d,
            grid_n => grid.n,
            grid_l => grid.length,
            alpha_params_alpha => alpha_params.alpha,
            alpha_params_rho => alpha_params.rho,
            alpha_params_block_constant => alpha_params.block_constant,
            window_spec_annulus_inner => window_spec.annulus_inner,
            window_spec_annulus_outer => window_spec.annulus_outer,
            seed => seed,
            output_dir => output_dir,
            caps_max_nodes => caps.max_nodes,
            caps_max_iterations => caps.max_iterations,
            threads => threads,
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.alpha_params.validate()?;
        self.window_spec.validate(&self.grid)?;
        if self.caps.max_iterations == 0 {
            return Err(CliError::Usage("caps.max_iterations must be positive".into()));
        }
        Ok(())
    }

    pub fn record(&self) -> RunRecord {
        RunRecord {
            grid: self.grid,
            alpha_params: self.alpha_params,
            window_spec: self.window_spec,
            seed: self.seed,
            caps: self.caps,
            threads: self.threads,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"grid": {"d": 1, "n": 512, "L": 32.0}, "seed": 9}"#).unwrap();
        let o = Overrides { config: Some(path), grid_n: Some(256), ..Default::default() };
        let c = RunConfig::resolve(&o).unwrap();
        assert_eq!(c.grid.n, 256);
        assert_eq!(c.grid.length, 32.0);
        assert_eq!(c.seed, 9);
        assert_eq!(c.caps, Caps::default());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"sede": 1}"#).unwrap();
        let e = RunConfig::resolve(&Overrides { config: Some(path), ..Default::default() }).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = RunConfig::resolve(&Overrides { alpha_params_alpha: Some(0.0), ..Default::default() }).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let missing = Overrides { config: Some(dir.path().join("absent.json")), ..Default::default() };
        assert_eq!(RunConfig::resolve(&missing).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn default_round_trips_through_json() {
        let c = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
