//! Admissible windows: real, unit-norm, with spectrum supported in an annulus.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{torus_diff, GridSpec, SampledField};

/// Radial profile of the window spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `b(t) = exp(−1/(t(1−t)))` on `(0, 1)`.
    SmoothBump,
    /// `b(t)²`, used for the second stock window.
    SmoothBumpSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub annulus_inner: f64,
    pub annulus_outer: f64,
    #[serde(default = "default_profile")]
    pub profile: Profile,
    /// Largest accepted [`Window::decay_ratio`] for the localization check.
    #[serde(default = "default_decay_tolerance")]
    pub decay_tolerance: f64,
}

fn default_profile() -> Profile {
    Profile::SmoothBump
}

fn default_decay_tolerance() -> f64 {
    2e-2
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            annulus_inner: 0.5,
            annulus_outer: 2.0,
            profile: Profile::SmoothBump,
            decay_tolerance: default_decay_tolerance(),
        }
    }
}

impl WindowSpec {
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let (c1, c2) = (self.annulus_inner, self.annulus_outer);
        if !(c1 > 0.0 && c2 > c1 && c2.is_finite()) {
            return Err(Error::Invalid(format!("annulus must satisfy 0 < c1 < c2, got [{c1}, {c2}]")));
        }
        let limit = grid.nyquist() / 4.0;
        if c2 >= limit {
            return Err(Error::AnnulusTooWide { outer: c2, limit });
        }
        Ok(())
    }
}

/// Compactly supported smooth bump on `(0, 1)`.
pub fn bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / (t * (1.0 - t))).exp()
    }
}

/// A window together with its analytic spectrum, so that dilated packets
/// can be evaluated exactly on any frequency grid.
#[derive(Debug, Clone)]
pub struct Window {
    pub grid: GridSpec,
    pub spec: WindowSpec,
    norm: f64,
    pub field: SampledField,
}

impl Window {
    /// Unnormalized radial profile at `|ζ|`.
    fn raw(&self, radius: f64) -> f64 {
        raw_profile(&self.spec, radius)
    }

    /// Normalized window spectrum `φ̂(ζ)`.
    pub fn hat(&self, zeta: [f64; 2]) -> f64 {
        self.raw((zeta[0] * zeta[0] + zeta[1] * zeta[1]).sqrt()) / self.norm
    }

    /// Radial profile without normalization, for packet construction where
    /// each dilation is renormalized on its own.
    pub fn profile_at(&self, radius: f64) -> f64 {
        self.raw(radius)
    }

    /// Ratio of the largest `|φ|` at torus distance > L/4 from the origin to
    /// the peak value.
    pub fn decay_ratio(&self) -> f64 {
        let g = self.grid;
        let l = g.length;
        let mut outside: f64 = 0.0;
        for (i, v) in self.field.values.iter().enumerate() {
            let t = g.position_vec(i);
            let r = (0..g.d).map(|a| torus_diff(t[a], 0.0, l).powi(2)).sum::<f64>().sqrt();
            if r > 0.25 * l {
                outside = outside.max(v.norm());
            }
        }
        outside / self.field.max_abs()
    }

    /// Whether the spatial tail stays below `spec.decay_tolerance`.
    pub fn is_localized(&self) -> bool {
        self.decay_ratio() < self.spec.decay_tolerance
    }
}

fn raw_profile(spec: &WindowSpec, radius: f64) -> f64 {
    let t = (radius - spec.annulus_inner) / (spec.annulus_outer - spec.annulus_inner);
    let b = bump(t);
    match spec.profile {
        Profile::SmoothBump => b,
        Profile::SmoothBumpSquared => b * b,
    }
}

/// Window with spectrum `b((|ζ|−c₁)/(c₂−c₁))`, normalized in L².
pub fn build_window(grid: GridSpec, spec: WindowSpec) -> Result<Window> {
    grid.validate()?;
    spec.validate(&grid)?;
    let raw: Vec<f64> = (0..grid.total())
        .map(|q| {
            let z = grid.freq_vec(q);
            raw_profile(&spec, (z[0] * z[0] + z[1] * z[1]).sqrt())
        })
        .collect();
    let energy: f64 = raw.iter().map(|v| v * v).sum::<f64>() / grid.volume();
    if energy <= 0.0 {
        return Err(Error::Invalid("annulus contains no grid frequency".into()));
    }
    let norm = energy.sqrt();
    let spectrum: Vec<Complex64> = raw.iter().map(|v| Complex64::new(v / norm, 0.0)).collect();
    let mut field = SampledField::from_spectrum(grid, &spectrum);
    // the spectrum is real and even, so the window is real up to rounding
    field.values.iter_mut().for_each(|v| *v = Complex64::new(v.re, 0.0));
    let s = field.norm();
    field.values.iter_mut().for_each(|v| *v /= s);
    Ok(Window { grid, spec, norm: norm * s, field })
}

/// Second stock window: same annulus, squared bump profile.
pub fn second_window(grid: GridSpec, spec: WindowSpec) -> Result<Window> {
    build_window(grid, WindowSpec { profile: Profile::SmoothBumpSquared, ..spec })
}
