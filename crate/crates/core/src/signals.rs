//! Stock test signals on the grid.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::random_bandlimited;
use crate::grid::{GridSpec, SampledField};
use crate::linalg::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalKind {
    Delta { center: Vec<f64> },
    Step { center: Vec<f64> },
    GaussianBump { center: Vec<f64>, width: f64 },
    Chirp { alpha: f64 },
    RandomBandlimited { lo: f64, hi: f64 },
}

impl SignalKind {
    pub fn name(&self) -> &'static str {
        match self {
            SignalKind::Delta { .. } => "delta",
            SignalKind::Step { .. } => "step",
            SignalKind::GaussianBump { .. } => "gaussian_bump",
            SignalKind::Chirp { .. } => "chirp",
            SignalKind::RandomBandlimited { .. } => "random_bandlimited",
        }
    }
}

fn point(grid: &GridSpec, center: &[f64]) -> Result<[f64; 2]> {
    if center.len() != grid.d {
        return Err(Error::Invalid(format!("center has {} coordinates, grid is {}-dimensional", center.len(), grid.d)));
    }
    Ok([center[0], center.get(1).copied().unwrap_or(0.0)])
}

fn nearest_sample(grid: &GridSpec, x: [f64; 2]) -> usize {
    let idx = |t: f64| ((t / grid.dx()).round() as i64).rem_euclid(grid.n as i64) as usize;
    if grid.d == 1 {
        idx(x[0])
    } else {
        grid.flatten([idx(x[0]), idx(x[1])])
    }
}

/// Grid delta of unit mass at the sample nearest `center`.
pub fn delta(grid: GridSpec, center: &[f64]) -> Result<SampledField> {
    let x = point(&grid, center)?;
    let mut f = SampledField::zeros(grid);
    f.values[nearest_sample(&grid, x)] = C64::new(1.0 / grid.cell_volume(), 0.0);
    Ok(f)
}

/// Single jump from 0 to 1 at `center[0]` along the first axis, followed by
/// the analytic decline `(1 + cos(πs/L))/2` back to 0 over one period, so
/// the torus sees exactly one discontinuity.
pub fn step(grid: GridSpec, center: &[f64]) -> Result<SampledField> {
    let x0 = point(&grid, center)?[0];
    let l = grid.length;
    Ok(SampledField::from_fn(grid, |x| {
        let s = (x[0] - x0).rem_euclid(l);
        C64::new(0.5 * (1.0 + (std::f64::consts::PI * s / l).cos()), 0.0)
    }))
}

/// Periodized Gaussian `exp(−|x−c|²/(2w²))` with nearest-image distance.
pub fn gaussian_bump(grid: GridSpec, center: &[f64], width: f64) -> Result<SampledField> {
    if !(width > 0.0) {
        return Err(Error::Invalid(format!("width must be positive, got {width}")));
    }
    let c = point(&grid, center)?;
    let l = grid.length;
    Ok(SampledField::from_fn(grid, |x| {
        let mut r2 = 0.0;
        for a in 0..grid.d {
            let t = (x[a] - c[a] + 0.5 * l).rem_euclid(l) - 0.5 * l;
            r2 += t * t;
        }
        C64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
    }))
}

/// Impulse at the origin filtered by `e^{i|ξ|^α}`.
pub fn chirp(grid: GridSpec, alpha: f64) -> Result<SampledField> {
    if !(alpha > 0.0) {
        return Err(Error::Invalid(format!("alpha must be positive, got {alpha}")));
    }
    let spectrum: Vec<C64> = (0..grid.total())
        .map(|q| {
            let v = grid.freq_vec(q);
            C64::from_polar(1.0, (v[0] * v[0] + v[1] * v[1]).sqrt().powf(alpha))
        })
        .collect();
    Ok(SampledField::from_spectrum(grid, &spectrum))
}

pub fn generate(grid: GridSpec, kind: &SignalKind, rng: &mut ChaCha8Rng) -> Result<SampledField> {
    grid.validate()?;
    match kind {
        SignalKind::Delta { center } => delta(grid, center),
        SignalKind::Step { center } => step(grid, center),
        SignalKind::GaussianBump { center, width } => gaussian_bump(grid, center, *width),
        SignalKind::Chirp { alpha } => chirp(grid, *alpha),
        SignalKind::RandomBandlimited { lo, hi } => {
            if !(0.0 <= *lo && lo < hi) {
                return Err(Error::Invalid(format!("band [{lo}, {hi}] is empty")));
            }
            Ok(random_bandlimited(grid, *lo, *hi, rng))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(1, 256, 16.0).unwrap()
    }

    #[test]
    fn delta_has_unit_mass() {
        let f = delta(grid(), &[3.0]).unwrap();
        let mass: f64 = f.values.iter().map(|v| v.re).sum::<f64>() * grid().dx();
        assert!((mass - 1.0).abs() < 1e-14);
        assert_eq!(f.values.iter().filter(|v| v.re != 0.0).count(), 1);
    }

    #[test]
    fn step_has_one_jump() {
        let g = grid();
        let f = step(g, &[4.0]).unwrap();
        let n = g.n;
        let jumps = (0..n).filter(|&i| (f.values[(i + 1) % n].re - f.values[i].re).abs() > 0.5).count();
        assert_eq!(jumps, 1);
        assert_eq!(f.values[64].re, 1.0);
        assert!(f.values[63].re < 1e-3);
    }

    #[test]
    fn gaussian_peaks_at_center() {
        let g = grid();
        let f = gaussian_bump(g, &[15.5], 1.0).unwrap();
        assert!((f.values[248].re - 1.0).abs() < 1e-15);
        assert!(f.values[8].re > 0.0, "wraps around the torus");
    }

    #[test]
    fn chirp_is_unimodular_in_frequency() {
        let f = chirp(grid(), 0.5).unwrap();
        for v in f.spectrum() {
            assert!((v.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        assert!(delta(grid(), &[1.0, 2.0]).is_err());
    }
}
