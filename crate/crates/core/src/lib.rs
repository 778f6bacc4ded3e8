//! Subdyadic time–frequency analysis on the discrete torus.
//!
//! The crate builds phase-space lattices adapted to a dispersion exponent
//! `α`, the corresponding frames of dispersive wave packets, modulation
//! norms on their coefficients, Fourier multipliers of Miyachi type and a
//! wavefront-set indicator based on the dispersive short-time Fourier
//! transform.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod error;
pub mod frame;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod jaffard;
pub mod linalg;
pub mod modspace;
pub mod multiplier;
pub mod signals;
pub mod stats;
pub mod wavefront;
pub mod window;

pub use error::{Error, Result};
pub use grid::{GridSpec, SampledField};
