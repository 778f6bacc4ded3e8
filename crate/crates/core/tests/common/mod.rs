#![allow(dead_code)]

use subdyadic::geometry::{AlphaParams, SubdyadicLattice};
use subdyadic::window::{build_window, second_window, Window, WindowSpec};
use subdyadic::GridSpec;

pub fn default_grid() -> GridSpec {
    GridSpec::new(1, 1024, 64.0).unwrap()
}

pub fn default_window() -> Window {
    build_window(default_grid(), WindowSpec::default()).unwrap()
}

pub fn default_second_window() -> Window {
    second_window(default_grid(), WindowSpec::default()).unwrap()
}

pub fn default_lattice() -> SubdyadicLattice {
    let reach = WindowSpec::default().annulus_outer;
    SubdyadicLattice::build_for_window(default_grid(), AlphaParams::default(), reach).unwrap()
}

/// Small 1-d setup for tests that need dense matrices quickly.
pub fn small_setup() -> (SubdyadicLattice, Window) {
    let g = GridSpec::new(1, 256, 16.0).unwrap();
    let spec = WindowSpec::default();
    let lat = SubdyadicLattice::build_for_window(g, AlphaParams::default(), spec.annulus_outer).unwrap();
    (lat, build_window(g, spec).unwrap())
}

/// Smallest 1-d setup, for tests that multiply or invert dense matrices.
pub fn tiny_setup() -> (SubdyadicLattice, Window) {
    let g = GridSpec::new(1, 128, 16.0).unwrap();
    let spec = WindowSpec::default();
    let lat = SubdyadicLattice::build_for_window(g, AlphaParams::default(), spec.annulus_outer).unwrap();
    (lat, build_window(g, spec).unwrap())
}
