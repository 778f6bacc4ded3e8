mod common;

use num_complex::Complex64 as C64;
use subdyadic::grid::SampledField;
use subdyadic::multiplier::{apply_multiplier, eval_symbol, MultiplierSpec};
use subdyadic::signals::{delta, gaussian_bump, step};
use subdyadic::wavefront::{
    decay_fit_per_cone, invariance_experiment, localized_stft_scan, psido_apply, wf_indicator, PsiDOSpec, WfConfig,
    WfScanConfig,
};
use subdyadic::window::{build_window, WindowSpec};
use subdyadic::GridSpec;

const ALPHA: f64 = 0.5;

fn cells(report: &subdyadic::wavefront::WavefrontReport) -> Vec<usize> {
    let mut c: Vec<usize> = report.singular_cells().into_iter().map(|v| v[0]).collect();
    c.dedup();
    c
}

fn cone_counts(report: &subdyadic::wavefront::WavefrontReport, cell: usize) -> usize {
    report.singular_set().iter().filter(|(c, _)| c[0] == cell).count()
}

// ---------------------------------------------------------------------------
// single-cell scans

#[test]
fn delta_at_the_cutoff_center_is_singular_in_every_cone() {
    let g = common::default_grid();
    let w = common::default_window();
    let cfg = WfConfig::default().scan_config(&g, &[7]);
    let u = delta(g, &cfg.cutoff_center).unwrap();
    let table = localized_stft_scan(&u, &w, ALPHA, &cfg).unwrap();
    for fit in decay_fit_per_cone(&table, 4.0).unwrap() {
        assert!(fit.singular && fit.exponent < 1.0, "{fit:?}");
    }
}

#[test]
fn distant_support_is_invisible_to_the_scan() {
    let g = common::default_grid();
    let w = common::default_window();
    let u = gaussian_bump(g, &[10.0], 1.0).unwrap();
    let cfg = WfScanConfig {
        cutoff_center: vec![42.0],
        cutoff_radius: 3.0,
        cone_count: 2,
        shell_base: std::f64::consts::SQRT_2,
        r_min: 4.0,
        n_threshold: 4.0,
        x_samples: 5,
        xi_samples: 4,
    };
    let table = localized_stft_scan(&u, &w, ALPHA, &cfg).unwrap();
    let peak = u.max_abs();
    assert!(table.entries.iter().all(|e| e.value < 1e-8 * peak));
}

// ---------------------------------------------------------------------------
// torus-wide indicator

#[test]
fn canonical_signals_are_classified() {
    let g = common::default_grid();
    let w = common::default_window();
    let cfg = WfConfig::default();

    let zero = wf_indicator(&SampledField::zeros(g), &w, ALPHA, &cfg).unwrap();
    assert!(zero.singular_set().is_empty());
    assert!(zero.entries.iter().all(|e| e.exponent.is_infinite()));

    let bump = wf_indicator(&gaussian_bump(g, &[32.0], 3.0).unwrap(), &w, ALPHA, &cfg).unwrap();
    assert!(bump.singular_set().is_empty(), "{:?}", bump.singular_set());

    let d = wf_indicator(&delta(g, &[30.0]).unwrap(), &w, ALPHA, &cfg).unwrap();
    assert_eq!(cells(&d), vec![7]);
    assert_eq!(cone_counts(&d, 7), 2);

    let s = wf_indicator(&step(g, &[30.0]).unwrap(), &w, ALPHA, &cfg).unwrap();
    assert_eq!(cells(&s), vec![7]);
    assert_eq!(cone_counts(&s, 7), 2);

    for e in d.entries.iter().chain(&s.entries).chain(&bump.entries) {
        assert_eq!(e.singular, e.exponent < cfg.n_threshold);
    }
    let json = serde_json::to_value(&d.entries).unwrap();
    for key in ["x_cell", "cone_index", "exponent", "constant", "singular"] {
        assert!(json[0].get(key).is_some());
    }
}

#[test]
fn singular_cells_follow_translations() {
    let g = common::default_grid();
    let w = common::default_window();
    let cfg = WfConfig::default();
    let u = delta(g, &[30.0]).unwrap();
    let per_cell = (g.n / cfg.cells_per_axis) as i64;
    for shift in [1i64, 3, -2] {
        let moved = u.shifted([shift * per_cell, 0]);
        let r = wf_indicator(&moved, &w, ALPHA, &cfg).unwrap();
        let expect = (7 + shift).rem_euclid(cfg.cells_per_axis as i64) as usize;
        assert_eq!(cells(&r), vec![expect]);
    }
}

#[test]
fn verdict_is_independent_of_window_and_cutoff() {
    let g = common::default_grid();
    let w1 = common::default_window();
    let w2 = common::default_second_window();
    let cfg = WfConfig::default();
    let wide = WfConfig { cutoff_ratio: 2.0 * cfg.cutoff_ratio, ..cfg.clone() };
    for u in [delta(g, &[30.0]).unwrap(), step(g, &[50.0]).unwrap(), gaussian_bump(g, &[20.0], 3.0).unwrap()] {
        let base = wf_indicator(&u, &w1, ALPHA, &cfg).unwrap();
        let other = wf_indicator(&u, &w2, ALPHA, &cfg).unwrap();
        let doubled = wf_indicator(&u, &w1, ALPHA, &wide).unwrap();
        for r in [&other, &doubled] {
            assert!(r.contained_in(&base) && base.contained_in(r));
        }
    }
}

// ---------------------------------------------------------------------------
// pseudodifferential operators

#[test]
fn quadrature_reduces_to_multipliers_and_pointwise_products() {
    let g = common::default_grid();
    let u = step(g, &[20.0]).unwrap().add(&gaussian_bump(g, &[40.0], 2.0).unwrap());
    assert!(psido_apply(&u, &PsiDOSpec::identity(g)).unwrap().sub(&u).max_abs() < 1e-12);

    let m = MultiplierSpec::model(ALPHA, 1.0);
    let table = eval_symbol(&m, &g).unwrap();
    let lhs = psido_apply(&u, &PsiDOSpec::multiplier(g, table).unwrap()).unwrap();
    assert!(lhs.sub(&apply_multiplier(&u, &m).unwrap()).max_abs() < 1e-12);

    let gx: Vec<C64> = (0..g.total()).map(|i| C64::new((g.position_vec(i)[0] / 7.0).sin(), 0.3)).collect();
    let lhs = psido_apply(&u, &PsiDOSpec::pointwise(g, gx.clone()).unwrap()).unwrap();
    let rhs = u.mul(&SampledField::new(g, gx).unwrap());
    assert!(lhs.sub(&rhs).max_abs() < 1e-12);

    let other = GridSpec::new(1, 512, 64.0).unwrap();
    assert!(psido_apply(&SampledField::zeros(other), &PsiDOSpec::identity(g)).is_err());
}

#[test]
fn stock_operators_do_not_create_singularities() {
    let g = common::default_grid();
    let w = common::default_window();
    let cfg = WfConfig::default();
    let u = delta(g, &[30.0]).unwrap();

    let id = invariance_experiment(&u, &PsiDOSpec::identity(g), &w, ALPHA, &cfg).unwrap();
    assert!(id.contained && id.reverse_contained);
    assert_eq!(id.report_u.singular_set(), id.report_au.singular_set());

    let ell = PsiDOSpec::elliptic(g);
    let bounds = ell.check_bounds().unwrap();
    assert!(bounds.inf >= 0.5 && bounds.sup.is_finite() && bounds.difference_constant.is_finite());
    let e = invariance_experiment(&u, &ell, &w, ALPHA, &cfg).unwrap();
    assert!(e.contained && e.reverse_contained);

    let far = invariance_experiment(&u, &PsiDOSpec::spatially_vanishing(g, &[30.0]).unwrap(), &w, ALPHA, &cfg).unwrap();
    assert!(far.contained);
    assert!(far.report_au.singular_set().is_empty());
    assert!(PsiDOSpec::spatially_vanishing(g, &[1.0, 2.0]).is_err());
}

// ---------------------------------------------------------------------------
// two dimensions

#[test]
fn two_dimensional_scan_runs_and_finds_the_delta() {
    let g = GridSpec::new(2, 128, 8.0).unwrap();
    let w = build_window(g, WindowSpec::default()).unwrap();
    let cfg = WfConfig { cells_per_axis: 2, r_min: 2.0, x_samples: 3, xi_samples: 2, ..WfConfig::default() };
    let zero = wf_indicator(&SampledField::zeros(g), &w, ALPHA, &cfg).unwrap();
    assert_eq!(zero.entries.len(), 4 * cfg.cone_count);
    assert!(zero.singular_set().is_empty());
    let center = cfg.cell_center(&g, &[0, 1]);
    let r = wf_indicator(&delta(g, &center).unwrap(), &w, ALPHA, &cfg).unwrap();
    assert!(r.singular_cells().contains(&vec![0, 1]), "{:?}", r.singular_set());
}
