mod common;

use proptest::prelude::*;
use subdyadic::geometry::*;
use subdyadic::{Error, GridSpec};

fn geometry_lattice() -> SubdyadicLattice {
    SubdyadicLattice::build(common::default_grid(), AlphaParams::default()).unwrap()
}

#[test]
fn documented_quasi_distance_value() {
    let w = PhasePoint::new(vec![0.0], vec![4.0]);
    let z = PhasePoint::new(vec![2.0], vec![4.0]);
    let d = quasi_distance(&w, &z, 0.5, f64::INFINITY);
    assert!((d - 4.472135955).abs() < 1e-9);
}

#[test]
fn block_at_zero_frequency_is_rejected() {
    let p = PhasePoint::new(vec![1.0], vec![0.0]);
    assert!(matches!(block_of(&p, &AlphaParams::default()), Err(Error::ZeroFrequency)));
}

#[test]
fn alpha_one_blocks_are_uniform() {
    let params = AlphaParams::new(1.0, 0.7, 1.3).unwrap();
    for xi in [1.0, 5.0, 300.0] {
        let b = block_of(&PhasePoint::new(vec![0.0], vec![xi]), &params).unwrap();
        assert!((b.spatial_radius - 0.91).abs() < 1e-15);
        assert!((b.freq_radius - 0.91).abs() < 1e-15);
    }
}

fn point_strategy(d: usize) -> impl Strategy<Value = PhasePoint> {
    (
        proptest::collection::vec(0.0..64.0f64, d),
        proptest::collection::vec(-50.0..50.0f64, d),
    )
        .prop_map(|(x, xi)| PhasePoint::new(x, xi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn quasi_distance_is_symmetric(w in point_strategy(1), z in point_strategy(1), alpha in 0.05..1.0f64) {
        prop_assert_eq!(quasi_distance(&w, &z, alpha, 64.0), quasi_distance(&z, &w, alpha, 64.0));
    }

    #[test]
    fn quasi_distance_is_symmetric_in_2d(w in point_strategy(2), z in point_strategy(2), alpha in 0.05..1.0f64) {
        prop_assert_eq!(quasi_distance(&w, &z, alpha, 64.0), quasi_distance(&z, &w, alpha, 64.0));
    }

    #[test]
    fn quasi_distance_separates_points(w in point_strategy(1), z in point_strategy(1)) {
        prop_assert_eq!(quasi_distance(&w, &w, 0.5, 64.0), 0.0);
        let same = torus_equal(&w, &z);
        prop_assert_eq!(quasi_distance(&w, &z, 0.5, 64.0) > 0.0, !same);
    }

    #[test]
    fn block_volume_is_frequency_independent(
        xi in proptest::collection::vec(0.1..1000.0f64, 2),
        rho in 0.1..2.0f64,
        c in 0.5..2.0f64,
        alpha in 0.1..1.0f64,
    ) {
        let params = AlphaParams::new(alpha, rho, c).unwrap();
        for d in [1usize, 2] {
            let p = PhasePoint::new(vec![0.0; d], xi[..d].to_vec());
            let b = block_of(&p, &params).unwrap();
            let expect = (2.0 * c * rho).powi(2 * d as i32);
            prop_assert!((b.volume() - expect).abs() <= 1e-12 * expect);
        }
    }
}

fn torus_equal(w: &PhasePoint, z: &PhasePoint) -> bool {
    w.xi == z.xi && w.x.iter().zip(&z.x).all(|(a, b)| (a - b).rem_euclid(64.0) == 0.0)
}

#[test]
fn center_counts_match_corona_step() {
    let lat = geometry_lattice();
    let nyq = lat.grid.nyquist();
    let mut k = 0;
    while 2f64.powi(k + 1) <= nyq {
        let count = lat.centers.iter().filter(|c| c.corona == k && c.xi[0] > 0.0).count() as f64;
        let expect = 2f64.powi(k) / 2f64.powf(k as f64 / 2.0);
        assert!((count - expect).abs() <= 1.0, "corona {k}: {count} centers vs {expect}");
        k += 1;
    }
    assert!(k >= 5);
}

#[test]
fn alpha_one_is_a_uniform_gabor_grid() {
    let params = AlphaParams::new(1.0, 1.0, 1.0).unwrap();
    let lat = SubdyadicLattice::build(common::default_grid(), params).unwrap();
    let dxi = lat.grid.dxi();
    let mut positive: Vec<f64> = lat.centers.iter().filter(|c| c.corona >= 0 && c.xi[0] > 0.0).map(|c| c.xi[0]).collect();
    positive.sort_by(f64::total_cmp);
    for pair in positive.windows(2) {
        assert!((pair[1] - pair[0] - 1.0).abs() <= dxi + 1e-12, "frequency step {}", pair[1] - pair[0]);
    }
    for c in &lat.centers {
        assert!((lat.grid.length / c.m as f64 - 1.0).abs() < 1e-12);
        assert_eq!(c.scale, 1.0);
    }
}

#[test]
fn every_frequency_is_covered_with_bounded_overlap() {
    let lat = geometry_lattice();
    let nyq = lat.grid.nyquist();
    assert!(lat.uncovered_frequencies(nyq).is_empty());
    let report = lat.report();
    assert_eq!(report.uncovered_frequencies, 0);
    assert!(report.overlap_bound >= 1 && report.overlap_bound <= 16);
    let g = lat.grid;
    for q in (0..g.total()).step_by(7) {
        let xi = g.freq(q);
        if xi.abs() < 1.0 {
            continue;
        }
        for x in [0.0, 3.3, 31.7] {
            let m = lat.overlap_multiplicity(&PhasePoint::new(vec![x], vec![xi]));
            assert!(m >= 1 && m <= lat.overlap_bound, "ξ = {xi}: multiplicity {m}");
        }
    }
}

#[test]
fn frame_lattice_covers_its_band() {
    let lat = common::default_lattice();
    let report = lat.report();
    assert_eq!(report.uncovered_frequencies, 0);
    assert_eq!(report.node_count, 5916);
    assert!((lat.max_center_freq() - 37.70).abs() < 0.01);
}

#[test]
fn overlap_is_uniform_across_coronas() {
    let lat = common::default_lattice();
    let per = lat.overlap_per_corona();
    let dyadic: Vec<usize> = per.iter().filter(|(k, _)| *k >= 1).map(|(_, v)| *v).collect();
    assert!(dyadic.len() >= 4);
    let (lo, hi) = (*dyadic.iter().min().unwrap(), *dyadic.iter().max().unwrap());
    assert!(hi - lo <= 2, "per-corona overlap {per:?}");
}

#[test]
fn multiplicity_edge_cases() {
    let lat = common::default_lattice();
    let far = PhasePoint::new(vec![1.0], vec![lat.covered_band + 1.0]);
    assert_eq!(lat.overlap_multiplicity(&far), 0);
    for w in [0, 100, lat.len() / 2, lat.len() - 1] {
        assert!(lat.overlap_multiplicity(&lat.nodes[w].point) >= 1);
    }
}

#[test]
fn relative_separation_is_bounded() {
    let lat = common::default_lattice();
    let bound = lat.separation_bound(lat.params.rho);
    assert!((1..=16).contains(&bound), "{bound}");
    let w = lat.len() / 3;
    let in_ball = (0..lat.len()).filter(|&z| lat.distance(w, z) <= lat.params.rho).count();
    assert!(in_ball <= bound);
}

#[test]
fn annulus_counts_partition_and_grow_like_phase_space_volume() {
    let lat = common::default_lattice();
    let w = lat.centers.iter().find(|c| c.corona == 3).unwrap().nodes[5];
    let tiny = lat.annulus_counts(w, 1e-3).unwrap();
    assert!(tiny[0] >= 1);
    let counts = lat.annulus_counts(w, 1.0).unwrap();
    assert_eq!(counts.iter().sum::<usize>(), lat.len());
    let exponent = growth_exponent(&counts, 1.0, 1..10);
    assert!((exponent - 2.0).abs() <= 0.7, "growth exponent {exponent}");
    assert!(lat.annulus_counts(w, 0.0).is_err());
}

#[test]
fn export_order_is_corona_then_translate_then_center() {
    let lat = common::default_lattice();
    let rec = lat.export();
    assert_eq!(rec.len(), lat.len());
    for pair in rec.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        assert!(a.k < b.k || (a.k == b.k && (a.j < b.j || (a.j == b.j && a.xi < b.xi))));
    }
}

#[test]
fn quasi_triangle_constant_is_reported() {
    let lat = common::default_lattice();
    let c = lat.quasi_triangle_constant(5000, 1);
    assert!(c.is_finite() && c >= 1.0);
}

#[test]
fn too_coarse_grid_has_no_corona() {
    let g = GridSpec::new(1, 4, 64.0).unwrap();
    assert!(matches!(SubdyadicLattice::build(g, AlphaParams::default()), Err(Error::GridTooCoarse { .. })));
}

#[test]
fn two_dimensional_lattice_smoke() {
    let g = GridSpec::new(2, 64, 8.0).unwrap();
    let lat = SubdyadicLattice::build_for_window(g, AlphaParams::default(), 2.0).unwrap();
    let report = lat.report();
    assert!(report.node_count > 0);
    assert!(report.nominal_radius > 0.5 * g.nyquist());
    assert_eq!(report.uncovered_frequencies, 0);
    let a = lat.len() / 5;
    let b = lat.len() / 2;
    assert_eq!(lat.distance(a, b), lat.distance(b, a));
}
