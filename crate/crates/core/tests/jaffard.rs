mod common;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use subdyadic::frame::{pair_matrix, CoefficientField, Frame};
use subdyadic::geometry::SubdyadicLattice;
use subdyadic::jaffard::{
    dominant_subset, fit_decay_subset, weight_comparability_exponent, LocalizedMatrix,
};
use subdyadic::linalg::{vec_norm, CMatrix};
use subdyadic::modspace::ModNormSpec;
use subdyadic::Error;

fn model(lat: &SubdyadicLattice, n: f64, eps: f64) -> CMatrix {
    CMatrix::from_fn(lat.len(), |i, j| {
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            C64::new(eps * (1.0 + lat.distance(i, j)).powf(-n), 0.0)
        }
    })
}

/// Off-diagonal perturbation of exponent 6 scaled to Schur norm `target`.
fn perturbation(lat: &SubdyadicLattice, target: f64) -> LocalizedMatrix<'_> {
    let raw = LocalizedMatrix::new(lat, model(lat, 6.0, 1.0)).unwrap();
    let s = raw.schur_bound();
    LocalizedMatrix::new(lat, raw.entries.scale(C64::new(target / s, 0.0))).unwrap()
}

// ---------------------------------------------------------------------------
// seminorms and Schur bounds

#[test]
fn trivial_matrices_have_trivial_norms() {
    let (lat, _) = common::small_setup();
    let id = LocalizedMatrix::identity(&lat);
    let zero = LocalizedMatrix::new(&lat, CMatrix::zeros(lat.len())).unwrap();
    for n in [0.0, 2.0, 7.5] {
        assert_eq!(id.decay_seminorm(n), 1.0);
        assert_eq!(zero.decay_seminorm(n), 0.0);
    }
    assert_eq!(id.jaffard_class_norm(3.0), 1.0);
    assert_eq!(zero.jaffard_class_norm(3.0), 0.0);
}

#[test]
fn gram_seminorm_matches_brute_force_and_is_monotone() {
    let (lat, w) = common::small_setup();
    let frame = Frame::new(&lat, &w).unwrap();
    let g = LocalizedMatrix::new(&lat, frame.gramian(20000).unwrap()).unwrap();
    let mut brute: f64 = 0.0;
    for i in 0..lat.len() {
        for j in 0..lat.len() {
            let d = lat.distance(i, j);
            brute = brute.max((1.0 + d).powi(4) * g.entries.get(i, j).norm());
        }
    }
    let s4 = g.decay_seminorm(4.0);
    assert!(s4.is_finite());
    assert!((s4 - brute).abs() <= 1e-12 * brute);
    let mut last = 0.0;
    for n in [0.0, 1.0, 2.0, 4.0, 6.0] {
        let v = g.decay_seminorm(n);
        assert!(v >= last);
        last = v;
    }
}

#[test]
fn schur_test_bounds_the_operator_norm() {
    let (lat, w) = common::tiny_setup();
    let frame = Frame::new(&lat, &w).unwrap();
    let g = LocalizedMatrix::new(&lat, frame.gramian(20000).unwrap()).unwrap();
    assert!(g.operator_norm() <= g.schur_bound() + 1e-8);
    let r = perturbation(&lat, 0.7);
    assert!(r.operator_norm() <= r.schur_bound() + 1e-8);
    assert!(g.off_diagonal_schur().is_finite());
}

#[test]
fn products_stay_in_the_class() {
    let (lat, w) = common::tiny_setup();
    let frame = Frame::new(&lat, &w).unwrap();
    let g = LocalizedMatrix::new(&lat, frame.gramian(20000).unwrap()).unwrap();
    let r = perturbation(&lat, 0.5);
    for s in [0.0, 1.0, 2.0] {
        for (a, b) in [(&g, &g), (&g, &r), (&r, &r)] {
            let prod = a.product(b).jaffard_class_norm(s);
            let bound = a.jaffard_class_norm(s) * b.jaffard_class_norm(s);
            assert!(prod.is_finite() && prod <= 100.0 * bound, "s={s}: {prod} vs {bound}");
        }
    }
}

// ---------------------------------------------------------------------------
// decay fits

#[test]
fn exact_power_law_is_recovered() {
    let (lat, _) = common::small_setup();
    let m = LocalizedMatrix::new(&lat, model(&lat, 6.0, 1.0)).unwrap();
    let p = m.fit_decay().unwrap();
    assert!((p.exponent_n - 6.0).abs() < 0.01, "{p:?}");
    assert_eq!(p.violation_fraction, 0.0);
    let e = m.fit_decay_entrywise().unwrap();
    assert!((e.exponent_n - 6.0).abs() < 0.01);
}

#[test]
fn diagonal_matrix_is_superpolynomial() {
    let (lat, _) = common::small_setup();
    let diag = CMatrix::from_fn(lat.len(), |i, j| if i == j { C64::new(2.0 + i as f64, 0.0) } else { C64::new(0.0, 0.0) });
    let p = LocalizedMatrix::new(&lat, diag).unwrap().fit_decay().unwrap();
    assert!(p.superpolynomial && p.exponent_n == f64::INFINITY);
    let json = serde_json::to_value(&p).unwrap();
    assert!(json["N"].is_null());
    assert_eq!(json["superpolynomial"], true);
}

#[test]
fn gram_decay_profile_serializes_its_fields() {
    let (lat, w) = common::small_setup();
    let frame = Frame::new(&lat, &w).unwrap();
    let p = LocalizedMatrix::new(&lat, frame.gramian(20000).unwrap()).unwrap().fit_decay().unwrap();
    let json = serde_json::to_value(&p).unwrap();
    for key in ["N", "C", "residual", "violations", "superpolynomial"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    let back: subdyadic::jaffard::DecayProfile = serde_json::from_value(json).unwrap();
    assert_eq!(back, p);
}

// ---------------------------------------------------------------------------
// inversion

#[test]
fn identity_inverts_to_itself() {
    let (lat, _) = common::small_setup();
    let (inv, p) = LocalizedMatrix::identity(&lat).invert(1e-12).unwrap();
    assert!(inv.entries.max_abs_diff(&CMatrix::identity(lat.len())) < 1e-14);
    assert!(p.superpolynomial);
}

#[test]
fn singular_matrix_is_rejected() {
    let (lat, _) = common::small_setup();
    let mut m = CMatrix::identity(lat.len());
    m.set(3, 3, C64::new(0.0, 0.0));
    assert!(matches!(LocalizedMatrix::new(&lat, m).unwrap().invert(1e-10), Err(Error::Singular { .. })));
}

#[test]
fn neumann_series_matches_dense_inverse() {
    let (lat, _) = common::tiny_setup();
    let r = perturbation(&lat, 0.5);
    let a = LocalizedMatrix::new(&lat, CMatrix::identity(lat.len()).add(&r.entries)).unwrap();
    let fitted_a = a.fit_decay().unwrap();
    assert!((fitted_a.exponent_n - 6.0).abs() < 0.01);
    let (inv, p) = a.invert(1e-10).unwrap();
    assert!(p.exponent_n >= fitted_a.exponent_n - 2.0 - 0.5, "inverse {p:?}");

    let norm = r.operator_norm();
    assert!(norm < 1.0);
    for col in (0..lat.len()).step_by(lat.len() / 25) {
        let mut term = vec![C64::new(0.0, 0.0); lat.len()];
        term[col] = C64::new(1.0, 0.0);
        let mut sum = term.clone();
        let mut k = 0;
        while norm.powi(k) >= 1e-12 {
            term = r.entries.matvec(&term).into_iter().map(|v| -v).collect();
            sum.iter_mut().zip(&term).for_each(|(s, t)| *s += t);
            k += 1;
        }
        for (row, v) in sum.iter().enumerate() {
            assert!((inv.entries.get(row, col) - v).norm() < 1e-10, "entry ({row}, {col})");
        }
    }
    let check = inv.product(&a);
    assert!(check.entries.max_abs_diff(&CMatrix::identity(lat.len())) < 1e-8);
}

#[test]
fn gram_subblock_inverse_keeps_its_decay() {
    let lat = common::default_lattice();
    let w = common::default_window();
    let frame = Frame::new(&lat, &w).unwrap();
    let g = LocalizedMatrix::new(&lat, frame.gramian(20000).unwrap()).unwrap();
    let idx = dominant_subset(&g, 0.5, 600);
    assert!(idx.len() > 100);
    let sub = g.submatrix(&idx);
    let fitted = fit_decay_subset(&lat, &sub, &idx).unwrap();
    let inv = sub.inverse().unwrap();
    let fitted_inv = fit_decay_subset(&lat, &inv, &idx).unwrap();
    assert!(fitted.exponent_n > 2.0 + 1.0);
    assert!(fitted_inv.exponent_n >= fitted.exponent_n - 2.0 - 0.5, "{fitted_inv:?} vs {fitted:?}");
}

// ---------------------------------------------------------------------------
// weights

#[test]
fn weight_conjugation_costs_at_most_gamma_beta() {
    let lat = common::default_lattice();
    let w = common::default_window();
    let frame = Frame::new(&lat, &w).unwrap();
    let g = LocalizedMatrix::new(&lat, frame.gramian(20000).unwrap()).unwrap();
    let base = g.fit_decay().unwrap().exponent_n;
    let gamma = weight_comparability_exponent(&lat);
    assert!(gamma >= 1.0 - 1e-12 && gamma.is_finite());
    for beta in [-2.0, 2.0] {
        let p = g.conjugate_weights(beta).fit_decay().unwrap();
        assert!(p.exponent_n >= base - gamma * beta.abs() - 0.5, "beta {beta}: {} vs {base}", p.exponent_n);
    }
}

#[test]
fn weighted_sequence_ratios_are_uniformly_bounded() {
    let (lat, w1) = common::tiny_setup();
    let w2 = subdyadic::window::second_window(lat.grid, Default::default()).unwrap();
    let f1 = Frame::new(&lat, &w1).unwrap();
    let f2 = Frame::new(&lat, &w2).unwrap();
    let cross = LocalizedMatrix::new(&lat, pair_matrix(&f1, &f2, None).unwrap()).unwrap();
    let id = LocalizedMatrix::identity(&lat);
    let doubled = LocalizedMatrix::new(&lat, cross.entries.scale(C64::new(2.0, 0.0))).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let c = CoefficientField {
            values: (0..lat.len()).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect(),
        };
        assert!(vec_norm(&c.values) > 0.0);
        for p in [1.0, 2.0, f64::INFINITY] {
            for q in [1.0, 2.0, f64::INFINITY] {
                for beta in [-2.0, 0.0, 2.0] {
                    let spec = ModNormSpec::new(p, q, beta).unwrap();
                    let (_, r) = cross.weighted_sequence_apply(&c, &spec).unwrap();
                    worst = worst.max(r);
                    let (_, one) = id.weighted_sequence_apply(&c, &spec).unwrap();
                    assert!((one - 1.0).abs() < 1e-12);
                    let (_, two) = doubled.weighted_sequence_apply(&c, &spec).unwrap();
                    assert!((two - 2.0 * r).abs() < 1e-12 * two);
                }
            }
        }
    }
    assert!(worst <= 50.0, "sup ratio {worst}");
}
