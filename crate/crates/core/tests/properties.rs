mod common;

use std::f64::consts::PI;

use common::*;
use gabor_stability::gabor::{
    ambiguity, dgt, gaussian_ambiguity_value, FieldKind, GaborField, TfGrid, WeightField,
};
use gabor_stability::graph::{brute_force_cheeger, build_graph, cheeger_ratio, VertexSet};
use gabor_stability::signal::{gaussian, sample_mixture, synthesize, GaussianAtom, SynthKind, SynthParams};
use gabor_stability::spectral::{estimate_cheeger, estimate_graph, SpectralOptions};
use gabor_stability::stability::{count_zeros, d_norm, phase_distance, DNormParams};
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

fn weights(nx: usize, ny: usize) -> impl Strategy<Value = WeightField> {
    prop::collection::vec(0.01f64..1.0, nx * ny).prop_map(move |w| {
        let grid = TfGrid::new(0.25, nx, ny, 0.0, 0.0).unwrap();
        WeightField::new(grid, Array2::from_shape_vec((nx, ny), w).unwrap(), 1.0).unwrap()
    })
}

fn small_weights(max_vertices: usize) -> impl Strategy<Value = WeightField> {
    (1usize..=4, 2usize..=5)
        .prop_filter("vertex budget", move |(a, b)| a * b <= max_vertices && a * b >= 2)
        .prop_flat_map(|(nx, ny)| weights(nx, ny))
}

fn atom() -> impl Strategy<Value = GaussianAtom> {
    (0.3f64..1.5, 0.0f64..2.0 * PI, -2.0f64..2.0, -2.0f64..2.0)
        .prop_map(|(r, th, s, b)| GaussianAtom::new(Complex64::from_polar(r, th), s, b))
}

fn field(nx: usize, ny: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-1.0f64..1.0, nx * ny).prop_map(move |v| Array2::from_shape_vec((nx, ny), v).unwrap())
}

fn complex_field() -> impl Strategy<Value = GaborField> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12 * 10).prop_map(|v| {
        let grid = TfGrid::centered(0.25, 12, 10).unwrap();
        let values = Array2::from_shape_vec((12, 10), v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap();
        GaborField::new(grid, values, FieldKind::Generic).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pair_sum_is_twice_the_left_gaussian(a in 0.0f64..3.0) {
        let p = SynthParams { a, b: 0.0 };
        let plus = synthesize(SynthKind::GaussianPairPlus, p, 512, DT).unwrap();
        let minus = synthesize(SynthKind::GaussianPairMinus, p, 512, DT).unwrap();
        for k in 0..plus.len() {
            let t = plus.time(k);
            let sum = plus.samples()[k] + minus.samples()[k];
            prop_assert!((sum - 2.0 * gaussian(t + a)).norm() <= 1e-15);
        }
    }

    #[test]
    fn dgt_matches_closed_form(atoms in prop::collection::vec(atom(), 1..4)) {
        let grid = square_grid(0.25, 4.0);
        let v = dgt(&mixture_signal(&atoms), &grid).unwrap();
        for ((i, j), z) in v.values.indexed_iter() {
            let (x, y) = grid.point(i, j);
            prop_assert!((z - mixture_transform(&atoms, x, y)).norm() <= 1e-12);
        }
    }

    #[test]
    fn dgt_commutes_with_phase(atoms in prop::collection::vec(atom(), 1..3), alpha in 0.0f64..2.0 * PI) {
        let grid = square_grid(0.25, 3.0);
        let f = mixture_signal(&atoms);
        let a = dgt(&f.rotated(alpha), &grid).unwrap();
        let b = dgt(&f, &grid).unwrap();
        let rot = Complex64::from_polar(1.0, alpha);
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            prop_assert!((x - rot * y).norm() <= 1e-14);
            prop_assert!((x.norm() - y.norm()).abs() <= 1e-14);
        }
    }

    #[test]
    fn cut_ratio_never_beats_brute_force(w in small_weights(12), bits in any::<u32>()) {
        let g = build_graph(&w, None).unwrap();
        let n = g.len();
        let members: Vec<usize> = (0..n).filter(|k| bits >> k & 1 == 1).collect();
        prop_assume!(!members.is_empty() && members.len() < n);
        let best = brute_force_cheeger(&g).unwrap().ratio;
        let ratio = cheeger_ratio(&g, &VertexSet::from_indices(n, &members)).unwrap().ratio;
        prop_assert!(ratio >= best);
    }

    #[test]
    fn ratios_ignore_weight_scale(w in small_weights(12), lambda in 0.01f64..100.0, bits in any::<u32>()) {
        let g = build_graph(&w, None).unwrap();
        let h = build_graph(&w.scaled(lambda), None).unwrap();
        let n = g.len();
        let members: Vec<usize> = (0..n).filter(|k| bits >> k & 1 == 1).collect();
        prop_assume!(!members.is_empty() && members.len() < n);
        let set = VertexSet::from_indices(n, &members);
        let (a, b) = (cheeger_ratio(&g, &set).unwrap().ratio, cheeger_ratio(&h, &set).unwrap().ratio);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn edge_weight_is_endpoint_mean(w in small_weights(20)) {
        let g = build_graph(&w, None).unwrap();
        for (u, v, weight) in g.edges() {
            let (a, b) = (g.cell(u), g.cell(v));
            prop_assert_eq!(weight, 0.5 * (w.w[[a.0, a.1]] + w.w[[b.0, b.1]]));
        }
    }

    #[test]
    fn sweep_certificate_holds(w in small_weights(20)) {
        let g = build_graph(&w, None).unwrap();
        let h_g = brute_force_cheeger(&g).unwrap().ratio;
        let est = estimate_graph(&g, &SpectralOptions::default()).unwrap();
        prop_assert!(h_g <= est.h_star + 1e-12);
        prop_assert!(est.h_star <= 2.0 * h_g.sqrt() + 1e-12);
    }

    #[test]
    fn d_norm_is_a_norm(f in field(9, 7), g in field(9, 7), c in -5.0f64..5.0, p in 1.0f64..1.9) {
        let grid = TfGrid::centered(0.5, 9, 7).unwrap();
        let params = DNormParams::new(p, f64::INFINITY).unwrap();
        let nf = d_norm(&f, &grid, &params, None).unwrap();
        let ng = d_norm(&g, &grid, &params, None).unwrap();
        let sum = d_norm(&(&f + &g), &grid, &params, None).unwrap();
        prop_assert!(sum <= nf + ng + 1e-12 * (nf + ng));
        let scaled = d_norm(&(&f * c), &grid, &params, None).unwrap();
        prop_assert!((scaled - c.abs() * nf).abs() <= 1e-12 * nf.max(1.0));
    }

    #[test]
    fn phase_distance_is_symmetric_and_phase_blind(f in complex_field(), g in complex_field(), alpha in 0.0f64..2.0 * PI, p in 1.0f64..2.0) {
        let norm = f.l2_norm_sqr().sqrt();
        let rotated = GaborField::new(f.grid, f.values.mapv(|z| z * Complex64::from_polar(1.0, alpha)), FieldKind::Generic).unwrap();
        let (d, _) = phase_distance(&f, &rotated, p, None).unwrap();
        prop_assert!(d <= 1e-9 * norm);
        let (ab, _) = phase_distance(&f, &g, p, None).unwrap();
        let (ba, _) = phase_distance(&g, &f, p, None).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn zero_count_ignores_global_phase(atoms in prop::collection::vec(atom(), 2..4), alpha in 0.0f64..2.0 * PI) {
        let grid = square_grid(1.0 / 16.0, 5.0);
        let f = mixture_signal(&atoms);
        let a = count_zeros(&dgt(&f, &grid).unwrap(), 3.0).unwrap();
        let b = count_zeros(&dgt(&f.rotated(alpha), &grid).unwrap(), 3.0).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cheeger_estimate_is_scale_free_and_repeatable(w in weights(6, 7), k in 0u32..6) {
        let lambda = 2f64.powi(k as i32 - 3);
        let opts = SpectralOptions::default();
        let a = estimate_cheeger(&w, None, &opts).unwrap();
        let again = estimate_cheeger(&w, None, &opts).unwrap();
        prop_assert_eq!(a.h_star.to_bits(), again.h_star.to_bits());
        let b = estimate_cheeger(&w.scaled(lambda), None, &opts).unwrap();
        prop_assert_eq!(a.h_star, b.h_star);
    }
}

#[test]
fn synthesized_gaussian_energy() {
    let f = synthesize(SynthKind::Gaussian, SynthParams::default(), 512, DT).unwrap();
    let rel = (f.energy() - 0.5f64.sqrt()).abs() / 0.5f64.sqrt();
    assert!(rel <= 1e-8, "{rel}");
}

#[test]
fn dgt_phase_invariance_at_listed_angles() {
    let grid = square_grid(1.0 / 8.0, 4.0);
    let f = sample_mixture(&[GaussianAtom::new(Complex64::new(0.7, -0.2), 0.4, -0.6)], 257, DT).unwrap();
    let base = dgt(&f, &grid).unwrap().modulus();
    for alpha in [0.3, PI / 2.0, 2.0] {
        let m = dgt(&f.rotated(alpha), &grid).unwrap().modulus();
        let worst = m.iter().zip(base.iter()).fold(0.0f64, |w, (a, b)| w.max((a - b).abs()));
        assert!(worst <= 4.0 * f64::EPSILON, "{alpha}: {worst}");
    }
}

#[test]
fn gaussian_ambiguity_matches_closed_form() {
    let f = synthesize(SynthKind::Gaussian, SynthParams::default(), 512, DT).unwrap();
    let grid = TfGrid::centered(DT, 97, 97).unwrap();
    let a = ambiguity(&f, &grid).unwrap();
    let peak = gaussian_ambiguity_value(0.0, 0.0).norm();
    for ((i, j), z) in a.values.indexed_iter() {
        let (x, y) = grid.point(i, j);
        assert!((z - gaussian_ambiguity_value(x, y)).norm() <= 1e-6 * peak, "({x}, {y})");
    }
}
