mod common;

use common::*;
use mvfactor::estimation::{
    estimate, estimate_one_step, m_matrix, project_columns, whiteness_curves, AutocovStack,
    LagParams, Method, Mode, Side,
};
use mvfactor::linalg::{eig_sym, matmul, EigenDecomposition, Matrix};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn params(h0: usize, k: usize) -> LagParams {
    LagParams {
        h0,
        k,
        ..LagParams::default()
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn curves_match_explicit_submatrices(seed in any::<u64>(), dim in 1usize..=20, k in 1usize..=4, n in 10usize..500) {
        let stack = random_stack(seed, dim, k, n);
        let spectrum = eig_sym(&m_matrix(&stack, k).unwrap()).unwrap();
        let fast = whiteness_curves(&stack, &spectrum, k, n).unwrap();
        let slow = brute_force_curves(&stack, &spectrum, k, n);
        prop_assert!(max_abs_diff(&fast.t_curve, &slow.t_curve) <= 1e-10);
        prop_assert!(max_abs_diff(&fast.g_curve, &slow.g_curve) <= 1e-10);
    }

    #[test]
    fn curves_are_non_increasing(seed in any::<u64>(), p in 3usize..10, q in 3usize..10, n in 20usize..80) {
        let series = random_series(seed, p, q, n);
        let est = estimate(&series, &LagParams::default(), Mode::TwoStep, None).unwrap();
        let one = estimate_one_step(&series, &LagParams::default()).unwrap();
        for analysis in [&est.row, &est.column, &one.row, &one.column] {
            prop_assert!(non_increasing(&analysis.curves.t_curve));
            prop_assert!(non_increasing(&analysis.curves.g_curve));
        }
    }

    #[test]
    fn sign_flips_leave_curves_bit_identical(seed in any::<u64>(), dim in 2usize..12, signs in any::<u32>()) {
        let stack = random_stack(seed, dim, 3, 100);
        let spectrum = eig_sym(&m_matrix(&stack, 2).unwrap()).unwrap();
        let flip = Matrix::from_diag(
            &(0..dim).map(|j| if signs >> j & 1 == 1 { -1.0 } else { 1.0 }).collect::<Vec<_>>(),
        );
        let flipped = EigenDecomposition {
            values: spectrum.values.clone(),
            vectors: matmul(&spectrum.vectors, &flip).unwrap(),
        };
        let a = whiteness_curves(&stack, &spectrum, 3, 100).unwrap();
        let b = whiteness_curves(&stack, &flipped, 3, 100).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn doubling_scales_curves_exactly(seed in any::<u64>(), p in 3usize..9, q in 3usize..9) {
        let cfg = dgp(p, q, 1, 2.min(q), 120, 0.7);
        let series = simulated(&cfg, seed);
        let base = estimate_one_step(&series, &LagParams::default()).unwrap();
        let scaled = estimate_one_step(&series.scaled(2.0), &LagParams::default()).unwrap();
        for side in Side::BOTH {
            let (b, s) = (base.side(side), scaled.side(side));
            for (x, y) in b.curves.t_curve.iter().zip(&s.curves.t_curve) {
                prop_assert_eq!(4.0 * x, *y);
            }
            for (x, y) in b.curves.g_curve.iter().zip(&s.curves.g_curve) {
                prop_assert_eq!(16.0 * x, *y);
            }
        }
        prop_assert_eq!(base.counts(Method::Sr), scaled.counts(Method::Sr));
    }

    #[test]
    fn scaling_preserves_estimates(seed in any::<u64>(), kappa in 0.1f64..10.0) {
        let cfg = dgp(8, 6, 2, 2, 150, 0.6);
        let series = simulated(&cfg, seed);
        for mode in [Mode::OneStep, Mode::TwoStep] {
            let base = estimate(&series, &LagParams::default(), mode, None).unwrap();
            let scaled = estimate(&series.scaled(kappa), &LagParams::default(), mode, None).unwrap();
            for method in Method::ALL {
                prop_assert_eq!(base.counts(method), scaled.counts(method));
            }
            for side in Side::BOTH {
                let (b, s) = (base.side(side), scaled.side(side));
                let k2 = kappa * kappa;
                for (x, y) in b.curves.t_curve.iter().zip(&s.curves.t_curve) {
                    prop_assert!((k2 * x - y).abs() <= 1e-9 * (1.0 + y.abs()));
                }
                for (x, y) in b.curves.g_curve.iter().zip(&s.curves.g_curve) {
                    prop_assert!((k2 * k2 * x - y).abs() <= 1e-9 * (1.0 + y.abs()));
                }
            }
        }
    }

    #[test]
    fn transposing_swaps_sides(seed in any::<u64>(), p in 3usize..9, q in 3usize..9) {
        let series = random_series(seed, p, q, 60);
        for mode in [Mode::OneStep, Mode::TwoStep] {
            let a = estimate(&series, &LagParams::default(), mode, None).unwrap();
            let b = estimate(&series.transposed(), &LagParams::default(), mode, None).unwrap();
            prop_assert_eq!(&a.row.curves, &b.column.curves);
            prop_assert_eq!(&a.column.curves, &b.row.curves);
            for method in Method::ALL {
                let (r, c) = a.counts(method);
                prop_assert_eq!(b.counts(method), (c, r));
            }
        }
    }

    #[test]
    fn projection_never_grows_frames(seed in any::<u64>(), p in 1usize..8, q in 2usize..8, m in 1usize..8) {
        let m = m.min(q);
        let series = random_series(seed, p, q, 12);
        let basis = eig_sym(&m_matrix(&AutocovStack::build(&series, Side::Column, 1).unwrap(), 1).unwrap())
            .unwrap()
            .leading_vectors(m);
        let projected = project_columns(&series, &basis).unwrap();
        for (x, y) in projected.frames().iter().zip(series.frames()) {
            prop_assert!(x.frobenius_norm() <= y.frobenius_norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn eigen_spectrum_sums_to_trace(seed in any::<u64>(), dim in 1usize..16) {
        let mut rng = rng(seed);
        let b = random_matrix(&mut rng, dim + 2, dim);
        let a = mvfactor::linalg::matmul_tn(&b, &b).unwrap();
        let e = eig_sym(&a).unwrap();
        let sum: f64 = e.values.iter().sum();
        prop_assert!((sum - a.trace()).abs() <= 1e-8 * (1.0 + a.trace()));
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let rebuilt = matmul(&matmul(&e.vectors, &Matrix::from_diag(&e.values)).unwrap(), &e.vectors.transpose()).unwrap();
        let again = eig_sym(&rebuilt).unwrap();
        prop_assert!(max_abs_diff(&again.values, &e.values) <= 1e-8 * (1.0 + e.values[0]));
    }
}

#[test]
fn scale_three_within_tolerance() {
    let cfg = dgp(10, 8, 2, 3, 200, 0.5);
    let series = simulated(&cfg, 9);
    let base = estimate_one_step(&series, &params(2, 3)).unwrap();
    let scaled = estimate_one_step(&series.scaled(3.0), &params(2, 3)).unwrap();
    for side in Side::BOTH {
        let (b, s) = (base.side(side), scaled.side(side));
        for (x, y) in b.curves.t_curve.iter().zip(&s.curves.t_curve) {
            assert!((9.0 * x - y).abs() <= 1e-10 * y.abs().max(1.0));
        }
        for (x, y) in b.curves.g_curve.iter().zip(&s.curves.g_curve) {
            assert!((81.0 * x - y).abs() <= 1e-10 * y.abs().max(1.0));
        }
    }
}
