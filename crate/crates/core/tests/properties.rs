use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use zonofd::qfp::{m_of_gamma_unconstrained, psd_gamma_upper_bound, ParametricQfp, QuadraticForm};
use zonofd::setops::Zonotope;

fn vector(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-2.0..2.0f64, n).prop_map(DVector::from_vec)
}

fn matrix(r: usize, c: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
}

fn zonotope(n: usize) -> impl Strategy<Value = Zonotope> {
    (1..8usize)
        .prop_flat_map(move |r| (vector(n), matrix(n, r)))
        .prop_map(|(c, g)| Zonotope::new(c, g).unwrap())
}

fn coefficients(r: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-1.0..=1.0f64, r).prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sum_contains_sums_of_points(
        (a, xa) in zonotope(2).prop_flat_map(|z| { let r = z.order(); (Just(z), coefficients(r)) }),
        (b, xb) in zonotope(2).prop_flat_map(|z| { let r = z.order(); (Just(z), coefficients(r)) }),
    ) {
        let p = a.at(&xa).unwrap() + b.at(&xb).unwrap();
        prop_assert!(a.minkowski_sum(&b).unwrap().contains_point(&p).unwrap());
    }

    #[test]
    fn linear_map_commutes_with_points(
        (z, xi) in zonotope(3).prop_flat_map(|z| { let r = z.order(); (Just(z), coefficients(r)) }),
        k in matrix(2, 3),
    ) {
        let mapped = z.linear_map(&k).unwrap();
        let direct = &k * z.at(&xi).unwrap();
        prop_assert!((mapped.at(&xi).unwrap() - &direct).norm() < 1e-12);
        prop_assert!(mapped.contains_point(&direct).unwrap());
    }

    #[test]
    fn support_bounds_every_point(
        (z, xi) in zonotope(2).prop_flat_map(|z| { let r = z.order(); (Just(z), coefficients(r)) }),
        d in vector(2),
    ) {
        let p = z.at(&xi).unwrap();
        prop_assert!(d.dot(&p) <= z.support(&d).unwrap() + 1e-12);
    }

    #[test]
    fn reduction_keeps_points_and_center(
        (z, xi) in zonotope(2).prop_flat_map(|z| { let r = z.order(); (Just(z), coefficients(r)) }),
        q in 2..6usize,
    ) {
        let red = z.reduce_order(q).unwrap();
        prop_assert!(red.order() <= q);
        prop_assert_eq!(red.center(), z.center());
        prop_assert!(red.contains_point(&z.at(&xi).unwrap()).unwrap());
    }

    #[test]
    fn points_outside_the_interval_hull_are_rejected(z in zonotope(2), dir in 0..4usize) {
        let rad = z.interval_radii();
        let mut p = z.center().clone();
        let i = dir % 2;
        p[i] += if dir < 2 { 1.0 } else { -1.0 } * (rad[i] + 0.1);
        prop_assert!(!z.contains_point(&p).unwrap());
    }

    #[test]
    fn dinkelbach_function_is_decreasing_and_concave(
        a in matrix(3, 2), av in vector(3), b in matrix(2, 2), bv in vector(2),
        t in 0.05..0.95f64, s in 0.05..0.95f64,
    ) {
        let num = QuadraticForm::new(a.transpose() * &a, a.transpose() * &av * 2.0, av.norm_squared() + 0.1).unwrap();
        let den = QuadraticForm::new(b.transpose() * &b, b.transpose() * &bv * 2.0, bv.norm_squared() + 0.1).unwrap();
        let p = ParametricQfp::new(num, den).unwrap();
        let bar = psd_gamma_upper_bound(&p).unwrap().min(1e3);
        let (g1, g2) = (bar * t.min(s), bar * t.max(s));
        prop_assume!(g2 - g1 > 1e-6 * bar);
        let m = |g: f64| m_of_gamma_unconstrained(&p, g).unwrap().value();
        let (m1, m2, mid) = (m(g1), m(g2), m(0.5 * (g1 + g2)));
        let tol = 1e-9 * (1.0 + m1.abs() + m2.abs());
        prop_assert!(m2 <= m1 + tol);
        prop_assert!(mid + tol >= 0.5 * (m1 + m2));
    }
}
