use std::f64::consts::PI;

use geodesic_count::counting::{
    correlation_sum, count_report_with_table, error_series, exponent_fit, integrate_square_linear, main_coefficient,
    Branch,
};
use geodesic_count::geometry::{huber_coords, huber_to_point, tan_v_along_axis, tan_v_direct, HPoint};
use geodesic_count::group::{canonical_double_coset, enumerate_double_cosets, GroupElement};
use geodesic_count::quadfield::{ideal_count, ideal_count_bruteforce, ideal_count_sieve, IdealCountTable, QuadInt};
use geodesic_count::specfun::gamma::gamma;
use geodesic_count::verify::{rel_diff, Tolerances};
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::OnceLock;

fn table() -> &'static IdealCountTable {
    static T: OnceLock<IdealCountTable> = OnceLock::new();
    T.get_or_init(|| ideal_count_sieve(200_000).unwrap())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![2u64, 3, 5, 7])
}

fn compose(a: &GroupElement, b: &GroupElement) -> GroupElement {
    a.compose(b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn norm_is_multiplicative(x1 in -1000i128..1000, y1 in -1000i128..1000, x2 in -1000i128..1000, y2 in -1000i128..1000) {
        let a = QuadInt { x: x1, y: y1 };
        let b = QuadInt { x: x2, y: y2 };
        prop_assert_eq!((a * b).norm(), a.norm() * b.norm());
        prop_assert_eq!((a * b).conj(), a.conj() * b.conj());
    }

    #[test]
    fn sieve_matches_formula_and_bruteforce(n in 1u64..20_000) {
        let t = table();
        prop_assert_eq!(t.get(n) as u64, ideal_count(n));
        prop_assert_eq!(ideal_count(n), ideal_count_bruteforce(n));
    }

    #[test]
    fn ideal_count_is_multiplicative(m in 1u64..400, n in 1u64..400) {
        prop_assume!(gcd(m, n) == 1);
        prop_assert_eq!(ideal_count(m * n), ideal_count(m) * ideal_count(n));
    }

    #[test]
    fn correlation_sum_is_monotone(p in prime(), x in 0u64..2000, dx in 0u64..500) {
        for b in [Branch::Plus, Branch::Minus] {
            let lo = correlation_sum(table(), p, b, x).unwrap();
            let hi = correlation_sum(table(), p, b, x + dx).unwrap();
            prop_assert!(lo <= hi);
        }
    }

    #[test]
    fn count_report_dictionary(p in prime(), x in 1i64..400) {
        let r = count_report_with_table(table(), p, x).unwrap();
        prop_assert_eq!(r.n1, 4 * (r.pair_counts.plus + r.pair_counts.minus) as i64 + 1);
        prop_assert_eq!(r.n4, 4 * (r.pair_counts.plus as i64 - r.pair_counts.minus as i64) + 1);
        prop_assert_eq!((r.n2, r.n3), (0, 0));
        for mu in [1, -1] {
            for mp in [1, -1] {
                prop_assert_eq!(r.nmumu.get(mu, mp), r.nmumu_from_sums(mu, mp));
            }
        }
    }

    #[test]
    fn classes_are_invariant_under_the_axis_stabiliser(p in prime(), x in 10i64..150, k in -2i32..=2, l in -2i32..=2, pick in any::<prop::sample::Index>()) {
        let classes = enumerate_double_cosets(p as i64, x);
        let c = classes[pick.index(classes.len())];
        let h = GroupElement::h(p as i64);
        let hinv = h.inverse();
        let mut g = c.rep;
        for _ in 0..k.abs() {
            g = compose(if k > 0 { &h } else { &hinv }, &g);
        }
        for _ in 0..l.abs() {
            g = compose(&g, if l > 0 { &h } else { &hinv });
        }
        let back = canonical_double_coset(&g);
        prop_assert_eq!(back.rep, c.rep);
        prop_assert_eq!(back.b_value, c.b_value);
    }

    #[test]
    fn error_series_decomposes(p in prime(), n in 2usize..40, step in 1.0f64..50.0, branch in prop::sample::select(vec![Branch::Plus, Branch::Minus])) {
        let xs: Vec<f64> = (1..=n).map(|k| k as f64 * step).collect();
        let s = error_series(table(), p, branch, &xs).unwrap();
        let c = main_coefficient(p);
        for (i, &x) in xs.iter().enumerate() {
            prop_assert!((s.m[i] - c * x).abs() <= 1e-12 * s.m[i].abs().max(1.0));
            prop_assert!((s.s[i] as f64 - s.m[i] - s.e[i]).abs() <= 1e-9 * s.m[i].max(1.0));
            prop_assert_eq!(s.s[i], correlation_sum(table(), p, branch, x.floor() as u64).unwrap());
        }
        prop_assert!(s.jumps.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.jumps.iter().all(|&j| (j as f64) <= xs[n - 1]));
    }

    #[test]
    fn square_integral_matches_simpson(a in -5.0f64..5.0, w in 0.01f64..10.0, ea in -100.0f64..100.0, eb in -100.0f64..100.0) {
        let b = a + w;
        let f = |x: f64| { let e = ea + (eb - ea) * (x - a) / w; e * e };
        let simpson = w / 6.0 * (f(a) + 4.0 * f(a + w / 2.0) + f(b));
        let exact = integrate_square_linear(a, b, ea, eb);
        prop_assert!((exact - simpson).abs() <= 1e-9 * simpson.abs().max(1.0));
    }

    #[test]
    fn exponent_fit_recovers_power_laws(alpha in -2.0f64..2.0, c in 0.01f64..100.0) {
        let pts: Vec<(f64, f64)> = (0..20).map(|k| { let x = 10f64.powf(1.0 + k as f64 / 5.0); (x, c * x.powf(alpha)) }).collect();
        let fit = exponent_fit(&pts).unwrap();
        prop_assert!((fit.slope - alpha).abs() < 1e-9);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-8);
    }

    #[test]
    fn huber_roundtrip(x in -50.0f64..50.0, y in 1e-3f64..50.0) {
        let z = HPoint::new(x, y).unwrap();
        let back = huber_to_point(huber_coords(z));
        prop_assert!(rel_diff(back.x, x, 1.0) < 1e-12);
        prop_assert!(rel_diff(back.y, y, 1.0) < 1e-12);
    }

    #[test]
    fn tan_v_forms_agree_on_axis(p in prime(), pick in any::<prop::sample::Index>(), ly in -2.0f64..2.0) {
        let classes: Vec<_> = enumerate_double_cosets(p as i64, 60).into_iter().filter(|c| !c.is_identity()).collect();
        let c = classes[pick.index(classes.len())];
        let y = ly.exp();
        let closed = tan_v_along_axis(&c.rep, 0.0, y);
        let direct = tan_v_direct(&c.rep, 0.0, y);
        prop_assert!(rel_diff(closed, direct, 1.0) < 1e-10, "{closed} vs {direct}");
    }

    #[test]
    fn gamma_reflection(re in -4.5f64..4.5, im in 0.1f64..20.0) {
        let z = Complex64::new(re, im);
        let lhs = gamma(z).unwrap() * gamma(Complex64::new(1.0, 0.0) - z).unwrap();
        let rhs = Complex64::new(PI, 0.0) / (z * PI).sin();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm());
    }

    #[test]
    fn rel_diff_is_symmetric_and_bounded(a in -1e6f64..1e6, b in -1e6f64..1e6, floor in 0.0f64..10.0) {
        prop_assume!(a != 0.0 || b != 0.0 || floor > 0.0);
        let d = rel_diff(a, b, floor);
        prop_assert_eq!(d, rel_diff(b, a, floor));
        prop_assert!((0.0..=2.0).contains(&d));
    }

    #[test]
    fn tolerance_override_roundtrip(name in "[a-z_]{1,20}", v in 0.0f64..1.0) {
        let mut t = Tolerances::new();
        t.parse_override(&format!("{name}={v}")).unwrap();
        prop_assert_eq!(t.get(&name, 7.0), v);
        prop_assert_eq!(t.get("never_set_name", 7.0), 7.0);
    }
}
