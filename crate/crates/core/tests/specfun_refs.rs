//! Spherical Bessel values against 80-digit mpmath references.

mod common;

use common::{rel_err_scaled, rows};
use proptest::prelude::*;
use sonoflash_core::specfun::{
    bessel_pair, sph_bessel_j, sph_bessel_y, wronskian_residual, BesselSeries, FLUSH_THRESHOLD,
};

fn envelope(a: &str, b: &str) -> f64 {
    let a: f64 = a.parse().unwrap();
    let b: f64 = b.parse().unwrap();
    a.hypot(b)
}

#[test]
fn all_reference_points_within_1e12() {
    let mut worst = 0.0f64;
    for r in rows("bessel_refs.csv") {
        let l: usize = r[0].parse().unwrap();
        let x: f64 = r[1].parse().unwrap();
        let j = BesselSeries::regular(l, x).unwrap();
        let y = BesselSeries::irregular(l, x).unwrap();
        let cases = [
            (j.scaled(l), &r[2], envelope(&r[2], &r[3])),
            (y.scaled(l), &r[3], envelope(&r[2], &r[3])),
            (j.riccati_scaled(l), &r[4], envelope(&r[4], &r[5])),
            (y.riccati_scaled(l), &r[5], envelope(&r[4], &r[5])),
        ];
        for (k, (got, reference, env)) in cases.into_iter().enumerate() {
            let refv: f64 = reference.parse().unwrap();
            let err = if refv.is_finite() && refv.abs() > 1e-280 && x > l as f64 {
                // near a zero of an oscillating function, measure against the envelope
                (got.to_f64() - refv).abs() / env.max(refv.abs())
            } else {
                rel_err_scaled(got, reference)
            };
            worst = worst.max(err);
            assert!(err < 1e-12, "l={l} x={x} column {k}: rel err {err:e}");
        }
    }
    println!("worst relative error {worst:e}");
}

#[test]
fn scalar_api_flushes_below_threshold() {
    for r in rows("bessel_refs.csv") {
        let l: usize = r[0].parse().unwrap();
        let x: f64 = r[1].parse().unwrap();
        let refv: f64 = r[2].parse().unwrap();
        let got = sph_bessel_j(l, x).unwrap();
        if refv.abs() < FLUSH_THRESHOLD {
            assert!(got.abs() <= FLUSH_THRESHOLD, "l={l} x={x}");
        } else {
            assert!((got - refv).abs() <= 1e-12 * refv.abs().max(1e-3 * refv.abs().max(1.0 / x)));
        }
    }
}

#[test]
fn closed_forms() {
    for &x in &[0.2, 1.0, 3.3, 17.0, 250.0] {
        let (s, c) = f64::sin_cos(x);
        let j0 = s / x;
        let y0 = -c / x;
        let j1 = s / (x * x) - c / x;
        let y1 = -c / (x * x) - s / x;
        let j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
        for (got, want) in [
            (sph_bessel_j(0, x).unwrap(), j0),
            (sph_bessel_y(0, x).unwrap(), y0),
            (sph_bessel_j(1, x).unwrap(), j1),
            (sph_bessel_y(1, x).unwrap(), y1),
        ] {
            assert!((got - want).abs() < 1e-14 * (want.abs() + 1.0 / x), "x={x}");
        }
        if x > 1.0 {
            assert!((sph_bessel_j(2, x).unwrap() - j2).abs() < 1e-13 / x);
        }
    }
}

#[test]
fn riccati_derivative_matches_finite_difference() {
    for &(l, x) in &[(0usize, 2.0), (3, 1.5), (10, 12.0), (40, 30.0), (40, 60.0)] {
        let h = 1e-5 * x;
        let f = |t: f64| t * sph_bessel_j(l, t).unwrap();
        let g = |t: f64| t * sph_bessel_y(l, t).unwrap();
        let fd_j = (f(x + h) - f(x - h)) / (2.0 * h);
        let fd_y = (g(x + h) - g(x - h)) / (2.0 * h);
        let p = bessel_pair(l, x).unwrap();
        assert!((p.jp - fd_j).abs() < 1e-7 * (p.jp.abs() + p.j.abs() * x), "l={l}");
        assert!((p.yp - fd_y).abs() < 1e-7 * (p.yp.abs() + p.y.abs() * x), "l={l}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wronskian_holds_everywhere(x in 1e-3f64..5e3, l in 0usize..1500) {
        let j = BesselSeries::regular(l, x).unwrap();
        let y = BesselSeries::irregular(l, x).unwrap();
        let r = wronskian_residual(&j, &y, l);
        prop_assert!(r.abs() < 1e-10, "l={} x={} residual {}", l, x, r);
    }

    #[test]
    fn three_term_recurrence(x in 0.05f64..500.0, l in 1usize..300) {
        let s = BesselSeries::regular(l + 1, x).unwrap();
        let (a, b, c) = (s.scaled(l - 1), s.scaled(l), s.scaled(l + 1));
        // j_{l-1} + j_{l+1} = (2l+1)/x j_l, compared at the exponent of j_l
        let sh = |v: sonoflash_core::specfun::Scaled| v.mant * 2f64.powi((v.exp - b.exp).clamp(-1000, 1000) as i32);
        let lhs = sh(a) + sh(c);
        let rhs = (2 * l + 1) as f64 / x * b.mant;
        let scale = sh(a).abs().max(sh(c).abs()).max(rhs.abs());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }
}
