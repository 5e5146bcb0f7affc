mod common;

use mirage_core::channel::{erf, erfc};
use proptest::prelude::*;

#[test]
fn matches_high_precision_grid() {
    let grid = common::erfc_grid();
    assert_eq!(grid.len(), 1000);
    let worst = grid.iter().map(|&(x, y)| (erfc(x) - y).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-10, "max abs error {worst:e}");
}

#[test]
fn f32_tracks_grid() {
    for (x, y) in common::erfc_grid() {
        let v = erfc(x as f32) as f64;
        assert!((v - y).abs() <= 2e-6 * y.max(1e-3), "x = {x}: {v} vs {y}");
    }
}

/// Composite Simpson integration of `2/sqrt(pi) exp(-t^2)` over `[x, x + 12]`.
fn erfc_by_quadrature(x: f64) -> f64 {
    let n = 20_000;
    let h = 12.0 / n as f64;
    let f = |t: f64| (-t * t).exp();
    let mut s = f(x) + f(x + 12.0);
    for i in 1..n {
        s += f(x + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0 * 2.0 / std::f64::consts::PI.sqrt()
}

#[test]
fn matches_quadrature() {
    for &x in &[0.0, 0.3, 1.0, 1.7, 2.5, 3.2, 4.5] {
        let q = erfc_by_quadrature(x);
        assert!((erfc(x) - q).abs() <= 1e-12 + 1e-10 * q, "x = {x}");
    }
}

proptest! {
    #[test]
    fn reflection(x in -6.0f64..6.0) {
        prop_assert!((erfc(x) + erfc(-x) - 2.0).abs() < 1e-14);
        prop_assert!((erf(x) + erfc(x) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decreasing(a in -6.0f64..6.0, b in -6.0f64..6.0) {
        prop_assume!(a < b);
        prop_assert!(erfc(a) >= erfc(b));
    }
}
