//! Values frozen from an independent 50-digit mpmath computation.

use rug::Rational;
use slowdiv::cfrac::{spec_of, Owner};
use slowdiv::lattice::cross_w;
use slowdiv::profile::peak_of;
use slowdiv::slow::u_of;
use slowdiv::{Direction, Expr, IntVec2, SVec, SlitConfig, WVec};

fn cfg() -> SlitConfig {
    SlitConfig::default()
}

#[test]
fn cross_of_translated_vector() {
    // (√2 + 4, √3 + 2) × (2, 1) = √2 − 2√3
    let w = WVec::new(1, IntVec2::new(5, 3));
    let r = cross_w(&w, &IntVec2::new(2, 1), &cfg()).unwrap();
    assert!(r.radius() < 1e-15);
    assert!((r.mid() + 2.049_888_052_764_659_5).abs() < 1e-15);
}

#[test]
fn peak_of_integer_vector() {
    let theta = Direction::from_angle("7/10".parse().unwrap());
    let p = peak_of(&SVec::Z(IntVec2::new(3, -1)), &theta, &cfg()).unwrap();
    assert!((p.t + 0.491_361_189_757_072_1).abs() < 1e-13);
    assert!((p.m + 2.186_433_304_577_416).abs() < 1e-13);
}

#[test]
fn peak_of_translated_vector() {
    let theta = Direction::from_angle("7/10".parse().unwrap());
    let p = peak_of(&SVec::W(WVec::new(1, IntVec2::new(5, -2))), &theta, &cfg()).unwrap();
    assert!((p.t + 0.293_411_768_750_243_1).abs() < 1e-13);
    assert!((p.m + 3.389_007_197_950_588_7).abs() < 1e-13);
}

#[test]
fn golden_direction_convergents_are_fibonacci() {
    let theta = Direction::new("(1+sqrt(5))/2".parse().unwrap(), Expr::int(1));
    let seq = spec_of(&Owner::Direction(theta), &Rational::from(100_000), &cfg()).unwrap();
    assert!(seq.quotients.iter().all(|a| *a == 1));
    let mut fib = vec![1i64, 1];
    while fib.len() < seq.len() + 2 {
        let n = fib[fib.len() - 1] + fib[fib.len() - 2];
        fib.push(n);
    }
    for (k, v) in seq.convergents.iter().enumerate() {
        assert_eq!(*v, IntVec2::new(fib[k + 1], fib[k]), "k = {k}");
    }
    assert!(seq.len() >= 20);
}

#[test]
fn u_of_matches_exhaustive_search() {
    // minimiser of |w×u| over u = (a, ±1), a ∈ [−10⁶, 10⁶], oriented so that w·u > 0
    let cases = [
        ((1, 2, -1), (9, -1)),
        ((1, 37, -1), (140, -1)),
        ((1, 1001, -1), (3737, -1)),
        ((1, 250_000, -1), (933_014, -1)),
        ((-1, -5, 1), (-20, 1)),
        ((-1, 90_000, 1), (335_883, 1)),
    ];
    let v = IntVec2::new(1, 0);
    for ((s, p, q), (a, e)) in cases {
        let w = WVec::new(s, IntVec2::new(p, q));
        assert_eq!(u_of(&w, &v, &cfg()).unwrap(), IntVec2::new(a, e), "w = {w}");
    }
}
