use std::collections::BTreeSet;

use proptest::prelude::*;
use rug::Rational;
use slowdiv::cfrac::{short_cross_inequality, spec_of, Owner};
use slowdiv::enumerate::BoxScan;
use slowdiv::nonergodic::{in_wj, spec_for, BuilderConfig};
use slowdiv::profile::{brute_profile, cross_defect, gt_length_sq, peak_of};
use slowdiv::slow::{candidates3, u_of};
use slowdiv::{Direction, Expr, IntVec2, Real, SVec, SlitConfig, VSet, WVec};

fn cfg() -> SlitConfig {
    SlitConfig::default()
}

fn angle() -> impl Strategy<Value = Direction> {
    (1i64..6_283_185)
        .prop_map(|k| Direction::from_angle(Expr::rational(Rational::from((k, 1_000_000)))))
}

fn int_vec(r: i64) -> impl Strategy<Value = IntVec2> {
    (-r..=r, -r..=r).prop_map(|(p, q)| IntVec2::new(p, q))
}

fn w_vec(r: i64) -> impl Strategy<Value = WVec> {
    (prop::bool::ANY, int_vec(r)).prop_map(|(s, n)| WVec::new(if s { 1 } else { -1 }, n))
}

fn key(v: &IntVec2) -> (String, String) {
    (v.p.to_string(), v.q.to_string())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn integer_cross_is_antisymmetric_and_bilinear(a in int_vec(1000), b in int_vec(1000), c in int_vec(1000), k in -50i64..50) {
        prop_assert_eq!(a.cross(&b), -b.cross(&a));
        prop_assert_eq!(a.add(&c).cross(&b), a.cross(&b) + c.cross(&b));
        prop_assert_eq!(a.scale_i64(k).cross(&b), a.cross(&b) * k);
    }

    #[test]
    fn translated_cross_is_antisymmetric(w in w_vec(500), x in w_vec(500)) {
        let c = cfg();
        let ab = w.cross_w_at(&x, &c, 192);
        let ba = x.cross_w_at(&w, &c, 192);
        prop_assert!(ab.overlaps(&-ba));
    }

    #[test]
    fn box_scan_is_stable_under_precision(theta in angle(), a in 1u32..400, cw in 1u32..400) {
        let scan = |prec: u32| {
            let u = theta.unit(prec);
            let ea = Real::from_rational(&Rational::from((a, 7)), prec);
            let ec = Real::from_rational(&Rational::from((cw, 113)), prec);
            let zero = [Real::zero(prec), Real::zero(prec)];
            let pts = BoxScan::new(&u, &zero, (&-&ea, &ea), (&-&ec, &ec), prec).unwrap().collect().unwrap();
            pts.iter().map(key).collect::<BTreeSet<_>>()
        };
        prop_assert_eq!(scan(128), scan(256));
    }

    #[test]
    fn short_cross_implies_convergent(w in w_vec(200), v in int_vec(300)) {
        let c = cfg();
        prop_assume!(!v.is_zero() && v.is_primitive());
        prop_assume!(w.length(&c, 64).mid() > 2.0);
        // |w_y|/|w| bounded below so the angle hypothesis has room
        let [_, y] = w.components(&c, 128);
        prop_assume!(y.abs().mid() > 0.5 * w.length(&c, 128).mid());
        prop_assume!(v.length(128).mid() > 2.0 * w.length(&c, 128).mid() / y.abs().mid());
        if short_cross_inequality(&v, &w, &c, 256).unwrap() {
            let bound = Rational::from(v.norm_sq().sqrt() + 1u32);
            let seq = spec_of(&Owner::W(w.clone()), &bound, &c).unwrap();
            prop_assert!(seq.index_of(&v).is_some());
        }
    }

    #[test]
    fn geodesic_flow_preserves_cross(u in int_vec(10_000), v in int_vec(10_000), theta in angle(), t in -30.0f64..30.0) {
        let d = cross_defect(&u, &v, &theta, t, 256);
        prop_assert!(d.contains_zero() || d.mid().abs() < 1e-40);
    }

    #[test]
    fn peak_bounds_the_profile_of_its_vector(w in w_vec(300), theta in angle(), t in -20.0f64..20.0) {
        let c = cfg();
        let v = SVec::W(w);
        let p = peak_of(&v, &theta, &c).unwrap();
        let f = -gt_length_sq(&v, &theta, t, &c).unwrap().ln().mid();
        prop_assert!(f <= p.m + 1e-12);
        let at_peak = -gt_length_sq(&v, &theta, p.t, &c).unwrap().ln().mid();
        prop_assert!((at_peak - p.m).abs() < 1e-9);
    }

    #[test]
    fn u_of_and_candidates_invariants(q in prop::sample::select(vec![(1i8, -1i64), (-1, 1)]), p in -3000i64..3000) {
        let c = cfg();
        let w = WVec::new(q.0, IntVec2::new(p, q.1));
        let v = IntVec2::new(1, 0);
        let u = u_of(&w, &v, &c).unwrap();
        prop_assert_eq!(u.cross(&v).abs(), 1);
        let x = |a: &IntVec2| w.cross_int_at(a, &c, 192).abs().mid();
        prop_assert!(x(&u) < 0.5 * x(&v));
        prop_assert!(w.dot_int_at(&u, &c, 192).mid() > 0.0);
        let ([v0, v1, v2], _) = candidates3(&w, &v, &u, &c).unwrap();
        prop_assert!(x(&v2) <= x(&v1));
        prop_assert!(x(&v1) <= x(&v) && x(&v) <= x(&v0));
        prop_assert!(0.5 * x(&v) <= x(&v1) && x(&v0) <= 2.0 * x(&v));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn brute_profile_is_one_lipschitz(theta in angle(), t0 in 0.0f64..6.0) {
        let b = brute_profile(&theta, t0, t0 + 4.0, 0.05, VSet::V, &cfg()).unwrap();
        prop_assert!(b.lipschitz_excess() <= 1e-9);
    }

    #[test]
    fn spectrum_condition_agrees_with_grid_scan(p in -4i64..=4, q in -4i64..=4, s in prop::bool::ANY, j in 0usize..6) {
        let c = cfg();
        let g = c.genus as i64;
        let w = WVec::new(if s { 1 } else { -1 }, IntVec2::new(g * p, g * q));
        let lw = w.length(&c, 128).mid().ln();
        prop_assume!(lw > 0.5);
        let bc = BuilderConfig { l0: 1.5, ..BuilderConfig::default() };
        let check = in_wj(&w, j, &bc, &c).unwrap();
        let seq = spec_for(&w, bc.t_max, &c).unwrap();
        let lens: Vec<f64> = seq.convergents.iter().map(|v| v.length(128).mid().ln()).collect();
        let step = 1e-3;
        let mut t = bc.delta(j);
        let mut grid_fail = false;
        while t <= bc.t_max {
            let lo = t + lw + lw.ln();
            let hi = lw * (1.0 + t);
            if !lens.iter().any(|&l| l >= lo && l <= hi) {
                grid_fail = true;
            }
            t += step;
        }
        let holds = check.blocking.is_empty();
        if holds {
            prop_assert!(!grid_fail);
        } else if !grid_fail {
            // every blocking gap must be narrower than the grid
            prop_assert!(check.blocking.iter().all(|(a, b)| b - a < step));
        }
    }
}
