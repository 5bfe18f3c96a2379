//! Primitive lattice points in sectors, annular sector differences and strips.
//!
//! `dens(Ω) = #(Z ∩ Ω) / area(Ω)` where `Z` is the set of primitive integer vectors.

use std::cmp::Ordering;
use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::cfrac::{spec_of, Owner};
use crate::enumerate::BoxScan;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lattice::{
    bits_hint, cross2, dot2, enumerate_in_strip, Direction, IntVec2, SlitConfig, VSet, WVec,
};
use crate::real::Real;

/// A bounded planar region.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// `|v| ≤ b`.
    Disk {
        #[serde(with = "crate::lattice::serde_rat")]
        b: Rational,
    },
    /// `x, y ≥ 0`, `x + y ≤ a`.
    Triangle {
        #[serde(with = "crate::lattice::serde_rat")]
        a: Rational,
    },
    /// `x, y ≥ 0`, `a < x + y ≤ 2a`.
    TriangleDiff {
        #[serde(with = "crate::lattice::serde_rat")]
        a: Rational,
    },
    /// Closed counterclockwise arc from `lo` to `hi` (less than a half turn), `|v| ≤ b`.
    Sector {
        lo: IntVec2,
        hi: IntVec2,
        #[serde(with = "crate::lattice::serde_rat")]
        b: Rational,
    },
    /// Same arc, `b < |v| ≤ 2b`.
    SectorDiff {
        lo: IntVec2,
        hi: IntVec2,
        #[serde(with = "crate::lattice::serde_rat")]
        b: Rational,
    },
    /// Directions within angle `asin(eps/b)` of `θ`, `b < |v| ≤ 2b`.
    ArcDiff {
        theta: Direction,
        #[serde(with = "crate::lattice::serde_rat")]
        eps: Rational,
        #[serde(with = "crate::lattice::serde_rat")]
        b: Rational,
    },
    /// `|v×θ| < eps`, `b < |v| ≤ 2b`, `v·θ > 0`.
    Strip {
        theta: Direction,
        #[serde(with = "crate::lattice::serde_rat")]
        eps: Rational,
        #[serde(with = "crate::lattice::serde_rat")]
        b: Rational,
    },
}

fn arc_angle(lo: &IntVec2, hi: &IntVec2, prec: u32) -> Result<Real> {
    let c = Real::from_integer(&lo.cross(hi), prec);
    let d = lo.dot(hi);
    if c.sign()? != Ordering::Greater {
        return Err(Error::Invalid(
            "sector arc must turn counterclockwise by less than a half turn".into(),
        ));
    }
    Ok(match d.cmp0() {
        Ordering::Greater => (c / Real::from_integer(&d, prec)).atan(),
        Ordering::Equal => Real::pi(prec).div_i64(2),
        Ordering::Less => Real::pi(prec) - (c / Real::from_integer(&(-d), prec)).atan(),
    })
}

/// `∫_{−ε}^{ε} √(R² − c²) dc = ε√(R² − ε²) + R² asin(ε/R)`.
fn half_disk_slab(eps: &Real, r: &Real) -> Real {
    let r2 = r.square();
    eps * (&r2 - &eps.square()).sqrt() + &r2 * (eps / r).asin()
}

impl Region {
    pub fn area(&self, prec: u32) -> Result<Real> {
        let rat = |r: &Rational| Real::from_rational(r, prec);
        Ok(match self {
            Region::Disk { b } => Real::pi(prec) * rat(b).square(),
            Region::Triangle { a } => rat(a).square().div_i64(2),
            Region::TriangleDiff { a } => rat(a).square().mul_i64(3).div_i64(2),
            Region::Sector { lo, hi, b } => {
                arc_angle(lo, hi, prec)? * rat(b).square() / Real::from_i64(2, prec)
            }
            Region::SectorDiff { lo, hi, b } => {
                arc_angle(lo, hi, prec)? * rat(b).square().mul_i64(3) / Real::from_i64(2, prec)
            }
            Region::ArcDiff { eps, b, .. } => {
                let phi = (rat(eps) / rat(b)).asin();
                phi * rat(b).square().mul_i64(3)
            }
            Region::Strip { eps, b, .. } => {
                if *eps > *b {
                    return Err(Error::Invalid("strip area formula needs eps ≤ b".into()));
                }
                let e = rat(eps);
                half_disk_slab(&e, &rat(b).mul_i64(2)) - half_disk_slab(&e, &rat(b))
            }
        })
    }

    fn validate(&self) -> Result<()> {
        let pos = |r: &Rational, name: &str| {
            if *r > 0 {
                Ok(())
            } else {
                Err(Error::Invalid(format!("{name} must be positive")))
            }
        };
        match self {
            Region::Disk { b } => pos(b, "b"),
            Region::Triangle { a } | Region::TriangleDiff { a } => pos(a, "a"),
            Region::Sector { b, .. } | Region::SectorDiff { b, .. } => pos(b, "b"),
            Region::ArcDiff { eps, b, .. } | Region::Strip { eps, b, .. } => {
                pos(eps, "eps")?;
                pos(b, "b")?;
                if eps > b {
                    return Err(Error::Invalid("need eps ≤ b".into()));
                }
                Ok(())
            }
        }
    }

    /// Largest `|v|` any point of the region may have.
    fn radius(&self) -> Rational {
        match self {
            Region::Disk { b } | Region::Sector { b, .. } => b.clone(),
            Region::Triangle { a } => a.clone(),
            Region::TriangleDiff { a } => Rational::from(a * 2u32),
            Region::SectorDiff { b, .. } | Region::ArcDiff { b, .. } | Region::Strip { b, .. } => {
                Rational::from(b * 2u32)
            }
        }
    }
}

fn ceil_rat(r: &Rational) -> Integer {
    r.clone().ceil().into_numer_denom().0
}

/// Exact membership for regions defined over the integers.
fn contains_exact(region: &Region, v: &IntVec2) -> Option<bool> {
    let n2 = Rational::from(v.norm_sq());
    let sq = |r: &Rational| Rational::from(r * r);
    match region {
        Region::Disk { b } => Some(n2 <= sq(b)),
        Region::Triangle { a } => Some(v.p >= 0 && v.q >= 0 && Rational::from(&v.p + &v.q) <= *a),
        Region::TriangleDiff { a } => {
            let s = Rational::from(&v.p + &v.q);
            Some(v.p >= 0 && v.q >= 0 && s > *a && s <= Rational::from(a * 2u32))
        }
        Region::Sector { lo, hi, b } => Some(lo.cross(v) >= 0 && v.cross(hi) >= 0 && n2 <= sq(b)),
        Region::SectorDiff { lo, hi, b } => {
            let four_b2 = sq(b) * 4u32;
            Some(lo.cross(v) >= 0 && v.cross(hi) >= 0 && n2 > sq(b) && n2 <= four_b2)
        }
        Region::ArcDiff { .. } | Region::Strip { .. } => None,
    }
}

/// Number of primitive integer vectors in the region.
pub fn count_primitive(region: &Region, cfg: &SlitConfig) -> Result<u64> {
    region.validate()?;
    match region {
        Region::Strip { theta, eps, b } => {
            let two_b = Rational::from(b * 2u32);
            Ok(enumerate_in_strip(VSet::Z, theta, eps, b, &two_b, cfg)?.len() as u64)
        }
        Region::ArcDiff { theta, eps, b } => count_arc_diff(theta, eps, b, cfg),
        _ => {
            let r = ceil_rat(&region.radius());
            let side = Integer::from(&r * 2u32) + 1u32;
            let cells = Integer::from(&side * &side);
            if cells > cfg.enum_budget {
                return Err(Error::BudgetExceeded {
                    op: "count_primitive",
                    detail: format!("{cells} lattice cells"),
                });
            }
            let r = r.to_i64().expect("radius fits");
            let mut count = 0u64;
            for p in -r..=r {
                for q in -r..=r {
                    let v = IntVec2::new(p, q);
                    if v.is_zero() || !v.is_primitive() {
                        continue;
                    }
                    if contains_exact(region, &v) == Some(true) {
                        count += 1;
                    }
                }
            }
            Ok(count)
        }
    }
}

fn count_arc_diff(
    theta: &Direction,
    eps: &Rational,
    b: &Rational,
    cfg: &SlitConfig,
) -> Result<u64> {
    let start = 96 + 2 * (b.to_f64().max(2.0).log2() as u32);
    cfg.escalate("count_primitive", start, |prec| {
        let u = theta.unit(prec);
        let e = Real::from_rational(eps, prec);
        let bb = Real::from_rational(b, prec);
        let b2 = bb.square();
        let four_b2 = b2.mul_i64(4);
        // |c| < |v| ε/b ≤ 2ε
        let cw = e.mul_i64(2);
        let scan = BoxScan::new(
            &u,
            &[Real::zero(prec), Real::zero(prec)],
            (&Real::zero(prec), &bb.mul_i64(2)),
            (&-&cw, &cw),
            prec,
        )?
        .with_budget(cfg.enum_budget);
        let mut count = 0u64;
        let mut err = None;
        let ratio_sq = (&e / &bb).square();
        scan.for_each(|n| {
            if n.is_zero() || !n.is_primitive() {
                return ControlFlow::Continue(());
            }
            let r = (|| -> Result<bool> {
                let pv = n.components(prec);
                let l2 = Real::from_integer(&n.norm_sq(), prec);
                if !(l2.gt(&b2)? && l2.le(&four_b2)?) {
                    return Ok(false);
                }
                if !dot2(&pv, &u).is_positive()? {
                    return Ok(false);
                }
                cross2(&pv, &u).square().lt(&(&l2 * &ratio_sq))
            })();
            match r {
                Ok(true) => count += 1,
                Ok(false) => {}
                Err(e) => {
                    err = Some(e);
                    return ControlFlow::Break(());
                }
            }
            ControlFlow::Continue(())
        })?;
        match err {
            Some(e) => Err(e),
            None => Ok(count),
        }
    })
}

/// A density measurement with the applicable lower bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityReport {
    pub region: Region,
    pub count: u64,
    pub area: f64,
    pub dens: f64,
    /// Exact `count/area` as `"p/q"` when the area is rational.
    pub dens_exact: Option<String>,
    pub bound: Option<f64>,
    pub bound_label: Option<String>,
    /// Spectrum hypothesis of the sector and strip bounds; `None` when not applicable.
    pub hypothesis: Option<bool>,
    /// `dens > bound`, certified; `None` when no bound is asserted.
    pub passed: Option<bool>,
}

/// Whether some convergent of `θ` has length in `[1/eps, b]`.
pub fn spectrum_meets(
    theta: &Direction,
    eps: &Rational,
    b: &Rational,
    cfg: &SlitConfig,
) -> Result<bool> {
    let lo = eps.clone().recip();
    if lo > *b {
        return Ok(false);
    }
    let owner = Owner::Direction(theta.clone());
    let bound = if *b < 1 { Rational::from(1) } else { b.clone() };
    let seq = spec_of(&owner, &bound, cfg)?;
    let lo2 = Rational::from(&lo * &lo);
    let b2 = Rational::from(b * b);
    Ok(seq.convergents.iter().any(|v| {
        let n = Rational::from(v.norm_sq());
        n >= lo2 && n <= b2
    }))
}

fn endpoints_in_sb(lo: &IntVec2, hi: &IntVec2, b: &Rational) -> bool {
    let b2 = Rational::from(b * b);
    lo.is_primitive() && hi.is_primitive() && lo.norm_sq() <= b2 && hi.norm_sq() <= b2
}

/// Count, area, density and bound check for one region.
pub fn dens_of(region: &Region, cfg: &SlitConfig) -> Result<DensityReport> {
    let count = count_primitive(region, cfg)?;
    let prec = 256;
    let area = region.area(prec)?;
    let dens = Real::from_integer(&Integer::from(count), prec) / &area;
    let exact_area = match region {
        Region::Triangle { a } => Some(Rational::from(a * a) / 2u32),
        Region::TriangleDiff { a } => Some(Rational::from(a * a) * 3u32 / 2u32),
        _ => None,
    };
    let dens_exact = exact_area.map(|ar| (Rational::from(count) / ar).to_string());
    let pi27 = Real::pi(prec).mul_i64(27);
    let (bound, label, hypothesis): (Option<Real>, Option<&str>, Option<bool>) = match region {
        Region::TriangleDiff { a } => {
            // convex, contains (0,0), (1,0), (0,1) and not (1,1) exactly when 1 ≤ a < 2
            let ok = *a >= 1 && *a < 2;
            (
                ok.then(|| Real::from_rational(&Rational::from((8, 27)), prec)),
                ok.then_some("8/27"),
                None,
            )
        }
        Region::SectorDiff { lo, hi, b } => {
            let ok = endpoints_in_sb(lo, hi, b);
            (
                ok.then(|| Real::from_rational(&Rational::from((8, 27)), prec)),
                ok.then_some("8/27"),
                None,
            )
        }
        Region::ArcDiff { theta, eps, b } => {
            let h = *b >= 1 && spectrum_meets(theta, eps, b, cfg)?;
            (
                h.then(|| Real::from_i64(4, prec) / &pi27),
                h.then_some("4/(27pi)"),
                Some(h),
            )
        }
        Region::Strip { theta, eps, b } => {
            let h = *eps <= 1 && *b >= 1 && spectrum_meets(theta, eps, b, cfg)?;
            (
                h.then(|| Real::from_i64(2, prec) / &pi27),
                h.then_some("2/(27pi)"),
                Some(h),
            )
        }
        _ => (None, None, None),
    };
    let passed = match &bound {
        Some(bd) => Some(dens.gt(bd).map_err(|_| Error::PrecisionExhausted {
            op: "dens_of",
            bits: prec,
        })?),
        None => None,
    };
    Ok(DensityReport {
        region: region.clone(),
        count,
        area: area.mid(),
        dens: dens.mid(),
        dens_exact,
        bound: bound.map(|b| b.mid()),
        bound_label: label.map(str::to_string),
        hypothesis,
        passed,
    })
}

/// Consecutive primitive directions of length at most `b` in the closed first
/// quadrant, by Stern–Brocot descent from `(1,0)`, `(0,1)`. Each pair `(u, u')`
/// has `u × u' = 1` and `|u + u'| > b`.
pub fn minimal_intervals_quadrant(b: u64) -> Vec<(IntVec2, IntVec2)> {
    let b2 = Integer::from(b) * Integer::from(b);
    let mut out = Vec::new();
    let mut stack = vec![(IntVec2::new(1, 0), IntVec2::new(0, 1))];
    while let Some((u, w)) = stack.pop() {
        let m = u.add(&w);
        if m.norm_sq() <= b2 {
            // push right half first so output runs counterclockwise
            stack.push((m.clone(), w));
            stack.push((u, m));
        } else {
            out.push((u, w));
        }
    }
    out
}

/// Minimal intervals around the whole circle (quadrant list rotated by quarter turns).
pub fn minimal_intervals(b: u64) -> Vec<(IntVec2, IntVec2)> {
    let q = minimal_intervals_quadrant(b);
    let rot = |v: &IntVec2| IntVec2::new(Integer::from(-&v.q), v.p.clone());
    let mut out = Vec::with_capacity(4 * q.len());
    let mut cur = q;
    for _ in 0..4 {
        let next: Vec<_> = cur.iter().map(|(a, c)| (rot(a), rot(c))).collect();
        out.extend(cur);
        cur = next;
    }
    out
}

/// Candidate children directions of `w` from the strip density bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChildCandidates {
    pub vectors: Vec<IntVec2>,
    /// Lattice points visited by the scan.
    pub examined: u64,
    /// Spectrum hypothesis, when checked.
    pub hypothesis: Option<bool>,
}

/// Primitive `v` with `w·v > 0`, `b ≤ |v| ≤ 2b`, `c1·ε|w| ≤ |w×v| ≤ ε|w|`, sorted by angle.
///
/// `max_keep` stops the scan once that many vectors are found; the sweep then
/// starts at fraction `start` of each side's row range.
pub fn children_candidates(
    w: &WVec,
    eps: &Rational,
    b: &Rational,
    c1: &Rational,
    check_hypothesis: bool,
    max_keep: Option<usize>,
    start: f64,
    cfg: &SlitConfig,
) -> Result<ChildCandidates> {
    if !(*eps > 0 && *eps <= 1 && *b >= 1) {
        return Err(Error::Invalid("need 0 < eps ≤ 1 ≤ b".into()));
    }
    if !(*c1 > 0 && *c1 <= 1) {
        return Err(Error::Invalid("need 0 < c1 ≤ 1".into()));
    }
    let hypothesis = if check_hypothesis {
        Some(spectrum_meets(&w.direction(cfg), eps, b, cfg)?)
    } else {
        None
    };
    let b_bits = b.to_f64().max(2.0).log2();
    let b_bits = if b_bits.is_finite() {
        b_bits as u32
    } else {
        ceil_rat(b).significant_bits()
    };
    let start_bits = 128 + 3 * b_bits + 2 * bits_hint(&w.n);
    let (mut vectors, examined) = cfg.escalate("children_candidates", start_bits, |prec| {
        candidates_at(w, eps, b, c1, max_keep, start, cfg, prec)
    })?;
    let key = |v: &IntVec2| {
        let (x, y) = v.to_f64();
        y.atan2(x)
    };
    if vectors.iter().all(|v| key(v).is_finite()) {
        vectors.sort_by(|a, c| key(a).partial_cmp(&key(c)).unwrap_or(Ordering::Equal));
    }
    Ok(ChildCandidates {
        vectors,
        examined,
        hypothesis,
    })
}

#[allow(clippy::too_many_arguments)]
fn candidates_at(
    w: &WVec,
    eps: &Rational,
    b: &Rational,
    c1: &Rational,
    max_keep: Option<usize>,
    start: f64,
    cfg: &SlitConfig,
    prec: u32,
) -> Result<(Vec<IntVec2>, u64)> {
    let comps = w.components(cfg, prec);
    let wl = (comps[0].square() + comps[1].square()).sqrt();
    let u = [&comps[0] / &wl, &comps[1] / &wl];
    let e = Real::from_rational(eps, prec);
    let bb = Real::from_rational(b, prec);
    let lo_c = &e * Real::from_rational(c1, prec);
    let b2 = Rational::from(b * b);
    let four_b2 = Rational::from(&b2 * 4u32);
    let a_lo = &bb - &e;
    let a_hi = bb.mul_i64(2);
    let zero = [Real::zero(prec), Real::zero(prec)];
    let mut out = Vec::new();
    let mut examined = 0u64;
    let mut err = None;
    let cap = max_keep.unwrap_or(usize::MAX);
    let per_side = if cap == usize::MAX {
        usize::MAX
    } else {
        cap.div_ceil(2)
    };
    for side in [1i64, -1] {
        let (c_lo, c_hi) = if side > 0 {
            (lo_c.clone(), e.clone())
        } else {
            (-&e, -&lo_c)
        };
        if !c_lo.lt(&c_hi)? {
            continue;
        }
        let scan = BoxScan::new(&u, &zero, (&a_lo, &a_hi), (&c_lo, &c_hi), prec)?
            .with_budget(cfg.enum_budget);
        let mut kept = 0usize;
        scan.for_each_rotated(start, |v| {
            examined += 1;
            if v.is_zero() {
                return ControlFlow::Continue(());
            }
            let n2 = Rational::from(v.norm_sq());
            if n2 < b2 || n2 > four_b2 || !v.is_primitive() {
                return ControlFlow::Continue(());
            }
            let r = (|| -> Result<bool> {
                if !w.dot_int_at(&v, cfg, prec).is_positive()? {
                    return Ok(false);
                }
                let c = w.cross_int_at(&v, cfg, prec).abs() / &wl;
                Ok(c.ge(&lo_c)? && c.le(&e)?)
            })();
            match r {
                Ok(true) => {
                    out.push(v);
                    kept += 1;
                    if kept >= per_side {
                        return ControlFlow::Break(());
                    }
                }
                Ok(false) => {}
                Err(x) => {
                    err = Some(x);
                    return ControlFlow::Break(());
                }
            }
            ControlFlow::Continue(())
        })?;
        if let Some(x) = err.take() {
            return Err(x);
        }
    }
    Ok((out, examined))
}

/// Seeded battery of annular sector differences over minimal Farey intervals:
/// `b` uniform in `1..=b_max`, then one of the minimal intervals of `b` uniformly.
pub fn sector_battery(
    n: usize,
    b_max: u64,
    seed: u64,
    cfg: &SlitConfig,
) -> Result<Vec<DensityReport>> {
    if b_max == 0 {
        return Err(Error::Invalid("b_max must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let b = rng.gen_range(1..=b_max);
        let intervals = minimal_intervals(b);
        let (lo, hi) = intervals[rng.gen_range(0..intervals.len())].clone();
        out.push(dens_of(
            &Region::SectorDiff {
                lo,
                hi,
                b: Rational::from(b),
            },
            cfg,
        )?);
    }
    Ok(out)
}

/// Seeded battery of strips whose spectrum hypothesis holds. Directions are
/// `(cos α, sin α)` with rational `α ∈ (0, 2π)`, `b` is an integer in
/// `8..=b_max` and `ε = 1/L` with `L` an integer in `1..=b`; draws failing
/// the hypothesis are discarded, at most `50 n` draws in total.
pub fn strip_battery(
    n: usize,
    b_max: u64,
    seed: u64,
    cfg: &SlitConfig,
) -> Result<Vec<DensityReport>> {
    if b_max < 8 {
        return Err(Error::Invalid("b_max must be at least 8".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut draws = 0usize;
    while out.len() < n {
        draws += 1;
        if draws > 50 * n.max(1) {
            return Err(Error::BudgetExceeded {
                op: "strip_battery",
                detail: format!("{} of {n} instances after {draws} draws", out.len()),
            });
        }
        let alpha = Rational::from((rng.gen_range(1..6_283_185i64), 1_000_000));
        let theta = Direction::from_angle(Expr::rational(alpha));
        let b = rng.gen_range(8..=b_max);
        let l = rng.gen_range(1..=b);
        let eps = Rational::from((1, l));
        let b = Rational::from(b);
        if !spectrum_meets(&theta, &eps, &b, cfg)? {
            continue;
        }
        out.push(dens_of(&Region::Strip { theta, eps, b }, cfg)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn triangle_difference_family() {
        let cfg = SlitConfig::default();
        for (a, want) in [
            (q(1, 1), q(2, 3)),
            (q(6, 5), q(2, 3) / q(36, 25)),
            (q(7, 5), q(2, 3) / q(49, 25)),
        ] {
            let r = dens_of(&Region::TriangleDiff { a }, &cfg).unwrap();
            assert_eq!(r.count, 1);
            assert_eq!(r.dens_exact.as_deref(), Some(want.to_string().as_str()));
            assert_eq!(r.passed, Some(true));
        }
    }

    #[test]
    fn unit_disk_has_four_points() {
        let cfg = SlitConfig::default();
        assert_eq!(
            count_primitive(&Region::Disk { b: q(1, 1) }, &cfg).unwrap(),
            4
        );
    }

    #[test]
    fn diagonal_strip() {
        let cfg = SlitConfig::default();
        let theta = Direction::of_int(&IntVec2::new(1, 1));
        let r = Region::Strip {
            theta,
            eps: q(1, 1),
            b: q(1, 1),
        };
        assert_eq!(count_primitive(&r, &cfg).unwrap(), 1);
    }

    #[test]
    fn stern_brocot_pairs_are_unimodular() {
        for b in [1u64, 2, 5, 13] {
            let b2 = Integer::from(b * b);
            for (u, w) in minimal_intervals(b) {
                assert_eq!(u.cross(&w), 1);
                assert!(u.norm_sq() <= b2 && w.norm_sq() <= b2);
                assert!(u.add(&w).norm_sq() > b2);
            }
        }
        assert_eq!(minimal_intervals_quadrant(1).len(), 1);
    }

    #[test]
    fn strip_area_matches_quadrature() {
        let theta = Direction::of_int(&IntVec2::new(2, 1));
        let r = Region::Strip {
            theta,
            eps: q(1, 3),
            b: q(5, 1),
        };
        let a = r.area(128).unwrap().mid();
        let n = 200_000;
        let (eps, b) = (1.0 / 3.0, 5.0f64);
        let h = 2.0 * eps / n as f64;
        let s: f64 = (0..n)
            .map(|i| {
                let c = -eps + (i as f64 + 0.5) * h;
                ((4.0 * b * b - c * c).sqrt() - (b * b - c * c).sqrt()) * h
            })
            .sum();
        assert!((a - s).abs() < 1e-8);
        assert!(a >= 1.5 * b * eps && a <= 3.0 * b * eps);
    }
}
