//! Continued fractions in vector form.
//!
//! For a direction `θ` in the open upper half plane with slope `α = x/y`
//! the convergents are `v_k = (p_k, q_k)` with `v_{k+1} = a_{k+1} v_k + v_{k−1}`,
//! `v_0 = (a_0, 1)`, `v_{−1} = (1, 0)`. Directions in the lower half plane use
//! `Spec(−θ) = −Spec(θ)` and the horizontal direction has `Spec = {(1,0)}`.

use std::cmp::Ordering;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{bits_hint, cross2, norm2, Direction, IntVec2, SlitConfig, WVec};
use crate::real::Real;

/// Whose convergents are listed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum Owner {
    Direction(Direction),
    W(WVec),
}

impl Owner {
    pub fn components(&self, cfg: &SlitConfig, prec: u32) -> [Real; 2] {
        match self {
            Owner::Direction(d) => d.raw(prec),
            Owner::W(w) => w.components(cfg, prec),
        }
    }

    fn exact(&self) -> Option<(Rational, Rational)> {
        match self {
            Owner::Direction(d) => d.rational(),
            Owner::W(_) => None,
        }
    }

    fn size_bits(&self) -> u32 {
        match self {
            Owner::Direction(_) => 0,
            Owner::W(w) => bits_hint(&w.n),
        }
    }

    /// `|owner × v| / |owner|`.
    pub fn normalized_cross(&self, v: &IntVec2, cfg: &SlitConfig, prec: u32) -> Real {
        let w = self.components(cfg, prec);
        let c = match self {
            Owner::W(w) => w.cross_int_at(v, cfg, prec),
            Owner::Direction(_) => cross2(&w, &v.components(prec)),
        };
        c.abs() / norm2(&w)
    }
}

impl From<WVec> for Owner {
    fn from(w: WVec) -> Owner {
        Owner::W(w)
    }
}

impl From<Direction> for Owner {
    fn from(d: Direction) -> Owner {
        Owner::Direction(d)
    }
}

/// Convergents of an owner, up to and including the first one past a length bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergentSeq {
    pub owner: Owner,
    /// `a_0, a_1, …`; `a_k ≥ 1` for `k ≥ 1`.
    #[serde(with = "crate::lattice::serde_ints")]
    pub quotients: Vec<Integer>,
    /// `v_0, v_1, …` already carrying the sign of the owner's half plane.
    pub convergents: Vec<IntVec2>,
    /// Owner lies in the lower half plane, so every stored vector is `−v_k`.
    pub negated: bool,
    /// Expansion ended (rational slope or horizontal owner).
    pub terminal: bool,
}

impl ConvergentSeq {
    pub fn len(&self) -> usize {
        self.convergents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.convergents.is_empty()
    }

    pub fn lengths(&self, prec: u32) -> Vec<Real> {
        self.convergents.iter().map(|v| v.length(prec)).collect()
    }

    /// Index of `±v`, if present.
    pub fn index_of(&self, v: &IntVec2) -> Option<usize> {
        let m = v.neg();
        self.convergents.iter().position(|c| *c == *v || *c == m)
    }

    /// Largest index with `|v_k| ≤ bound`, looking only at `k ≥ 1` when possible.
    pub fn last_within(&self, bound_sq: &Integer) -> Option<usize> {
        self.convergents
            .iter()
            .rposition(|c| c.norm_sq() <= *bound_sq)
    }
}

fn floor_rat(r: &Rational) -> Integer {
    r.clone().floor().into_numer_denom().0
}

/// Quotients of `α` that hold for every real in `[lo, hi]`, until one is
/// ambiguous or `stop` says enough. Returns the list and whether the
/// expansion of a degenerate interval terminated.
fn common_quotients(
    lo: &Rational,
    hi: &Rational,
    mut stop: impl FnMut(&[Integer]) -> bool,
) -> (Vec<Integer>, bool) {
    let exact = lo == hi;
    let mut x = lo.clone();
    let mut y = hi.clone();
    let mut out = Vec::new();
    loop {
        let a = floor_rat(&x);
        let b = floor_rat(&y);
        if a != b {
            return (out, false);
        }
        let fx = Rational::from(&x - &a);
        let fy = Rational::from(&y - &b);
        if exact && fx == 0 {
            out.push(a);
            return (out, true);
        }
        // a boundary remainder means the cylinder is not determined
        if fx == 0 || fy == 0 {
            return (out, false);
        }
        out.push(a);
        if stop(&out) {
            return (out, false);
        }
        // the map r -> 1/r reverses order
        let nx = fy.recip();
        let ny = fx.recip();
        x = nx;
        y = ny;
    }
}

fn convergents_from(quotients: &[Integer]) -> Vec<IntVec2> {
    let mut out: Vec<IntVec2> = Vec::with_capacity(quotients.len());
    for (k, a) in quotients.iter().enumerate() {
        let next = match k {
            0 => IntVec2::new(a.clone(), 1),
            1 => out[0].scale(a).add(&IntVec2::new(1, 0)),
            _ => out[k - 1].scale(a).add(&out[k - 2]),
        };
        out.push(next);
    }
    out
}

/// All convergents of `owner` with `|v_k| ≤ bound`, plus the first one past it.
pub fn spec_of(owner: &Owner, bound: &Rational, cfg: &SlitConfig) -> Result<ConvergentSeq> {
    if *bound < 1 {
        return Err(Error::Invalid("length bound must be at least 1".into()));
    }
    let bound_sq = Rational::from(bound * bound);
    if let Some((x, y)) = owner.exact() {
        return exact_spec(owner, x, y, &bound_sq);
    }
    // bounds past the f64 range are routine deep in a path
    let bound_bits = (bound.numer().significant_bits() + 1)
        .saturating_sub(bound.denom().significant_bits())
        .max(1);
    let start = 64u32
        .saturating_add(bound_bits.saturating_mul(2))
        .saturating_add(owner.size_bits().saturating_mul(2));
    cfg.escalate("spec_of", start, |prec| {
        spec_at(owner, &bound_sq, cfg, prec)
    })
}

fn past_bound(conv: &IntVec2, k: usize, bound_sq: &Rational) -> bool {
    k >= 1 && *bound_sq < conv.norm_sq()
}

fn exact_spec(
    owner: &Owner,
    x: Rational,
    y: Rational,
    bound_sq: &Rational,
) -> Result<ConvergentSeq> {
    if x == 0 && y == 0 {
        return Err(Error::DegenerateVector);
    }
    if y == 0 {
        let negated = x < 0;
        let v = if negated {
            IntVec2::new(-1, 0)
        } else {
            IntVec2::new(1, 0)
        };
        return Ok(ConvergentSeq {
            owner: owner.clone(),
            quotients: vec![],
            convergents: vec![v],
            negated,
            terminal: true,
        });
    }
    let negated = y < 0;
    let alpha = Rational::from(&x / &y);
    let (quotients, terminal) = common_quotients(&alpha, &alpha, |_| false);
    let mut convergents = convergents_from(&quotients);
    let full = convergents.len();
    let keep = convergents
        .iter()
        .enumerate()
        .position(|(k, c)| past_bound(c, k, bound_sq))
        .map_or(full, |k| k + 1);
    convergents.truncate(keep);
    let mut quotients = quotients;
    quotients.truncate(keep);
    let terminal = terminal && keep == full;
    if negated {
        convergents = convergents.iter().map(IntVec2::neg).collect();
    }
    Ok(ConvergentSeq {
        owner: owner.clone(),
        quotients,
        convergents,
        negated,
        terminal,
    })
}

fn spec_at(
    owner: &Owner,
    bound_sq: &Rational,
    cfg: &SlitConfig,
    prec: u32,
) -> Result<ConvergentSeq> {
    let [x, y] = owner.components(cfg, prec);
    let negated = match y.sign()? {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => {
            return Err(Error::Invalid(
                "horizontal owner needs an exact direction".into(),
            ))
        }
    };
    let alpha = &x / &y;
    let lo = alpha.lo_rational().ok_or(Error::Indeterminate)?;
    let hi = alpha.hi_rational().ok_or(Error::Indeterminate)?;
    // track the convergent recurrence alongside so we can stop at the bound
    let mut prev = IntVec2::new(1, 0);
    let mut cur: Option<IntVec2> = None;
    let mut reached = false;
    let (quotients, _) = common_quotients(&lo, &hi, |qs| {
        let k = qs.len() - 1;
        let a = &qs[k];
        let next = match &cur {
            None => IntVec2::new(a.clone(), 1),
            Some(c) => {
                let n = c.scale(a).add(&prev);
                prev = c.clone();
                n
            }
        };
        let done = past_bound(&next, k, bound_sq);
        cur = Some(next);
        if done {
            reached = true;
        }
        done
    });
    if !reached {
        return Err(Error::Indeterminate);
    }
    let mut convergents = convergents_from(&quotients);
    if negated {
        convergents = convergents.iter().map(IntVec2::neg).collect();
    }
    Ok(ConvergentSeq {
        owner: owner.clone(),
        quotients,
        convergents,
        negated,
        terminal: false,
    })
}

/// Hypothesis of the convergent test: `|v|·cos φ > 1`, `φ` the angle between `w` and the y-axis.
pub fn angle_precondition(v: &IntVec2, w: &WVec, cfg: &SlitConfig, prec: u32) -> Result<bool> {
    let [x, y] = w.components(cfg, prec);
    let wl = (x.square() + y.square()).sqrt();
    let lhs = v.length(prec) * y.abs() / wl;
    lhs.gt(&Real::one(prec))
}

/// `|w×v|/|w| ≤ 1/(2|v|)`.
pub fn short_cross_inequality(v: &IntVec2, w: &WVec, cfg: &SlitConfig, prec: u32) -> Result<bool> {
    let wl = w.length(cfg, prec);
    let lhs = w.cross_int_at(v, cfg, prec).abs() / wl;
    let rhs = Real::one(prec) / v.length(prec).mul_i64(2);
    lhs.le(&rhs)
}

/// Whether `±v ∈ Spec(w)`.
///
/// The short-cross test is evaluated first and the answer is always settled
/// by direct lookup; a positive test that lookup contradicts is reported as a
/// verification failure.
pub fn is_convergent(v: &IntVec2, w: &WVec, cfg: &SlitConfig) -> Result<bool> {
    if !v.is_primitive() {
        return Err(Error::Invalid(format!("{v:?} is not primitive")));
    }
    let start = 96 + 2 * (bits_hint(v) + bits_hint(&w.n));
    let (angle_ok, short) = cfg.escalate("is_convergent", start, |prec| {
        Ok((
            angle_precondition(v, w, cfg, prec)?,
            short_cross_inequality(v, w, cfg, prec)?,
        ))
    })?;
    if !angle_ok {
        return Err(Error::AnglePrecondition(format!(
            "|v|cos(phi) <= 1 for v = {v:?}, w = {w:?}"
        )));
    }
    let bound = Rational::from(v.norm_sq().sqrt() + 1u32);
    let seq = spec_of(&Owner::W(w.clone()), &bound, cfg)?;
    let found = seq.index_of(v).is_some();
    if short && !found {
        return Err(Error::Verification(vec![format!(
            "short-cross test accepted {v:?} but it is not a convergent of {w:?}"
        )]));
    }
    Ok(found)
}

/// The convergent following `±v` in `Spec(w)`.
pub fn next_after(v: &IntVec2, w: &WVec, cfg: &SlitConfig) -> Result<IntVec2> {
    let bound = Rational::from(v.norm_sq().sqrt() + 1u32);
    let seq = spec_of(&Owner::W(w.clone()), &bound, cfg)?;
    let k = seq
        .index_of(v)
        .ok_or_else(|| Error::NotConvergent(format!("{v:?}")))?;
    seq.convergents
        .get(k + 1)
        .cloned()
        .ok_or_else(|| Error::NotConvergent(format!("{v:?} has no successor")))
}

/// Violations of the recurrence, the determinant identity, monotone lengths
/// from `k = 1` and both sides of the cross-product sandwich.
pub fn check_identities(seq: &ConvergentSeq, cfg: &SlitConfig) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    let s = if seq.negated { -1 } else { 1 };
    let v: Vec<IntVec2> = seq.convergents.iter().map(|c| c.scale_i64(s)).collect();
    let a = &seq.quotients;
    if !v.is_empty() && !seq.quotients.is_empty() && v[0] != IntVec2::new(a[0].clone(), 1) {
        bad.push("v_0 != (a_0, 1)".into());
    }
    for k in 1..v.len() {
        if a.get(k).is_some_and(|q| *q < 1) {
            bad.push(format!("a_{k} < 1"));
        }
        let prev = if k == 1 {
            IntVec2::new(1, 0)
        } else {
            v[k - 2].clone()
        };
        if let Some(q) = a.get(k) {
            if v[k] != v[k - 1].scale(q).add(&prev) {
                bad.push(format!("recurrence fails at k = {k}"));
            }
        }
        let want = if k % 2 == 0 { 1 } else { -1 };
        if v[k - 1].cross(&v[k]) != want {
            bad.push(format!("determinant identity fails at k = {}", k - 1));
        }
        if k >= 2 && v[k].norm_sq() <= v[k - 1].norm_sq() {
            bad.push(format!("lengths not increasing at k = {k}"));
        }
    }
    let bits =
        96 + 4 * seq.convergents.last().map(bits_hint).unwrap_or(0) + 2 * seq.owner.size_bits();
    for k in 0..v.len().saturating_sub(1) {
        let ok = cfg.escalate("check_identities", bits, |prec| {
            let r = seq.owner.normalized_cross(&v[k], cfg, prec);
            let lo = Real::one(prec) / v[k + 1].add(&v[k]).length(prec);
            let hi = Real::one(prec) / v[k + 1].length(prec);
            Ok((lo.lt(&r)?, r.lt(&hi)?))
        });
        match ok {
            Ok((true, true)) => {}
            Ok((l, h)) => bad.push(format!("sandwich fails at k = {k} (lower {l}, upper {h})")),
            Err(e) => bad.push(format!("sandwich undecided at k = {k}: {e}")),
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn golden() -> Owner {
        Owner::Direction(Direction::new(
            "(1+sqrt(5))/2".parse().unwrap(),
            Expr::int(1),
        ))
    }

    #[test]
    fn rational_slope_terminates() {
        let cfg = SlitConfig::default();
        let o = Owner::Direction(Direction::new(Expr::int(22), Expr::int(7)));
        let s = spec_of(&o, &Rational::from(1000), &cfg).unwrap();
        let q: Vec<i64> = s.quotients.iter().map(|a| a.to_i64().unwrap()).collect();
        assert!(q == vec![3, 7] || q == vec![3, 6, 1]);
        assert!(s.terminal);
        assert_eq!(s.convergents.last().unwrap(), &IntVec2::new(22, 7));
    }

    #[test]
    fn horizontal_owner() {
        let cfg = SlitConfig::default();
        let o = Owner::Direction(Direction::of_int(&IntVec2::new(1, 0)));
        let s = spec_of(&o, &Rational::from(10), &cfg).unwrap();
        assert_eq!(s.convergents, vec![IntVec2::new(1, 0)]);
    }

    #[test]
    fn golden_convergents() {
        let cfg = SlitConfig::default();
        let s = spec_of(&golden(), &Rational::from(10), &cfg).unwrap();
        let want = [(1, 1), (2, 1), (3, 2), (5, 3), (8, 5), (13, 8)];
        for (k, (p, q)) in want.iter().enumerate() {
            assert_eq!(s.convergents[k], IntVec2::new(*p, *q));
        }
        assert!(s.quotients.iter().all(|a| *a == 1));
        let bad = check_identities(&s, &cfg).unwrap();
        assert!(bad.is_empty(), "{bad:?}");
    }

    #[test]
    fn negated_owner_negates_spec() {
        let cfg = SlitConfig::default();
        let o = Owner::Direction(Direction::new(
            "-(1+sqrt(5))/2".parse().unwrap(),
            Expr::int(-1),
        ));
        let s = spec_of(&o, &Rational::from(10), &cfg).unwrap();
        assert!(s.negated);
        assert_eq!(s.convergents[2], IntVec2::new(-3, -2));
    }
}
