//! Outward-rounded interval reals on top of MPFR.
//!
//! A [`Real`] is a closed interval `[lo, hi]` whose endpoints are MPFR floats.
//! Every operation rounds the lower endpoint down and the upper endpoint up,
//! so the true value of any expression evaluated through this module is
//! always contained in the resulting interval. Comparisons never guess: they
//! either resolve with certainty or return [`Error::Indeterminate`], which the
//! precision driver ([`escalate`]) answers by recomputing at doubled precision.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::{Constant, Round, Special};
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// Closed interval of reals with outward-rounded MPFR endpoints.
#[derive(Clone)]
pub struct Real {
    lo: Float,
    hi: Float,
}

fn down<T>(prec: u32, val: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, val, Round::Down).0
}

fn up<T>(prec: u32, val: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, val, Round::Up).0
}

fn min_f(a: Float, b: Float) -> Float {
    if a.is_nan() || b.is_nan() {
        return Float::with_val(a.prec(), Special::NegInfinity);
    }
    if a <= b {
        a
    } else {
        b
    }
}

fn max_f(a: Float, b: Float) -> Float {
    if a.is_nan() || b.is_nan() {
        return Float::with_val(a.prec(), Special::Infinity);
    }
    if a >= b {
        a
    } else {
        b
    }
}

impl Real {
    fn from_bounds(lo: Float, hi: Float) -> Real {
        let prec = lo.prec();
        let lo = if lo.is_nan() {
            Float::with_val(prec, Special::NegInfinity)
        } else {
            lo
        };
        let hi = if hi.is_nan() {
            Float::with_val(prec, Special::Infinity)
        } else {
            hi
        };
        Real { lo, hi }
    }

    /// The whole real line; the result of any undefined operation.
    pub fn entire(prec: u32) -> Real {
        Real {
            lo: Float::with_val(prec, Special::NegInfinity),
            hi: Float::with_val(prec, Special::Infinity),
        }
    }

    pub fn zero(prec: u32) -> Real {
        Real::from_i64(0, prec)
    }

    pub fn one(prec: u32) -> Real {
        Real::from_i64(1, prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> Real {
        Real {
            lo: down(prec, v),
            hi: up(prec, v),
        }
    }

    pub fn from_integer(v: &Integer, prec: u32) -> Real {
        Real {
            lo: down(prec, v),
            hi: up(prec, v),
        }
    }

    pub fn from_rational(v: &Rational, prec: u32) -> Real {
        Real {
            lo: down(prec, v),
            hi: up(prec, v),
        }
    }

    /// Exact enclosure of a binary64 value (every finite double is a dyadic rational).
    pub fn from_f64(v: f64, prec: u32) -> Real {
        Real {
            lo: down(prec, v),
            hi: up(prec, v),
        }
    }

    /// Interval spanning two (possibly unordered) bounds.
    /// Enclosure of a single float; exact when `prec` is wide enough.
    pub fn from_float(v: &Float, prec: u32) -> Real {
        Real::from_bounds(down(prec, v), up(prec, v))
    }

    pub fn hull(a: &Real, b: &Real) -> Real {
        let prec = a.prec().max(b.prec());
        Real::from_bounds(
            min_f(Float::with_val(prec, &a.lo), Float::with_val(prec, &b.lo)),
            max_f(Float::with_val(prec, &a.hi), Float::with_val(prec, &b.hi)),
        )
    }

    pub fn pi(prec: u32) -> Real {
        Real {
            lo: down(prec, Constant::Pi),
            hi: up(prec, Constant::Pi),
        }
    }

    pub fn ln2(prec: u32) -> Real {
        Real {
            lo: down(prec, Constant::Log2),
            hi: up(prec, Constant::Log2),
        }
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec()
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Midpoint rounded to the nearest double.
    pub fn mid(&self) -> f64 {
        if !self.is_finite() {
            return f64::NAN;
        }
        let s = Float::with_val(self.prec() + 1, &self.lo + &self.hi);
        s.to_f64() / 2.0
    }

    /// Half-width, rounded up to a double.
    pub fn radius(&self) -> f64 {
        if !self.is_finite() {
            return f64::INFINITY;
        }
        let d = up(self.prec(), &self.hi - &self.lo);
        d.to_f64_round(Round::Up) / 2.0
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.lo <= x && self.hi >= x
    }

    /// Certain sign of the value, or `Indeterminate` when the interval straddles zero.
    pub fn sign(&self) -> Result<Ordering> {
        if self.lo > 0 {
            Ok(Ordering::Greater)
        } else if self.hi < 0 {
            Ok(Ordering::Less)
        } else if self.lo == 0 && self.hi == 0 {
            Ok(Ordering::Equal)
        } else {
            Err(Error::Indeterminate)
        }
    }

    pub fn is_positive(&self) -> Result<bool> {
        Ok(self.sign()? == Ordering::Greater)
    }

    /// Certain `self < other`.
    pub fn lt(&self, other: &Real) -> Result<bool> {
        if self.hi < other.lo {
            Ok(true)
        } else if self.lo >= other.hi {
            Ok(false)
        } else {
            Err(Error::Indeterminate)
        }
    }

    /// Certain `self <= other`.
    pub fn le(&self, other: &Real) -> Result<bool> {
        if self.hi <= other.lo {
            Ok(true)
        } else if self.lo > other.hi {
            Ok(false)
        } else {
            Err(Error::Indeterminate)
        }
    }

    pub fn gt(&self, other: &Real) -> Result<bool> {
        other.lt(self)
    }

    pub fn ge(&self, other: &Real) -> Result<bool> {
        other.le(self)
    }

    /// Three-way comparison that must resolve.
    pub fn cmp_real(&self, other: &Real) -> Result<Ordering> {
        if self.hi < other.lo {
            Ok(Ordering::Less)
        } else if self.lo > other.hi {
            Ok(Ordering::Greater)
        } else if self.lo == self.hi && other.lo == other.hi && self.lo == other.lo {
            Ok(Ordering::Equal)
        } else {
            Err(Error::Indeterminate)
        }
    }

    /// Both intervals overlap, so their order is not resolved at this precision.
    pub fn overlaps(&self, other: &Real) -> bool {
        !(self.hi < other.lo || other.hi < self.lo)
    }

    /// Floor, provided both endpoints agree on it.
    pub fn floor(&self) -> Result<Integer> {
        let (a, b) = self.floor_bounds()?;
        if a == b {
            Ok(a)
        } else {
            Err(Error::Indeterminate)
        }
    }

    /// `(floor(lo), floor(hi))`; a superset bracket usable for enumeration.
    pub fn floor_bounds(&self) -> Result<(Integer, Integer)> {
        if !self.is_finite() {
            return Err(Error::Indeterminate);
        }
        let a = self
            .lo
            .to_integer_round(Round::Down)
            .ok_or(Error::Indeterminate)?
            .0;
        let b = self
            .hi
            .to_integer_round(Round::Down)
            .ok_or(Error::Indeterminate)?
            .0;
        Ok((a, b))
    }

    /// `(ceil(lo), floor(hi))`: the integers certainly or possibly inside.
    pub fn integer_span(&self) -> Result<(Integer, Integer)> {
        if !self.is_finite() {
            return Err(Error::Indeterminate);
        }
        let a = self
            .lo
            .to_integer_round(Round::Up)
            .ok_or(Error::Indeterminate)?
            .0;
        let b = self
            .hi
            .to_integer_round(Round::Down)
            .ok_or(Error::Indeterminate)?
            .0;
        Ok((a, b))
    }

    pub fn lo_rational(&self) -> Option<Rational> {
        self.lo.to_rational()
    }

    pub fn hi_rational(&self) -> Option<Rational> {
        self.hi.to_rational()
    }

    pub fn abs(&self) -> Real {
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            -self
        } else {
            let prec = self.prec();
            let a = Float::with_val(prec, -&self.lo);
            let m = if a > self.hi { a } else { self.hi.clone() };
            Real {
                lo: Float::with_val(prec, 0),
                hi: m,
            }
        }
    }

    pub fn square(&self) -> Real {
        let prec = self.prec();
        let a = self.abs();
        Real::from_bounds(down(prec, a.lo.square_ref()), up(prec, a.hi.square_ref()))
    }

    pub fn sqrt(&self) -> Real {
        let prec = self.prec();
        if self.hi < 0 || self.hi.is_nan() {
            return Real::entire(prec);
        }
        let lo = if self.lo <= 0 {
            Float::with_val(prec, 0)
        } else {
            down(prec, self.lo.sqrt_ref())
        };
        Real::from_bounds(lo, up(prec, self.hi.sqrt_ref()))
    }

    /// Natural logarithm; `[-inf, ..]` when the interval reaches zero.
    pub fn ln(&self) -> Real {
        let prec = self.prec();
        if self.hi <= 0 {
            return Real::entire(prec);
        }
        let lo = if self.lo <= 0 {
            Float::with_val(prec, Special::NegInfinity)
        } else {
            down(prec, self.lo.ln_ref())
        };
        Real::from_bounds(lo, up(prec, self.hi.ln_ref()))
    }

    pub fn exp(&self) -> Real {
        let prec = self.prec();
        Real::from_bounds(down(prec, self.lo.exp_ref()), up(prec, self.hi.exp_ref()))
    }

    /// `self^e` for a positive base.
    pub fn powr(&self, e: &Real) -> Real {
        (&self.ln() * e).exp()
    }

    pub fn asin(&self) -> Real {
        let prec = self.prec();
        if self.lo < -1 || self.hi > 1 {
            let one = Real::one(prec);
            let clamped = Real::from_bounds(
                max_f(self.lo.clone(), Float::with_val(prec, -1)),
                min_f(self.hi.clone(), one.hi.clone()),
            );
            return clamped.asin();
        }
        Real::from_bounds(down(prec, self.lo.asin_ref()), up(prec, self.hi.asin_ref()))
    }

    pub fn atan(&self) -> Real {
        let prec = self.prec();
        Real::from_bounds(down(prec, self.lo.atan_ref()), up(prec, self.hi.atan_ref()))
    }

    fn lipschitz1(&self, f: impl Fn(&Float, Round) -> Float) -> Real {
        // |f'| <= 1: f([a,b]) lies within f(mid) +- (b - a)/2.
        let prec = self.prec();
        if !self.is_finite() {
            return Real::from_bounds(Float::with_val(prec, -1), Float::with_val(prec, 1));
        }
        let mid = Float::with_val(prec + 2, &self.lo + &self.hi) / 2u32;
        let rad = up(prec, &self.hi - &self.lo) / 2u32;
        let lo = down(prec, &f(&mid, Round::Down) - &rad);
        let hi = up(prec, &f(&mid, Round::Up) + &rad);
        Real::from_bounds(lo, hi)
    }

    pub fn sin(&self) -> Real {
        let prec = self.prec();
        self.lipschitz1(|m, r| Float::with_val_round(prec, m.sin_ref(), r).0)
    }

    pub fn cos(&self) -> Real {
        let prec = self.prec();
        self.lipschitz1(|m, r| Float::with_val_round(prec, m.cos_ref(), r).0)
    }

    pub fn max(&self, other: &Real) -> Real {
        let prec = self.prec().max(other.prec());
        Real::from_bounds(
            max_f(
                Float::with_val(prec, &self.lo),
                Float::with_val(prec, &other.lo),
            ),
            max_f(
                Float::with_val(prec, &self.hi),
                Float::with_val(prec, &other.hi),
            ),
        )
    }

    pub fn min(&self, other: &Real) -> Real {
        let prec = self.prec().max(other.prec());
        Real::from_bounds(
            min_f(
                Float::with_val(prec, &self.lo),
                Float::with_val(prec, &other.lo),
            ),
            min_f(
                Float::with_val(prec, &self.hi),
                Float::with_val(prec, &other.hi),
            ),
        )
    }

    pub fn mul_int(&self, k: &Integer) -> Real {
        self * &Real::from_integer(k, self.prec())
    }

    pub fn add_int(&self, k: &Integer) -> Real {
        self + &Real::from_integer(k, self.prec())
    }

    pub fn mul_i64(&self, k: i64) -> Real {
        self * &Real::from_i64(k, self.prec())
    }

    pub fn div_i64(&self, k: i64) -> Real {
        self / &Real::from_i64(k, self.prec())
    }

    /// Decimal rendering of the midpoint with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        if !self.is_finite() {
            return "nan".to_string();
        }
        let m = Float::with_val(self.prec() + 1, &self.lo + &self.hi) / 2u32;
        m.to_string_radix(10, Some(digits.max(1)))
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            self.lo.to_string_radix(10, Some(20)),
            self.hi.to_string_radix(10, Some(20))
        )
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {:.3e}", self.mid(), self.radius())
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        let prec = self.prec();
        Real {
            lo: Float::with_val(prec, -&self.hi),
            hi: Float::with_val(prec, -&self.lo),
        }
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        -&self
    }
}

impl Add<&Real> for &Real {
    type Output = Real;
    fn add(self, o: &Real) -> Real {
        let prec = self.prec().max(o.prec());
        Real::from_bounds(down(prec, &self.lo + &o.lo), up(prec, &self.hi + &o.hi))
    }
}

impl Sub<&Real> for &Real {
    type Output = Real;
    fn sub(self, o: &Real) -> Real {
        let prec = self.prec().max(o.prec());
        Real::from_bounds(down(prec, &self.lo - &o.hi), up(prec, &self.hi - &o.lo))
    }
}

impl Mul<&Real> for &Real {
    type Output = Real;
    fn mul(self, o: &Real) -> Real {
        let prec = self.prec().max(o.prec());
        let pairs = [
            (&self.lo, &o.lo),
            (&self.lo, &o.hi),
            (&self.hi, &o.lo),
            (&self.hi, &o.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            // 0 * inf is treated as 0 for interval endpoints
            let (l, h) = if (a.is_zero() && b.is_infinite()) || (b.is_zero() && a.is_infinite()) {
                (Float::with_val(prec, 0), Float::with_val(prec, 0))
            } else {
                (down(prec, a * b), up(prec, a * b))
            };
            lo = Some(match lo {
                None => l,
                Some(x) => min_f(x, l),
            });
            hi = Some(match hi {
                None => h,
                Some(x) => max_f(x, h),
            });
        }
        Real::from_bounds(lo.unwrap(), hi.unwrap())
    }
}

impl Div<&Real> for &Real {
    type Output = Real;
    fn div(self, o: &Real) -> Real {
        let prec = self.prec().max(o.prec());
        if o.contains_zero() {
            return Real::entire(prec);
        }
        let pairs = [
            (&self.lo, &o.lo),
            (&self.lo, &o.hi),
            (&self.hi, &o.lo),
            (&self.hi, &o.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let l = down(prec, a / b);
            let h = up(prec, a / b);
            lo = Some(match lo {
                None => l,
                Some(x) => min_f(x, l),
            });
            hi = Some(match hi {
                None => h,
                Some(x) => max_f(x, h),
            });
        }
        Real::from_bounds(lo.unwrap(), hi.unwrap())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Real> for Real {
            type Output = Real;
            fn $m(self, o: Real) -> Real {
                (&self).$m(&o)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $m(self, o: &Real) -> Real {
                (&self).$m(o)
            }
        }
        impl $tr<Real> for &Real {
            type Output = Real;
            fn $m(self, o: Real) -> Real {
                self.$m(&o)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

/// Run `f` at increasing precision until it stops reporting indeterminacy.
///
/// Starts at `start` bits (at least 64) and doubles up to `max_bits`. Any
/// error other than [`Error::Indeterminate`] is returned immediately.
pub fn escalate<T>(
    op: &'static str,
    start: u32,
    max_bits: u32,
    mut f: impl FnMut(u32) -> Result<T>,
) -> Result<T> {
    let mut prec = start.max(64);
    loop {
        let p = prec.min(max_bits.max(64));
        match f(p) {
            Err(Error::Indeterminate) => {
                if p >= max_bits {
                    return Err(Error::PrecisionExhausted { op, bits: p });
                }
                prec = p.saturating_mul(2);
            }
            other => return other,
        }
    }
}

/// Bit length of an integer's absolute value.
pub fn bits_of(v: &Integer) -> u32 {
    v.significant_bits()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt2_encloses_the_true_value() {
        let two = Real::from_i64(2, 200);
        let r = two.sqrt();
        assert!(r.lo() < r.hi());
        let sq = r.square();
        assert!(sq.contains_f64(2.0));
        assert!(r.radius() < 1e-55);
    }

    #[test]
    fn comparisons_resolve_or_report() {
        let a = Real::from_i64(1, 64);
        let b = Real::from_i64(2, 64);
        assert!(a.lt(&b).unwrap());
        assert!(!b.lt(&a).unwrap());
        assert!(a.le(&a).unwrap());
        assert!(!a.lt(&a).unwrap());
        let wide = Real::hull(&a, &b);
        assert!(matches!(
            wide.lt(&Real::from_f64(1.5, 64)),
            Err(Error::Indeterminate)
        ));
    }

    #[test]
    fn division_by_straddling_interval_is_entire() {
        let a = Real::from_i64(1, 64);
        let z = Real::hull(&Real::from_i64(-1, 64), &Real::from_i64(1, 64));
        assert!(!(&a / &z).is_finite());
    }

    #[test]
    fn precision_escalation_shrinks_radius() {
        let r1 = Real::from_i64(3, 64).sqrt();
        let r2 = Real::from_i64(3, 256).sqrt();
        assert!(r2.radius() <= r1.radius());
        assert!(r1.overlaps(&r2));
    }

    #[test]
    fn escalate_stops_at_max_bits() {
        let res: Result<()> = escalate("probe", 64, 512, |_| Err(Error::Indeterminate));
        assert!(matches!(
            res,
            Err(Error::PrecisionExhausted { bits: 512, .. })
        ));
        let got = escalate("probe", 64, 4096, |p| {
            if p < 1024 {
                Err(Error::Indeterminate)
            } else {
                Ok(p)
            }
        })
        .unwrap();
        assert_eq!(got, 1024);
    }

    #[test]
    fn trig_enclosures() {
        let x = Real::from_f64(0.5, 128);
        let s = x.sin();
        let c = x.cos();
        let one = (&s.square() + &c.square()) - Real::one(128);
        assert!(one.contains_zero());
        assert!((s.mid() - 0.479425538604203).abs() < 1e-12);
    }
}
