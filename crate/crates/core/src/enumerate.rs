//! Lattice points in a rotated box.
//!
//! A box is given in the orthonormal frame of a unit vector `u`: points `x`
//! with `a = x·u ∈ [a_lo, a_hi]` and `c = x×u ∈ [c_lo, c_hi]`. Scanned points
//! are `x = n + shift` with `n ∈ Z²`. The box is normalised to `[-1,1]²` by a
//! linear map `L`, the lattice `L(Z²)` is Gauss-reduced, and candidates are
//! listed row by row along the reduced basis. Ranges are computed with
//! outward-rounded intervals so the candidate list is a superset of the
//! lattice points in the box; callers filter candidates exactly.

use std::ops::ControlFlow;

use rug::float::Round;
use rug::{Float, Integer};

use crate::error::{Error, Result};
use crate::lattice::IntVec2;
use crate::real::Real;

const REDUCTION_STEPS: usize = 100_000;

pub struct BoxScan {
    n_c: IntVec2,
    b1: IntVec2,
    b2: IntVec2,
    k_lo: Integer,
    k_hi: Integer,
    d: [Real; 2],
    lb1: [Real; 2],
    lb2: [Real; 2],
    budget: u64,
}

impl BoxScan {
    pub fn new(
        u: &[Real; 2],
        shift: &[Real; 2],
        a_range: (&Real, &Real),
        c_range: (&Real, &Real),
        prec: u32,
    ) -> Result<BoxScan> {
        let two = Real::from_i64(2, prec);
        let a_c = (a_range.0 + a_range.1) / &two;
        let c_c = (c_range.0 + c_range.1) / &two;
        // exact scales that dominate the half-widths
        let a_half = (a_range.1 - a_range.0) / &two;
        let c_half = (c_range.1 - c_range.0) / &two;
        if !a_half.is_positive()? || !c_half.is_positive()? {
            return Err(Error::Invalid("box must have positive width".into()));
        }
        let sa = Real::from_float(a_half.hi(), prec);
        let sc = Real::from_float(c_half.hi(), prec);

        let l_of = |p: &Real, q: &Real| -> [Real; 2] {
            let a = p * &u[0] + q * &u[1];
            let c = p * &u[1] - q * &u[0];
            [a / &sa, c / &sc]
        };
        let l_int = |v: &IntVec2| {
            l_of(
                &Real::from_integer(&v.p, prec),
                &Real::from_integer(&v.q, prec),
            )
        };

        // centre point and its nearest lattice translate
        let xc = [&a_c * &u[0] + &c_c * &u[1], &a_c * &u[1] - &c_c * &u[0]];
        let n_c = IntVec2::new(
            round_mid(&(&xc[0] - &shift[0]))?,
            round_mid(&(&xc[1] - &shift[1]))?,
        );
        let pc = [
            &Real::from_integer(&n_c.p, prec) + &shift[0],
            &Real::from_integer(&n_c.q, prec) + &shift[1],
        ];
        let lpc = l_of(&pc[0], &pc[1]);
        let d = [&lpc[0] - &(&a_c / &sa), &lpc[1] - &(&c_c / &sc)];

        let (b1, b2) = gauss_reduce(&l_int, prec);
        let lb1 = l_int(&b1);
        let lb2 = l_int(&b2);
        let det = &lb2[0] * &lb1[1] - &lb2[1] * &lb1[0];
        det.sign()?;
        let r1 = lb1[0].abs() + lb1[1].abs();
        let dx = &d[0] * &lb1[1] - &d[1] * &lb1[0];
        let lo = (-&r1 - &dx) / &det;
        let hi = (&r1 - &dx) / &det;
        let span = Real::hull(&lo, &hi);
        let (k_lo, k_hi) = span.integer_span()?;
        Ok(BoxScan {
            n_c,
            b1,
            b2,
            k_lo,
            k_hi,
            d,
            lb1,
            lb2,
            budget: u64::MAX,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> BoxScan {
        self.budget = budget;
        self
    }

    /// Number of rows (values of the outer index).
    pub fn rows(&self) -> Integer {
        if self.k_hi < self.k_lo {
            Integer::new()
        } else {
            Integer::from(&self.k_hi - &self.k_lo) + 1
        }
    }

    fn row(&self, k: &Integer) -> Result<Option<(Integer, Integer)>> {
        let prec = self.d[0].prec();
        let kr = Real::from_integer(k, prec);
        let q = [
            &self.d[0] + &(&kr * &self.lb2[0]),
            &self.d[1] + &(&kr * &self.lb2[1]),
        ];
        let one = Real::one(prec);
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for m in 0..2 {
            if self.lb1[m].contains_zero() {
                continue;
            }
            let a = (-&one - &q[m]) / &self.lb1[m];
            let b = (&one - &q[m]) / &self.lb1[m];
            let h = Real::hull(&a, &b);
            lo = Some(match lo {
                None => h.lo().clone(),
                Some(x) => x.max(h.lo()),
            });
            hi = Some(match hi {
                None => h.hi().clone(),
                Some(x) => x.min(h.hi()),
            });
        }
        let (lo, hi) = match (lo, hi) {
            (Some(l), Some(h)) => (l, h),
            _ => return Err(Error::Indeterminate),
        };
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Indeterminate);
        }
        let i_lo = lo
            .to_integer_round(Round::Up)
            .ok_or(Error::Indeterminate)?
            .0;
        let i_hi = hi
            .to_integer_round(Round::Down)
            .ok_or(Error::Indeterminate)?
            .0;
        Ok(if i_lo > i_hi {
            None
        } else {
            Some((i_lo, i_hi))
        })
    }

    fn point(&self, i: &Integer, k: &Integer) -> IntVec2 {
        self.n_c.add(&self.b1.scale(i)).add(&self.b2.scale(k))
    }

    /// Visit every candidate; stop early when `f` breaks.
    pub fn for_each(&self, f: impl FnMut(IntVec2) -> ControlFlow<()>) -> Result<()> {
        self.for_each_rotated(0.0, f)
    }

    /// Like [`for_each`](Self::for_each) but starting the row sweep at
    /// fraction `start` of the row range and wrapping around.
    pub fn for_each_rotated(
        &self,
        start: f64,
        mut f: impl FnMut(IntVec2) -> ControlFlow<()>,
    ) -> Result<()> {
        let rows = self.rows();
        if rows == 0 {
            return Ok(());
        }
        let offset = {
            let s = start.clamp(0.0, 1.0);
            let r = Float::with_val(64, &rows) * s;
            let o = r
                .to_integer_round(Round::Down)
                .map(|t| t.0)
                .unwrap_or_default();
            if o >= rows {
                Integer::new()
            } else {
                o
            }
        };
        let mut visited: u64 = 0;
        let mut idx = Integer::new();
        while idx < rows {
            let mut k = Integer::from(&idx + &offset);
            if k >= rows {
                k -= &rows;
            }
            k += &self.k_lo;
            if let Some((i_lo, i_hi)) = self.row(&k)? {
                let mut i = i_lo;
                while i <= i_hi {
                    visited += 1;
                    if visited > self.budget {
                        return Err(Error::BudgetExceeded {
                            op: "box_scan",
                            detail: format!("more than {} lattice candidates", self.budget),
                        });
                    }
                    if f(self.point(&i, &k)).is_break() {
                        return Ok(());
                    }
                    i += 1;
                }
            }
            idx += 1;
        }
        Ok(())
    }

    /// All candidates as a vector.
    pub fn collect(&self) -> Result<Vec<IntVec2>> {
        let mut out = Vec::new();
        self.for_each(|n| {
            out.push(n);
            ControlFlow::Continue(())
        })?;
        Ok(out)
    }
}

fn round_mid(x: &Real) -> Result<Integer> {
    if !x.is_finite() {
        return Err(Error::Indeterminate);
    }
    let s = Float::with_val(x.prec() + 2, x.lo() + x.hi()) / 2u32;
    s.to_integer().ok_or(Error::Indeterminate)
}

fn norm_f(v: &[Real; 2], prec: u32) -> Float {
    let x = mid_float(&v[0], prec);
    let y = mid_float(&v[1], prec);
    Float::with_val(prec, x.clone() * &x) + Float::with_val(prec, y.clone() * &y)
}

fn dot_f(a: &[Real; 2], b: &[Real; 2], prec: u32) -> Float {
    let ax = mid_float(&a[0], prec);
    let ay = mid_float(&a[1], prec);
    let bx = mid_float(&b[0], prec);
    let by = mid_float(&b[1], prec);
    Float::with_val(prec, ax * &bx) + Float::with_val(prec, ay * &by)
}

fn mid_float(x: &Real, prec: u32) -> Float {
    if !x.is_finite() {
        return Float::with_val(prec, 0);
    }
    Float::with_val(prec + 1, x.lo() + x.hi()) / 2u32
}

/// Gauss-reduce `Z²` under the quadratic form `|L·|²`, with floating point
/// norms. The result need not be exactly reduced; only the scan size depends on it.
fn gauss_reduce(l_int: &impl Fn(&IntVec2) -> [Real; 2], prec: u32) -> (IntVec2, IntVec2) {
    let mut b1 = IntVec2::new(1, 0);
    let mut b2 = IntVec2::new(0, 1);
    let mut l1 = l_int(&b1);
    let mut l2 = l_int(&b2);
    if norm_f(&l2, prec) < norm_f(&l1, prec) {
        std::mem::swap(&mut b1, &mut b2);
        std::mem::swap(&mut l1, &mut l2);
    }
    for _ in 0..REDUCTION_STEPS {
        let n1 = norm_f(&l1, prec);
        if n1.is_zero() || !n1.is_finite() {
            break;
        }
        let mu = Float::with_val(prec, dot_f(&l1, &l2, prec) / &n1);
        let mu = match mu.to_integer() {
            Some(m) => m,
            None => break,
        };
        if mu != 0 {
            b2 = b2.sub(&b1.scale(&mu));
            l2 = l_int(&b2);
        }
        if norm_f(&l2, prec) < n1 {
            std::mem::swap(&mut b1, &mut b2);
            std::mem::swap(&mut l1, &mut l2);
        } else {
            break;
        }
    }
    (b1, b2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(u: (f64, f64), a: (f64, f64), c: (f64, f64), r: i64) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for p in -r..=r {
            for q in -r..=r {
                let (x, y) = (p as f64, q as f64);
                let av = x * u.0 + y * u.1;
                let cv = x * u.1 - y * u.0;
                if av >= a.0 && av <= a.1 && cv >= c.0 && cv <= c.1 {
                    out.push((p, q));
                }
            }
        }
        out
    }

    #[test]
    fn box_scan_is_superset_of_brute_force() {
        let prec = 128;
        for (ang, a, c) in [
            (0.3f64, (0.0, 40.0), (-0.7, 0.7)),
            (1.1, (-5.0, 25.0), (-0.05, 0.2)),
            (2.5, (3.0, 60.0), (-1.5, 0.1)),
            (std::f64::consts::FRAC_PI_4, (-30.0, 30.0), (-30.0, 30.0)),
        ] {
            let u = [
                Real::from_f64(ang.cos(), prec),
                Real::from_f64(ang.sin(), prec),
            ];
            let z = [Real::zero(prec), Real::zero(prec)];
            let ar = (Real::from_f64(a.0, prec), Real::from_f64(a.1, prec));
            let cr = (Real::from_f64(c.0, prec), Real::from_f64(c.1, prec));
            let scan = BoxScan::new(&u, &z, (&ar.0, &ar.1), (&cr.0, &cr.1), prec).unwrap();
            let got: Vec<(i64, i64)> = scan
                .collect()
                .unwrap()
                .iter()
                .map(|v| (v.p.to_i64().unwrap(), v.q.to_i64().unwrap()))
                .collect();
            let want = brute((ang.cos(), ang.sin()), a, c, 80);
            for w in &want {
                assert!(got.contains(w), "missing {w:?} for angle {ang}");
            }
            assert!(
                got.len() <= want.len() + 4 * (got.len() / 4 + 4),
                "too many candidates"
            );
        }
    }

    #[test]
    fn rotated_sweep_visits_the_same_points() {
        let prec = 128;
        let u = [Real::from_f64(0.6, prec), Real::from_f64(0.8, prec)];
        let z = [Real::zero(prec), Real::zero(prec)];
        let scan = BoxScan::new(
            &u,
            &z,
            (&Real::from_i64(0, prec), &Real::from_i64(100, prec)),
            (&Real::from_f64(-0.5, prec), &Real::from_f64(0.5, prec)),
            prec,
        )
        .unwrap();
        let mut a = scan.collect().unwrap();
        let mut b = Vec::new();
        scan.for_each_rotated(0.37, |n| {
            b.push(n);
            ControlFlow::Continue(())
        })
        .unwrap();
        let key = |v: &IntVec2| (v.p.clone(), v.q.clone());
        a.sort_by_key(key);
        b.sort_by_key(key);
        assert_eq!(a, b);
    }
}
