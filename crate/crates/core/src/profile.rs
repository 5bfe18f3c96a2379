//! The shortest-vector function along `g_t`, its exact critical points and
//! the piecewise-linear model built from a sequence of translated-lattice vectors.
//!
//! With `a = v·θ` and `c = v×θ`, `|g_t v|² = a² e^{−t} + c² e^{t}` and the
//! profile is `f(t) = −log ℓ(g_t V)²`.

use std::cmp::Ordering;
use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumerate::BoxScan;
use crate::error::{Error, Result};
use crate::lattice::{bits_hint, cross2, dot2, Direction, IntVec2, SVec, SlitConfig, VSet, WVec};
use crate::real::Real;

/// `a² e^{−t} + c² e^{t}` for explicit components.
pub fn gt_length_sq_at(v: &[Real; 2], theta: &[Real; 2], t: &Real) -> Real {
    let a = dot2(v, theta);
    let c = cross2(v, theta);
    let e = t.exp();
    a.square() / &e + c.square() * &e
}

/// `|g_t v|²` for a vector of `V` (or any integer vector).
pub fn gt_length_sq(v: &SVec, theta: &Direction, t: f64, cfg: &SlitConfig) -> Result<Real> {
    let start = start_bits(t, v);
    cfg.escalate("gt_length_sq", start, |prec| {
        let r = gt_length_sq_at(
            &v.components(cfg, prec),
            &theta.unit(prec),
            &Real::from_f64(t, prec),
        );
        if r.radius() > r.mid().abs() * 1e-30 {
            return Err(Error::Indeterminate);
        }
        Ok(r)
    })
}

fn start_bits(t: f64, v: &SVec) -> u32 {
    128 + (3.0 * t.abs() / std::f64::consts::LN_2) as u32 + 2 * bits_hint(v.offset())
}

/// Time and value of the maximum of `t ↦ −log|g_t v|²`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Peak {
    pub t: f64,
    pub m: f64,
}

/// `T = log|v·θ| − log|v×θ|`, `M = −log|v·θ| − log|v×θ| − log 2`.
pub fn peak_of(v: &SVec, theta: &Direction, cfg: &SlitConfig) -> Result<Peak> {
    if let (SVec::Z(z), Some((x, y))) = (v, theta.rational()) {
        let dot = x.clone() * rug::Rational::from(&z.p) + y.clone() * rug::Rational::from(&z.q);
        let cr = rug::Rational::from(&z.p) * y - rug::Rational::from(&z.q) * x;
        if dot == 0 || cr == 0 {
            return Err(Error::NoInteriorPeak(format!(
                "{v:?} is parallel or orthogonal to the direction"
            )));
        }
    }
    let start = 128 + 2 * bits_hint(v.offset());
    let res = cfg.escalate("peak_of", start, |prec| {
        let u = theta.unit(prec);
        let comps = v.components(cfg, prec);
        let a = dot2(&comps, &u).abs();
        let c = cross2(&comps, &u).abs();
        a.sign()?;
        c.sign()?;
        let tt = a.ln() - c.ln();
        let mm = -a.ln() - c.ln() - Real::ln2(prec);
        if tt.radius() > 1e-15 * (1.0 + tt.mid().abs())
            || mm.radius() > 1e-15 * (1.0 + mm.mid().abs())
        {
            return Err(Error::Indeterminate);
        }
        Ok(Peak {
            t: tt.mid(),
            m: mm.mid(),
        })
    });
    match res {
        Err(Error::PrecisionExhausted { .. }) => Err(Error::NoInteriorPeak(format!(
            "{v:?}: a component product is zero to working precision"
        ))),
        other => other,
    }
}

/// `(T, M)` as intervals, for callers that compare them rigorously.
pub fn peak_interval(v: &[Real; 2], theta: &[Real; 2]) -> Result<(Real, Real)> {
    let a = dot2(v, theta).abs();
    let c = cross2(v, theta).abs();
    a.sign()?;
    c.sign()?;
    let prec = a.prec();
    Ok((a.ln() - c.ln(), -a.ln() - c.ln() - Real::ln2(prec)))
}

/// Time and value where `|g_t v| = |g_t v'|`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Crossing {
    pub t: f64,
    pub m: f64,
}

/// `e^{2t} = (|v'·θ|² − |v·θ|²)/(|v×θ|² − |v'×θ|²)`, `m = −log|g_t v|²`.
pub fn crossing_of(v: &SVec, w: &SVec, theta: &Direction, cfg: &SlitConfig) -> Result<Crossing> {
    let start = 128 + 2 * bits_hint(v.offset()).max(bits_hint(w.offset()));
    cfg.escalate("crossing_of", start, |prec| {
        let u = theta.unit(prec);
        let (pv, pw) = (v.components(cfg, prec), w.components(cfg, prec));
        let (a, c) = (dot2(&pv, &u).square(), cross2(&pv, &u).square());
        let (a2, c2) = (dot2(&pw, &u).square(), cross2(&pw, &u).square());
        let lv = pv[0].square() + pv[1].square();
        let lw = pw[0].square() + pw[1].square();
        let mut bad = Vec::new();
        if !lv.lt(&lw)? {
            bad.push("|v| < |v'|");
        }
        if !c2.mul_i64(2).le(&c)? {
            bad.push("|v'×θ| ≤ |v×θ|/√2");
        }
        if !a2.ge(&a.mul_i64(2))? {
            bad.push("|v'·θ| ≥ √2|v·θ|");
        }
        if !bad.is_empty() {
            return Err(Error::ValleyHypotheses(bad.join(", ")));
        }
        let e2t = (&a2 - &a) / (&c - &c2);
        let t = e2t.ln() / Real::from_i64(2, prec);
        let m = -gt_length_sq_at(&pv, &u, &t).ln();
        if t.radius() > 1e-15 * (1.0 + t.mid().abs()) || m.radius() > 1e-15 * (1.0 + m.mid().abs())
        {
            return Err(Error::Indeterminate);
        }
        Ok(Crossing {
            t: t.mid(),
            m: m.mid(),
        })
    })
}

/// Shortest vectors of the selected set at time `t`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Shortest {
    /// Canonical witness first; more than one entry only for unresolved or exact ties.
    pub witnesses: Vec<SVec>,
    pub len_sq: f64,
    /// `−log ℓ²`.
    pub f: f64,
}

/// Candidate pool of the box `|v·θ| ≤ ℓ e^{t/2}`, `|v×θ| ≤ ℓ e^{−t/2}`.
fn box_candidates(
    set: VSet,
    u: &[Real; 2],
    t: &Real,
    ell: &Real,
    cfg: &SlitConfig,
    prec: u32,
) -> Result<Vec<(SVec, Real)>> {
    let half = Real::from_i64(2, prec);
    let ea = (t / &half).exp() * ell;
    let ec = (-(t / &half)).exp() * ell;
    let zero = Real::zero(prec);
    let mut shifts: Vec<(Option<i8>, [Real; 2])> = Vec::new();
    if set.has_z() {
        shifts.push((None, [zero.clone(), zero.clone()]));
    }
    if set.has_w() {
        let (x0, y0) = cfg.holonomy(prec);
        shifts.push((Some(1), [x0.clone(), y0.clone()]));
        shifts.push((Some(-1), [-&x0, -&y0]));
    }
    let mut out = Vec::new();
    for (sign, shift) in shifts {
        let scan =
            BoxScan::new(u, &shift, (&-&ea, &ea), (&-&ec, &ec), prec)?.with_budget(cfg.enum_budget);
        scan.for_each(|n| {
            let keep = match sign {
                None => !n.is_zero() && n.is_primitive(),
                Some(_) => true,
            };
            if keep {
                let sv = match sign {
                    None => SVec::Z(n),
                    Some(s) => SVec::W(WVec::new(s, n)),
                };
                let l = gt_length_sq_at(&sv.components(cfg, prec), u, t);
                out.push((sv, l));
            }
            ControlFlow::Continue(())
        })?;
    }
    Ok(out)
}

fn canonical(v: SVec, u: &[Real; 2], cfg: &SlitConfig, prec: u32) -> SVec {
    let a = dot2(&v.components(cfg, prec), u);
    let flip = match a.sign() {
        Ok(Ordering::Less) => true,
        Ok(_) => false,
        Err(_) => {
            a.mid() < 0.0 || (a.mid() == 0.0 && cross2(&v.components(cfg, prec), u).mid() < 0.0)
        }
    };
    if flip {
        v.neg()
    } else {
        v
    }
}

fn same_up_to_sign(a: &SVec, b: &SVec) -> bool {
    a == b || *a == b.neg()
}

/// A vector of `V` (restricted to `set`) of minimal `|g_t ·|`.
pub fn shortest_at(theta: &Direction, t: f64, set: VSet, cfg: &SlitConfig) -> Result<Shortest> {
    let mut prec =
        (128 + (3.0 * t.abs() / std::f64::consts::LN_2) as u32).min(cfg.precision_bits.max(64));
    loop {
        match shortest_at_prec(theta, t, set, cfg, prec, prec >= cfg.precision_bits) {
            Err(Error::Indeterminate) if prec < cfg.precision_bits => {
                prec = (prec * 2).min(cfg.precision_bits)
            }
            Err(Error::Indeterminate) => {
                return Err(Error::PrecisionExhausted {
                    op: "shortest_at",
                    bits: prec,
                })
            }
            other => return other,
        }
    }
}

fn shortest_at_prec(
    theta: &Direction,
    t: f64,
    set: VSet,
    cfg: &SlitConfig,
    prec: u32,
    last: bool,
) -> Result<Shortest> {
    let u = theta.unit(prec);
    let tr = Real::from_f64(t, prec);
    let mut ell = Real::one(prec);
    for _ in 0..64 {
        let cands = box_candidates(set, &u, &tr, &ell, cfg, prec)?;
        if cands.is_empty() {
            ell = ell.mul_i64(2);
            continue;
        }
        // smallest certain upper bound among candidates
        let best_hi = cands
            .iter()
            .map(|(_, l)| l.hi().clone())
            .min_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal))
            .expect("non-empty");
        let best_hi = Real::from_float(&best_hi, prec);
        let ell_sq = ell.square();
        if !best_hi.le(&ell_sq).unwrap_or(false) {
            // minimum not yet certified inside the box; widen to the found bound
            ell = best_hi.sqrt();
            ell = Real::from_float(ell.hi(), prec);
            let next = box_candidates(set, &u, &tr, &ell, cfg, prec)?;
            return resolve(next, &u, cfg, prec, last);
        }
        return resolve(cands, &u, cfg, prec, last);
    }
    Err(Error::BudgetExceeded {
        op: "shortest_at",
        detail: "no vector found in any search box".into(),
    })
}

fn resolve(
    cands: Vec<(SVec, Real)>,
    u: &[Real; 2],
    cfg: &SlitConfig,
    prec: u32,
    last: bool,
) -> Result<Shortest> {
    let lowest_hi = cands
        .iter()
        .map(|(_, l)| l.hi().clone())
        .min_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal))
        .ok_or(Error::Indeterminate)?;
    let bound = Real::from_float(&lowest_hi, prec);
    let mut close: Vec<(SVec, Real)> = Vec::new();
    for (v, l) in cands {
        if l.le(&bound).unwrap_or(true) && !close.iter().any(|(c, _)| same_up_to_sign(c, &v)) {
            close.push((v, l));
        }
    }
    if close.len() > 1 {
        let exact_tie = close
            .iter()
            .all(|(_, l)| l.radius() == 0.0 && l.lo() == close[0].1.lo());
        if !exact_tie && !last {
            return Err(Error::Indeterminate);
        }
    }
    let mut ws: Vec<SVec> = close
        .iter()
        .map(|(v, _)| canonical(v.clone(), u, cfg, prec))
        .collect();
    crate::lattice::sort_by_angle(&mut ws, cfg);
    let len_sq = close[0].1.mid();
    let f = -close[0].1.ln().mid();
    Ok(Shortest {
        witnesses: ws,
        len_sq,
        f,
    })
}

/// One sample of the brute-force profile.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub f: f64,
    pub witness: SVec,
    pub ties: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BruteProfile {
    pub samples: Vec<Sample>,
}

impl BruteProfile {
    /// Largest `|f(t_{i+1}) − f(t_i)| − (t_{i+1} − t_i)`; at most rounding for a 1-Lipschitz profile.
    pub fn lipschitz_excess(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| (w[1].f - w[0].f).abs() - (w[1].t - w[0].t))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Sample `f(t)` on `t_lo, t_lo + step, …` up to `t_hi` inclusive.
pub fn brute_profile(
    theta: &Direction,
    t_lo: f64,
    t_hi: f64,
    step: f64,
    set: VSet,
    cfg: &SlitConfig,
) -> Result<BruteProfile> {
    if t_lo > t_hi || step.partial_cmp(&0.0) != Some(Ordering::Greater) {
        return Err(Error::Invalid("need t_lo ≤ t_hi and step > 0".into()));
    }
    let n = ((t_hi - t_lo) / step + 1e-9).floor() as usize;
    let samples = (0..=n)
        .into_par_iter()
        .map(|i| {
            let t = if i == n && n > 0 {
                t_lo + step * n as f64
            } else {
                t_lo + step * i as f64
            };
            let s = shortest_at(theta, t, set, cfg)?;
            Ok(Sample {
                t,
                f: s.f,
                ties: s.witnesses.len(),
                witness: s.witnesses.into_iter().next().expect("witness"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BruteProfile { samples })
}

/// Whether `2|v||v×θ|` is at most `|v×u|` for every other `u` of the set with `|u| ≤ √2|v|`.
pub fn peak_shortness_holds(
    v: &SVec,
    theta: &Direction,
    set: VSet,
    cfg: &SlitConfig,
) -> Result<bool> {
    let start = 128 + 2 * bits_hint(v.offset());
    cfg.escalate("peak_shortness_holds", start, |prec| {
        peak_shortness_at(v, theta, set, cfg, prec)
    })
}

fn peak_shortness_at(
    v: &SVec,
    theta: &Direction,
    set: VSet,
    cfg: &SlitConfig,
    prec: u32,
) -> Result<bool> {
    let u = theta.unit(prec);
    let pv = v.components(cfg, prec);
    let vlen = (pv[0].square() + pv[1].square()).sqrt();
    let lhs = cross2(&pv, &u).abs() * &vlen * Real::from_i64(2, prec);
    if lhs.sign()? == Ordering::Equal {
        return Ok(true);
    }
    let vhat = [&pv[0] / &vlen, &pv[1] / &vlen];
    // a competitor violates iff |u × v̂| < lhs/|v|
    let width = &lhs / &vlen;
    let reach = &vlen * Real::from_i64(2, prec).sqrt();
    let reach_sq = vlen.square().mul_i64(2);
    let zero = Real::zero(prec);
    let mut shifts: Vec<(Option<i8>, [Real; 2])> = Vec::new();
    if set.has_z() {
        shifts.push((None, [zero.clone(), zero.clone()]));
    }
    if set.has_w() {
        let (x0, y0) = cfg.holonomy(prec);
        shifts.push((Some(1), [x0.clone(), y0.clone()]));
        shifts.push((Some(-1), [-&x0, -&y0]));
    }
    for (sign, shift) in shifts {
        let scan = BoxScan::new(&vhat, &shift, (&-&reach, &reach), (&-&width, &width), prec)?
            .with_budget(cfg.enum_budget);
        let mut violated = false;
        let mut err = None;
        scan.for_each(|n| {
            let cand = match sign {
                None if n.is_zero() || !n.is_primitive() => return ControlFlow::Continue(()),
                None => SVec::Z(n),
                Some(s) => SVec::W(WVec::new(s, n)),
            };
            if same_up_to_sign(&cand, v) {
                return ControlFlow::Continue(());
            }
            let pu = cand.components(cfg, prec);
            let r = (|| -> Result<bool> {
                let l2 = pu[0].square() + pu[1].square();
                if !l2.le(&reach_sq)? {
                    return Ok(false);
                }
                cross2(&pv, &pu).abs().lt(&lhs)
            })();
            match r {
                Ok(true) => {
                    violated = true;
                    ControlFlow::Break(())
                }
                Ok(false) => ControlFlow::Continue(()),
                Err(e) => {
                    err = Some(e);
                    ControlFlow::Break(())
                }
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        if violated {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A peak `(T_j, M_j)` and the following valley `(t_{j+1}, m_{j+1})`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlStep {
    pub j: usize,
    pub peak_t: f64,
    pub peak_m: f64,
    pub valley_t: f64,
    pub valley_m: f64,
    /// Formula inputs: `log|w_j|`, `log|w_{j+1}|`, `x_j = |w_j × w_{j+1}|`.
    pub log_len: f64,
    pub log_len_next: f64,
    pub cross: f64,
}

/// Critical points of the piecewise-linear model, from index `j1` on.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlProfile {
    pub j1: usize,
    /// Valley `(t_{j1}, m_{j1})` that opens the model.
    pub start_t: f64,
    pub start_m: f64,
    /// Every step `j ≥ 1` of the sequence; the model uses those with `j ≥ j1`.
    pub steps: Vec<PlStep>,
}

impl PlProfile {
    /// Alternating knots `(t, value)` of the model, valley first.
    pub fn knots(&self) -> Vec<(f64, f64)> {
        let mut k = vec![(self.start_t, self.start_m)];
        for s in self.steps.iter().filter(|s| s.j >= self.j1) {
            k.push((s.peak_t, s.peak_m));
            k.push((s.valley_t, s.valley_m));
        }
        k
    }

    /// Model value on `[t_{j1}, last knot]`, `None` outside.
    pub fn lambda(&self, t: f64) -> Option<f64> {
        let k = self.knots();
        if t < k[0].0 || t > k[k.len() - 1].0 {
            return None;
        }
        let i = k.partition_point(|p| p.0 <= t).max(1).min(k.len() - 1);
        let (t0, v0) = k[i - 1];
        let (t1, v1) = k[i];
        if t1 == t0 {
            return Some(v0);
        }
        Some(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }

    /// Peaks `(T_j, M_j)` used by the model.
    pub fn peaks(&self) -> Vec<(usize, f64, f64)> {
        self.steps
            .iter()
            .filter(|s| s.j >= self.j1)
            .map(|s| (s.j, s.peak_t, s.peak_m))
            .collect()
    }
}

/// Logs and consecutive cross products of a sequence, computed once.
struct SeqData {
    log_len: Vec<f64>,
    cross: Vec<f64>,
    log_cross: Vec<f64>,
}

fn seq_data(seq: &[WVec], cfg: &SlitConfig) -> Result<SeqData> {
    let bits = seq.iter().map(|w| bits_hint(&w.n)).max().unwrap_or(0);
    cfg.escalate("pl_profile", 128 + 2 * bits, |prec| {
        let mut log_len = Vec::new();
        let mut cross = Vec::new();
        let mut log_cross = Vec::new();
        for w in seq {
            let l = w.length_sq(cfg, prec).ln() / Real::from_i64(2, prec);
            if l.radius() > 1e-14 * (1.0 + l.mid().abs()) {
                return Err(Error::Indeterminate);
            }
            log_len.push(l.mid());
        }
        for p in seq.windows(2) {
            let x = p[0].cross_w_at(&p[1], cfg, prec).abs();
            x.sign()?;
            let lx = x.ln();
            if lx.radius() > 1e-14 * (1.0 + lx.mid().abs()) {
                return Err(Error::Indeterminate);
            }
            cross.push(x.mid());
            log_cross.push(lx.mid());
        }
        Ok(SeqData {
            log_len,
            cross,
            log_cross,
        })
    })
}

/// Violations of the three sequence hypotheses, as `(clause, index)`.
pub fn pl_hypotheses(seq: &[WVec], cfg: &SlitConfig) -> Result<Vec<(String, usize)>> {
    let g = cfg.genus;
    let mut bad = Vec::new();
    let bits = seq.iter().map(|w| bits_hint(&w.n)).max().unwrap_or(0);
    for (j, p) in seq.windows(2).enumerate() {
        let ok = match p[0].step_to(&p[1], g) {
            Some(v) if v.is_primitive() => {
                cfg.escalate("pl_hypotheses", 128 + 2 * bits, |prec| {
                    let longer = v.length(prec).gt(&p[0].length(cfg, prec))?;
                    let acute = p[0].dot_int_at(&v, cfg, prec).is_positive()?;
                    Ok(longer && acute)
                })?
            }
            _ => false,
        };
        if !ok {
            bad.push(("i".to_string(), j));
        }
    }
    let d = seq_data(seq, cfg)?;
    let lim = (g as f64).ln() - (2.0 * 2f64.sqrt()).ln();
    for j in 1..d.cross.len() {
        if d.log_cross[j] >= lim {
            bad.push(("ii".to_string(), j));
        }
    }
    let lim3 = -((5 * g + 5) as f64).ln();
    for j in 2..d.cross.len() {
        let r = d.log_len[j] + d.log_cross[j] - d.log_len[j + 1] - d.log_cross[j - 1];
        if r >= lim3 {
            bad.push(("iii".to_string(), j));
        }
    }
    Ok(bad)
}

/// Closed-form critical points of the model for an admissible sequence.
pub fn pl_profile(seq: &[WVec], cfg: &SlitConfig) -> Result<PlProfile> {
    if seq.len() < 3 {
        return Err(Error::Invalid("need at least three vectors".into()));
    }
    if let Some((clause, index)) = pl_hypotheses(seq, cfg)?.into_iter().next() {
        return Err(Error::ProfileHypothesis { clause, index });
    }
    pl_profile_unchecked(seq, cfg)
}

/// Same formulas without the hypothesis check.
pub fn pl_profile_unchecked(seq: &[WVec], cfg: &SlitConfig) -> Result<PlProfile> {
    let d = seq_data(seq, cfg)?;
    let n = seq.len();
    let mut steps = Vec::new();
    // valley t_j, m_j is defined from the pair (j−1, j)
    let valley = |j: usize| (2.0 * d.log_len[j] - d.log_cross[j - 1], -d.log_cross[j - 1]);
    for j in 1..n - 1 {
        let (lw, lw1, lx) = (d.log_len[j], d.log_len[j + 1], d.log_cross[j]);
        let (vt, vm) = valley(j + 1);
        steps.push(PlStep {
            j,
            peak_t: lw + lw1 - lx,
            peak_m: lw1 - lw - lx,
            valley_t: vt,
            valley_m: vm,
            log_len: lw,
            log_len_next: lw1,
            cross: d.cross[j],
        });
    }
    let j1 = steps
        .iter()
        .find(|s| valley(s.j).0 < s.peak_t)
        .map(|s| s.j)
        .ok_or_else(|| Error::ProfileHypothesis {
            clause: "interleaving".into(),
            index: n - 2,
        })?;
    let (start_t, start_m) = valley(j1);
    Ok(PlProfile {
        j1,
        start_t,
        start_m,
        steps,
    })
}

/// Slow-divergence ratio `M_j/T_j` and rate `log M_j / log T_j` at each model peak.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatePoint {
    pub j: usize,
    pub peak_t: f64,
    pub peak_m: f64,
    pub ratio: f64,
    pub rate: f64,
}

pub fn rate_estimate(profile: &PlProfile) -> Vec<RatePoint> {
    profile
        .peaks()
        .into_iter()
        .map(|(j, t, m)| RatePoint {
            j,
            peak_t: t,
            peak_m: m,
            ratio: m / t,
            rate: if t > 1.0 && m > 0.0 {
                m.ln() / t.ln()
            } else {
                f64::NAN
            },
        })
        .collect()
}

/// Largest `|f − Λ|` on each model segment `[t_j, t_{j+1}]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SegmentDeviation {
    pub j: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    pub max_dev: f64,
    pub samples: usize,
}

pub fn deviation_by_segment(profile: &PlProfile, brute: &BruteProfile) -> Vec<SegmentDeviation> {
    let mut out = Vec::new();
    let mut lo = (profile.j1, profile.start_t);
    for s in profile.steps.iter().filter(|s| s.j >= profile.j1) {
        let (t_lo, t_hi) = (lo.1, s.valley_t);
        let mut max_dev: f64 = 0.0;
        let mut count = 0;
        for smp in brute.samples.iter().filter(|x| x.t >= t_lo && x.t <= t_hi) {
            if let Some(l) = profile.lambda(smp.t) {
                max_dev = max_dev.max((smp.f - l).abs());
                count += 1;
            }
        }
        out.push(SegmentDeviation {
            j: lo.0,
            t_lo,
            t_hi,
            max_dev,
            samples: count,
        });
        lo = (s.j + 1, s.valley_t);
    }
    out
}

/// Certified maximum of `|f − Λ|` on one model segment.
#[derive(Clone, Debug)]
pub struct SegmentSup {
    pub j: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    pub max_dev: Real,
    pub argmax_t: f64,
    /// Knots and grid samples evaluated.
    pub points: usize,
}

/// Per-segment maxima of `|f − Λ|` with interval enclosures.
///
/// `f` is 1-Lipschitz and `Λ` has slopes ±1, so `f − Λ` is monotone on every piece of `Λ` and the
/// maximum over a segment sits at one of its knots. The grid samples of `brute` are evaluated too.
pub fn segment_sups(
    seq: &[WVec],
    profile: &PlProfile,
    theta: &Direction,
    brute: &BruteProfile,
    cfg: &SlitConfig,
) -> Result<Vec<SegmentSup>> {
    let bits = seq.iter().map(|w| bits_hint(&w.n)).max().unwrap_or(0);
    let t_hi = profile.steps.last().map_or(0.0, |s| s.valley_t);
    let start = 256 + 4 * bits + (2.0 * t_hi / std::f64::consts::LN_2) as u32;
    cfg.escalate("segment_sups", start, |prec| {
        segment_sups_at(seq, profile, theta, brute, cfg, prec)
    })
}

fn segment_sups_at(
    seq: &[WVec],
    profile: &PlProfile,
    theta: &Direction,
    brute: &BruteProfile,
    cfg: &SlitConfig,
    prec: u32,
) -> Result<Vec<SegmentSup>> {
    let u = theta.unit(prec);
    let two = Real::from_i64(2, prec);
    let ll: Vec<Real> = seq
        .iter()
        .map(|w| w.length_sq(cfg, prec).ln() / &two)
        .collect();
    let lx: Vec<Real> = seq
        .windows(2)
        .map(|p| p[0].cross_w_at(&p[1], cfg, prec).abs().ln())
        .collect();
    let valley = |j: usize| (&(&two * &ll[j]) - &lx[j - 1], -&lx[j - 1]);
    // (t, value, path indices shortest near the knot)
    let mut knots: Vec<(Real, Real, Vec<usize>)> = Vec::new();
    let (t0, m0) = valley(profile.j1);
    knots.push((t0, m0, vec![profile.j1 - 1, profile.j1]));
    for s in profile.steps.iter().filter(|s| s.j >= profile.j1) {
        let j = s.j;
        knots.push((
            &(&ll[j] + &ll[j + 1]) - &lx[j],
            &(&ll[j + 1] - &ll[j]) - &lx[j],
            vec![j],
        ));
        let (vt, vm) = valley(j + 1);
        knots.push((vt, vm, vec![j, j + 1]));
    }
    let f_of = |v: &SVec, t: &Real| -gt_length_sq_at(&v.components(cfg, prec), &u, t).ln();
    let lambda = |t: &Real| -> Option<Real> {
        let i = knots.iter().position(|k| k.0.mid() > t.mid())?;
        if i == 0 {
            return None;
        }
        let (a, b) = (&knots[i - 1], &knots[i]);
        Some(&a.1 + &(&(&b.1 - &a.1) * &(&(t - &a.0) / &(&b.0 - &a.0))))
    };
    let mut out = Vec::new();
    let mut k_lo = 0;
    for (k_hi, seg_j) in (2..knots.len()).step_by(2).zip(profile.j1..) {
        let (t_lo, t_hi) = (knots[k_lo].0.mid(), knots[k_hi].0.mid());
        let mut best: Option<(Real, f64)> = None;
        let mut keep = |d: Real, t: f64| match &best {
            Some((b, _)) if d.mid() <= b.mid() => {}
            _ => best = Some((d, t)),
        };
        let mut points = 0;
        for (t, value, near) in &knots[k_lo..=k_hi] {
            let mut cands = shortest_at(theta, t.mid(), VSet::V, cfg)?.witnesses;
            cands.extend(near.iter().map(|&i| SVec::W(seq[i].clone())));
            let f = cands
                .iter()
                .map(|v| f_of(v, t))
                .reduce(|a, b| a.max(&b))
                .expect("candidates");
            keep((&f - value).abs(), t.mid());
            points += 1;
        }
        for smp in brute.samples.iter().filter(|x| x.t > t_lo && x.t < t_hi) {
            let t = Real::from_f64(smp.t, prec);
            let Some(l) = lambda(&t) else { continue };
            keep((&f_of(&smp.witness, &t) - &l).abs(), smp.t);
            points += 1;
        }
        let (max_dev, argmax_t) = best.expect("segment has knots");
        if max_dev.radius() > 1e-30 * (1.0 + max_dev.mid().abs()) {
            return Err(Error::Indeterminate);
        }
        out.push(SegmentSup {
            j: seg_j,
            t_lo,
            t_hi,
            max_dev,
            argmax_t,
            points,
        });
        k_lo = k_hi;
    }
    Ok(out)
}

/// `|g_t u × g_t v| − |u × v|` for integer vectors; zero up to rounding since `g_t` has determinant one.
pub fn cross_defect(u: &IntVec2, v: &IntVec2, theta: &Direction, t: f64, prec: u32) -> Real {
    let th = theta.unit(prec);
    let e = Real::from_f64(t / 2.0, prec).exp();
    let img = |x: &IntVec2| {
        let c = x.components(prec);
        let a = dot2(&c, &th) / &e;
        let b = cross2(&c, &th) * &e;
        [a, b]
    };
    cross2(&img(u), &img(v)).abs() - Real::from_integer(&u.cross(v), prec).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir(x: i64, y: i64) -> Direction {
        Direction::of_int(&IntVec2::new(x, y))
    }

    #[test]
    fn length_formula_axis_cases() {
        let cfg = SlitConfig::default();
        let e1 = SVec::Z(IntVec2::new(1, 0));
        let e2 = SVec::Z(IntVec2::new(0, 1));
        let t = 0.75;
        assert!((gt_length_sq(&e1, &dir(1, 0), t, &cfg).unwrap().mid() - (-t).exp()).abs() < 1e-15);
        assert!((gt_length_sq(&e2, &dir(1, 0), t, &cfg).unwrap().mid() - t.exp()).abs() < 1e-14);
        assert!((gt_length_sq(&e1, &dir(1, 1), 0.0, &cfg).unwrap().mid() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn peak_at_diagonal() {
        let cfg = SlitConfig::default();
        let p = peak_of(&SVec::Z(IntVec2::new(1, 0)), &dir(1, 1), &cfg).unwrap();
        assert!(p.t.abs() < 1e-15 && p.m.abs() < 1e-15);
        assert!(matches!(
            peak_of(&SVec::Z(IntVec2::new(1, 0)), &dir(1, 0), &cfg),
            Err(Error::NoInteriorPeak(_))
        ));
    }

    #[test]
    fn axis_valley() {
        let cfg = SlitConfig::default();
        let c = crossing_of(
            &SVec::Z(IntVec2::new(1, 0)),
            &SVec::Z(IntVec2::new(0, 2)),
            &dir(0, 1),
            &cfg,
        )
        .unwrap();
        assert!((c.t - 2f64.ln()).abs() < 1e-15);
        assert!((c.m + 2f64.ln()).abs() < 1e-15);
        let e = crossing_of(
            &SVec::Z(IntVec2::new(0, 2)),
            &SVec::Z(IntVec2::new(1, 0)),
            &dir(0, 1),
            &cfg,
        );
        assert!(matches!(e, Err(Error::ValleyHypotheses(_))));
    }

    #[test]
    fn unit_lattice_shortest() {
        let cfg = SlitConfig::default();
        let s = shortest_at(&dir(0, 1), 0.0, VSet::Z, &cfg).unwrap();
        assert!((s.len_sq - 1.0).abs() < 1e-15);
        assert_eq!(s.witnesses.len(), 2);
    }

    #[test]
    fn peak_shortness_examples() {
        let cfg = SlitConfig::default();
        assert!(
            peak_shortness_holds(&SVec::Z(IntVec2::new(1, 0)), &dir(1, 0), VSet::Z, &cfg).unwrap()
        );
        assert!(
            !peak_shortness_holds(&SVec::Z(IntVec2::new(1, 0)), &dir(1, 1), VSet::Z, &cfg).unwrap()
        );
    }

    #[test]
    fn synthetic_constant_slope_ratio() {
        let p = PlProfile {
            j1: 1,
            start_t: 0.0,
            start_m: 0.0,
            steps: (1..4)
                .map(|j| PlStep {
                    j,
                    peak_t: 2.0 * j as f64,
                    peak_m: 2.0 * j as f64,
                    valley_t: 2.0 * j as f64 + 1.0,
                    valley_m: 2.0 * j as f64 - 1.0,
                    log_len: 0.0,
                    log_len_next: 0.0,
                    cross: 1.0,
                })
                .collect(),
        };
        assert!(rate_estimate(&p)
            .iter()
            .all(|r| (r.ratio - 1.0).abs() < 1e-15));
    }
}
