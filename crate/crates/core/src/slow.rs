//! Sequences `w_{j+1} = w_j + g·v_{j+1}` whose divergence proxy `m_j` tracks a
//! prescribed slowly increasing rate `r(t)`.
//!
//! `t_j`, `m_j` use the half-log convention
//! `t = ½ log(|w_j|²/|w_{j−1}×w_j|)`, `m = ½ log(1/|w_{j−1}×w_j|)`.

use std::cmp::Ordering;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::cfrac::{spec_of, Owner};
use crate::lattice::{bits_hint, IntVec2, SlitConfig, WVec};
use crate::profile::{pl_hypotheses, pl_profile_unchecked, PlProfile};
use crate::real::Real;
use crate::{Error, Result};

/// Target rate `r(t)`, increasing to infinity with `r·r' → 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateFn {
    /// `log(1+t)`.
    Log,
    /// `√log(1+t)`.
    SqrtLog,
    /// `log log(10+t) / (2+eps) + shift`.
    LogLog { eps: f64, shift: f64 },
    /// Piecewise-linear through `(t, r)` knots with increasing `t`, extended by the last slope.
    Table { knots: Vec<(f64, f64)> },
}

impl RateFn {
    pub fn parse(name: &str) -> Result<RateFn> {
        match name {
            "log" => Ok(RateFn::Log),
            "sqrtlog" => Ok(RateFn::SqrtLog),
            "loglog" => Ok(RateFn::LogLog {
                eps: 0.1,
                shift: 0.5,
            }),
            _ => Err(Error::Config(format!("unknown rate {name:?}"))),
        }
    }

    /// Reads `t,r` lines (a header line is skipped when it does not parse).
    pub fn from_table_csv(text: &str) -> Result<RateFn> {
        let mut knots = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split(',').map(str::trim);
            let parsed = match (
                it.next().map(str::parse::<f64>),
                it.next().map(str::parse::<f64>),
            ) {
                (Some(Ok(t)), Some(Ok(r))) => Some((t, r)),
                _ => None,
            };
            match parsed {
                Some(k) => knots.push(k),
                None if i == 0 => continue,
                None => {
                    return Err(Error::Config(format!(
                        "rate table line {}: expected t,r",
                        i + 1
                    )))
                }
            }
        }
        let rate = RateFn::Table { knots };
        rate.validate()?;
        Ok(rate)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RateFn::LogLog { eps, shift } if !(*eps > 0.0 && *shift >= 0.0) => {
                Err(Error::Config("loglog needs eps > 0 and shift ≥ 0".into()))
            }
            RateFn::Table { knots } => {
                if knots.len() < 2 {
                    return Err(Error::Config("rate table needs two knots".into()));
                }
                if knots
                    .windows(2)
                    .any(|p| !(p[1].0 > p[0].0 && p[1].1 >= p[0].1))
                {
                    return Err(Error::Config(
                        "rate table must be increasing in t and r".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            RateFn::Log => "log(1+t)".into(),
            RateFn::SqrtLog => "sqrt(log(1+t))".into(),
            RateFn::LogLog { eps, shift } => format!("log(log(10+t))/(2+{eps})+{shift}"),
            RateFn::Table { knots } => format!("table({} knots)", knots.len()),
        }
    }

    pub fn eval(&self, t: &Real) -> Real {
        let prec = t.prec();
        match self {
            RateFn::Log => t.add_int(&Integer::from(1)).ln(),
            RateFn::SqrtLog => t.add_int(&Integer::from(1)).ln().sqrt(),
            RateFn::LogLog { eps, shift } => {
                t.add_int(&Integer::from(10)).ln().ln() / Real::from_f64(2.0 + eps, prec)
                    + Real::from_f64(*shift, prec)
            }
            RateFn::Table { knots } => {
                let k = table_segment(knots, t.mid());
                let (t0, r0) = knots[k];
                let (t1, r1) = knots[k + 1];
                let slope = Real::from_f64(r1 - r0, prec) / Real::from_f64(t1 - t0, prec);
                Real::from_f64(r0, prec) + slope * (t - &Real::from_f64(t0, prec))
            }
        }
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        self.eval(&Real::from_f64(t, 64)).mid()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            RateFn::Log => 1.0 / (1.0 + t),
            RateFn::SqrtLog => 1.0 / (2.0 * (1.0 + t) * (1.0 + t).ln().sqrt()),
            RateFn::LogLog { eps, .. } => 1.0 / ((10.0 + t) * (10.0 + t).ln() * (2.0 + eps)),
            RateFn::Table { knots } => {
                let k = table_segment(knots, t);
                (knots[k + 1].1 - knots[k].1) / (knots[k + 1].0 - knots[k].0)
            }
        }
    }
}

fn table_segment(knots: &[(f64, f64)], t: f64) -> usize {
    let n = knots.len();
    (0..n - 1).rev().find(|&k| knots[k].0 <= t).unwrap_or(0)
}

/// Spot check of `r' > 0` and of `r·r'` shrinking on `[t_lo, t_hi]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateCheck {
    pub t_lo: f64,
    pub t_hi: f64,
    pub monotone: bool,
    /// `r·r'` at the ends of the range.
    pub product_lo: f64,
    pub product_hi: f64,
}

pub fn check_rate(rate: &RateFn, t_lo: f64, t_hi: f64) -> RateCheck {
    let n = 200;
    let ts: Vec<f64> = (0..=n)
        .map(|i| t_lo + (t_hi - t_lo) * i as f64 / n as f64)
        .collect();
    let vals: Vec<f64> = ts.iter().map(|&t| rate.eval_f64(t)).collect();
    let monotone =
        vals.windows(2).all(|p| p[1] >= p[0]) && ts.iter().all(|&t| rate.derivative(t) > 0.0);
    let prod = |t: f64| rate.eval_f64(t) * rate.derivative(t);
    RateCheck {
        t_lo,
        t_hi,
        monotone,
        product_lo: prod(t_lo),
        product_hi: prod(t_hi),
    }
}

/// The unique `u ∈ Z` with `|w×u| < ½|w×v|`, `|u×v| = 1`, `w·u > 0`.
pub fn u_of(w: &WVec, v: &IntVec2, cfg: &SlitConfig) -> Result<IntVec2> {
    if !v.is_primitive() {
        return Err(Error::Invalid(format!("{v:?} is not primitive")));
    }
    // u0 × v = 1: u0.p·v.q − u0.q·v.p = 1
    let (g, s, t) = v.q.clone().extended_gcd(v.p.clone(), Integer::new());
    debug_assert!(g == 1);
    let u0 = IntVec2 { p: s, q: -t };
    debug_assert!(u0.cross(v) == 1);
    let start = 128 + 2 * bits_hint(&w.n) + 2 * bits_hint(v);
    cfg.escalate("u_of", start, |prec| {
        let wv = w.cross_int_at(v, cfg, prec);
        let lim = Real::one(prec) / Real::from_f64(8f64.sqrt(), prec);
        if !wv.abs().lt(&lim)? {
            return Err(Error::Invalid("need |w×v| < 1/2√2".into()));
        }
        let wu0 = w.cross_int_at(&u0, cfg, prec);
        // nearest k to −(w×u0)/(w×v)
        let half = Real::from_f64(0.5, prec);
        let k = (&(-(&wu0 / &wv)) + &half).floor()?;
        let u = u0.add(&v.scale(&k));
        let sign = w.dot_int_at(&u, cfg, prec).sign()?;
        let u = if sign == Ordering::Less { u.neg() } else { u };
        let wu = w.cross_int_at(&u, cfg, prec).abs();
        if !wu.lt(&(wv.abs() * half))? {
            return Err(Error::Indeterminate);
        }
        Ok(u)
    })
}

/// `(v⁰, v¹, v², σ)` with `v¹ = u+σv`, `v² = 2u+σv`, `v⁰ = u−σv`, and `σ = +1` iff `w`
/// lies strictly inside the cone spanned by `u` and `v`.
pub fn candidates3(
    w: &WVec,
    v: &IntVec2,
    u: &IntVec2,
    cfg: &SlitConfig,
) -> Result<([IntVec2; 3], i8)> {
    let uv = u.cross(v);
    assert!(uv == 1 || uv == -1, "candidates3 needs |u×v| = 1");
    let start = 128 + 2 * bits_hint(&w.n) + 2 * bits_hint(v) + 2 * bits_hint(u);
    let sigma = cfg.escalate("candidates3", start, |prec| {
        // w = αu + βv with α = (w×v)/(u×v), β = (u×w)/(u×v)
        let s = if uv > 0 { 1 } else { -1 };
        let alpha = w.cross_int_at(v, cfg, prec).mul_i64(s);
        let beta = (-w.cross_int_at(u, cfg, prec)).mul_i64(s);
        Ok(alpha.is_positive()? && beta.is_positive()?)
    })?;
    let sigma: i8 = if sigma { 1 } else { -1 };
    let sv = v.scale_i64(sigma as i64);
    let v1 = u.add(&sv);
    let v2 = u.scale_i64(2).add(&sv);
    let v0 = u.sub(&sv);
    Ok(([v0, v1, v2], sigma))
}

/// `δ(w) = |w×u|/|w×v|` with `u = u_of(w, v)`.
pub fn delta_of(w: &WVec, v: &IntVec2, u: &IntVec2, cfg: &SlitConfig, prec: u32) -> Real {
    w.cross_int_at(u, cfg, prec).abs() / w.cross_int_at(v, cfg, prec).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    Init,
    A,
    B0,
    B1,
    C1,
    C2,
}

impl Rule {
    pub fn index(self) -> Option<usize> {
        match self {
            Rule::Init => None,
            Rule::A | Rule::B0 => Some(0),
            Rule::B1 | Rule::C1 => Some(1),
            Rule::C2 => Some(2),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Rule::Init => "init",
            Rule::A => "A",
            Rule::B0 => "B0",
            Rule::B1 => "B1",
            Rule::C1 => "C1",
            Rule::C2 => "C2",
        }
    }
}

/// Half-log `(t, m)` for the pair `(w, w')`.
pub fn half_tm(w: &WVec, wp: &WVec, cfg: &SlitConfig, prec: u32) -> Result<(Real, Real)> {
    let x = w.cross_w_at(wp, cfg, prec).abs();
    x.sign()?;
    let lx = x.ln();
    let t = (wp.length_sq(cfg, prec).ln() - &lx).div_i64(2);
    let m = (-lx).div_i64(2);
    Ok((t, m))
}

/// One stored step: `w_j = w_{j−1} + g·v_j`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlowStep {
    pub j: usize,
    pub w: WVec,
    pub v: IntVec2,
    /// `u_of(w_j, v_j)`.
    pub u: IntVec2,
    pub sigma: i8,
    pub delta: f64,
    /// Rule that produced `w_j` from `w_{j−1}`.
    pub rule: Rule,
    pub t: f64,
    pub m: f64,
    pub r: f64,
    pub log_len: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlowConfig {
    pub rate: RateFn,
    pub steps: usize,
    /// Target for `g|w_0×v_1|`.
    #[serde(with = "crate::lattice::serde_rat")]
    pub eps_init: Rational,
    /// Constant `c₀` of the growth clause.
    pub c0: f64,
    /// Accepted range of `|w_{j+1}|/(|w_j| e^{m_j})`, full-log `m_j`, in units of `g²`.
    pub band: (f64, f64),
}

impl Default for SlowConfig {
    fn default() -> Self {
        SlowConfig {
            rate: RateFn::Log,
            steps: 30,
            eps_init: Rational::from((1, 100)),
            c0: crate::constants::DEFAULT_SLOW_C0,
            band: (0.5, 4.0),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlowSeq {
    pub config: SlowConfig,
    pub w0: WVec,
    pub steps: Vec<SlowStep>,
}

impl SlowSeq {
    pub fn vectors(&self) -> Vec<WVec> {
        let mut out = vec![self.w0.clone()];
        out.extend(self.steps.iter().map(|s| s.w.clone()));
        out
    }
}

fn seq_bits(w: &WVec, extra: &[&IntVec2]) -> u32 {
    128 + 4 * bits_hint(&w.n) + extra.iter().map(|v| 2 * bits_hint(v)).sum::<u32>()
}

fn make_step(
    j: usize,
    prev: &WVec,
    v: IntVec2,
    rule: Rule,
    rate: &RateFn,
    cfg: &SlitConfig,
) -> Result<SlowStep> {
    let g = cfg.genus as i64;
    let w = prev.add_int(&v.scale_i64(g));
    let u = u_of(&w, &v, cfg)?;
    let (_, sigma) = candidates3(&w, &v, &u, cfg)?;
    let (delta, t, m, r, log_len) = cfg.escalate("slow_step", seq_bits(&w, &[&v, &u]), |prec| {
        let d = delta_of(&w, &v, &u, cfg, prec);
        let (t, m) = half_tm(prev, &w, cfg, prec)?;
        let r = rate.eval(&t);
        let l = w.length_sq(cfg, prec).ln().div_i64(2);
        for x in [&d, &t, &m, &r, &l] {
            if x.radius() > 1e-12 * (1.0 + x.mid().abs()) {
                return Err(Error::Indeterminate);
            }
        }
        Ok((d.mid(), t.mid(), m.mid(), r.mid(), l.mid()))
    })?;
    Ok(SlowStep {
        j,
        w,
        v,
        u,
        sigma,
        delta,
        rule,
        t,
        m,
        r,
        log_len,
    })
}

/// First convergent `v` of `w0` (oriented with `w0·v > 0`) with `g|w0×v| ≤ eps_init`,
/// `|v| > |w0|` and `m_1 > r(t_1) + log 2`.
pub fn initial_step(w0: &WVec, sc: &SlowConfig, cfg: &SlitConfig) -> Result<SlowStep> {
    let g = cfg.genus as i64;
    let mut bound = Rational::from(1u32 << 16);
    for _ in 0..8 {
        let seq = spec_of(&Owner::W(w0.clone()), &bound, cfg)?;
        for c in &seq.convergents {
            let ok = cfg.escalate("initial_step", seq_bits(w0, &[c]), |prec| {
                let dot = w0.dot_int_at(c, cfg, prec);
                let v = if dot.is_positive()? {
                    c.clone()
                } else {
                    c.neg()
                };
                let x = w0.cross_int_at(&v, cfg, prec).abs().mul_i64(g);
                if !x.le(&Real::from_rational(&sc.eps_init, prec))? {
                    return Ok(None);
                }
                if !v.length(prec).gt(&w0.length(cfg, prec))? {
                    return Ok(None);
                }
                let w1 = w0.add_int(&v.scale_i64(g));
                let (t, m) = half_tm(w0, &w1, cfg, prec)?;
                let lim = sc.rate.eval(&t) + Real::ln2(prec);
                Ok(if m.gt(&lim)? { Some(v) } else { None })
            })?;
            if let Some(v) = ok {
                if v.is_primitive() {
                    return make_step(1, w0, v, Rule::Init, &sc.rate, cfg);
                }
            }
        }
        bound = Rational::from(&bound * &bound);
    }
    Err(Error::ConstructionStalled {
        depth: 0,
        detail: format!("no initial convergent for {w0}"),
    })
}

/// Chooses the next step from `(w_{j−1}, w_j)` by rules (A), (B), (C).
pub fn step(prev: &WVec, cur: &SlowStep, rate: &RateFn, cfg: &SlitConfig) -> Result<SlowStep> {
    let g = cfg.genus as i64;
    let w = &cur.w;
    let (cands, _) = candidates3(w, &cur.v, &cur.u, cfg)?;
    let ws: Vec<WVec> = cands.iter().map(|v| w.add_int(&v.scale_i64(g))).collect();
    let bits = seq_bits(&ws[2], &[&cur.u]);
    let rule = cfg.escalate("slow_rule", bits, |prec| {
        let c = Real::ln2(prec);
        let (t, m) = half_tm(prev, w, cfg, prec)?;
        if m.gt(&(rate.eval(&t) + &c))? {
            return Ok(Rule::A);
        }
        for (i, tag) in [(0, Rule::B0), (1, Rule::B1)] {
            let (ti, mi) = half_tm(w, &ws[i], cfg, prec)?;
            if (&mi - &rate.eval(&ti)).abs().le(&c)? {
                return Ok(tag);
            }
        }
        Ok(Rule::C1)
    })?;
    let rule = if rule == Rule::C1 {
        let u1 = u_of(&ws[1], &cands[1], cfg)?;
        let u2 = u_of(&ws[2], &cands[2], cfg)?;
        let larger2 = cfg.escalate("slow_rule_c", seq_bits(&ws[2], &[&u1, &u2]), |prec| {
            let d1 = delta_of(&ws[1], &cands[1], &u1, cfg, prec);
            let d2 = delta_of(&ws[2], &cands[2], &u2, cfg, prec);
            d2.gt(&d1)
        })?;
        if larger2 {
            Rule::C2
        } else {
            Rule::C1
        }
    } else {
        rule
    };
    let i = rule.index().expect("selection rule");
    make_step(cur.j + 1, w, cands[i].clone(), rule, rate, cfg)
}

/// Builds `sc.steps` steps from `w0`.
pub fn build_slow(w0: &WVec, sc: &SlowConfig, cfg: &SlitConfig) -> Result<SlowSeq> {
    sc.rate.validate()?;
    let mut steps = vec![initial_step(w0, sc, cfg)?];
    while steps.len() < sc.steps {
        let prev = if steps.len() >= 2 {
            steps[steps.len() - 2].w.clone()
        } else {
            w0.clone()
        };
        let next = step(&prev, steps.last().expect("nonempty"), &sc.rate, cfg)?;
        steps.push(next);
    }
    Ok(SlowSeq {
        config: sc.clone(),
        w0: w0.clone(),
        steps,
    })
}

/// Per-clause outcome of the verifier.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClauseReport {
    /// First index `j` with `m_j ≤ r(t_j) + log 2`; clauses are checked from here on.
    pub burn_in: Option<usize>,
    /// `(clause, j)` for every violation past burn-in.
    pub violations: Vec<(String, usize)>,
    /// Ratios `|w_{j+1}|/(g²|w_j|e^{m_j})` with full-log `m_j`.
    pub growth_ratios: Vec<f64>,
    /// `(m_{j+1} − m_j)e^{m_j}` at steps where the growth clause applies.
    pub growth_gaps: Vec<(usize, f64)>,
    /// `(j, m_j − log2 ≤ m_{j+1} ≤ m_j)` for steps made by rule (A).
    pub rule_a_steps: Vec<(usize, bool)>,
    pub unit_cross: bool,
    pub delta_in_range: bool,
    pub u_length_margins: Vec<(usize, f64, f64)>,
    pub prec: u32,
}

impl ClauseReport {
    pub fn passed(&self) -> bool {
        self.burn_in.is_some()
            && self.violations.is_empty()
            && self.unit_cross
            && self.delta_in_range
            && self.rule_a_steps.iter().all(|x| x.1)
    }
}

/// Checks the four clauses on `seq` at `prec` bits (escalating when needed).
pub fn verify_clauses(seq: &SlowSeq, cfg: &SlitConfig) -> Result<ClauseReport> {
    let bits = seq
        .steps
        .iter()
        .map(|s| bits_hint(&s.w.n))
        .max()
        .unwrap_or(0);
    cfg.escalate("verify_clauses", 128 + 4 * bits, |prec| {
        verify_clauses_at(seq, cfg, prec)
    })
}

pub fn verify_clauses_at(seq: &SlowSeq, cfg: &SlitConfig, prec: u32) -> Result<ClauseReport> {
    let sc = &seq.config;
    let ws = seq.vectors();
    let g = cfg.genus as i64;
    let c = Real::ln2(prec);
    // tm[j] for j ≥ 1
    let mut t = vec![Real::zero(prec)];
    let mut m = vec![Real::zero(prec)];
    for j in 1..ws.len() {
        let (tj, mj) = half_tm(&ws[j - 1], &ws[j], cfg, prec)?;
        t.push(tj);
        m.push(mj);
    }
    let r: Vec<Real> = t.iter().map(|x| sc.rate.eval(x)).collect();
    let mut burn_in = None;
    for j in 1..ws.len() {
        if m[j].le(&(&r[j] + &c))? {
            burn_in = Some(j);
            break;
        }
    }
    let mut violations = Vec::new();
    let mut growth_ratios = Vec::new();
    let mut growth_gaps = Vec::new();
    let mut rule_a_steps = Vec::new();
    let c0 = Real::from_f64(sc.c0, prec);
    let (lo, hi) = (
        Real::from_f64(sc.band.0, prec),
        Real::from_f64(sc.band.1, prec),
    );
    let gg = Real::from_i64(g * g, prec);
    for j in 1..ws.len() - 1 {
        let next_rule = seq.steps[j].rule;
        if next_rule == Rule::A {
            let ok = m[j + 1].le(&m[j])? && m[j + 1].ge(&(&m[j] - &c))?;
            rule_a_steps.push((j, ok));
        }
        // growth band with the full-log m_j = 2·(half-log m_j)
        let ratio =
            ws[j + 1].length(cfg, prec) / (ws[j].length(cfg, prec) * m[j].mul_i64(2).exp() * &gg);
        growth_ratios.push(ratio.mid());
        let Some(b) = burn_in else { continue };
        if j < b {
            continue;
        }
        if !m[j].le(&(&r[j] + &c))? {
            violations.push(("a".into(), j));
        }
        let near = (&m[j + 1] - &r[j + 1]).abs().le(&c)?;
        if !(near || m[j + 1].ge(&m[j])?) {
            violations.push(("b".into(), j));
        }
        if m[j + 1].lt(&(&r[j + 1] - &c))? {
            let gap = (&m[j + 1] - &m[j]) * m[j].exp();
            growth_gaps.push((j, gap.mid()));
            if !gap.gt(&c0)? {
                violations.push(("c".into(), j));
            }
        }
        if !(ratio.ge(&lo)? && ratio.le(&hi)?) {
            violations.push(("d".into(), j));
        }
    }
    let last = ws.len() - 1;
    if let Some(b) = burn_in {
        if last >= b && !m[last].le(&(&r[last] + &c))? {
            violations.push(("a".into(), last));
        }
    }
    let mut unit_cross = true;
    let mut delta_in_range = true;
    let mut u_length_margins = Vec::new();
    for s in &seq.steps {
        let uv = s.u.cross(&s.v);
        unit_cross &= uv == 1 || uv == -1;
        let wu = s.w.cross_int_at(&s.u, cfg, prec).abs();
        let wv = s.w.cross_int_at(&s.v, cfg, prec).abs();
        unit_cross &= s.w.dot_int_at(&s.u, cfg, prec).is_positive()?;
        let d = &wu / &wv;
        delta_in_range &= d.is_positive()? && d.lt(&Real::from_f64(0.5, prec))?;
        // length bounds for u with b → |w|/|v| and ε = |w×v|
        let wl = s.w.length(cfg, prec);
        let vl = s.v.length(prec);
        let lim = Real::one(prec) / Real::from_f64(8f64.sqrt(), prec);
        if wl.gt(&vl)? && wv.le(&lim)? {
            let base = &wl / &wv;
            let e_over_b = &(&wv * &vl) / &wl;
            let ul = s.u.length(prec);
            let lo_m = &ul - &(&base * &(Real::one(prec) - &e_over_b));
            let hi_m = &(&base * &(Real::one(prec) + &e_over_b)) - &ul;
            u_length_margins.push((s.j, (lo_m / &base).mid(), (hi_m / &base).mid()));
        }
    }
    Ok(ClauseReport {
        burn_in,
        violations,
        growth_ratios,
        growth_gaps,
        rule_a_steps,
        unit_cross,
        delta_in_range,
        u_length_margins,
        prec,
    })
}

/// Comparison `M_j ≤ R(T_j)` along the model profile of a slow sequence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RangeReport {
    pub rate: String,
    pub steps: usize,
    pub burn_in: Option<usize>,
    /// `(j, T_j, M_j, R(T_j))` from the full-log profile.
    pub points: Vec<(usize, f64, f64, f64)>,
    /// Indices past burn-in where `M_j > R(T_j)`.
    pub failures: Vec<usize>,
    /// Indices past burn-in where even the half-log peak `M_j/2` exceeds `R(T_j)`.
    pub half_failures: Vec<usize>,
    pub hypothesis_violations: Vec<(String, usize)>,
    /// Set when the construction itself could not be carried out.
    pub stalled: Option<String>,
    pub passed: bool,
}

/// `R(t) = log log(10+t)`.
pub fn big_r(t: f64) -> f64 {
    (10.0 + t).ln().ln()
}

/// Runs the slow construction with `r = R/(2+eps) + shift` and compares the
/// model peaks `M_j` against `R(T_j)`.
pub fn range_check(
    w0: &WVec,
    steps: usize,
    eps: f64,
    shift: f64,
    cfg: &SlitConfig,
) -> Result<(Option<SlowSeq>, RangeReport)> {
    let sc = SlowConfig {
        rate: RateFn::LogLog { eps, shift },
        steps,
        ..SlowConfig::default()
    };
    let mut report = RangeReport {
        rate: sc.rate.label(),
        steps,
        burn_in: None,
        points: vec![],
        failures: vec![],
        half_failures: vec![],
        hypothesis_violations: vec![],
        stalled: None,
        passed: false,
    };
    let seq = match build_slow(w0, &sc, cfg) {
        Ok(s) => s,
        Err(e @ (Error::Invalid(_) | Error::ConstructionStalled { .. })) => {
            report.stalled = Some(e.to_string());
            return Ok((None, report));
        }
        Err(e) => return Err(e),
    };
    let clauses = verify_clauses(&seq, cfg)?;
    let ws = seq.vectors();
    report.hypothesis_violations = pl_hypotheses(&ws, cfg)?;
    let profile: PlProfile = pl_profile_unchecked(&ws, cfg)?;
    report.burn_in = clauses.burn_in;
    for (j, t, mm) in profile.peaks() {
        let rr = big_r(t);
        report.points.push((j, t, mm, rr));
        if report.burn_in.is_some_and(|b| j >= b) {
            if mm > rr {
                report.failures.push(j);
            }
            if mm / 2.0 > rr {
                report.half_failures.push(j);
            }
        }
    }
    report.passed =
        report.burn_in.is_some() && report.failures.is_empty() && !report.points.is_empty();
    Ok((Some(seq), report))
}

/// Offsets tried by [`range_wrapper`], smallest first.
pub const RANGE_SHIFTS: [f64; 6] = [0.0, 0.125, 0.25, 0.5, 1.0, 2.0];

/// [`range_check`] with the smallest offset for which the construction runs.
pub fn range_wrapper(
    w0: &WVec,
    steps: usize,
    eps: f64,
    cfg: &SlitConfig,
) -> Result<(Option<SlowSeq>, RangeReport)> {
    let mut last = None;
    for shift in RANGE_SHIFTS {
        let (seq, report) = range_check(w0, steps, eps, shift, cfg)?;
        if report.stalled.is_none() {
            return Ok((seq, report));
        }
        last = Some((seq, report));
    }
    Ok(last.expect("nonempty shift list"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u_of_small_case() {
        let cfg = SlitConfig::default();
        let w = WVec::new(1, IntVec2::new(2, 2));
        let v = IntVec2::new(1, 1);
        let u = u_of(&w, &v, &cfg).unwrap();
        assert_eq!(u.cross(&v).abs(), 1);
        let wu = w.cross_int_at(&u, &cfg, 128).abs().mid();
        let wv = w.cross_int_at(&v, &cfg, 128).abs().mid();
        assert!(wu < 0.5 * wv);
        assert!(w.dot_int_at(&u, &cfg, 128).mid() > 0.0);
    }

    #[test]
    fn candidate_cross_ordering() {
        let cfg = SlitConfig::default();
        let w = WVec::new(1, IntVec2::new(2, 2));
        let v = IntVec2::new(1, 1);
        let u = u_of(&w, &v, &cfg).unwrap();
        let ([v0, v1, v2], _) = candidates3(&w, &v, &u, &cfg).unwrap();
        let x = |a: &IntVec2| w.cross_int_at(a, &cfg, 128).abs().mid();
        assert!(
            0.5 * x(&v) <= x(&v1) && x(&v1) <= x(&v) && x(&v) <= x(&v0) && x(&v0) <= 2.0 * x(&v)
        );
        assert!(x(&v2) <= x(&v1));
        assert_eq!(v0.cross(&v1).abs(), 2);
    }

    #[test]
    fn rate_presets() {
        assert!((RateFn::Log.eval_f64(std::f64::consts::E - 1.0) - 1.0).abs() < 1e-15);
        let tab = RateFn::from_table_csv("t,r\n0,0\n10,1\n20,1.5\n").unwrap();
        assert!((tab.eval_f64(15.0) - 1.25).abs() < 1e-15);
        assert!((tab.derivative(25.0) - 0.05).abs() < 1e-15);
        assert!(RateFn::from_table_csv("0,1\n1,0\n").is_err());
        assert!(check_rate(&RateFn::SqrtLog, 1.0, 1e4).monotone);
    }
}
