//! Tree and path constructions of translated-lattice sequences whose
//! directions converge to nonergodic directions.
//!
//! A node `w` at depth `j` has children `w' = w + g·v` with `|w'| ≈ |w|^{1+δ_j}`
//! and `|w×w'| ≈ 1/log|w|`, where `δ_j = e0/(j+1)`.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::cfrac::{spec_of, ConvergentSeq, Owner};
use crate::density::children_candidates;
use crate::lattice::{bits_hint, IntVec2, SlitConfig, WVec};
use crate::real::Real;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildMode {
    /// Expand every kept child.
    Tree,
    /// Follow the angularly-median child.
    Path,
    /// Follow a seeded uniformly random child.
    Random,
}

/// Construction parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BuilderConfig {
    pub e0: f64,
    pub depth: usize,
    pub mode: BuildMode,
    pub seed: u64,
    /// Upper end of the exactly checked range `[δ_j, t_max]`; beyond it the
    /// spectrum condition is accepted for `|w| ≥ l0`.
    pub t_max: f64,
    pub l0: f64,
    #[serde(with = "crate::lattice::serde_rat")]
    pub c1: Rational,
    pub rho2: f64,
    /// Children kept per node.
    pub cap: usize,
    /// Candidates drawn from the strip per attempt; doubled on each retry.
    pub scan_keep: usize,
    pub scan_retries: u32,
    /// Lower bound on `|w_y|/|w|` for every constructed vector.
    pub min_vertical_cos: f64,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        BuilderConfig {
            e0: 4.0,
            depth: 5,
            mode: BuildMode::Path,
            seed: 0,
            t_max: 8.0,
            l0: crate::constants::DEFAULT_L0,
            c1: Rational::from((1, crate::constants::DEFAULT_C1_INV)),
            rho2: crate::constants::DEFAULT_RHO2,
            cap: 4,
            scan_keep: 48,
            scan_retries: 4,
            min_vertical_cos: 0.1,
        }
    }
}

impl BuilderConfig {
    pub fn delta(&self, j: usize) -> f64 {
        self.e0 / (j as f64 + 1.0)
    }

    /// `max(2g+1, e^{2 e0}/c1)`.
    pub fn child_constant(&self, g: u32) -> f64 {
        let c = (2.0 * self.e0).exp() / self.c1.to_f64();
        c.max(2.0 * g as f64 + 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e0 > 0.0 && self.e0.is_finite()) {
            return Err(Error::Config("e0 must be positive".into()));
        }
        if !(self.t_max >= self.e0) {
            return Err(Error::Config("t_max must be at least e0".into()));
        }
        if !(self.c1 > 0 && self.c1 <= 1) {
            return Err(Error::Config("c1 must lie in (0, 1]".into()));
        }
        if self.cap == 0 || self.scan_keep == 0 {
            return Err(Error::Config("cap and scan_keep must be positive".into()));
        }
        if !(self.l0 > 1.0) {
            return Err(Error::Config("l0 must exceed 1".into()));
        }
        Ok(())
    }
}

fn work_bits(w: &WVec, extra: u32) -> u32 {
    128 + 4 * bits_hint(&w.n) + extra
}

fn log_len(w: &WVec, cfg: &SlitConfig, prec: u32) -> Real {
    w.length_sq(cfg, prec).ln().div_i64(2)
}

fn certain(r: &Real) -> Result<f64> {
    if !r.is_finite() || r.radius() > 1e-12 * (1.0 + r.mid().abs()) {
        return Err(Error::Indeterminate);
    }
    Ok(r.mid())
}

/// Log-scale slack of each child clause; every margin is nonnegative when the
/// clause holds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChildCheck {
    /// `(w' − w)/g`, absent when `w'` is not in `w + gZ²`.
    pub step: Option<IntVec2>,
    pub primitive: bool,
    /// `log|v'| − log|w|`.
    pub step_longer: f64,
    /// `w·v'`.
    pub dot: f64,
    /// `log|w'| − (1+δ) log|w|`.
    pub growth_lo: f64,
    /// `log C + (1+δ) log|w| − log|w'|`.
    pub growth_hi: f64,
    /// `log|w×w'| + log C + log log|w|`.
    pub cross_lo: f64,
    /// `log C − log log|w| − log|w×w'|`.
    pub cross_hi: f64,
    pub failed: Vec<String>,
    pub prec: u32,
}

impl ChildCheck {
    pub fn holds(&self) -> bool {
        self.failed.is_empty()
    }
}

/// Decides `w ≺_j w'` with certified comparisons.
pub fn is_child(
    w: &WVec,
    wp: &WVec,
    j: usize,
    bc: &BuilderConfig,
    cfg: &SlitConfig,
) -> Result<ChildCheck> {
    cfg.escalate("is_child", work_bits(wp, 0), |prec| {
        is_child_at(w, wp, j, bc, cfg, prec)
    })
}

pub fn is_child_at(
    w: &WVec,
    wp: &WVec,
    j: usize,
    bc: &BuilderConfig,
    cfg: &SlitConfig,
    prec: u32,
) -> Result<ChildCheck> {
    let g = cfg.genus;
    let step = w.step_to(wp, g);
    let nan = f64::NAN;
    let mut out = ChildCheck {
        step: step.clone(),
        primitive: false,
        step_longer: nan,
        dot: nan,
        growth_lo: nan,
        growth_hi: nan,
        cross_lo: nan,
        cross_hi: nan,
        failed: Vec::new(),
        prec,
    };
    let Some(v) = step else {
        out.failed.push("coset".into());
        return Ok(out);
    };
    out.primitive = v.is_primitive();
    if !out.primitive {
        out.failed.push("primitive".into());
    }
    let lw = log_len(w, cfg, prec);
    if !lw.is_positive()? {
        return Err(Error::Invalid("need |w| > 1".into()));
    }
    let lwp = log_len(wp, cfg, prec);
    let lv = if v.is_zero() {
        Real::from_f64(f64::NEG_INFINITY, prec)
    } else {
        v.length(prec).ln()
    };
    let one_d = Real::from_f64(1.0 + bc.delta(j), prec);
    let log_c = Real::from_f64(bc.child_constant(g), prec).ln();
    let llw = lw.ln();
    let x = w.cross_w_at(wp, cfg, prec).abs();
    x.sign()?;
    let lx = x.ln();
    let dot = w.dot_int_at(&v, cfg, prec);

    let step_longer = &lv - &lw;
    let growth_lo = &lwp - &(&one_d * &lw);
    let growth_hi = &(&log_c + &(&one_d * &lw)) - &lwp;
    let cross_lo = &(&lx + &log_c) + &llw;
    let cross_hi = &(&log_c - &llw) - &lx;

    if !v.is_zero() && !step_longer.is_positive()? {
        out.failed.push("longer".into());
    }
    if v.is_zero() {
        out.failed.push("longer".into());
    }
    if !dot.is_positive()? {
        out.failed.push("acute".into());
    }
    for (name, m) in [
        ("growth_lo", &growth_lo),
        ("growth_hi", &growth_hi),
        ("cross_lo", &cross_lo),
        ("cross_hi", &cross_hi),
    ] {
        if m.sign()? == Ordering::Less {
            out.failed.push(name.into());
        }
    }
    out.step_longer = step_longer.mid();
    out.dot = dot.mid();
    out.growth_lo = growth_lo.mid();
    out.growth_hi = growth_hi.mid();
    out.cross_lo = cross_lo.mid();
    out.cross_hi = cross_hi.mid();
    Ok(out)
}

/// Outcome of the spectrum-coverage test for membership in `W_j`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WjCheck {
    pub j: usize,
    pub holds: bool,
    /// Gaps `(a_k, b_k)`: the spectrum misses the window exactly for `t` in
    /// this open interval.
    pub gaps: Vec<(f64, f64)>,
    /// Gaps meeting `[δ_j, t_max]`.
    pub blocking: Vec<(f64, f64)>,
    pub tail_accepted: bool,
    pub convergents: usize,
    pub prec: u32,
}

pub fn spec_for(w: &WVec, t_max: f64, cfg: &SlitConfig) -> Result<ConvergentSeq> {
    let bound = cfg.escalate("spec_bound", work_bits(w, 0), |prec| {
        let b = (log_len(w, cfg, prec) * Real::from_f64(1.0 + t_max, prec)).exp();
        b.hi_rational().ok_or(Error::Indeterminate)
    })?;
    let bound = if bound < 1 { Rational::from(1) } else { bound };
    spec_of(&Owner::W(w.clone()), &bound, cfg)
}

/// Membership of `w` in `W_j`: for every `t ≥ δ_j` some convergent length lies in
/// `[e^t |w| log|w|, |w|^{1+t}]`. Exact on `[δ_j, t_max]`; beyond `t_max` the
/// condition is accepted when `|w| ≥ l0`.
pub fn in_wj(w: &WVec, j: usize, bc: &BuilderConfig, cfg: &SlitConfig) -> Result<WjCheck> {
    let seq = spec_for(w, bc.t_max, cfg)?;
    let bits = seq.convergents.last().map_or(0, bits_hint);
    cfg.escalate("in_wj", work_bits(w, 2 * bits), |prec| {
        in_wj_at(w, j, &seq, bc, cfg, prec)
    })
}

pub fn in_wj_at(
    w: &WVec,
    j: usize,
    seq: &ConvergentSeq,
    bc: &BuilderConfig,
    cfg: &SlitConfig,
    prec: u32,
) -> Result<WjCheck> {
    let lw = log_len(w, cfg, prec);
    if !lw.is_positive()? {
        return Err(Error::Invalid("need |w| > 1".into()));
    }
    let base = &lw + &lw.ln();
    let lo = Real::from_f64(bc.delta(j), prec);
    let hi = Real::from_f64(bc.t_max, prec);
    let lens: Vec<Real> = seq
        .convergents
        .iter()
        .map(|v| v.length(prec).ln())
        .collect();
    let mut gaps = Vec::new();
    let mut blocking = Vec::new();
    // a window below the first convergent fails only if it also ends before it
    let first_b = &(&lens[0] / &lw) - &Real::one(prec);
    if first_b.gt(&lo)? {
        let g = (f64::NEG_INFINITY, certain(&first_b)?);
        gaps.push(g);
        blocking.push(g);
    }
    for k in 0..lens.len().saturating_sub(1) {
        let a = &lens[k] - &base;
        let b = &(&lens[k + 1] / &lw) - &Real::one(prec);
        if a.ge(&b)? {
            continue;
        }
        let gap = (certain(&a)?, certain(&b)?);
        gaps.push(gap);
        if b.gt(&lo)? && a.lt(&hi)? {
            blocking.push(gap);
        }
    }
    let last_ok = seq.terminal || {
        // the final stored convergent must already exceed |w|^{1+t_max}
        let b = &(&lens[lens.len() - 1] / &lw) - &Real::one(prec);
        b.ge(&hi)?
    };
    if !last_ok {
        return Err(Error::Indeterminate);
    }
    let tail_accepted = lw.exp().mid() >= bc.l0;
    Ok(WjCheck {
        j,
        holds: blocking.is_empty() && tail_accepted,
        gaps,
        blocking,
        tail_accepted,
        convergents: seq.len(),
        prec,
    })
}

/// The parameter `t₁` of the spectrum at scale `|w|^{1+δ_j}`: `|v_k| = e^{t₁}|w| log|w|`
/// for the last convergent within that length.
pub fn scale_parameter(
    w: &WVec,
    j: usize,
    seq: &ConvergentSeq,
    bc: &BuilderConfig,
    cfg: &SlitConfig,
) -> Result<f64> {
    cfg.escalate("scale_parameter", work_bits(w, 0), |prec| {
        let lw = log_len(w, cfg, prec);
        let lim = &lw * Real::from_f64(1.0 + bc.delta(j), prec);
        let mut best = None;
        for v in &seq.convergents {
            let l = v.length(prec).ln();
            if l.le(&lim)? {
                best = Some(l);
            } else {
                break;
            }
        }
        let l = best.ok_or_else(|| Error::Invalid("no convergent within |w|^{1+δ}".into()))?;
        certain(&(&(&l - &lw) - &lw.ln()))
    })
}

/// Children of `w` at depth `j`, sorted by angle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Children {
    pub children: Vec<WVec>,
    pub checks: Vec<ChildCheck>,
    pub wj_checks: Vec<WjCheck>,
    /// Parameter `t = min(t₁, e0 + δ_j)` of the strip.
    pub t: f64,
    pub t1: f64,
    #[serde(with = "crate::lattice::serde_rat")]
    pub eps: Rational,
    #[serde(with = "crate::lattice::serde_rat")]
    pub b: Rational,
    pub candidates: usize,
    pub rejected_child: usize,
    pub rejected_wj: usize,
    pub rejected_angle: usize,
    /// Predicted count `ρ₂ |w|^{δ_j} / log|w|`.
    pub predicted: f64,
}

fn vertical_cos_ok(w: &WVec, bc: &BuilderConfig, cfg: &SlitConfig) -> Result<bool> {
    cfg.escalate("vertical_cos", work_bits(w, 0), |prec| {
        let [_, y] = w.components(cfg, prec);
        let c = y.abs() / w.length(cfg, prec);
        c.ge(&Real::from_f64(bc.min_vertical_cos, prec))
    })
}

/// Strip parameters `(t, t₁, ε, b)` with `ε^{-1} = e^t |w| log|w|`, `b = |w|^{1+δ_j}`.
fn strip_params(
    w: &WVec,
    j: usize,
    bc: &BuilderConfig,
    cfg: &SlitConfig,
) -> Result<(f64, f64, Rational, Rational)> {
    let seq = spec_for(w, bc.t_max.max(bc.delta(j)), cfg)?;
    let t1 = scale_parameter(w, j, &seq, bc, cfg)?;
    let t = t1.min(bc.e0 + bc.delta(j));
    let (eps, b) = cfg.escalate("strip_params", work_bits(w, 0), |prec| {
        let lw = log_len(w, cfg, prec);
        let inv = (&(&lw + &lw.ln()) + &Real::from_f64(t, prec)).exp();
        let eps = (Real::one(prec) / inv)
            .lo_rational()
            .ok_or(Error::Indeterminate)?;
        let b = (lw * Real::from_f64(1.0 + bc.delta(j), prec))
            .exp()
            .hi_rational()
            .ok_or(Error::Indeterminate)?;
        Ok((eps, b))
    })?;
    let eps = if eps > 1 { Rational::from(1) } else { eps };
    let b = if b < 1 { Rational::from(1) } else { b };
    Ok((t, t1, shorten(&eps, false), shorten(&b, true)))
}

/// A nearby rational with small denominator, rounded in the given direction.
fn shorten(x: &Rational, up: bool) -> Rational {
    let den = Integer::from(1) << 64u32;
    let scaled = Rational::from(x * &den);
    let n = if up { scaled.ceil() } else { scaled.floor() };
    let n = Integer::from(n.numer());
    if n == 0 {
        return x.clone();
    }
    Rational::from((n, den))
}

/// Children of `w` at depth `j` that are valid children and lie in `W_{j+1}`.
pub fn children_of(w: &WVec, j: usize, bc: &BuilderConfig, cfg: &SlitConfig) -> Result<Children> {
    let g = cfg.genus;
    let (t, t1, eps, b) = strip_params(w, j, bc, cfg)?;
    let predicted = {
        let lw = log_len(w, cfg, 64).mid();
        bc.rho2 * (bc.delta(j) * lw).exp() / lw
    };
    let mut keep = bc.scan_keep;
    let mut out = Children {
        children: vec![],
        checks: vec![],
        wj_checks: vec![],
        t,
        t1,
        eps: eps.clone(),
        b: b.clone(),
        candidates: 0,
        rejected_child: 0,
        rejected_wj: 0,
        rejected_angle: 0,
        predicted,
    };
    for attempt in 0..=bc.scan_retries {
        let cand = children_candidates(w, &eps, &b, &bc.c1, false, Some(keep), 0.5, cfg)?;
        let exhausted = cand.vectors.len() < keep;
        let evaluated: Vec<Result<Option<(WVec, ChildCheck, WjCheck)>>> = cand
            .vectors
            .par_iter()
            .map(|v| {
                let wp = w.add_int(&v.scale_i64(g as i64));
                let check = is_child(w, &wp, j, bc, cfg)?;
                if !check.holds() {
                    return Ok(Some((wp, check, dummy_wj(j + 1))));
                }
                if !vertical_cos_ok(&wp, bc, cfg)? {
                    return Ok(None);
                }
                let wj = in_wj(&wp, j + 1, bc, cfg)?;
                Ok(Some((wp, check, wj)))
            })
            .collect();
        let (mut rc, mut rw, mut ra) = (0, 0, 0);
        let mut kids = Vec::new();
        for e in evaluated {
            match e? {
                None => ra += 1,
                Some((_, c, _)) if !c.holds() => rc += 1,
                Some((_, _, wj)) if !wj.holds => rw += 1,
                Some(x) => kids.push(x),
            }
        }
        out.candidates = cand.vectors.len();
        out.rejected_child = rc;
        out.rejected_wj = rw;
        out.rejected_angle = ra;
        if kids.len() >= bc.cap.min(2) || exhausted || attempt == bc.scan_retries {
            select_evenly(&mut kids, bc.cap);
            for (wp, c, wj) in kids {
                out.children.push(wp);
                out.checks.push(c);
                out.wj_checks.push(wj);
            }
            break;
        }
        keep *= 2;
    }
    if out.children.is_empty() {
        return Err(Error::ConstructionStalled {
            depth: j,
            detail: format!(
                "{w}: {} strip candidates (t = {t:.4}, t1 = {t1:.4}, b ≈ {:.4e}), {} fail the child clauses, {} fail W_{}, {} fail the angle bound",
                out.candidates,
                b.to_f64(),
                out.rejected_child,
                out.rejected_wj,
                j + 1,
                out.rejected_angle
            ),
        });
    }
    Ok(out)
}

fn dummy_wj(j: usize) -> WjCheck {
    WjCheck {
        j,
        holds: false,
        gaps: vec![],
        blocking: vec![],
        tail_accepted: false,
        convergents: 0,
        prec: 0,
    }
}

/// Keeps at most `cap` entries spread evenly over the angular order.
fn select_evenly<T>(v: &mut Vec<T>, cap: usize) {
    let n = v.len();
    if n <= cap {
        return;
    }
    let picks: Vec<usize> = (0..cap).map(|i| (2 * i + 1) * n / (2 * cap)).collect();
    let mut k = 0;
    let mut i = 0;
    v.retain(|_| {
        let keep = k < picks.len() && picks[k] == i;
        if keep {
            k += 1;
        }
        i += 1;
        keep
    });
}

/// Admissible roots `±(x0,y0) + g·n` ordered by length, filtered by `|w| ≥ l0`,
/// the vertical-angle bound and membership in `W_0`.
pub fn find_root(bc: &BuilderConfig, cfg: &SlitConfig, radius: i64) -> Result<WVec> {
    let g = cfg.genus as i64;
    let mut cands = Vec::new();
    for sign in [1i8, -1] {
        for p in -radius..=radius {
            for q in -radius..=radius {
                let w = WVec::new(sign, IntVec2::new(g * p, g * q));
                let l = w.length(cfg, 64).mid();
                if l >= bc.l0 && l > 1.0 {
                    cands.push((l, w));
                }
            }
        }
    }
    cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    for (_, w) in cands {
        if vertical_cos_ok(&w, bc, cfg)?
            && in_wj(&w, 0, bc, cfg)?.holds
            && children_of(&w, 0, bc, cfg).is_ok()
        {
            return Ok(w);
        }
    }
    Err(Error::ConstructionStalled {
        depth: 0,
        detail: format!("no admissible root within radius {radius}"),
    })
}

/// Whether `w` is an admissible root: `|w| > 1` and `w ∓ (x0,y0) ∈ gZ²`.
pub fn is_admissible_root(w: &WVec, cfg: &SlitConfig) -> bool {
    let g = Integer::from(cfg.genus);
    w.n.p.is_divisible(&g) && w.n.q.is_divisible(&g) && w.length(cfg, 64).lo().to_f64() > 1.0
}

/// One node of the construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Node {
    pub w: WVec,
    pub depth: usize,
    /// Child relation to the parent.
    pub check: Option<ChildCheck>,
    /// Number of valid children found, before expansion.
    pub count: usize,
    /// `log` of the smallest angle between two found children.
    pub log_separation: Option<f64>,
    pub strip: Option<StripSummary>,
    pub stalled: Option<String>,
    pub children: Vec<Node>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StripSummary {
    pub t: f64,
    pub t1: f64,
    pub candidates: usize,
    pub predicted: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BuildTree {
    pub config: BuilderConfig,
    pub root: Node,
}

fn log_min_separation(ws: &[WVec], cfg: &SlitConfig) -> Result<Option<f64>> {
    if ws.len() < 2 {
        return Ok(None);
    }
    let bits = ws.iter().map(|w| bits_hint(&w.n)).max().unwrap_or(0);
    cfg.escalate("separation", 128 + 4 * bits, |prec| {
        let mut best: Option<Real> = None;
        for p in ws.windows(2) {
            let s = p[0].cross_w_at(&p[1], cfg, prec).abs()
                / (p[0].length(cfg, prec) * p[1].length(cfg, prec));
            s.sign()?;
            let a = s.asin().ln();
            best = Some(match best {
                Some(b) => b.min(&a),
                None => a,
            });
        }
        best.map(|b| certain(&b)).transpose()
    })
}

fn expand(
    w: WVec,
    check: Option<ChildCheck>,
    depth: usize,
    bc: &BuilderConfig,
    cfg: &SlitConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Node> {
    let mut node = Node {
        w,
        depth,
        check,
        count: 0,
        log_separation: None,
        strip: None,
        stalled: None,
        children: vec![],
    };
    if depth >= bc.depth {
        return Ok(node);
    }
    let kids = match children_of(&node.w, depth, bc, cfg) {
        Ok(k) => k,
        Err(e @ Error::ConstructionStalled { .. }) => {
            node.stalled = Some(e.to_string());
            return Ok(node);
        }
        Err(e) => return Err(e),
    };
    node.count = kids.children.len();
    node.log_separation = log_min_separation(&kids.children, cfg)?;
    node.strip = Some(StripSummary {
        t: kids.t,
        t1: kids.t1,
        candidates: kids.candidates,
        predicted: kids.predicted,
    });
    let pairs: Vec<(WVec, ChildCheck)> = kids.children.into_iter().zip(kids.checks).collect();
    match bc.mode {
        BuildMode::Tree => {
            let seeds: Vec<u64> = pairs.iter().map(|_| rng.gen()).collect();
            let sub: Vec<Result<Node>> = pairs
                .into_par_iter()
                .zip(seeds)
                .map(|((wp, c), s)| {
                    expand(
                        wp,
                        Some(c),
                        depth + 1,
                        bc,
                        cfg,
                        &mut ChaCha8Rng::seed_from_u64(s),
                    )
                })
                .collect();
            for n in sub {
                node.children.push(n?);
            }
        }
        BuildMode::Path | BuildMode::Random => {
            let idx = if bc.mode == BuildMode::Path {
                pairs.len() / 2
            } else {
                rng.gen_range(0..pairs.len())
            };
            let (wp, c) = pairs.into_iter().nth(idx).expect("nonempty children");
            node.children
                .push(expand(wp, Some(c), depth + 1, bc, cfg, rng)?);
        }
    }
    Ok(node)
}

/// Builds the tree (or a single path) rooted at `w0` to depth `bc.depth`.
pub fn build(w0: &WVec, bc: &BuilderConfig, cfg: &SlitConfig) -> Result<BuildTree> {
    bc.validate()?;
    if !is_admissible_root(w0, cfg) {
        return Err(Error::Invalid(format!("{w0} is not an admissible root")));
    }
    if !in_wj(w0, 0, bc, cfg)?.holds {
        return Err(Error::Invalid(format!("{w0} is not in W_0")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(bc.seed);
    let root = expand(w0.clone(), None, 0, bc, cfg, &mut rng)?;
    Ok(BuildTree {
        config: bc.clone(),
        root,
    })
}

impl BuildTree {
    /// The first root-to-leaf path of maximal length.
    pub fn path(&self) -> Vec<WVec> {
        fn deepest(n: &Node) -> Vec<WVec> {
            let mut best: Vec<WVec> = vec![];
            for c in &n.children {
                let p = deepest(c);
                if p.len() > best.len() {
                    best = p;
                }
            }
            let mut out = vec![n.w.clone()];
            out.extend(best);
            out
        }
        deepest(&self.root)
    }

    pub fn nodes_at(&self, depth: usize) -> Vec<&Node> {
        fn walk<'a>(n: &'a Node, d: usize, out: &mut Vec<&'a Node>) {
            if n.depth == d {
                out.push(n);
            } else {
                for c in &n.children {
                    walk(c, d, out);
                }
            }
        }
        let mut out = vec![];
        walk(&self.root, depth, &mut out);
        out
    }

    pub fn stalls(&self) -> Vec<(usize, String)> {
        fn walk(n: &Node, out: &mut Vec<(usize, String)>) {
            if let Some(s) = &n.stalled {
                out.push((n.depth, s.clone()));
            }
            n.children.iter().for_each(|c| walk(c, out));
        }
        let mut out = vec![];
        walk(&self.root, &mut out);
        out
    }
}

/// `½(1 − Π_{i<j} 1/(1+δ_i))`.
pub fn hausdorff_comparator(e0: f64, j: usize) -> f64 {
    let prod: f64 = (0..j)
        .map(|i| 1.0 / (1.0 + e0 / (i as f64 + 1.0)))
        .product();
    0.5 * (1.0 - prod)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HausdorffEstimate {
    pub j: usize,
    /// `log(m_0⋯m_{j−1}) / (−log m_j ε_j)` with `m_i`, `ε_i` the minimal child
    /// count and separation over expanded nodes at depth `i`.
    pub quotient: f64,
    pub comparator: f64,
    pub counts: Vec<usize>,
    pub log_separations: Vec<f64>,
}

pub fn hausdorff_partial(tree: &BuildTree, j: usize) -> Result<HausdorffEstimate> {
    let mut counts = Vec::new();
    let mut seps = Vec::new();
    for i in 0..=j {
        let nodes: Vec<&Node> = tree
            .nodes_at(i)
            .into_iter()
            .filter(|n| n.stalled.is_none())
            .collect();
        let m = nodes.iter().map(|n| n.count).min().unwrap_or(0);
        if m == 0 {
            return Err(Error::TreeTooThin(i));
        }
        counts.push(m);
        let s = nodes
            .iter()
            .filter_map(|n| n.log_separation)
            .fold(f64::INFINITY, f64::min);
        seps.push(s);
    }
    let num: f64 = counts[..j].iter().map(|&m| (m as f64).ln()).sum();
    let den = -((counts[j] as f64).ln() + seps[j]);
    let quotient = if den.is_finite() && den > 0.0 {
        num / den
    } else {
        f64::NAN
    };
    Ok(HausdorffEstimate {
        j,
        quotient,
        comparator: hausdorff_comparator(tree.config.e0, j),
        counts,
        log_separations: seps,
    })
}

/// Estimate of the limit direction with its error radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitDirection {
    /// Unit vector of the last `w_k`, as decimals.
    pub direction: [String; 2],
    pub angle: f64,
    /// `log` of the half-width `asin(|w_k×v|/(2|w_k|²))`, `v = (w_k − w_{k−1})/g`.
    pub log_error_bound: f64,
    /// Per index `k ≥ 2`: slack of `I(w_k) ⊂ I(w_{k−1})` on the log scale.
    pub nesting: Vec<f64>,
    pub nested: bool,
}

pub fn limit_direction(seq: &[WVec], cfg: &SlitConfig) -> Result<LimitDirection> {
    if seq.len() < 2 {
        return Err(Error::Invalid("need at least two vectors".into()));
    }
    let g = cfg.genus as i64;
    let bits = seq.iter().map(|w| bits_hint(&w.n)).max().unwrap_or(0);
    cfg.escalate("limit_direction", 128 + 6 * bits, |prec| {
        // half-width of I(w_k) from the pair (w_{k−1}, w_k)
        let half = |k: usize| -> Real {
            let x = seq[k - 1].cross_w_at(&seq[k], cfg, prec).abs().div_i64(g);
            (x / seq[k].length_sq(cfg, prec).mul_i64(2)).asin()
        };
        let mut nesting = Vec::new();
        let mut nested = true;
        for k in 2..seq.len() {
            let d = (seq[k - 1].cross_w_at(&seq[k], cfg, prec).abs()
                / (seq[k - 1].length(cfg, prec) * seq[k].length(cfg, prec)))
            .asin();
            let inner = &d + &half(k);
            let outer = half(k - 1);
            let ok = inner.lt(&outer)?;
            nested &= ok;
            nesting.push(certain(&(outer.ln() - inner.ln()))?);
        }
        let last = seq.last().expect("nonempty");
        let [x, y] = last.components(cfg, prec);
        let l = last.length(cfg, prec);
        let ux = &x / &l;
        let uy = &y / &l;
        let hw = half(seq.len() - 1);
        hw.sign()?;
        Ok(LimitDirection {
            direction: [ux.to_decimal(30), uy.to_decimal(30)],
            angle: uy.mid().atan2(ux.mid()),
            log_error_bound: certain(&hw.ln())?,
            nesting,
            nested,
        })
    })
}

/// Summability certificate for the cross products along a path.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossSumCertificate {
    /// `|w_j × w_{j+1}|` as decimals.
    pub terms: Vec<String>,
    /// `C/log|w_j|`.
    pub envelope: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub envelope_sums: Vec<f64>,
    pub termwise: bool,
    pub decreasing: bool,
}

pub fn cross_sum(
    seq: &[WVec],
    bc: &BuilderConfig,
    cfg: &SlitConfig,
) -> Result<CrossSumCertificate> {
    let c = bc.child_constant(cfg.genus);
    let bits = seq.iter().map(|w| bits_hint(&w.n)).max().unwrap_or(0);
    cfg.escalate("cross_sum", 128 + 4 * bits, |prec| {
        let mut terms = Vec::new();
        let mut envelope = Vec::new();
        let mut partial_sums = Vec::new();
        let mut envelope_sums = Vec::new();
        let mut termwise = true;
        let mut decreasing = true;
        let cc = Real::from_f64(c, prec);
        let mut s = Real::zero(prec);
        let mut e = Real::zero(prec);
        let mut prev: Option<Real> = None;
        for (j, p) in seq.windows(2).enumerate() {
            let x = p[0].cross_w_at(&p[1], cfg, prec).abs();
            let env = &cc / log_len(&p[0], cfg, prec);
            termwise &= x.le(&env)?;
            if let Some(q) = &prev {
                decreasing &= x.lt(q)?;
            }
            s = &s + &x;
            e = &e + &env;
            termwise &= s.le(&e)?;
            terms.push(x.to_decimal(20));
            envelope.push(env.mid());
            partial_sums.push(s.mid());
            envelope_sums.push(e.mid());
            prev = Some(x);
            let _ = j;
        }
        Ok(CrossSumCertificate {
            terms,
            envelope,
            partial_sums,
            envelope_sums,
            termwise,
            decreasing,
        })
    })
}

/// Checks `log|w_j| ≥ log|w_0| · Π_{i<j}(1+δ_i)` and strict growth of `|w_j|`.
pub fn growth_holds(seq: &[WVec], bc: &BuilderConfig, cfg: &SlitConfig) -> Result<bool> {
    let bits = seq.iter().map(|w| bits_hint(&w.n)).max().unwrap_or(0);
    cfg.escalate("growth", 128 + 4 * bits, |prec| {
        let l0 = log_len(&seq[0], cfg, prec);
        let mut factor = Real::one(prec);
        let mut prev = l0.clone();
        for (j, w) in seq.iter().enumerate().skip(1) {
            factor = factor * Real::from_f64(1.0 + bc.delta(j - 1), prec);
            let l = log_len(w, cfg, prec);
            if !l.gt(&prev)? || !l.ge(&(&l0 * &factor))? {
                return Ok(false);
            }
            prev = l;
        }
        Ok(true)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparator_values() {
        assert!((hausdorff_comparator(4.0, 1) - 0.4).abs() < 1e-15);
        assert_eq!(hausdorff_comparator(4.0, 0), 0.0);
        let mut prev = 0.0;
        for j in 1..30 {
            let c = hausdorff_comparator(4.0, j);
            assert!(c > prev && c < 0.5);
            prev = c;
        }
    }

    #[test]
    fn short_step_is_not_a_child() {
        let cfg = SlitConfig::default();
        let bc = BuilderConfig::default();
        let w = WVec::new(1, IntVec2::new(2, 2));
        let wp = w.add_int(&IntVec2::new(2, 0));
        let c = is_child(&w, &wp, 0, &bc, &cfg).unwrap();
        assert!(c.failed.iter().any(|f| f == "longer"));
        let off = w.add_int(&IntVec2::new(1, 0));
        assert!(is_child(&w, &off, 0, &bc, &cfg)
            .unwrap()
            .failed
            .contains(&"coset".to_string()));
    }

    #[test]
    fn select_evenly_spreads() {
        let mut v: Vec<usize> = (0..10).collect();
        select_evenly(&mut v, 3);
        assert_eq!(v, vec![1, 5, 8]);
    }
}
