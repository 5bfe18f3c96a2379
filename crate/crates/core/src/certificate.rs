//! Self-contained JSON certificates for constructed sequences, and their replay.
//!
//! Reals are stored as decimal strings with [`DIGITS`] significant digits; the
//! replay recomputes every recorded inequality at twice the recorded precision.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::lattice::{SlitConfig, WVec};
use crate::nonergodic::{cross_sum, in_wj_at, is_child_at, spec_for, BuilderConfig};
use crate::profile::pl_hypotheses;
use crate::real::Real;
use crate::slow::{candidates3, half_tm, step, u_of, verify_clauses_at, SlowSeq};
use crate::{Error, Result};

pub const DIGITS: usize = 30;

/// Recorded quantities of one vector of a nonergodic path.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathEntry {
    pub j: usize,
    pub w: WVec,
    pub log_len: String,
    /// `|w_j × w_{j+1}|`, absent for the last entry.
    pub cross_next: Option<String>,
    /// Failed child clauses relative to `w_{j−1}` (empty when the clause holds).
    pub child_failed: Vec<String>,
    pub in_w: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Body {
    Nonergodic {
        builder: BuilderConfig,
        entries: Vec<PathEntry>,
        cross_sum_termwise: bool,
        hypotheses_hold: bool,
    },
    Slow {
        seq: SlowSeq,
        t: Vec<String>,
        m: Vec<String>,
        clauses_passed: bool,
        burn_in: Option<usize>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub version: String,
    pub slit: SlitConfig,
    /// Working precision of the recorded values, in bits.
    pub prec: u32,
    pub body: Body,
}

fn dec(r: &Real) -> String {
    r.to_decimal(DIGITS)
}

fn prec_for(ws: &[WVec]) -> u32 {
    let bits = ws
        .iter()
        .map(|w| crate::lattice::bits_hint(&w.n))
        .max()
        .unwrap_or(0);
    (256 + 24 * bits).next_power_of_two()
}

/// Certificate for a nonergodic path `w_0, …, w_n` built with `bc`.
pub fn nonergodic_certificate(
    path: &[WVec],
    bc: &BuilderConfig,
    cfg: &SlitConfig,
) -> Result<Certificate> {
    let prec = prec_for(path);
    let mut entries = Vec::new();
    for (j, w) in path.iter().enumerate() {
        let child_failed = if j == 0 {
            vec![]
        } else {
            is_child_at(&path[j - 1], w, j - 1, bc, cfg, prec)?.failed
        };
        let seq = spec_for(w, bc.t_max, cfg)?;
        let in_w = in_wj_at(w, j, &seq, bc, cfg, prec)?.holds;
        let cross_next = path
            .get(j + 1)
            .map(|n| dec(&w.cross_w_at(n, cfg, prec).abs()));
        entries.push(PathEntry {
            j,
            w: w.clone(),
            log_len: dec(&w.length_sq(cfg, prec).ln().div_i64(2)),
            cross_next,
            child_failed,
            in_w,
        });
    }
    let cross_sum_termwise = cross_sum(path, bc, cfg)?.termwise;
    let hypotheses_hold = path.len() < 2 || pl_hypotheses(path, cfg)?.is_empty();
    Ok(Certificate {
        version: env!("CARGO_PKG_VERSION").into(),
        slit: cfg.clone(),
        prec,
        body: Body::Nonergodic {
            builder: bc.clone(),
            entries,
            cross_sum_termwise,
            hypotheses_hold,
        },
    })
}

/// Certificate for a slow sequence together with its clause verdict.
pub fn slow_certificate(seq: &SlowSeq, cfg: &SlitConfig) -> Result<Certificate> {
    let ws = seq.vectors();
    let prec = prec_for(&ws);
    let mut t = Vec::new();
    let mut m = Vec::new();
    for p in ws.windows(2) {
        let (tj, mj) = half_tm(&p[0], &p[1], cfg, prec)?;
        t.push(dec(&tj));
        m.push(dec(&mj));
    }
    let report = verify_clauses_at(seq, cfg, prec)?;
    Ok(Certificate {
        version: env!("CARGO_PKG_VERSION").into(),
        slit: cfg.clone(),
        prec,
        body: Body::Slow {
            seq: seq.clone(),
            t,
            m,
            clauses_passed: report.passed(),
            burn_in: report.burn_in,
        },
    })
}

fn parse_dec(s: &str, prec: u32) -> Result<Float> {
    let p = Float::parse(s).map_err(|e| Error::Invalid(format!("bad decimal {s:?}: {e}")))?;
    Ok(Float::with_val(prec, p))
}

/// Whether the recorded decimal agrees with `x` to the stored digits.
fn agrees(recorded: &str, x: &Real, prec: u32) -> Result<bool> {
    let r = parse_dec(recorded, prec)?;
    let mid = x.mid();
    let scale = 1.0 + mid.abs();
    let diff = Float::with_val(prec, &r - x.lo())
        .to_f64()
        .abs()
        .max(Float::with_val(prec, &r - x.hi()).to_f64().abs());
    if x.radius() > 10f64.powi(-(DIGITS as i32) + 4) * scale {
        return Err(Error::Indeterminate);
    }
    let rel = if mid.abs() < 1.0 {
        diff / mid.abs().max(f64::MIN_POSITIVE)
    } else {
        diff / scale
    };
    Ok(rel <= 10f64.powi(-(DIGITS as i32) + 3))
}

/// Replays `cert` at twice its recorded precision; returns the failed checks.
pub fn verify(cert: &Certificate) -> Result<Vec<String>> {
    let cfg = &cert.slit;
    cfg.validate()?;
    let prec = cert.prec.saturating_mul(2);
    let mut bad = Vec::new();
    match &cert.body {
        Body::Nonergodic {
            builder,
            entries,
            cross_sum_termwise,
            hypotheses_hold,
        } => {
            builder.validate()?;
            let path: Vec<WVec> = entries.iter().map(|e| e.w.clone()).collect();
            for (j, e) in entries.iter().enumerate() {
                if e.j != j {
                    bad.push(format!("entry {j}: index {}", e.j));
                }
                let w = &e.w;
                if !agrees(&e.log_len, &w.length_sq(cfg, prec).ln().div_i64(2), prec)? {
                    bad.push(format!("entry {j}: log|w|"));
                }
                if let (Some(rec), Some(n)) = (&e.cross_next, path.get(j + 1)) {
                    if !agrees(rec, &w.cross_w_at(n, cfg, prec).abs(), prec)? {
                        bad.push(format!("entry {j}: cross"));
                    }
                }
                if j > 0 {
                    let c = is_child_at(&path[j - 1], w, j - 1, builder, cfg, prec)?;
                    if c.failed != e.child_failed {
                        bad.push(format!(
                            "entry {j}: child clauses {:?} recorded {:?}",
                            c.failed, e.child_failed
                        ));
                    }
                    if !c.holds() {
                        bad.push(format!("entry {j}: not a child of entry {}", j - 1));
                    }
                }
                let seq = spec_for(w, builder.t_max, cfg)?;
                let wj = in_wj_at(w, j, &seq, builder, cfg, prec)?;
                if wj.holds != e.in_w {
                    bad.push(format!("entry {j}: W_{j} membership differs"));
                }
                if !wj.holds {
                    bad.push(format!("entry {j}: not in W_{j}"));
                }
            }
            if cross_sum(&path, builder, cfg)?.termwise != *cross_sum_termwise
                || !cross_sum_termwise
            {
                bad.push("summable cross-product envelope".into());
            }
            let hyp = path.len() < 2 || pl_hypotheses(&path, cfg)?.is_empty();
            if hyp != *hypotheses_hold || !hypotheses_hold {
                bad.push("sequence hypotheses".into());
            }
        }
        Body::Slow {
            seq,
            t,
            m,
            clauses_passed,
            burn_in,
        } => {
            let ws = seq.vectors();
            if t.len() != ws.len() - 1 || m.len() != ws.len() - 1 {
                bad.push("t/m length".into());
            }
            for (i, p) in ws.windows(2).enumerate() {
                let (tj, mj) = half_tm(&p[0], &p[1], cfg, prec)?;
                if t.get(i).map(|s| agrees(s, &tj, prec)).transpose()? != Some(true) {
                    bad.push(format!("step {}: t", i + 1));
                }
                if m.get(i).map(|s| agrees(s, &mj, prec)).transpose()? != Some(true) {
                    bad.push(format!("step {}: m", i + 1));
                }
            }
            let g = cfg.genus as i64;
            for (i, s) in seq.steps.iter().enumerate() {
                let prev = &ws[i];
                if prev.add_int(&s.v.scale_i64(g)) != s.w {
                    bad.push(format!("step {}: w_j ≠ w_(j−1) + g v_j", s.j));
                }
                let uv = s.u.cross(&s.v);
                if !(uv == 1 || uv == -1) || u_of(&s.w, &s.v, cfg)? != s.u {
                    bad.push(format!("step {}: u", s.j));
                }
                if candidates3(&s.w, &s.v, &s.u, cfg)?.1 != s.sigma {
                    bad.push(format!("step {}: sigma", s.j));
                }
                if i >= 1 {
                    let replay = step(&ws[i - 1], &seq.steps[i - 1], &seq.config.rate, cfg)?;
                    if replay.rule != s.rule || replay.w != s.w {
                        bad.push(format!(
                            "step {}: rule replay gives {}",
                            s.j,
                            replay.rule.tag()
                        ));
                    }
                }
            }
            let report = verify_clauses_at(seq, cfg, prec)?;
            if report.passed() != *clauses_passed || report.burn_in != *burn_in {
                bad.push(format!(
                    "clause verdict {} recorded {}",
                    report.passed(),
                    clauses_passed
                ));
            }
            for (c, j) in &report.violations {
                if *clauses_passed {
                    bad.push(format!("clause ({c}) at j = {j}"));
                }
            }
        }
    }
    Ok(bad)
}

/// [`verify`] as an error carrying the failed checks.
pub fn verify_strict(cert: &Certificate) -> Result<()> {
    let bad = verify(cert)?;
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Verification(bad))
    }
}
