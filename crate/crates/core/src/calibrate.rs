//! Empirical constants for the strip counts and the two constructions.

use rug::Rational;
use serde::{Deserialize, Serialize};

use crate::density::children_candidates;
use crate::lattice::{dio_check, IntVec2, SlitConfig, WVec, PRESETS};
use crate::nonergodic::{build, children_of, find_root, BuilderConfig};
use crate::slow::{build_slow, verify_clauses, RateFn, Rule, SlowConfig};
use crate::{Error, Result};

/// Calibrated constants, as written by `calibrate` and read through `--constants`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Strip count lower bound `count ≥ ρ₁ b ε`.
    pub rho1: f64,
    /// Lower scale of the child strip.
    #[serde(with = "crate::lattice::serde_rat")]
    pub c1: Rational,
    /// Child count constant `ρ₂ |w|^δ / log|w|`.
    pub rho2: f64,
    /// Diophantine constant of the slit.
    pub dio_c0: f64,
    /// Constant of the slow-growth clause.
    pub slow_c0: f64,
    /// Smallest root length whose construction succeeds on every preset.
    pub l0: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            rho1: crate::constants::DEFAULT_RHO1,
            c1: Rational::from((1, crate::constants::DEFAULT_C1_INV)),
            rho2: crate::constants::DEFAULT_RHO2,
            dio_c0: crate::constants::DEFAULT_DIO_C0,
            slow_c0: crate::constants::DEFAULT_SLOW_C0,
            l0: crate::constants::DEFAULT_L0,
        }
    }
}

impl Constants {
    pub fn from_toml_str(text: &str) -> Result<Constants> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn apply_builder(&self, bc: &mut BuilderConfig) {
        bc.c1 = self.c1.clone();
        bc.rho2 = self.rho2;
        bc.l0 = self.l0;
    }

    pub fn apply_slit(&self, cfg: &mut SlitConfig) {
        cfg.c0 = self.dio_c0;
    }
}

/// Calibration settings; `quick` shrinks every battery.
#[derive(Clone, Debug)]
pub struct CalibrationPlan {
    pub presets: Vec<String>,
    pub genus: u32,
    /// Root search radius in units of `g`.
    pub root_radius: i64,
    /// Depth a path must reach for its root length to count toward `l0`.
    pub l0_depth: usize,
    pub slow_steps: usize,
    pub dio_bound: u64,
}

impl CalibrationPlan {
    pub fn full() -> Self {
        CalibrationPlan {
            presets: PRESETS.iter().map(|p| p.0.to_string()).collect(),
            genus: 2,
            root_radius: 3,
            l0_depth: 3,
            slow_steps: 30,
            dio_bound: 10_000,
        }
    }

    pub fn quick() -> Self {
        CalibrationPlan {
            presets: PRESETS.iter().take(2).map(|p| p.0.to_string()).collect(),
            genus: 2,
            root_radius: 2,
            l0_depth: 2,
            slow_steps: 12,
            dio_bound: 500,
        }
    }
}

/// One line of the calibration log.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub preset: String,
    pub quantity: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Calibration {
    pub constants: Constants,
    pub records: Vec<CalibrationRecord>,
}

/// Candidate `c₁` values `1/2, 1/4, …, 1/64`, largest first.
pub fn c1_grid() -> Vec<Rational> {
    (1..=6).map(|k| Rational::from((1, 1u32 << k))).collect()
}

fn strip_battery(cfg: &SlitConfig, radius: i64) -> Vec<(WVec, Rational, Rational)> {
    // |w| log|w| for the window start, |w|² for the length scale
    let g = cfg.genus as i64;
    let mut out = Vec::new();
    for sign in [1i8, -1] {
        for p in 1..=radius {
            for q in [-radius, radius] {
                let w = WVec::new(sign, IntVec2::new(g * p, g * q));
                let l = w.length(cfg, 64).mid();
                if l <= 2.0 {
                    continue;
                }
                let eps = Rational::from_f64(1.0 / (l * l.ln())).expect("finite");
                let b = Rational::from_f64((l * l).ceil()).expect("finite");
                if eps > 1 {
                    continue;
                }
                out.push((w, eps, b));
            }
        }
    }
    out
}

pub fn calibrate(plan: &CalibrationPlan) -> Result<Calibration> {
    let mut records = Vec::new();
    let mut rec = |preset: &str, quantity: &str, value: f64| {
        records.push(CalibrationRecord {
            preset: preset.into(),
            quantity: quantity.into(),
            value,
        })
    };
    let mut dio_min = f64::INFINITY;
    let mut c1_ok = vec![true; c1_grid().len()];
    let mut rho1_min = f64::INFINITY;
    let mut rho2_min = f64::INFINITY;
    let mut slow_gap_min = f64::INFINITY;
    let mut l0 = 1.0f64;
    for name in &plan.presets {
        let mut cfg = SlitConfig::from_preset(name, plan.genus)?;
        cfg.dio_check_bound = plan.dio_bound;
        let dio = dio_check(&cfg)?;
        rec(name, "dio_observed_min", dio.observed_min);
        dio_min = dio_min.min(dio.observed_min);

        for (w, eps, b) in strip_battery(&cfg, plan.root_radius) {
            for (k, c1) in c1_grid().iter().enumerate() {
                let cand = children_candidates(&w, &eps, &b, c1, k == 0, None, 0.0, &cfg)?;
                if cand.vectors.is_empty() {
                    c1_ok[k] = false;
                }
                if k == 0 && cand.hypothesis == Some(true) {
                    let be = (Rational::from(&b * &eps)).to_f64();
                    let full = children_candidates(
                        &w,
                        &eps,
                        &b,
                        &Rational::from((1, 1u32 << 20)),
                        false,
                        None,
                        0.0,
                        &cfg,
                    )?;
                    let r = full.vectors.len() as f64 / be;
                    rec(name, "strip_count_ratio", r);
                    rho1_min = rho1_min.min(r);
                }
            }
        }

        let bc = BuilderConfig {
            l0: 1.0 + 1e-9,
            cap: 1 << 10,
            scan_keep: 1 << 10,
            scan_retries: 0,
            ..Default::default()
        };
        if let Ok(root) = find_root(&bc, &cfg, plan.root_radius) {
            let kids = children_of(&root, 0, &bc, &cfg)?;
            let scale = kids.predicted / bc.rho2;
            let r = kids.children.len() as f64 / scale;
            rec(name, "root_child_ratio", r);
            rho2_min = rho2_min.min(r);
        }

        // smallest root length whose path reaches the target depth
        let g = plan.genus as i64;
        let mut roots = Vec::new();
        for sign in [1i8, -1] {
            for p in -plan.root_radius..=plan.root_radius {
                for q in -plan.root_radius..=plan.root_radius {
                    let w = WVec::new(sign, IntVec2::new(g * p, g * q));
                    let l = w.length(&cfg, 64).mid();
                    if l > 1.0 {
                        roots.push((l, w));
                    }
                }
            }
        }
        roots.sort_by(|a, b| a.0.total_cmp(&b.0));
        let bc_path = BuilderConfig {
            l0: 1.0 + 1e-9,
            depth: plan.l0_depth,
            ..Default::default()
        };
        let mut found = None;
        for (l, w) in roots {
            let ok = match build(&w, &bc_path, &cfg) {
                Ok(tree) => tree.path().len() == plan.l0_depth + 1,
                Err(Error::Invalid(_)) => false,
                Err(e) => return Err(e),
            };
            if ok {
                found = Some(l);
                break;
            }
        }
        if let Some(l) = found {
            rec(name, "smallest_working_root", l);
            l0 = l0.max(l);
        }

        let w0 = WVec::new(1, IntVec2::new(2 * g, -2 * g));
        for rate in [RateFn::Log, RateFn::SqrtLog] {
            let sc = SlowConfig {
                rate,
                steps: plan.slow_steps,
                c0: 0.0,
                ..Default::default()
            };
            let seq = build_slow(&w0, &sc, &cfg)?;
            let rep = verify_clauses(&seq, &cfg)?;
            let mut gaps: Vec<f64> = rep.growth_gaps.iter().map(|g| g.1).collect();
            if gaps.is_empty() {
                // no step met the clause hypothesis; fall back to steps chosen by rule (C)
                let ms: Vec<f64> = seq.steps.iter().map(|s| s.m).collect();
                for (i, s) in seq.steps.iter().enumerate().skip(1) {
                    if matches!(s.rule, Rule::C1 | Rule::C2) {
                        gaps.push((ms[i] - ms[i - 1]) * ms[i - 1].exp());
                    }
                }
            }
            for g in gaps {
                rec(name, "slow_growth_gap", g);
                slow_gap_min = slow_gap_min.min(g);
            }
        }
    }
    let defaults = Constants::default();
    let c1 = c1_grid()
        .into_iter()
        .zip(c1_ok)
        .find(|(_, ok)| *ok)
        .map(|(c, _)| c)
        .unwrap_or(defaults.c1.clone());
    let half = |x: f64, d: f64| if x.is_finite() && x > 0.0 { x / 2.0 } else { d };
    let constants = Constants {
        rho1: half(rho1_min, defaults.rho1),
        c1,
        rho2: half(rho2_min, defaults.rho2),
        dio_c0: half(dio_min, defaults.dio_c0),
        slow_c0: half(slow_gap_min, defaults.slow_c0),
        l0: if l0 > 1.0 { l0 } else { defaults.l0 },
    };
    Ok(Calibration { constants, records })
}
