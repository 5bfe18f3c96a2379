//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion, exit status 1 if any fails.
//!
//! Runs without the libtest harness so every line reaches the log.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Rational;

use slowdiv::certificate::{nonergodic_certificate, slow_certificate, verify};
use slowdiv::cfrac::{check_identities, spec_of, Owner};
use slowdiv::density::{dens_of, sector_battery, strip_battery, Region};
use slowdiv::nonergodic::{build, cross_sum, find_root, hausdorff_comparator, BuilderConfig};
use slowdiv::profile::{
    brute_profile, crossing_of, gt_length_sq_at, peak_of, pl_hypotheses, pl_profile, rate_estimate,
    segment_sups, PlProfile,
};
use slowdiv::slow::{build_slow, range_wrapper, verify_clauses, RateFn, SlowConfig, SlowSeq};
use slowdiv::{Direction, Expr, IntVec2, Real, SVec, SlitConfig, VSet, WVec};

const SEED: u64 = 20_240_601;
/// Depth of the shared nonergodic path; the last rate estimate first drops below `1 − 1/(e0+1)` here.
const PATH_DEPTH: usize = 6;
/// Sampling step of the brute-force profile along the path.
const PROFILE_STEP: f64 = 0.5;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn within(budget_secs: u64, start: Instant) -> (bool, String) {
    let e = start.elapsed();
    (
        e <= Duration::from_secs(budget_secs),
        format!("{:.1} s of {budget_secs} s", e.as_secs_f64()),
    )
}

fn triangle_difference_density(cfg: &SlitConfig) -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    for a in [
        Rational::from(1),
        Rational::from((6, 5)),
        Rational::from((7, 5)),
    ] {
        let r = dens_of(&Region::TriangleDiff { a: a.clone() }, cfg).expect("density");
        let want = Rational::from(2) / (Rational::from(3) * Rational::from(&a * &a));
        if r.dens_exact.as_deref() != Some(want.to_string().as_str()) {
            bad.push(format!("a = {a}: {:?} vs {want}", r.dens_exact));
        }
    }
    let (fast, t) = within(1, start);
    outcome(
        bad.is_empty() && fast,
        if bad.is_empty() {
            format!("exact 2/(3a²) for a = 1, 6/5, 7/5; {t}")
        } else {
            bad.join("; ")
        },
    )
}

fn farey_sector_battery(cfg: &SlitConfig) -> Outcome {
    let start = Instant::now();
    let rows = sector_battery(200, 50, SEED, cfg).expect("sector battery");
    let failed = rows.iter().filter(|r| r.passed != Some(true)).count();
    let min = rows.iter().map(|r| r.dens).fold(f64::INFINITY, f64::min);
    let (fast, t) = within(30, start);
    outcome(
        failed == 0 && rows.len() == 200 && fast,
        format!(
            "{} instances, {failed} at or below 8/27, min dens {min:.4}; {t}",
            rows.len()
        ),
    )
}

fn strip_density_battery(cfg: &SlitConfig) -> Outcome {
    let start = Instant::now();
    let rows = strip_battery(100, 200, SEED, cfg).expect("strip battery");
    let unverified = rows.iter().filter(|r| r.hypothesis != Some(true)).count();
    let failed = rows.iter().filter(|r| r.passed != Some(true)).count();
    let min = rows.iter().map(|r| r.dens).fold(f64::INFINITY, f64::min);
    let (fast, t) = within(60, start);
    outcome(
        unverified == 0 && failed == 0 && rows.len() == 100 && fast,
        format!("{} instances, {unverified} without hypothesis, {failed} at or below 2/(27π), min dens {min:.4}; {t}", rows.len()),
    )
}

fn continued_fraction_identities(cfg: &SlitConfig) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let bound = Rational::from(1_000_000);
    let mut bad = Vec::new();
    let mut stored = 0;
    for i in 0..50 {
        let owner = if i % 2 == 0 {
            let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
            Owner::W(WVec::new(
                sign,
                IntVec2::new(rng.gen_range(-60..=60i64), rng.gen_range(-60..=60i64)),
            ))
        } else {
            let alpha = Rational::from((rng.gen_range(1..6_283_185i64), 1_000_000));
            Owner::Direction(Direction::from_angle(Expr::rational(alpha)))
        };
        let seq = spec_of(&owner, &bound, cfg).expect("convergents");
        stored += seq.len();
        let fails = check_identities(&seq, cfg).expect("identities");
        if !fails.is_empty() {
            bad.push(format!("owner {i}: {}", fails.join(", ")));
        }
    }
    let (fast, t) = within(30, start);
    outcome(
        bad.is_empty() && fast,
        if bad.is_empty() {
            format!("50 owners, {stored} convergents; {t}")
        } else {
            bad.join("; ")
        },
    )
}

/// Maximizer of `−log|g_t v|²` by repeated grid refinement at 256 bits.
fn grid_peak(v: &[Real; 2], u: &[Real; 2]) -> (f64, f64) {
    let prec = 256;
    let f = |t: f64| -gt_length_sq_at(v, u, &Real::from_f64(t, prec)).ln();
    let (mut lo, mut hi) = (-80.0f64, 80.0f64);
    let n = 200;
    loop {
        let h = (hi - lo) / n as f64;
        let mut best = (0, f(lo));
        for i in 1..=n {
            let x = f(lo + h * i as f64);
            if x.gt(&best.1).expect("grid comparison") {
                best = (i, x);
            }
        }
        let c = lo + h * best.0 as f64;
        if h < 1e-13 {
            return (c, best.1.mid());
        }
        lo = c - h;
        hi = c + h;
    }
}

/// Root of `|g_t v|² = |g_t w|²` by bisection at 256 bits.
fn bisect_crossing(v: &[Real; 2], w: &[Real; 2], u: &[Real; 2]) -> f64 {
    let prec = 256;
    let h = |t: f64| {
        let tt = Real::from_f64(t, prec);
        (gt_length_sq_at(v, u, &tt) - gt_length_sq_at(w, u, &tt)).mid()
    };
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while h(lo) > 0.0 {
        lo *= 2.0;
    }
    while h(hi) < 0.0 {
        hi *= 2.0;
    }
    while hi - lo > 1e-14 * (1.0 + lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn random_svec(rng: &mut ChaCha8Rng) -> SVec {
    loop {
        let n = IntVec2::new(rng.gen_range(-400..=400i64), rng.gen_range(-400..=400i64));
        if rng.gen_bool(0.5) {
            return SVec::W(WVec::new(if rng.gen_bool(0.5) { 1 } else { -1 }, n));
        }
        if !n.is_zero() && n.is_primitive() {
            return SVec::Z(n);
        }
    }
}

fn peak_and_crossing_closed_forms(cfg: &SlitConfig) -> Outcome {
    let start = Instant::now();
    let prec = 256;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut peak_err: f64 = 0.0;
    let mut peaks = 0;
    while peaks < 100 {
        let theta = Direction::from_angle(Expr::rational(Rational::from((
            rng.gen_range(1..6_283_185i64),
            1_000_000,
        ))));
        let v = random_svec(&mut rng);
        let Ok(p) = peak_of(&v, &theta, cfg) else {
            continue;
        };
        let (t, m) = grid_peak(&v.components(cfg, prec), &theta.unit(prec));
        peak_err = peak_err.max((p.t - t).abs()).max((p.m - m).abs());
        peaks += 1;
    }
    let mut cross_err: f64 = 0.0;
    let mut crossings = 0;
    let mut draws = 0;
    while crossings < 100 && draws < 100_000 {
        draws += 1;
        let theta = Direction::from_angle(Expr::rational(Rational::from((
            rng.gen_range(1..6_283_185i64),
            1_000_000,
        ))));
        let (v, w) = (random_svec(&mut rng), random_svec(&mut rng));
        let Ok(c) = crossing_of(&v, &w, &theta, cfg) else {
            continue;
        };
        let t = bisect_crossing(
            &v.components(cfg, prec),
            &w.components(cfg, prec),
            &theta.unit(prec),
        );
        cross_err = cross_err.max((c.t - t).abs());
        crossings += 1;
    }
    let (fast, tm) = within(30, start);
    outcome(
        peaks == 100 && crossings == 100 && peak_err <= 1e-9 && cross_err <= 1e-12 && fast,
        format!("{peaks} peaks max err {peak_err:.2e} (≤ 1e-9), {crossings} crossings max err {cross_err:.2e} (≤ 1e-12); {tm}"),
    )
}

struct PathRun {
    cfg: SlitConfig,
    bc: BuilderConfig,
    path: Vec<WVec>,
    model: Result<PlProfile, String>,
    built_in: Duration,
}

fn build_path() -> PathRun {
    let cfg = SlitConfig::default();
    let bc = BuilderConfig {
        e0: 4.0,
        depth: PATH_DEPTH,
        ..BuilderConfig::default()
    };
    let start = Instant::now();
    let root = find_root(&bc, &cfg, 3).expect("admissible root");
    let tree = build(&root, &bc, &cfg).expect("construction");
    let path = tree.path();
    let model = pl_profile(&path, &cfg).map_err(|e| e.to_string());
    PathRun {
        cfg,
        bc,
        path,
        model,
        built_in: start.elapsed(),
    }
}

fn profile_deviation_trend(run: &PathRun) -> Outcome {
    let start = Instant::now();
    if run.path.len() < PATH_DEPTH + 1 {
        return outcome(
            false,
            format!("path stopped at depth {}", run.path.len() - 1),
        );
    }
    let model = match &run.model {
        Ok(m) => m,
        Err(e) => return outcome(false, format!("model unavailable: {e}")),
    };
    let theta = run.path[run.path.len() - 1].direction(&run.cfg);
    let t_hi = model.steps.last().expect("steps").valley_t;
    let brute = brute_profile(&theta, model.start_t, t_hi, PROFILE_STEP, VSet::V, &run.cfg)
        .expect("brute profile");
    let segs = match segment_sups(&run.path, model, &theta, &brute, &run.cfg) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("segment maxima: {e}")),
    };
    let finite = segs.iter().all(|s| s.max_dev.mid().is_finite());
    // consecutive maxima differ far below f64 resolution, so compare enclosures
    let trend: Result<bool, _> = segs
        .windows(2)
        .map(|w| w[1].max_dev.le(&w[0].max_dev))
        .collect::<Result<Vec<_>, _>>()
        .map(|v| v.iter().all(|b| *b));
    let ln2 = Real::ln2(segs.first().map_or(64, |s| s.max_dev.prec()));
    let excess: Vec<String> = segs
        .iter()
        .map(|s| format!("{:.2e}", (&s.max_dev - &ln2).mid()))
        .collect();
    let total = run.built_in + start.elapsed();
    let fast = total <= Duration::from_secs(600);
    outcome(
        finite && matches!(trend, Ok(true)) && segs.len() >= 4 && fast,
        format!(
            "{} segments on [{:.2}, {t_hi:.2}], maxima log 2 + {:?}, trend {:?}; build + profile {:.0} s of 600 s",
            segs.len(),
            model.start_t,
            excess,
            trend,
            total.as_secs_f64()
        ),
    )
}

fn rate_trend(run: &PathRun) -> Outcome {
    let model = match &run.model {
        Ok(m) => m,
        Err(e) => return outcome(false, format!("model unavailable: {e}")),
    };
    let rates = rate_estimate(model);
    let threshold = 1.0 - 1.0 / (run.bc.e0 + 1.0);
    let Some(last) = rates.last() else {
        return outcome(false, "no peaks");
    };
    let tail: Vec<f64> = rates.iter().rev().take(3).rev().map(|r| r.ratio).collect();
    let decreasing = tail.len() == 3 && tail.windows(2).all(|w| w[1] < w[0]);
    let hyp = pl_hypotheses(&run.path, &run.cfg).expect("hypotheses");
    outcome(
        last.rate <= threshold && decreasing && hyp.is_empty(),
        format!(
            "log M/log T = {:?}, last {:.4} vs {threshold}; M/T over last 3 {:?}",
            rates
                .iter()
                .map(|r| (r.rate * 1e4).round() / 1e4)
                .collect::<Vec<_>>(),
            last.rate,
            tail.iter()
                .map(|r| (r * 1e4).round() / 1e4)
                .collect::<Vec<_>>()
        ),
    )
}

fn cross_product_envelope(run: &PathRun) -> Outcome {
    let start = Instant::now();
    let s = cross_sum(&run.path, &run.bc, &run.cfg).expect("sum");
    let (fast, t) = within(1, start);
    let last = s.partial_sums.len().saturating_sub(1);
    outcome(
        s.termwise && fast,
        format!(
            "{} terms, partial sum {:.4e} vs envelope {:.4e}; {t}",
            s.terms.len(),
            s.partial_sums.get(last).copied().unwrap_or(0.0),
            s.envelope_sums.get(last).copied().unwrap_or(0.0)
        ),
    )
}

fn dimension_comparator() -> Outcome {
    let values: Vec<f64> = (0..=20).map(|j| hausdorff_comparator(4.0, j)).collect();
    let monotone = values.windows(2).all(|w| w[1] > w[0]);
    // closed form at j = 20: ½(1 − 4!·20!/24!)
    let exact = 0.5 * (1.0 - 24.0 / (21.0 * 22.0 * 23.0 * 24.0));
    let agrees = (values[20] - exact).abs() <= 1e-15;
    outcome(
        monotone && values[20] > 0.45 && agrees,
        format!("increasing on 0..=20, value at 20 = {:.6}", values[20]),
    )
}

fn slow_run(cfg: &SlitConfig) -> SlowSeq {
    let g = cfg.genus as i64;
    let w0 = WVec::new(1, IntVec2::new(g, -2 * g));
    build_slow(
        &w0,
        &SlowConfig {
            rate: RateFn::Log,
            steps: 30,
            ..SlowConfig::default()
        },
        cfg,
    )
    .expect("slow run")
}

fn slow_clause_suite(cfg: &SlitConfig, seq: &SlowSeq, built_in: Duration) -> Outcome {
    let start = Instant::now();
    let rep = verify_clauses(seq, cfg).expect("clauses");
    let total = built_in + start.elapsed();
    let fast = total <= Duration::from_secs(300);
    outcome(
        rep.passed() && seq.steps.len() == 30 && fast,
        format!(
            "30 steps, burn-in {:?}, violations {:?}, rule (A) steps {:?}, c0 = {}; {:.1} s of 300 s",
            rep.burn_in,
            rep.violations,
            rep.rule_a_steps,
            seq.config.c0,
            total.as_secs_f64()
        ),
    )
}

fn loglog_range_wrapper(cfg: &SlitConfig) -> Outcome {
    let g = cfg.genus as i64;
    let w0 = WVec::new(1, IntVec2::new(g, -2 * g));
    let (_, rep) = range_wrapper(&w0, 30, 0.1, cfg).expect("wrapper");
    let worst = rep
        .points
        .iter()
        .filter(|p| rep.burn_in.is_some_and(|b| p.0 >= b))
        .map(|p| p.2 - p.3)
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        rep.passed,
        format!(
            "{}: burn-in {:?}, {} of {} peaks past burn-in exceed R(T), largest M − R(T) = {worst:.3}{}",
            rep.rate,
            rep.burn_in,
            rep.failures.len(),
            rep.points.iter().filter(|p| rep.burn_in.is_some_and(|b| p.0 >= b)).count(),
            rep.stalled.as_ref().map(|s| format!(", stalled: {s}")).unwrap_or_default()
        ),
    )
}

fn certificate_round_trip(run: &PathRun, cfg: &SlitConfig, seq: &SlowSeq) -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    let certs = [
        (
            "nonergodic",
            nonergodic_certificate(&run.path, &run.bc, &run.cfg).expect("certificate"),
        ),
        ("slow", slow_certificate(seq, cfg).expect("certificate")),
    ];
    for (name, cert) in &certs {
        let text = serde_json::to_string(cert).expect("serialize");
        let back = serde_json::from_str(&text).expect("deserialize");
        let fails = verify(&back).expect("replay");
        if !fails.is_empty() {
            bad.push(format!("{name}: {}", fails.join(", ")));
        }
    }
    let (fast, t) = within(120, start);
    outcome(
        bad.is_empty() && fast,
        if bad.is_empty() {
            format!("2 certificates replayed at doubled precision; {t}")
        } else {
            bad.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let cfg = SlitConfig::default();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut record = |name: &'static str, o: Outcome| {
        println!(
            "[{}] {name}: {}",
            if o.ok { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((name, o));
    };
    record(
        "triangle_difference_density",
        triangle_difference_density(&cfg),
    );
    record("farey_sector_battery", farey_sector_battery(&cfg));
    record("strip_density_battery", strip_density_battery(&cfg));
    record(
        "continued_fraction_identities",
        continued_fraction_identities(&cfg),
    );
    record(
        "peak_and_crossing_closed_forms",
        peak_and_crossing_closed_forms(&cfg),
    );
    let run = build_path();
    record("profile_deviation_trend", profile_deviation_trend(&run));
    record("rate_trend", rate_trend(&run));
    record("cross_product_envelope", cross_product_envelope(&run));
    record("dimension_comparator", dimension_comparator());
    let start = Instant::now();
    let seq = slow_run(&cfg);
    record(
        "slow_clause_suite",
        slow_clause_suite(&cfg, &seq, start.elapsed()),
    );
    record("loglog_range_wrapper", loglog_range_wrapper(&cfg));
    record(
        "certificate_round_trip",
        certificate_round_trip(&run, &cfg, &seq),
    );
    let failed: Vec<&str> = results.iter().filter(|r| !r.1.ok).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed {:?}",
        results.len() - failed.len(),
        failed.len(),
        failed
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
