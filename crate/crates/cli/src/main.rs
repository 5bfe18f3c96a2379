//! `slowdiv` command-line driver.
//!
//! Every subcommand computes all of its outputs in memory, then writes them to
//! `--out` together with `manifest.json`. Usage errors exit 1 before anything
//! is written.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::Rational;
use serde::Serialize;
use sha2::{Digest, Sha256};

use slowdiv::calibrate::{calibrate, CalibrationPlan, Constants};
use slowdiv::certificate::{
    nonergodic_certificate, slow_certificate, verify, Body, Certificate, DIGITS,
};
use slowdiv::cfrac::{spec_of, Owner};
use slowdiv::density::{dens_of, sector_battery, strip_battery, DensityReport, Region};
use slowdiv::nonergodic::{build, cross_sum, find_root, limit_direction, BuildMode, BuilderConfig};
use slowdiv::profile::{
    brute_profile, pl_hypotheses, pl_profile_unchecked, rate_estimate, PlProfile,
};
use slowdiv::slow::{build_slow, range_wrapper, verify_clauses, RateFn, SlowConfig};
use slowdiv::{Direction, Error, Expr, IntVec2, Real, Result, SVec, SlitConfig, VSet, WVec};

/// Overrides `precision_bits` of the slit configuration.
const PRECISION_ENV: &str = "SLOWDIV_PRECISION_BITS";

#[derive(Parser, Serialize)]
#[command(
    name = "slowdiv",
    version,
    about = "Continued fractions, geodesic profiles, lattice densities and direction constructions"
)]
struct Cli {
    /// Slit configuration (TOML: genus, preset or x0/y0, c0, d0, precision_bits, dio_check_bound).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Calibrated constants (TOML as written by `calibrate`).
    #[arg(long, global = true)]
    constants: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    #[serde(skip)]
    out: PathBuf,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum Cmd {
    /// Convergents of a vector or direction.
    ///
    /// Writes convergents.csv with columns k,a_k,p_k,q_k,length,cross_with_owner
    /// where cross_with_owner is |owner × v_k| / |owner|.
    Convergents(ConvergentsArgs),
    /// Sampled shortest-vector profile f(t) = −log|g_t v|² with the model beside it.
    ///
    /// Writes profile.csv with columns t,f_brute,lambda,witness_p,witness_q,witness_kind,witness_sign,ties.
    /// lambda is empty outside the model range or without --cert; witness_p, witness_q is the
    /// integer part n of the witness, witness_kind is W or Z and witness_sign the sign of the
    /// holonomy term (0 for Z).
    Profile(ProfileArgs),
    /// Piecewise-linear model of a certified sequence, as predict.json.
    Predict(PredictArgs),
    /// Density of one region (density.json) or the seeded batteries (density_battery.csv).
    ///
    /// Battery columns: battery,index,region,count,area,dens,bound,hypothesis,passed.
    Density(DensityArgs),
    /// Nonergodic construction.
    ///
    /// Writes nonergodic_tree.json, nonergodic_cert.json and nonergodic.csv with columns
    /// j,norm_w,cross,peak_t,peak_m,valley_t,valley_m,rate_estimate
    /// (cross = |w_j × w_{j+1}|, peaks and valleys in the full-log convention).
    Nonergodic(NonergodicArgs),
    /// Slow construction.
    ///
    /// Writes slow.csv with columns j,rule,t,m,r,norm_w (half-log convention),
    /// slow_cert.json and slow_clauses.json; --range-check adds slow_range.json.
    Slow(SlowArgs),
    /// Empirical constants: constants.toml and calibration.csv (preset,quantity,value).
    Calibrate(CalibrateArgs),
    /// Replays a certificate at doubled precision; exit 4 lists the failed checks.
    Verify(VerifyArgs),
}

#[derive(Args, Serialize)]
struct OwnerArgs {
    /// Owner vector `±h+(p,q)`, meaning ±(x0,y0) + (p,q).
    #[arg(long, allow_hyphen_values = true)]
    w: Option<String>,
    /// Owner direction as an angle in radians (expression such as `pi/7`).
    #[arg(long, conflicts_with = "w", allow_hyphen_values = true)]
    angle: Option<String>,
}

#[derive(Args, Serialize)]
struct ConvergentsArgs {
    #[command(flatten)]
    owner: OwnerArgs,
    /// Length bound; the first convergent past it is included.
    #[arg(long, default_value = "1000000")]
    bound: String,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SetArg {
    V,
    W,
    Z,
}

#[derive(Args, Serialize)]
struct ProfileArgs {
    /// Certificate whose last path vector gives the direction and whose model gives lambda.
    #[arg(long, conflicts_with_all = ["w", "angle"])]
    cert: Option<PathBuf>,
    #[command(flatten)]
    owner: OwnerArgs,
    /// Start of the sampled range (default: first model valley, or 0).
    #[arg(long, allow_hyphen_values = true)]
    t_lo: Option<f64>,
    /// End of the sampled range (default: last model valley, or 10).
    #[arg(long, allow_hyphen_values = true)]
    t_hi: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    step: f64,
    #[arg(long, value_enum, default_value = "v")]
    set: SetArg,
}

#[derive(Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    cert: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Shape {
    Disk,
    Triangle,
    Sector,
    Arc,
    Strip,
}

#[derive(Args, Serialize)]
struct DensityArgs {
    /// Region kind; triangle and sector are measured as 2Ω∖Ω unless --full.
    #[arg(long, value_enum, required_unless_present = "battery")]
    shape: Option<Shape>,
    /// Measure the plain triangle or sector instead of the difference region.
    #[arg(long)]
    full: bool,
    /// Triangle scale.
    #[arg(long)]
    a: Option<String>,
    /// Radius parameter of disk, sector, arc and strip.
    #[arg(long)]
    b: Option<String>,
    /// Strip half-width (arc: chord half-width at radius b).
    #[arg(long)]
    eps: Option<String>,
    /// Sector start `p,q`.
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<String>,
    /// Sector end `p,q`.
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<String>,
    /// Direction angle of arc and strip.
    #[arg(long, allow_hyphen_values = true)]
    angle: Option<String>,
    /// Run the seeded sector and strip batteries instead of one region.
    #[arg(long, conflicts_with = "shape")]
    battery: bool,
    #[arg(long, default_value_t = 200)]
    sector_count: usize,
    #[arg(long, default_value_t = 50)]
    sector_b_max: u64,
    #[arg(long, default_value_t = 100)]
    strip_count: usize,
    #[arg(long, default_value_t = 200)]
    strip_b_max: u64,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Tree,
    Path,
    Random,
}

#[derive(Args, Serialize)]
struct NonergodicArgs {
    #[arg(long, default_value_t = 4.0)]
    e0: f64,
    #[arg(long, default_value_t = 5)]
    depth: usize,
    #[arg(long, value_enum, default_value = "path")]
    mode: ModeArg,
    /// Root `±h+(p,q)`; default is the shortest admissible root.
    #[arg(long, allow_hyphen_values = true)]
    root: Option<String>,
    /// Root search radius in units of the genus.
    #[arg(long, default_value_t = 3)]
    root_radius: i64,
    /// Ceiling of the exactly scanned spectrum range (default 2·e0).
    #[arg(long)]
    t_max: Option<f64>,
    /// Children kept per node.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum RateArg {
    Log,
    Sqrtlog,
    Loglog,
    CustomTable,
}

#[derive(Args, Serialize)]
struct SlowArgs {
    #[arg(long, value_enum, default_value = "log")]
    rate: RateArg,
    /// CSV of `t,r` knots for --rate custom-table.
    #[arg(long, required_if_eq("rate", "custom-table"))]
    table: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    steps: usize,
    /// Target for g|w_0 × v_1|.
    #[arg(long, default_value = "1/100")]
    eps_init: String,
    /// Start vector `±h+(p,q)`; default +h+(g,−2g).
    #[arg(long, allow_hyphen_values = true)]
    root: Option<String>,
    /// Also compare the model peaks with log log(10+t), writing slow_range.json.
    #[arg(long)]
    range_check: bool,
    /// Margin in r = R/(2+margin) + shift for --range-check.
    #[arg(long, default_value_t = 0.1)]
    range_eps: f64,
}

#[derive(Args, Serialize)]
struct CalibrateArgs {
    /// Two presets and shorter runs.
    #[arg(long)]
    quick: bool,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    cert: PathBuf,
}

/// One file of a run.
struct Output {
    name: String,
    bytes: Vec<u8>,
}

impl Output {
    fn json<T: Serialize>(name: &str, value: &T) -> Result<Output> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Output {
            name: name.into(),
            bytes,
        })
    }
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    command: &'a Cmd,
    seed: u64,
    config_file: Option<&'a Path>,
    constants_file: Option<&'a Path>,
    slit: &'a SlitConfig,
    constants: &'a Constants,
    /// Significant digits of every decimal-string real in the outputs.
    decimal_digits: usize,
    outputs: Vec<ManifestEntry>,
}

struct Env {
    slit: SlitConfig,
    constants: Constants,
    seed: u64,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn load_env(cli: &Cli) -> Result<Env> {
    let mut slit = match &cli.config {
        Some(p) => SlitConfig::from_toml_str(&read(p)?)?,
        None => SlitConfig::default(),
    };
    let constants = match &cli.constants {
        Some(p) => {
            let c = Constants::from_toml_str(&read(p)?)?;
            c.apply_slit(&mut slit);
            c
        }
        None => Constants::default(),
    };
    if let Ok(v) = std::env::var(PRECISION_ENV) {
        slit.precision_bits = v
            .parse()
            .map_err(|_| Error::Config(format!("{PRECISION_ENV} must be an integer, got {v:?}")))?;
    }
    slit.validate()?;
    Ok(Env {
        slit,
        constants,
        seed: cli.seed,
    })
}

fn rational(s: &str, name: &str) -> Result<Rational> {
    let e: Expr = s.parse()?;
    e.as_rational()
        .ok_or_else(|| Error::Invalid(format!("--{name} must be rational, got {s:?}")))
}

fn required<'a>(v: &'a Option<String>, name: &str) -> Result<&'a str> {
    v.as_deref()
        .ok_or_else(|| Error::Invalid(format!("--{name} is required for this shape")))
}

fn int_vec(s: &str, name: &str) -> Result<IntVec2> {
    let bad = || Error::Invalid(format!("--{name} must be `p,q`, got {s:?}"));
    let (p, q) = s.split_once(',').ok_or_else(bad)?;
    let p: i64 = p.trim().parse().map_err(|_| bad())?;
    let q: i64 = q.trim().parse().map_err(|_| bad())?;
    Ok(IntVec2::new(p, q))
}

fn owner_of(o: &OwnerArgs) -> Result<Owner> {
    match (&o.w, &o.angle) {
        (Some(w), None) => Ok(Owner::W(w.parse()?)),
        (None, Some(a)) => Ok(Owner::Direction(Direction::from_angle(a.parse()?))),
        _ => Err(Error::Invalid("give exactly one of --w and --angle".into())),
    }
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner()
        .map_err(|e| Error::Invalid(format!("csv: {e}")))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn dec(r: &Real) -> String {
    r.to_decimal(DIGITS)
}

fn decimal_prec(ws: &[&IntVec2]) -> u32 {
    let bits = ws
        .iter()
        .map(|v| v.p.significant_bits().max(v.q.significant_bits()))
        .max()
        .unwrap_or(0);
    256 + 4 * bits
}

fn load_cert(path: &Path) -> Result<Certificate> {
    Ok(serde_json::from_str(&read(path)?)?)
}

fn cert_vectors(cert: &Certificate) -> Vec<WVec> {
    match &cert.body {
        Body::Nonergodic { entries, .. } => entries.iter().map(|e| e.w.clone()).collect(),
        Body::Slow { seq, .. } => seq.vectors(),
    }
}

fn convergents(a: &ConvergentsArgs, env: &Env) -> Result<Vec<Output>> {
    let owner = owner_of(&a.owner)?;
    let bound = rational(&a.bound, "bound")?;
    let seq = spec_of(&owner, &bound, &env.slit)?;
    let mut vs: Vec<&IntVec2> = seq.convergents.iter().collect();
    if let Owner::W(w) = &owner {
        vs.push(&w.n);
    }
    let prec = decimal_prec(&vs);
    let rows = seq
        .convergents
        .iter()
        .enumerate()
        .map(|(k, v)| {
            vec![
                k.to_string(),
                seq.quotients
                    .get(k)
                    .map(|q| q.to_string())
                    .unwrap_or_default(),
                v.p.to_string(),
                v.q.to_string(),
                dec(&v.length(prec)),
                dec(&owner.normalized_cross(v, &env.slit, prec)),
            ]
        })
        .collect();
    let bytes = csv_bytes(
        &["k", "a_k", "p_k", "q_k", "length", "cross_with_owner"],
        rows,
    )?;
    Ok(vec![Output {
        name: "convergents.csv".into(),
        bytes,
    }])
}

fn profile(a: &ProfileArgs, env: &Env) -> Result<Vec<Output>> {
    let (theta, model) = match &a.cert {
        Some(p) => {
            let cert = load_cert(p)?;
            let ws = cert_vectors(&cert);
            if ws.len() < 2 {
                return Err(Error::Invalid(
                    "certificate needs at least two vectors".into(),
                ));
            }
            let model = pl_profile_unchecked(&ws, &cert.slit)?;
            (ws[ws.len() - 1].direction(&cert.slit), Some(model))
        }
        None => match owner_of(&a.owner)? {
            Owner::W(w) => (w.direction(&env.slit), None),
            Owner::Direction(d) => (d, None),
        },
    };
    let last_valley = model
        .as_ref()
        .and_then(|m| m.steps.last().map(|s| s.valley_t));
    let t_lo = a.t_lo.or(model.as_ref().map(|m| m.start_t)).unwrap_or(0.0);
    let t_hi = a.t_hi.or(last_valley).unwrap_or(10.0);
    let set = match a.set {
        SetArg::V => VSet::V,
        SetArg::W => VSet::W,
        SetArg::Z => VSet::Z,
    };
    let brute = brute_profile(&theta, t_lo, t_hi, a.step, set, &env.slit)?;
    let rows = brute
        .samples
        .iter()
        .map(|s| {
            let (kind, sign) = match &s.witness {
                SVec::Z(_) => ("Z", 0),
                SVec::W(w) => ("W", w.sign as i32),
            };
            let n = s.witness.offset();
            vec![
                s.t.to_string(),
                s.f.to_string(),
                opt(model.as_ref().and_then(|m| m.lambda(s.t))),
                n.p.to_string(),
                n.q.to_string(),
                kind.into(),
                sign.to_string(),
                s.ties.to_string(),
            ]
        })
        .collect();
    let header = [
        "t",
        "f_brute",
        "lambda",
        "witness_p",
        "witness_q",
        "witness_kind",
        "witness_sign",
        "ties",
    ];
    Ok(vec![Output {
        name: "profile.csv".into(),
        bytes: csv_bytes(&header, rows)?,
    }])
}

#[derive(Serialize)]
struct Prediction {
    /// Peaks and valleys use full logarithms of lengths and cross products.
    convention: &'static str,
    hypothesis_violations: Vec<(String, usize)>,
    profile: PlProfile,
    rates: Vec<slowdiv::profile::RatePoint>,
}

fn predict(a: &PredictArgs) -> Result<Vec<Output>> {
    let cert = load_cert(&a.cert)?;
    let ws = cert_vectors(&cert);
    if ws.len() < 2 {
        return Err(Error::Invalid(
            "certificate needs at least two vectors".into(),
        ));
    }
    let profile = pl_profile_unchecked(&ws, &cert.slit)?;
    let p = Prediction {
        convention: "full_log",
        hypothesis_violations: pl_hypotheses(&ws, &cert.slit)?,
        rates: rate_estimate(&profile),
        profile,
    };
    Ok(vec![Output::json("predict.json", &p)?])
}

fn region_of(a: &DensityArgs, shape: Shape) -> Result<Region> {
    let b = || rational(required(&a.b, "b")?, "b");
    let eps = || rational(required(&a.eps, "eps")?, "eps");
    let theta = || -> Result<Direction> {
        Ok(Direction::from_angle(required(&a.angle, "angle")?.parse()?))
    };
    Ok(match shape {
        Shape::Disk => Region::Disk { b: b()? },
        Shape::Triangle => {
            let scale = rational(required(&a.a, "a")?, "a")?;
            if a.full {
                Region::Triangle { a: scale }
            } else {
                Region::TriangleDiff { a: scale }
            }
        }
        Shape::Sector => {
            let lo = int_vec(required(&a.lo, "lo")?, "lo")?;
            let hi = int_vec(required(&a.hi, "hi")?, "hi")?;
            if a.full {
                Region::Sector { lo, hi, b: b()? }
            } else {
                Region::SectorDiff { lo, hi, b: b()? }
            }
        }
        Shape::Arc => Region::ArcDiff {
            theta: theta()?,
            eps: eps()?,
            b: b()?,
        },
        Shape::Strip => Region::Strip {
            theta: theta()?,
            eps: eps()?,
            b: b()?,
        },
    })
}

fn density(a: &DensityArgs, env: &Env) -> Result<Vec<Output>> {
    if !a.battery {
        let shape = a
            .shape
            .ok_or_else(|| Error::Invalid("--shape is required".into()))?;
        let report = dens_of(&region_of(a, shape)?, &env.slit)?;
        return Ok(vec![Output::json("density.json", &report)?]);
    }
    let sectors = sector_battery(a.sector_count, a.sector_b_max, env.seed, &env.slit)?;
    let strips = strip_battery(a.strip_count, a.strip_b_max, env.seed, &env.slit)?;
    let row = |name: &str, i: usize, r: &DensityReport| -> Result<Vec<String>> {
        Ok(vec![
            name.into(),
            i.to_string(),
            serde_json::to_string(&r.region)?,
            r.count.to_string(),
            r.area.to_string(),
            r.dens.to_string(),
            opt(r.bound),
            r.hypothesis.map(|h| h.to_string()).unwrap_or_default(),
            r.passed.map(|h| h.to_string()).unwrap_or_default(),
        ])
    };
    let mut rows = Vec::new();
    for (i, r) in sectors.iter().enumerate() {
        rows.push(row("sector_diff", i, r)?);
    }
    for (i, r) in strips.iter().enumerate() {
        rows.push(row("strip", i, r)?);
    }
    let header = [
        "battery",
        "index",
        "region",
        "count",
        "area",
        "dens",
        "bound",
        "hypothesis",
        "passed",
    ];
    Ok(vec![Output {
        name: "density_battery.csv".into(),
        bytes: csv_bytes(&header, rows)?,
    }])
}

#[derive(Serialize)]
struct NonergodicRun {
    root: WVec,
    path: Vec<WVec>,
    stalls: Vec<(usize, String)>,
    hypothesis_violations: Vec<(String, usize)>,
    cross_sum: Option<slowdiv::nonergodic::CrossSumCertificate>,
    limit_direction: Option<slowdiv::nonergodic::LimitDirection>,
    tree: slowdiv::nonergodic::BuildTree,
}

fn nonergodic(a: &NonergodicArgs, env: &Env) -> Result<Vec<Output>> {
    let cfg = &env.slit;
    let mut bc = BuilderConfig {
        e0: a.e0,
        depth: a.depth,
        mode: match a.mode {
            ModeArg::Tree => BuildMode::Tree,
            ModeArg::Path => BuildMode::Path,
            ModeArg::Random => BuildMode::Random,
        },
        seed: env.seed,
        t_max: a.t_max.unwrap_or(2.0 * a.e0),
        ..BuilderConfig::default()
    };
    if let Some(c) = a.cap {
        bc.cap = c;
    }
    env.constants.apply_builder(&mut bc);
    bc.validate()?;
    let root = match &a.root {
        Some(r) => r.parse()?,
        None => find_root(&bc, cfg, a.root_radius)?,
    };
    let tree = build(&root, &bc, cfg)?;
    let path = tree.path();
    let cert = nonergodic_certificate(&path, &bc, cfg)?;
    let long = path.len() >= 2;
    let model = if long {
        Some(pl_profile_unchecked(&path, cfg)?)
    } else {
        None
    };
    let run = NonergodicRun {
        root: root.clone(),
        stalls: tree.stalls(),
        hypothesis_violations: if long {
            pl_hypotheses(&path, cfg)?
        } else {
            vec![]
        },
        cross_sum: if long {
            Some(cross_sum(&path, &bc, cfg)?)
        } else {
            None
        },
        limit_direction: if long {
            Some(limit_direction(&path, cfg)?)
        } else {
            None
        },
        path: path.clone(),
        tree,
    };

    let ns: Vec<&IntVec2> = path.iter().map(|w| &w.n).collect();
    let prec = decimal_prec(&ns);
    let rates = model.as_ref().map(rate_estimate).unwrap_or_default();
    let mut rows = Vec::new();
    for (j, w) in path.iter().enumerate() {
        let cross = path
            .get(j + 1)
            .map(|n| dec(&w.cross_w_at(n, cfg, prec).abs()))
            .unwrap_or_default();
        let peak = model
            .as_ref()
            .and_then(|m| m.steps.iter().find(|s| s.j == j && s.j >= m.j1));
        let valley = model.as_ref().and_then(|m| {
            if j == m.j1 {
                Some((m.start_t, m.start_m))
            } else {
                m.steps
                    .iter()
                    .find(|s| s.j + 1 == j && s.j >= m.j1)
                    .map(|s| (s.valley_t, s.valley_m))
            }
        });
        rows.push(vec![
            j.to_string(),
            dec(&w.length(cfg, prec)),
            cross,
            opt(peak.map(|s| s.peak_t)),
            opt(peak.map(|s| s.peak_m)),
            opt(valley.map(|v| v.0)),
            opt(valley.map(|v| v.1)),
            opt(rates.iter().find(|r| r.j == j).map(|r| r.rate)),
        ]);
    }
    let header = [
        "j",
        "norm_w",
        "cross",
        "peak_t",
        "peak_m",
        "valley_t",
        "valley_m",
        "rate_estimate",
    ];
    Ok(vec![
        Output {
            name: "nonergodic.csv".into(),
            bytes: csv_bytes(&header, rows)?,
        },
        Output::json("nonergodic_tree.json", &run)?,
        Output::json("nonergodic_cert.json", &cert)?,
    ])
}

fn slow(a: &SlowArgs, env: &Env) -> Result<Vec<Output>> {
    let cfg = &env.slit;
    let rate = match a.rate {
        RateArg::Log => RateFn::Log,
        RateArg::Sqrtlog => RateFn::SqrtLog,
        RateArg::Loglog => RateFn::parse("loglog")?,
        RateArg::CustomTable => {
            let p = a
                .table
                .as_ref()
                .ok_or_else(|| Error::Invalid("--table is required for custom-table".into()))?;
            RateFn::from_table_csv(&read(p)?)?
        }
    };
    rate.validate()?;
    let g = cfg.genus as i64;
    let w0: WVec = match &a.root {
        Some(r) => r.parse()?,
        None => WVec::new(1, IntVec2::new(g, -2 * g)),
    };
    let sc = SlowConfig {
        rate,
        steps: a.steps,
        eps_init: rational(&a.eps_init, "eps-init")?,
        c0: env.constants.slow_c0,
        ..SlowConfig::default()
    };
    let seq = build_slow(&w0, &sc, cfg)?;
    let clauses = verify_clauses(&seq, cfg)?;
    let cert = slow_certificate(&seq, cfg)?;
    let ns: Vec<&IntVec2> = seq.steps.iter().map(|s| &s.w.n).collect();
    let prec = decimal_prec(&ns);
    let rows = seq
        .steps
        .iter()
        .map(|s| {
            vec![
                s.j.to_string(),
                s.rule.tag().into(),
                s.t.to_string(),
                s.m.to_string(),
                s.r.to_string(),
                dec(&s.w.length(cfg, prec)),
            ]
        })
        .collect();
    let mut out = vec![
        Output {
            name: "slow.csv".into(),
            bytes: csv_bytes(&["j", "rule", "t", "m", "r", "norm_w"], rows)?,
        },
        Output::json("slow_cert.json", &cert)?,
        Output::json("slow_clauses.json", &clauses)?,
    ];
    if a.range_check {
        let (_, report) = range_wrapper(&w0, a.steps, a.range_eps, cfg)?;
        out.push(Output::json("slow_range.json", &report)?);
    }
    Ok(out)
}

fn calibrate_cmd(a: &CalibrateArgs) -> Result<Vec<Output>> {
    let plan = if a.quick {
        CalibrationPlan::quick()
    } else {
        CalibrationPlan::full()
    };
    let cal = calibrate(&plan)?;
    let rows = cal
        .records
        .iter()
        .map(|r| vec![r.preset.clone(), r.quantity.clone(), r.value.to_string()])
        .collect();
    Ok(vec![
        Output {
            name: "constants.toml".into(),
            bytes: cal.constants.to_toml_string()?.into_bytes(),
        },
        Output {
            name: "calibration.csv".into(),
            bytes: csv_bytes(&["preset", "quantity", "value"], rows)?,
        },
    ])
}

#[derive(Serialize)]
struct VerifyReport {
    certificate_sha256: String,
    kind: &'static str,
    prec: u32,
    replay_prec: u32,
    failures: Vec<String>,
    passed: bool,
}

fn verify_cmd(a: &VerifyArgs) -> Result<(Vec<Output>, Vec<String>)> {
    let text = read(&a.cert)?;
    let cert: Certificate = serde_json::from_str(&text)?;
    let failures = verify(&cert)?;
    let report = VerifyReport {
        certificate_sha256: hex::encode(Sha256::digest(text.as_bytes())),
        kind: match cert.body {
            Body::Nonergodic { .. } => "nonergodic",
            Body::Slow { .. } => "slow",
        },
        prec: cert.prec,
        replay_prec: cert.prec.saturating_mul(2),
        passed: failures.is_empty(),
        failures: failures.clone(),
    };
    Ok((vec![Output::json("verify.json", &report)?], failures))
}

fn subcommand_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Convergents(_) => "convergents",
        Cmd::Profile(_) => "profile",
        Cmd::Predict(_) => "predict",
        Cmd::Density(_) => "density",
        Cmd::Nonergodic(_) => "nonergodic",
        Cmd::Slow(_) => "slow",
        Cmd::Calibrate(_) => "calibrate",
        Cmd::Verify(_) => "verify",
    }
}

fn write_outputs(cli: &Cli, env: &Env, outputs: &[Output]) -> Result<()> {
    std::fs::create_dir_all(&cli.out)?;
    let mut entries = Vec::new();
    for o in outputs {
        std::fs::write(cli.out.join(&o.name), &o.bytes)?;
        entries.push(ManifestEntry {
            file: o.name.clone(),
            sha256: hex::encode(Sha256::digest(&o.bytes)),
        });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        subcommand: subcommand_name(&cli.cmd),
        command: &cli.cmd,
        seed: env.seed,
        config_file: cli.config.as_deref(),
        constants_file: cli.constants.as_deref(),
        slit: &env.slit,
        constants: &env.constants,
        decimal_digits: DIGITS,
        outputs: entries,
    };
    let m = Output::json("manifest.json", &manifest)?;
    std::fs::write(cli.out.join(m.name), m.bytes)?;
    Ok(())
}

/// Runs the parsed command; the second value is the list of failed checks of `verify`.
fn run(cli: &Cli) -> Result<Vec<String>> {
    let env = load_env(cli)?;
    let mut failures = Vec::new();
    let outputs = match &cli.cmd {
        Cmd::Convergents(a) => convergents(a, &env)?,
        Cmd::Profile(a) => profile(a, &env)?,
        Cmd::Predict(a) => predict(a)?,
        Cmd::Density(a) => density(a, &env)?,
        Cmd::Nonergodic(a) => nonergodic(a, &env)?,
        Cmd::Slow(a) => slow(a, &env)?,
        Cmd::Calibrate(a) => calibrate_cmd(a)?,
        Cmd::Verify(a) => {
            let (o, f) = verify_cmd(a)?;
            failures = f;
            o
        }
    };
    write_outputs(cli, &env, &outputs)?;
    Ok(failures)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            let e = Error::Verification(failures);
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
