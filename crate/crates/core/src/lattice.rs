//! Integer lattice vectors, the translated lattice of holonomy vectors, and
//! the slit configuration they live on.

use std::cmp::Ordering;
use std::fmt;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::enumerate::BoxScan;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::real::{escalate, Real};

/// Exact integer vector `(p, q)`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct IntVec2 {
    pub p: Integer,
    pub q: Integer,
}

impl IntVec2 {
    pub fn new(p: impl Into<Integer>, q: impl Into<Integer>) -> IntVec2 {
        IntVec2 {
            p: p.into(),
            q: q.into(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.p == 0 && self.q == 0
    }

    pub fn cross(&self, other: &IntVec2) -> Integer {
        Integer::from(&self.p * &other.q) - Integer::from(&self.q * &other.p)
    }

    pub fn dot(&self, other: &IntVec2) -> Integer {
        Integer::from(&self.p * &other.p) + Integer::from(&self.q * &other.q)
    }

    pub fn norm_sq(&self) -> Integer {
        self.dot(self)
    }

    pub fn gcd(&self) -> Integer {
        self.p.clone().gcd(&self.q)
    }

    pub fn is_primitive(&self) -> bool {
        self.gcd() == 1
    }

    pub fn add(&self, o: &IntVec2) -> IntVec2 {
        IntVec2 {
            p: Integer::from(&self.p + &o.p),
            q: Integer::from(&self.q + &o.q),
        }
    }

    pub fn sub(&self, o: &IntVec2) -> IntVec2 {
        IntVec2 {
            p: Integer::from(&self.p - &o.p),
            q: Integer::from(&self.q - &o.q),
        }
    }

    pub fn scale(&self, k: &Integer) -> IntVec2 {
        IntVec2 {
            p: Integer::from(&self.p * k),
            q: Integer::from(&self.q * k),
        }
    }

    pub fn scale_i64(&self, k: i64) -> IntVec2 {
        IntVec2 {
            p: Integer::from(&self.p * k),
            q: Integer::from(&self.q * k),
        }
    }

    pub fn neg(&self) -> IntVec2 {
        IntVec2 {
            p: Integer::from(-&self.p),
            q: Integer::from(-&self.q),
        }
    }

    pub fn components(&self, prec: u32) -> [Real; 2] {
        [
            Real::from_integer(&self.p, prec),
            Real::from_integer(&self.q, prec),
        ]
    }

    pub fn length(&self, prec: u32) -> Real {
        Real::from_integer(&self.norm_sq(), prec).sqrt()
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.p.to_f64(), self.q.to_f64())
    }
}

impl fmt::Debug for IntVec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}

impl fmt::Display for IntVec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

impl Serialize for IntVec2 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.p.to_string(), self.q.to_string()].serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntVec2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<IntVec2, D::Error> {
        let [p, q] = <[String; 2]>::deserialize(d)?;
        let p = p.parse::<Integer>().map_err(serde::de::Error::custom)?;
        let q = q.parse::<Integer>().map_err(serde::de::Error::custom)?;
        Ok(IntVec2 { p, q })
    }
}

/// Serde adapter writing a list of big integers as decimal strings.
pub mod serde_ints {
    use rug::Integer;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Integer], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Integer>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| t.parse::<Integer>().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter writing one big integer as a decimal string.
pub mod serde_int {
    use rug::Integer;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Integer, s: S) -> Result<S::Ok, S::Error> {
        v.to_string().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Integer, D::Error> {
        String::deserialize(d)?
            .parse::<Integer>()
            .map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing a rational as `"p/q"` (or `"p"`); also reads decimals.
pub mod serde_rat {
    use rug::Rational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
        v.to_string().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let e = crate::expr::Expr::deserialize(d)?;
        e.as_rational()
            .ok_or_else(|| serde::de::Error::custom("expected a rational number"))
    }
}

/// `a × b = a.p·b.q − a.q·b.p`.
pub fn cross_int(a: &IntVec2, b: &IntVec2) -> Integer {
    a.cross(b)
}

/// Split `v = d·u` with `d = gcd(|p|,|q|)` and `u` primitive.
pub fn reduce_primitive(v: &IntVec2) -> Result<(Integer, IntVec2)> {
    if v.is_zero() {
        return Err(Error::DegenerateVector);
    }
    let d = v.gcd();
    let u = IntVec2 {
        p: Integer::from(&v.p / &d),
        q: Integer::from(&v.q / &d),
    };
    Ok((d, u))
}

/// Which saddle-connection vectors to consider.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VSet {
    /// Primitive integer vectors only.
    Z,
    /// The translated lattice `±(x0,y0) + Z²` only.
    W,
    /// Both.
    V,
}

impl VSet {
    pub fn has_z(self) -> bool {
        matches!(self, VSet::Z | VSet::V)
    }

    pub fn has_w(self) -> bool {
        matches!(self, VSet::W | VSet::V)
    }
}

/// Element `s·(x0,y0) + n` of the translated lattice.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WVec {
    pub sign: i8,
    pub n: IntVec2,
}

impl WVec {
    pub fn new(sign: i8, n: IntVec2) -> WVec {
        assert!(sign == 1 || sign == -1, "sign must be +1 or -1");
        WVec { sign, n }
    }

    pub fn neg(&self) -> WVec {
        WVec {
            sign: -self.sign,
            n: self.n.neg(),
        }
    }

    /// `w + k·v` for an integer vector.
    pub fn add_int(&self, v: &IntVec2) -> WVec {
        WVec {
            sign: self.sign,
            n: self.n.add(v),
        }
    }

    pub fn components(&self, cfg: &SlitConfig, prec: u32) -> [Real; 2] {
        let (x0, y0) = cfg.holonomy(prec);
        let s = self.sign as i64;
        [
            x0.mul_i64(s).add_int(&self.n.p),
            y0.mul_i64(s).add_int(&self.n.q),
        ]
    }

    pub fn length(&self, cfg: &SlitConfig, prec: u32) -> Real {
        let [x, y] = self.components(cfg, prec);
        (x.square() + y.square()).sqrt()
    }

    pub fn length_sq(&self, cfg: &SlitConfig, prec: u32) -> Real {
        let [x, y] = self.components(cfg, prec);
        x.square() + y.square()
    }

    /// `w × v` evaluated as `s·(x0·q − y0·p) + n × v`.
    pub fn cross_int_at(&self, v: &IntVec2, cfg: &SlitConfig, prec: u32) -> Real {
        let (x0, y0) = cfg.holonomy(prec);
        let inner = x0.mul_int(&v.q) - y0.mul_int(&v.p);
        inner.mul_i64(self.sign as i64).add_int(&self.n.cross(v))
    }

    pub fn dot_int_at(&self, v: &IntVec2, cfg: &SlitConfig, prec: u32) -> Real {
        let (x0, y0) = cfg.holonomy(prec);
        let inner = x0.mul_int(&v.p) + y0.mul_int(&v.q);
        inner.mul_i64(self.sign as i64).add_int(&self.n.dot(v))
    }

    /// `w × w'` with the irrational parts cancelled symbolically where possible.
    pub fn cross_w_at(&self, other: &WVec, cfg: &SlitConfig, prec: u32) -> Real {
        // (s x + n) × (s' x + n') = s x×n' − s' x×n + n×n'
        let (x0, y0) = cfg.holonomy(prec);
        let hx = |n: &IntVec2| x0.mul_int(&n.q) - y0.mul_int(&n.p);
        let nn = Real::from_integer(&self.n.cross(&other.n), prec);
        if self.sign == other.sign {
            let diff = other.n.sub(&self.n);
            hx(&diff).mul_i64(self.sign as i64) + nn
        } else {
            let sum = other.n.add(&self.n);
            hx(&sum).mul_i64(self.sign as i64) + nn
        }
    }

    /// `(w' − w)/g` when `w'` lies in `w + gZ²`.
    pub fn step_to(&self, other: &WVec, g: u32) -> Option<IntVec2> {
        if self.sign != other.sign {
            return None;
        }
        let d = other.n.sub(&self.n);
        let gi = Integer::from(g);
        if d.p.is_divisible(&gi) && d.q.is_divisible(&gi) {
            Some(IntVec2 {
                p: d.p / &gi,
                q: d.q / &gi,
            })
        } else {
            None
        }
    }

    pub fn direction(&self, cfg: &SlitConfig) -> Direction {
        let s = Expr::int(self.sign as i64);
        let x = Expr::Add(
            Box::new(Expr::Mul(Box::new(s.clone()), Box::new(cfg.x0.clone()))),
            Box::new(Expr::rational(Rational::from(&self.n.p))),
        );
        let y = Expr::Add(
            Box::new(Expr::Mul(Box::new(s), Box::new(cfg.y0.clone()))),
            Box::new(Expr::rational(Rational::from(&self.n.q))),
        );
        Direction { x, y }
    }
}

impl fmt::Debug for WVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign > 0 { '+' } else { '-' };
        write!(f, "{s}h+{:?}", self.n)
    }
}

impl fmt::Display for WVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Parses the display form `±h+(p,q)`; spaces are ignored.
impl std::str::FromStr for WVec {
    type Err = Error;

    fn from_str(s: &str) -> Result<WVec> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Invalid(format!("expected ±h+(p,q), got {s:?}"));
        let (sign, rest) = match compact.split_at_checked(1).ok_or_else(bad)? {
            ("+", r) => (1i8, r),
            ("-", r) => (-1i8, r),
            _ => return Err(bad()),
        };
        let inner = rest
            .strip_prefix("h+(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (p, q) = inner.split_once(',').ok_or_else(bad)?;
        let p = p.parse::<Integer>().map_err(|_| bad())?;
        let q = q.parse::<Integer>().map_err(|_| bad())?;
        Ok(WVec::new(sign, IntVec2 { p, q }))
    }
}

/// A saddle-connection vector: primitive lattice vector or translated-lattice vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum SVec {
    Z(IntVec2),
    W(WVec),
}

impl SVec {
    pub fn components(&self, cfg: &SlitConfig, prec: u32) -> [Real; 2] {
        match self {
            SVec::Z(v) => v.components(prec),
            SVec::W(w) => w.components(cfg, prec),
        }
    }

    pub fn neg(&self) -> SVec {
        match self {
            SVec::Z(v) => SVec::Z(v.neg()),
            SVec::W(w) => SVec::W(w.neg()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SVec::Z(_) => "Z",
            SVec::W(_) => "W",
        }
    }

    /// Integer offset (for W vectors, the `n` part).
    pub fn offset(&self) -> &IntVec2 {
        match self {
            SVec::Z(v) => v,
            SVec::W(w) => &w.n,
        }
    }
}

/// A direction in the plane, kept as a symbolic (not necessarily unit) vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub x: Expr,
    pub y: Expr,
}

impl Direction {
    pub fn new(x: Expr, y: Expr) -> Direction {
        Direction { x, y }
    }

    pub fn from_angle(angle: Expr) -> Direction {
        Direction {
            x: Expr::Call(crate::expr::Func::Cos, Box::new(angle.clone())),
            y: Expr::Call(crate::expr::Func::Sin, Box::new(angle)),
        }
    }

    pub fn of_int(v: &IntVec2) -> Direction {
        Direction {
            x: Expr::rational(Rational::from(&v.p)),
            y: Expr::rational(Rational::from(&v.q)),
        }
    }

    pub fn raw(&self, prec: u32) -> [Real; 2] {
        [self.x.eval(prec), self.y.eval(prec)]
    }

    /// Unit vector enclosure.
    pub fn unit(&self, prec: u32) -> [Real; 2] {
        let [x, y] = self.raw(prec);
        let n = (x.square() + y.square()).sqrt();
        [&x / &n, &y / &n]
    }

    /// Both components when they are exact rationals.
    pub fn rational(&self) -> Option<(Rational, Rational)> {
        Some((self.x.as_rational()?, self.y.as_rational()?))
    }

    pub fn angle_f64(&self) -> f64 {
        let [x, y] = self.raw(128);
        y.mid().atan2(x.mid())
    }
}

pub fn dot2(a: &[Real; 2], b: &[Real; 2]) -> Real {
    &a[0] * &b[0] + &a[1] * &b[1]
}

pub fn cross2(a: &[Real; 2], b: &[Real; 2]) -> Real {
    &a[0] * &b[1] - &a[1] * &b[0]
}

pub fn norm2(a: &[Real; 2]) -> Real {
    (a[0].square() + a[1].square()).sqrt()
}

type HolonomyCache = Arc<Mutex<Vec<(u32, Real, Real)>>>;

/// Slit data: genus, holonomy `(x0, y0)`, Diophantine constants and precision limits.
#[derive(Clone, Serialize, Deserialize)]
pub struct SlitConfig {
    pub genus: u32,
    pub x0: Expr,
    pub y0: Expr,
    pub c0: f64,
    pub d0: f64,
    pub precision_bits: u32,
    pub dio_check_bound: u64,
    /// Largest number of lattice candidates a full enumeration may visit.
    #[serde(default = "default_enum_budget")]
    pub enum_budget: u64,
    #[serde(skip)]
    cache: HolonomyCache,
}

fn default_enum_budget() -> u64 {
    20_000_000
}

impl fmt::Debug for SlitConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlitConfig")
            .field("genus", &self.genus)
            .field("x0", &self.x0.to_string())
            .field("y0", &self.y0.to_string())
            .field("c0", &self.c0)
            .field("d0", &self.d0)
            .field("precision_bits", &self.precision_bits)
            .field("dio_check_bound", &self.dio_check_bound)
            .finish()
    }
}

/// Named holonomy presets: `(name, x0, y0)`.
pub const PRESETS: &[(&str, &str, &str)] = &[
    ("sqrt2m1_sqrt3m1", "sqrt(2)-1", "sqrt(3)-1"),
    ("sqrt5m2_sqrt2m1", "sqrt(5)-2", "sqrt(2)-1"),
    ("sqrt3m1_sqrt7m2", "sqrt(3)-1", "sqrt(7)-2"),
    ("golden_sqrt6m2", "(sqrt(5)-1)/2", "sqrt(6)-2"),
    ("sqrt11m3_sqrt5m2", "sqrt(11)-3", "sqrt(5)-2"),
];

pub fn preset(name: &str) -> Option<(Expr, Expr)> {
    PRESETS
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, x, y)| {
            (
                x.parse().expect("preset parses"),
                y.parse().expect("preset parses"),
            )
        })
}

#[derive(Deserialize)]
struct RawConfig {
    genus: Option<u32>,
    preset: Option<String>,
    x0: Option<Expr>,
    y0: Option<Expr>,
    c0: Option<f64>,
    d0: Option<f64>,
    precision_bits: Option<u32>,
    dio_check_bound: Option<u64>,
    enum_budget: Option<u64>,
}

impl Default for SlitConfig {
    fn default() -> SlitConfig {
        SlitConfig::from_preset("sqrt2m1_sqrt3m1", 2).expect("default preset")
    }
}

impl SlitConfig {
    pub fn new(genus: u32, x0: Expr, y0: Expr) -> SlitConfig {
        SlitConfig {
            genus,
            x0,
            y0,
            c0: crate::constants::DEFAULT_DIO_C0,
            d0: 3.0,
            precision_bits: 1 << 16,
            dio_check_bound: 10_000,
            enum_budget: default_enum_budget(),
            cache: Arc::default(),
        }
    }

    pub fn from_preset(name: &str, genus: u32) -> Result<SlitConfig> {
        let (x0, y0) = preset(name)
            .ok_or_else(|| Error::Config(format!("unknown holonomy preset '{name}'")))?;
        let cfg = SlitConfig::new(genus, x0, y0);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<SlitConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = match (&raw.preset, &raw.x0, &raw.y0) {
            (Some(p), None, None) => SlitConfig::from_preset(p, raw.genus.unwrap_or(2))?,
            (None, Some(x), Some(y)) => {
                SlitConfig::new(raw.genus.unwrap_or(2), x.clone(), y.clone())
            }
            (None, None, None) => SlitConfig::default(),
            _ => {
                return Err(Error::Config(
                    "give either `preset` or both `x0` and `y0`".into(),
                ))
            }
        };
        if let Some(g) = raw.genus {
            cfg.genus = g;
        }
        if let Some(v) = raw.c0 {
            cfg.c0 = v;
        }
        if let Some(v) = raw.d0 {
            cfg.d0 = v;
        }
        if let Some(v) = raw.precision_bits {
            cfg.precision_bits = v;
        }
        if let Some(v) = raw.dio_check_bound {
            cfg.dio_check_bound = v;
        }
        if let Some(v) = raw.enum_budget {
            cfg.enum_budget = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.genus < 2 {
            return Err(Error::Config(format!(
                "genus must be at least 2, got {}",
                self.genus
            )));
        }
        if !(self.c0 > 0.0) || !(self.d0 > 0.0) {
            return Err(Error::Config("c0 and d0 must be positive".into()));
        }
        if self.precision_bits < 64 {
            return Err(Error::Config("precision_bits must be at least 64".into()));
        }
        for (name, e) in [("x0", &self.x0), ("y0", &self.y0)] {
            let v = e.eval(128);
            let inside =
                v.gt(&Real::zero(128)).unwrap_or(false) && v.lt(&Real::one(128)).unwrap_or(false);
            if !inside {
                return Err(Error::Config(format!("{name} = {e} must lie in (0, 1)")));
            }
        }
        Ok(())
    }

    /// Enclosures of `(x0, y0)` at `prec` bits.
    pub fn holonomy(&self, prec: u32) -> (Real, Real) {
        if let Ok(cache) = self.cache.lock() {
            if let Some((_, x, y)) = cache.iter().find(|(p, _, _)| *p == prec) {
                return (x.clone(), y.clone());
            }
        }
        let x = self.x0.eval(prec);
        let y = self.y0.eval(prec);
        if let Ok(mut cache) = self.cache.lock() {
            if cache.len() > 16 {
                cache.remove(0);
            }
            cache.push((prec, x.clone(), y.clone()));
        }
        (x, y)
    }

    pub fn holonomy_sq(&self) -> f64 {
        let (x, y) = self.holonomy(64);
        x.mid().hypot(y.mid())
    }

    /// Run `f` under precision escalation capped at `precision_bits`.
    pub fn escalate<T>(
        &self,
        op: &'static str,
        start: u32,
        f: impl FnMut(u32) -> Result<T>,
    ) -> Result<T> {
        escalate(op, start, self.precision_bits, f)
    }

    pub fn with_precision(mut self, bits: u32) -> SlitConfig {
        self.precision_bits = bits;
        self
    }
}

/// `w × v` with certified error; never exactly zero for irrational holonomy.
pub fn cross_w(w: &WVec, v: &IntVec2, cfg: &SlitConfig) -> Result<Real> {
    let start = 64 + bits_hint(&w.n) + bits_hint(v);
    cfg.escalate("cross_w", start, |prec| {
        let r = w.cross_int_at(v, cfg, prec);
        r.sign()?;
        Ok(r)
    })
}

pub(crate) fn bits_hint(v: &IntVec2) -> u32 {
    v.p.significant_bits().max(v.q.significant_bits())
}

/// Result of the finite Diophantine scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DioReport {
    pub bound: u64,
    /// Certified lower bound on `min max(|m|,|n|)^d0 · ‖m x0 + n y0‖` over the range.
    pub observed_min: f64,
    pub argmin: (i64, i64),
    pub c0: f64,
    pub d0: f64,
    pub passed: bool,
}

/// Scan `0 < max(|m|,|n|) ≤ bound` for the Diophantine inequality.
///
/// Works in 64-bit fixed point: `x0·2^64` is truncated once, so `m·X` is off
/// by at most `|m|` units in the last place, and the reported minimum is a
/// rigorous lower bound after subtracting `|m|+|n|+1` units.
pub fn dio_check(cfg: &SlitConfig) -> Result<DioReport> {
    let n_max = cfg.dio_check_bound as i64;
    if n_max <= 0 {
        return Err(Error::Config("dio_check_bound must be positive".into()));
    }
    if n_max > (1 << 30) {
        return Err(Error::BudgetExceeded {
            op: "dio_check",
            detail: format!("bound {n_max} too large"),
        });
    }
    let scale = Integer::from(1) << 64;
    let (x0, y0) = cfg.holonomy(192);
    let to_fixed = |r: &Real| -> u64 {
        let scaled = Real::from_integer(&scale, 192) * r;
        scaled
            .lo()
            .to_integer_round(rug::float::Round::Down)
            .expect("finite")
            .0
            .to_u64_wrapping()
    };
    let xf = to_fixed(&x0);
    let yf = to_fixed(&y0);
    let pow: Vec<f64> = (0..=n_max).map(|k| (k as f64).powf(cfg.d0)).collect();
    let unit = 2f64.powi(-64);
    let best = (0..=n_max)
        .into_par_iter()
        .map(|m| {
            let mut best = (f64::INFINITY, (0i64, 0i64));
            let n_lo = if m == 0 { 1 } else { -n_max };
            let mx = xf.wrapping_mul(m as u64);
            for n in n_lo..=n_max {
                let s = mx.wrapping_add(yf.wrapping_mul(n as u64));
                let d = s.min(s.wrapping_neg());
                let err = (m.unsigned_abs() + n.unsigned_abs() + 1) as f64;
                let lower = ((d as f64) - err).max(0.0) * unit;
                let mm = m.abs().max(n.abs()) as usize;
                let val = pow[mm] * lower;
                if val < best.0 {
                    best = (val, (m, n));
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, (0, 0)),
            |a, b| if b.0 < a.0 { b } else { a },
        );
    Ok(DioReport {
        bound: cfg.dio_check_bound,
        observed_min: best.0,
        argmin: best.1,
        c0: cfg.c0,
        d0: cfg.d0,
        passed: best.0 > cfg.c0,
    })
}

/// Vectors of the selected set in `{ |v×θ| < eps, b_lo < |v| ≤ b_hi, v·θ > 0 }`,
/// sorted by angle then length.
pub fn enumerate_in_strip(
    set: VSet,
    theta: &Direction,
    eps: &Rational,
    b_lo: &Rational,
    b_hi: &Rational,
    cfg: &SlitConfig,
) -> Result<Vec<SVec>> {
    if !(*b_lo > 0 && b_lo < b_hi && *eps > 0) {
        return Err(Error::Invalid("need 0 < b_lo < b_hi and eps > 0".into()));
    }
    let area = (b_hi.to_f64() * eps.to_f64() * 2.0) + 4.0 * b_hi.to_f64() + 16.0;
    if area > cfg.enum_budget as f64 {
        return Err(Error::BudgetExceeded {
            op: "enumerate_in_strip",
            detail: format!("strip area {area:.3e} exceeds budget {}", cfg.enum_budget),
        });
    }
    let start = 96u32.saturating_add(b_hi.numer().significant_bits().saturating_mul(2));
    let mut out = cfg.escalate("enumerate_in_strip", start, |prec| {
        strip_at(set, theta, eps, b_lo, b_hi, cfg, prec)
    })?;
    sort_by_angle(&mut out, cfg);
    Ok(out)
}

fn strip_at(
    set: VSet,
    theta: &Direction,
    eps: &Rational,
    b_lo: &Rational,
    b_hi: &Rational,
    cfg: &SlitConfig,
    prec: u32,
) -> Result<Vec<SVec>> {
    let u = theta.unit(prec);
    let e = Real::from_rational(eps, prec);
    let lo = Real::from_rational(b_lo, prec);
    let hi = Real::from_rational(b_hi, prec);
    let lo2 = lo.square();
    let hi2 = hi.square();
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
        // a = v·θ ∈ (0, b_hi], c = v×θ ∈ (−eps, eps)
        let scan = BoxScan::new(&u, &shift, (&zero, &hi), (&(-&e), &e), prec)?;
        let mut err = None;
        scan.for_each(|n| {
            let v = [
                &shift[0] + &Real::from_integer(&n.p, prec),
                &shift[1] + &Real::from_integer(&n.q, prec),
            ];
            let keep = (|| -> Result<bool> {
                if sign.is_none() && !n.is_primitive() {
                    return Ok(false);
                }
                let c = cross2(&v, &u).abs();
                if !c.lt(&e)? {
                    return Ok(false);
                }
                if !dot2(&v, &u).is_positive()? {
                    return Ok(false);
                }
                let l2 = v[0].square() + v[1].square();
                Ok(l2.gt(&lo2)? && l2.le(&hi2)?)
            })();
            match keep {
                Ok(true) => out.push(match sign {
                    None => SVec::Z(n),
                    Some(s) => SVec::W(WVec::new(s, n)),
                }),
                Ok(false) => {}
                Err(e) => {
                    err = Some(e);
                    return std::ops::ControlFlow::Break(());
                }
            }
            std::ops::ControlFlow::Continue(())
        })?;
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(out)
}

/// Canonical order: counterclockwise angle in `(−π, π]`, then length.
pub fn sort_by_angle(v: &mut [SVec], cfg: &SlitConfig) {
    let key = |s: &SVec| {
        let [x, y] = s.components(cfg, 128);
        (y.mid().atan2(x.mid()), x.mid().hypot(y.mid()))
    };
    v.sort_by(|a, b| {
        let (ta, la) = key(a);
        let (tb, lb) = key(b);
        ta.partial_cmp(&tb)
            .unwrap_or(Ordering::Equal)
            .then(la.partial_cmp(&lb).unwrap_or(Ordering::Equal))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_int_basics() {
        assert_eq!(cross_int(&IntVec2::new(1, 0), &IntVec2::new(0, 1)), 1);
        assert_eq!(cross_int(&IntVec2::new(2, 1), &IntVec2::new(3, 2)), 1);
    }

    #[test]
    fn reduce_primitive_examples() {
        let (d, u) = reduce_primitive(&IntVec2::new(4, 6)).unwrap();
        assert_eq!((d, u), (Integer::from(2), IntVec2::new(2, 3)));
        let (d, u) = reduce_primitive(&IntVec2::new(0, 5)).unwrap();
        assert_eq!((d, u), (Integer::from(5), IntVec2::new(0, 1)));
        let (d, u) = reduce_primitive(&IntVec2::new(3, -7)).unwrap();
        assert_eq!((d, u), (Integer::from(1), IntVec2::new(3, -7)));
        assert!(matches!(
            reduce_primitive(&IntVec2::new(0, 0)),
            Err(Error::DegenerateVector)
        ));
    }

    #[test]
    fn cross_w_reduces_to_coordinates() {
        let cfg = SlitConfig::default();
        let w = WVec::new(1, IntVec2::new(0, 0));
        let r = cross_w(&w, &IntVec2::new(0, 1), &cfg).unwrap();
        assert!((r.mid() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        let w = WVec::new(1, IntVec2::new(1, 0));
        let r = cross_w(&w, &IntVec2::new(1, 0), &cfg).unwrap();
        assert!((r.mid() + (3f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn cross_between_w_vectors_matches_components() {
        let cfg = SlitConfig::default();
        let a = WVec::new(1, IntVec2::new(3, -2));
        let b = WVec::new(-1, IntVec2::new(7, 5));
        let direct = cross2(&a.components(&cfg, 200), &b.components(&cfg, 200));
        let sym = a.cross_w_at(&b, &cfg, 200);
        assert!(direct.overlaps(&sym));
        let c = WVec::new(1, IntVec2::new(-4, 9));
        assert!(cross2(&a.components(&cfg, 200), &c.components(&cfg, 200))
            .overlaps(&a.cross_w_at(&c, &cfg, 200)));
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(SlitConfig::from_toml_str("genus = 1").is_err());
        assert!(SlitConfig::from_toml_str("x0 = \"1.5\"\ny0 = \"0.2\"").is_err());
        assert!(SlitConfig::from_toml_str("preset = \"nope\"").is_err());
        let cfg = SlitConfig::from_toml_str(
            "preset = \"sqrt2m1_sqrt3m1\"\ngenus = 3\nprecision_bits = 512",
        )
        .unwrap();
        assert_eq!(cfg.genus, 3);
        assert_eq!(cfg.precision_bits, 512);
    }

    #[test]
    fn step_to_requires_same_class() {
        let a = WVec::new(1, IntVec2::new(1, 1));
        let b = WVec::new(1, IntVec2::new(5, 9));
        assert_eq!(a.step_to(&b, 2), Some(IntVec2::new(2, 4)));
        assert_eq!(a.step_to(&b, 3), None);
        assert_eq!(a.step_to(&b.neg(), 2), None);
    }
}
