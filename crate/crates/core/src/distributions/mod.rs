//! Job-size laws and the distributional quantities the analysis consumes.
//!
//! Every law exposes partial moments `E[X^k; X in R]` and partial transforms
//! `E[exp(-tX); X in R]` over arbitrary ranges `R`. Work variables built by
//! the engine are piecewise-affine functions of a job's size, so these two
//! primitives are enough to produce their moments and transforms exactly.

mod work_law;

pub use work_law::{ClippedWork, WorkComponent, WorkLaw, WorkSegment};

use crate::error::{Result, SoapError};
use crate::quad::{self, Tolerance};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub(crate) const MASS_TOL: f64 = 1e-12;

/// A job-size law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SizeDistribution {
    Deterministic {
        value: f64,
    },
    /// Atoms as `(value, probability)` with strictly increasing values.
    #[serde(rename = "finite")]
    FiniteDiscrete {
        atoms: Vec<(f64, f64)>,
    },
    Exponential {
        rate: f64,
    },
    /// Branches as `(probability, rate)`.
    Hyperexponential {
        branches: Vec<(f64, f64)>,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Tail `P(X > t) = (1 + t/beta)^(-alpha)`.
    Pareto {
        alpha: f64,
        beta: f64,
    },
    /// Law of `min(base, cap)`: the base below `cap` plus an atom at `cap`.
    Capped {
        base: Box<SizeDistribution>,
        cap: f64,
    },
}

/// An interval of sizes with explicit endpoint inclusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeRange {
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: f64,
    pub hi_closed: bool,
}

impl SizeRange {
    pub fn all() -> Self {
        SizeRange {
            lo: 0.0,
            lo_closed: true,
            hi: f64::INFINITY,
            hi_closed: false,
        }
    }

    /// `[lo, hi)`
    pub fn half_open(lo: f64, hi: f64) -> Self {
        SizeRange {
            lo,
            lo_closed: true,
            hi,
            hi_closed: false,
        }
    }

    /// `[lo, hi]`
    pub fn closed(lo: f64, hi: f64) -> Self {
        SizeRange {
            lo,
            lo_closed: true,
            hi,
            hi_closed: hi.is_finite(),
        }
    }

    /// `(lo, hi)`
    pub fn open(lo: f64, hi: f64) -> Self {
        SizeRange {
            lo,
            lo_closed: false,
            hi,
            hi_closed: false,
        }
    }

    pub fn point(x: f64) -> Self {
        SizeRange::closed(x, x)
    }

    /// `[lo, inf)`
    pub fn at_least(lo: f64) -> Self {
        SizeRange::half_open(lo, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo || (self.hi == self.lo && !(self.lo_closed && self.hi_closed))
    }

    pub fn intersect(&self, other: &SizeRange) -> SizeRange {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        SizeRange {
            lo,
            lo_closed,
            hi,
            hi_closed,
        }
    }
}

fn infinite(order: u32, d: &SizeDistribution) -> SoapError {
    SoapError::InfiniteMoment {
        order,
        law: d.label(),
    }
}

/// `int z^p dz` from `z1` to `z2`, with `z2` possibly infinite.
fn power_integral(p: f64, z1: f64, z2: f64) -> Option<f64> {
    if (p + 1.0).abs() < 1e-15 {
        if z2.is_infinite() {
            return None;
        }
        return Some((z2 / z1).ln());
    }
    let q = p + 1.0;
    if z2.is_infinite() {
        if q >= 0.0 {
            return None;
        }
        return Some(-z1.powf(q) / q);
    }
    Some((z2.powf(q) - z1.powf(q)) / q)
}

impl SizeDistribution {
    pub fn deterministic(value: f64) -> Result<Self> {
        let d = SizeDistribution::Deterministic { value };
        d.validate()?;
        Ok(d)
    }

    pub fn finite(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let d = SizeDistribution::FiniteDiscrete { atoms };
        d.validate()?;
        Ok(d)
    }

    /// Two equally likely sizes.
    pub fn coin_flip(a: f64, b: f64) -> Result<Self> {
        Self::finite(vec![(a, 0.5), (b, 0.5)])
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        let d = SizeDistribution::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn hyperexponential(branches: Vec<(f64, f64)>) -> Result<Self> {
        let d = SizeDistribution::Hyperexponential { branches };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = SizeDistribution::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn pareto(alpha: f64, beta: f64) -> Result<Self> {
        let d = SizeDistribution::Pareto { alpha, beta };
        d.validate()?;
        Ok(d)
    }

    pub fn label(&self) -> String {
        match self {
            SizeDistribution::Deterministic { value } => format!("Deterministic({value})"),
            SizeDistribution::FiniteDiscrete { atoms } => format!("Finite({} atoms)", atoms.len()),
            SizeDistribution::Exponential { rate } => format!("Exponential({rate})"),
            SizeDistribution::Hyperexponential { branches } => {
                format!("Hyperexponential({} branches)", branches.len())
            }
            SizeDistribution::Uniform { lo, hi } => format!("Uniform({lo}, {hi})"),
            SizeDistribution::Pareto { alpha, beta } => format!("Pareto({alpha}, {beta})"),
            SizeDistribution::Capped { base, cap } => format!("min({}, {cap})", base.label()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SoapError::InvalidDistribution(m));
        match self {
            SizeDistribution::Deterministic { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return bad(format!("deterministic size {value} must be finite and >= 0"));
                }
            }
            SizeDistribution::FiniteDiscrete { atoms } => {
                if atoms.is_empty() {
                    return bad("finite law needs at least one atom".into());
                }
                let mut total = 0.0;
                for (i, &(v, p)) in atoms.iter().enumerate() {
                    if !(v.is_finite() && v >= 0.0) {
                        return bad(format!("atom value {v} must be finite and >= 0"));
                    }
                    if !(p.is_finite() && p >= 0.0) {
                        return bad(format!("atom probability {p} must be in [0, 1]"));
                    }
                    if i > 0 && v <= atoms[i - 1].0 {
                        return bad("atom values must be strictly increasing".into());
                    }
                    total += p;
                }
                if (total - 1.0).abs() > MASS_TOL {
                    return bad(format!("atom probabilities sum to {total}"));
                }
            }
            SizeDistribution::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("exponential rate {rate} must be positive"));
                }
            }
            SizeDistribution::Hyperexponential { branches } => {
                if branches.is_empty() {
                    return bad("hyperexponential needs at least one branch".into());
                }
                let mut total = 0.0;
                for &(p, r) in branches {
                    if !(p.is_finite() && p >= 0.0) || !(r.is_finite() && r > 0.0) {
                        return bad(format!("bad hyperexponential branch ({p}, {r})"));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > MASS_TOL {
                    return bad(format!("branch probabilities sum to {total}"));
                }
            }
            SizeDistribution::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && hi > lo) {
                    return bad(format!("uniform bounds [{lo}, {hi}] invalid"));
                }
            }
            SizeDistribution::Pareto { alpha, beta } => {
                if !(alpha.is_finite() && *alpha > 1.0) {
                    return bad(format!("pareto shape {alpha} must exceed 1"));
                }
                if !(beta.is_finite() && *beta > 0.0) {
                    return bad(format!("pareto scale {beta} must be positive"));
                }
            }
            SizeDistribution::Capped { base, cap } => {
                base.validate()?;
                if !(*cap >= 0.0) || cap.is_nan() {
                    return bad(format!("cap {cap} must be >= 0"));
                }
            }
        }
        Ok(())
    }

    /// `P(X > t)`.
    pub fn tail(&self, t: f64) -> f64 {
        match self {
            SizeDistribution::Deterministic { value } => {
                if *value > t {
                    1.0
                } else {
                    0.0
                }
            }
            SizeDistribution::FiniteDiscrete { atoms } => {
                atoms.iter().filter(|a| a.0 > t).map(|a| a.1).sum()
            }
            SizeDistribution::Exponential { rate } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-rate * t).exp()
                }
            }
            SizeDistribution::Hyperexponential { branches } => {
                if t <= 0.0 {
                    1.0
                } else {
                    branches.iter().map(|&(p, r)| p * (-r * t).exp()).sum()
                }
            }
            SizeDistribution::Uniform { lo, hi } => {
                if t <= *lo {
                    1.0
                } else if t >= *hi {
                    0.0
                } else {
                    (hi - t) / (hi - lo)
                }
            }
            SizeDistribution::Pareto { alpha, beta } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (1.0 + t / beta).powf(-alpha)
                }
            }
            SizeDistribution::Capped { base, cap } => {
                if t >= *cap {
                    0.0
                } else {
                    base.tail(t)
                }
            }
        }
    }

    /// `P(X >= t)`.
    pub fn tail_incl(&self, t: f64) -> f64 {
        self.tail(t) + self.mass_at(t)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.tail(t)
    }

    /// Probability of the point `t` (nonzero only at atoms).
    pub fn mass_at(&self, t: f64) -> f64 {
        match self {
            SizeDistribution::Deterministic { value } => {
                if *value == t {
                    1.0
                } else {
                    0.0
                }
            }
            SizeDistribution::FiniteDiscrete { atoms } => {
                atoms.iter().filter(|a| a.0 == t).map(|a| a.1).sum()
            }
            SizeDistribution::Capped { base, cap } => {
                if t == *cap {
                    base.tail_incl(t)
                } else if t < *cap {
                    base.mass_at(t)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    /// Point masses `(value, probability)` in increasing order.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            SizeDistribution::Deterministic { value } => vec![(*value, 1.0)],
            SizeDistribution::FiniteDiscrete { atoms } => atoms.clone(),
            SizeDistribution::Capped { base, cap } => {
                let mut out: Vec<(f64, f64)> =
                    base.atoms().into_iter().filter(|a| a.0 < *cap).collect();
                let top = base.tail_incl(*cap);
                if top > 0.0 {
                    out.push((*cap, top));
                }
                out
            }
            _ => Vec::new(),
        }
    }

    /// Total probability of the absolutely continuous part.
    pub fn continuous_mass(&self) -> f64 {
        match self {
            SizeDistribution::Deterministic { .. } | SizeDistribution::FiniteDiscrete { .. } => 0.0,
            SizeDistribution::Capped { base, cap } => base.continuous_mass() - base.continuous_tail(*cap),
            _ => 1.0,
        }
    }

    fn continuous_tail(&self, t: f64) -> f64 {
        match self {
            SizeDistribution::Deterministic { .. } | SizeDistribution::FiniteDiscrete { .. } => 0.0,
            SizeDistribution::Capped { base, cap } => {
                if t >= *cap {
                    0.0
                } else {
                    base.continuous_tail(t) - base.continuous_tail(*cap)
                }
            }
            _ => self.tail(t),
        }
    }

    /// Density of the absolutely continuous part.
    pub fn density(&self, x: f64) -> f64 {
        match self {
            SizeDistribution::Deterministic { .. } | SizeDistribution::FiniteDiscrete { .. } => 0.0,
            SizeDistribution::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            SizeDistribution::Hyperexponential { branches } => {
                if x < 0.0 {
                    0.0
                } else {
                    branches.iter().map(|&(p, r)| p * r * (-r * x).exp()).sum()
                }
            }
            SizeDistribution::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            SizeDistribution::Pareto { alpha, beta } => {
                if x < 0.0 {
                    0.0
                } else {
                    alpha / beta * (1.0 + x / beta).powf(-alpha - 1.0)
                }
            }
            SizeDistribution::Capped { base, cap } => {
                if x < *cap {
                    base.density(x)
                } else {
                    0.0
                }
            }
        }
    }

    /// Points where the continuous density is not smooth, plus support ends.
    pub fn smooth_breaks(&self) -> Vec<f64> {
        match self {
            SizeDistribution::Uniform { lo, hi } => vec![*lo, *hi],
            SizeDistribution::Capped { base, cap } => {
                let mut b: Vec<f64> = base.smooth_breaks().into_iter().filter(|v| v < cap).collect();
                b.push(*cap);
                b
            }
            SizeDistribution::Deterministic { .. } | SizeDistribution::FiniteDiscrete { .. } => {
                Vec::new()
            }
            _ => vec![0.0],
        }
    }

    pub fn support_min(&self) -> f64 {
        match self {
            SizeDistribution::Deterministic { value } => *value,
            SizeDistribution::FiniteDiscrete { atoms } => atoms
                .iter()
                .find(|a| a.1 > 0.0)
                .map(|a| a.0)
                .unwrap_or(0.0),
            SizeDistribution::Uniform { lo, .. } => *lo,
            SizeDistribution::Capped { base, cap } => base.support_min().min(*cap),
            _ => 0.0,
        }
    }

    /// Supremum of the support (`inf` for unbounded laws).
    pub fn support_max(&self) -> f64 {
        match self {
            SizeDistribution::Deterministic { value } => *value,
            SizeDistribution::FiniteDiscrete { atoms } => atoms
                .iter()
                .rev()
                .find(|a| a.1 > 0.0)
                .map(|a| a.0)
                .unwrap_or(0.0),
            SizeDistribution::Uniform { hi, .. } => *hi,
            SizeDistribution::Capped { base, cap } => base.support_max().min(*cap),
            _ => f64::INFINITY,
        }
    }

    /// Smallest `t` with `P(X <= t) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self {
            SizeDistribution::Deterministic { value } => *value,
            SizeDistribution::FiniteDiscrete { atoms } => {
                let mut acc = 0.0;
                for &(v, q) in atoms {
                    acc += q;
                    if acc >= p - MASS_TOL && q > 0.0 {
                        return v;
                    }
                }
                self.support_max()
            }
            SizeDistribution::Exponential { rate } => -(-p).ln_1p() / rate,
            SizeDistribution::Uniform { lo, hi } => lo + p * (hi - lo),
            SizeDistribution::Pareto { alpha, beta } => beta * ((1.0 - p).powf(-1.0 / alpha) - 1.0),
            SizeDistribution::Hyperexponential { branches } => {
                if p <= 0.0 {
                    return 0.0;
                }
                if p >= 1.0 {
                    return f64::INFINITY;
                }
                let slowest = branches
                    .iter()
                    .filter(|b| b.0 > 0.0)
                    .map(|b| b.1)
                    .fold(f64::INFINITY, f64::min);
                let mut hi = -(-p).ln_1p() / slowest + 1.0;
                while self.cdf(hi) < p {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                hi
            }
            SizeDistribution::Capped { base, cap } => base.quantile(p).min(*cap),
        }
    }

    /// Ages beyond which the law keeps less than `eps` tail mass.
    pub fn negligible_beyond(&self, eps: f64) -> f64 {
        let m = self.support_max();
        if m.is_finite() {
            return m;
        }
        self.quantile(1.0 - eps)
    }

    /// `E[X^k; X in range]` for `k` in `0..=2`.
    pub fn partial_moment(&self, range: &SizeRange, k: u32) -> Result<f64> {
        assert!(k <= 2, "partial moments are provided up to order 2");
        if range.is_empty() {
            return Ok(0.0);
        }
        let pow = |x: f64| x.powi(k as i32);
        match self {
            SizeDistribution::Deterministic { value } => {
                Ok(if range.contains(*value) { pow(*value) } else { 0.0 })
            }
            SizeDistribution::FiniteDiscrete { atoms } => Ok(atoms
                .iter()
                .filter(|a| range.contains(a.0))
                .map(|a| a.1 * pow(a.0))
                .sum()),
            SizeDistribution::Exponential { rate } => {
                let lo = range.lo.max(0.0);
                let hi = range.hi;
                if hi <= lo {
                    return Ok(0.0);
                }
                Ok(exp_partial(*rate, lo, hi, k))
            }
            SizeDistribution::Hyperexponential { branches } => {
                let lo = range.lo.max(0.0);
                let hi = range.hi;
                if hi <= lo {
                    return Ok(0.0);
                }
                Ok(branches.iter().map(|&(p, r)| p * exp_partial(r, lo, hi, k)).sum())
            }
            SizeDistribution::Uniform { lo: a, hi: b } => {
                let lo = range.lo.max(*a);
                let hi = range.hi.min(*b);
                if hi <= lo {
                    return Ok(0.0);
                }
                let kk = k as i32 + 1;
                Ok((hi.powi(kk) - lo.powi(kk)) / (kk as f64 * (b - a)))
            }
            SizeDistribution::Pareto { alpha, beta } => {
                let lo = range.lo.max(0.0);
                let hi = range.hi;
                if hi <= lo {
                    return Ok(0.0);
                }
                if hi.is_infinite() && *alpha <= k as f64 {
                    return Err(infinite(k, self));
                }
                Ok(pareto_partial(*alpha, *beta, lo, hi, k))
            }
            SizeDistribution::Capped { base, cap } => {
                let below = range.intersect(&SizeRange::half_open(0.0, *cap));
                let mut total = base.partial_moment(&below, k)?;
                if range.contains(*cap) {
                    total += base.tail_incl(*cap) * pow(*cap);
                }
                Ok(total)
            }
        }
    }

    /// `E[exp(-t X); X in range]`. `t` may be negative on bounded ranges.
    pub fn partial_lst(&self, range: &SizeRange, t: f64) -> Result<f64> {
        if range.is_empty() {
            return Ok(0.0);
        }
        if t == 0.0 {
            return self.partial_moment(range, 0);
        }
        match self {
            SizeDistribution::Deterministic { value } => {
                Ok(if range.contains(*value) { (-t * value).exp() } else { 0.0 })
            }
            SizeDistribution::FiniteDiscrete { atoms } => Ok(atoms
                .iter()
                .filter(|a| range.contains(a.0))
                .map(|a| a.1 * (-t * a.0).exp())
                .sum()),
            SizeDistribution::Exponential { rate } => {
                let lo = range.lo.max(0.0);
                let hi = range.hi;
                if hi <= lo {
                    return Ok(0.0);
                }
                exp_partial_lst(*rate, lo, hi, t).ok_or_else(|| infinite(0, self))
            }
            SizeDistribution::Hyperexponential { branches } => {
                let lo = range.lo.max(0.0);
                let hi = range.hi;
                if hi <= lo {
                    return Ok(0.0);
                }
                let mut total = 0.0;
                for &(p, r) in branches {
                    total += p * exp_partial_lst(r, lo, hi, t).ok_or_else(|| infinite(0, self))?;
                }
                Ok(total)
            }
            SizeDistribution::Uniform { lo: a, hi: b } => {
                let lo = range.lo.max(*a);
                let hi = range.hi.min(*b);
                if hi <= lo {
                    return Ok(0.0);
                }
                let w = hi - lo;
                Ok((-t * lo).exp() * (-(-t * w).exp_m1()) / (t * (b - a)))
            }
            SizeDistribution::Pareto { alpha, beta } => {
                let lo = range.lo.max(0.0);
                let hi = range.hi;
                if hi <= lo {
                    return Ok(0.0);
                }
                if t < 0.0 && hi.is_infinite() {
                    return Err(infinite(0, self));
                }
                pareto_partial_lst(*alpha, *beta, lo, hi, t)
            }
            SizeDistribution::Capped { base, cap } => {
                let below = range.intersect(&SizeRange::half_open(0.0, *cap));
                let mut total = base.partial_lst(&below, t)?;
                if range.contains(*cap) {
                    total += base.tail_incl(*cap) * (-t * cap).exp();
                }
                Ok(total)
            }
        }
    }

    /// `(E[X], E[X^2])`.
    pub fn moments(&self) -> Result<(f64, f64)> {
        let all = SizeRange::all();
        Ok((self.partial_moment(&all, 1)?, self.partial_moment(&all, 2)?))
    }

    pub fn mean(&self) -> f64 {
        self.partial_moment(&SizeRange::all(), 1)
            .expect("validated laws have a finite mean")
    }

    /// `E[exp(-sX)]`, exactly 1 at `s = 0`.
    pub fn lst(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        self.partial_lst(&SizeRange::all(), s).unwrap_or(f64::INFINITY)
    }

    /// Law of `min(X, x)`.
    pub fn cap(&self, x: f64) -> SizeDistribution {
        if x.is_infinite() || x >= self.support_max() && self.mass_beyond(x) == 0.0 {
            return self.clone();
        }
        match self {
            SizeDistribution::Deterministic { value } => SizeDistribution::Deterministic {
                value: value.min(x),
            },
            SizeDistribution::FiniteDiscrete { atoms } => {
                let mut out: Vec<(f64, f64)> = atoms.iter().copied().filter(|a| a.0 < x).collect();
                let top: f64 = atoms.iter().filter(|a| a.0 >= x).map(|a| a.1).sum();
                if top > 0.0 {
                    out.push((x, top));
                }
                SizeDistribution::FiniteDiscrete { atoms: out }
            }
            SizeDistribution::Capped { base, cap } => SizeDistribution::Capped {
                base: base.clone(),
                cap: cap.min(x),
            },
            _ => SizeDistribution::Capped {
                base: Box::new(self.clone()),
                cap: x,
            },
        }
    }

    fn mass_beyond(&self, x: f64) -> f64 {
        self.tail(x)
    }

    /// `E[X - a | X > a]`.
    pub fn expected_remaining(&self, a: f64) -> Result<f64> {
        let tail = self.tail(a);
        if tail <= 0.0 {
            return Err(SoapError::DeadAge { age: a });
        }
        match self {
            SizeDistribution::Exponential { rate } => Ok(1.0 / rate),
            SizeDistribution::Pareto { alpha, beta } => Ok((beta + a.max(0.0)) / (alpha - 1.0)),
            _ => {
                let range = SizeRange::open(a, f64::INFINITY);
                let m1 = self.partial_moment(&range, 1)?;
                let m0 = self.partial_moment(&range, 0)?;
                Ok(m1 / m0 - a)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SizeDistribution::Deterministic { value } => *value,
            SizeDistribution::FiniteDiscrete { atoms } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for &(v, p) in atoms {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                self.support_max()
            }
            SizeDistribution::Exponential { rate } => {
                let u: f64 = rng.gen();
                -(-u).ln_1p() / rate
            }
            SizeDistribution::Hyperexponential { branches } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut chosen = branches[branches.len() - 1].1;
                for &(p, r) in branches {
                    acc += p;
                    if u < acc {
                        chosen = r;
                        break;
                    }
                }
                let v: f64 = rng.gen();
                -(-v).ln_1p() / chosen
            }
            SizeDistribution::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
            SizeDistribution::Pareto { alpha, beta } => {
                // 1 - u lies in (0, 1]
                let u = 1.0 - rng.gen::<f64>();
                beta * (u.powf(-1.0 / alpha) - 1.0)
            }
            SizeDistribution::Capped { base, cap } => base.sample(rng).min(*cap),
        }
    }
}

fn exp_partial(rate: f64, lo: f64, hi: f64, k: u32) -> f64 {
    // E[X^k; lo < X < hi] from the antiderivative -poly(x) exp(-rate x)
    let poly = |x: f64| match k {
        0 => 1.0,
        1 => x + 1.0 / rate,
        _ => x * x + 2.0 * x / rate + 2.0 / (rate * rate),
    };
    let at = |x: f64| {
        if x.is_infinite() {
            0.0
        } else {
            poly(x) * (-rate * x).exp()
        }
    };
    if k == 0 {
        // well conditioned form for short ranges
        let w = hi - lo;
        return (-rate * lo).exp() * if w.is_infinite() { 1.0 } else { -(-rate * w).exp_m1() };
    }
    at(lo) - at(hi)
}

fn exp_partial_lst(rate: f64, lo: f64, hi: f64, t: f64) -> Option<f64> {
    let q = rate + t;
    if hi.is_infinite() {
        if q <= 0.0 {
            return None;
        }
        return Some(rate / q * (-q * lo).exp());
    }
    let w = hi - lo;
    if q == 0.0 {
        return Some(rate * w);
    }
    Some(rate * (-q * lo).exp() * (-(-q * w).exp_m1()) / q)
}

fn pareto_partial(alpha: f64, beta: f64, lo: f64, hi: f64, k: u32) -> f64 {
    let short = hi.is_finite() && (hi - lo) < 0.25 * (beta + lo);
    if short {
        let f = |x: f64| x.powi(k as i32) * alpha / beta * (1.0 + x / beta).powf(-alpha - 1.0);
        return quad::integrate(f, lo, hi, Tolerance::new(0.0, 1e-15))
            .expect("smooth integrand on a short interval");
    }
    let z1 = 1.0 + lo / beta;
    let z2 = 1.0 + hi / beta;
    if alpha > k as f64 {
        let upper = |z: f64| -> f64 {
            if z.is_infinite() {
                return 0.0;
            }
            let base = z.powf(-alpha);
            match k {
                0 => base,
                1 => beta * base * (alpha * z / (alpha - 1.0) - 1.0),
                _ => {
                    beta * beta
                        * base
                        * (alpha * z * z / (alpha - 2.0) - 2.0 * alpha * z / (alpha - 1.0) + 1.0)
                }
            }
        };
        return upper(z1) - upper(z2);
    }
    // (z - 1)^k expanded against the density alpha z^(-alpha-1)
    let bk = beta.powi(k as i32) * alpha;
    let coef: &[(f64, f64)] = match k {
        0 => &[(1.0, 0.0)],
        1 => &[(1.0, 1.0), (-1.0, 0.0)],
        _ => &[(1.0, 2.0), (-2.0, 1.0), (1.0, 0.0)],
    };
    coef.iter()
        .map(|&(c, e)| c * power_integral(e - alpha - 1.0, z1, z2).unwrap_or(f64::INFINITY))
        .sum::<f64>()
        * bk
}

fn pareto_partial_lst(alpha: f64, beta: f64, lo: f64, hi: f64, t: f64) -> Result<f64> {
    // integrate over tail levels y = P(X > x), where x = beta (y^(-1/alpha) - 1)
    let y_hi = (1.0 + lo / beta).powf(-alpha);
    let y_lo = if hi.is_infinite() {
        0.0
    } else {
        (1.0 + hi / beta).powf(-alpha)
    };
    let f = |y: f64| {
        if y <= 0.0 {
            return 0.0;
        }
        let x = beta * (y.powf(-1.0 / alpha) - 1.0);
        (-t * x).exp()
    };
    quad::integrate(f, y_lo, y_hi, Tolerance::new(1e-16, 1e-14))
}
