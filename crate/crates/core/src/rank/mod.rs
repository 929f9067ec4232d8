//! Ranks, rank bounds and piecewise-affine rank functions.
//!
//! A rank is a tuple of reals compared lexicographically. A rank function
//! maps a job's age (and, for sized families, its exact size) to a rank and
//! is stored as a list of age intervals on which every tuple component is
//! affine in age and size.

mod catalog;
mod curves;
mod worst;

pub use catalog::{builtin_policy, FamilySpec, PolicyParams, CATALOG};
pub use curves::{gittins_pieces, gittins_rank, serpt_pieces, CurveOptions};
pub(crate) use worst::tagged_pieces;
pub use worst::{
    residence_segments, sup_over, worst_future_age, worst_future_rank, ResidenceSegment,
};

use crate::distributions::SizeDistribution;
use crate::error::{Result, SoapError};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

/// Lexicographically ordered tuple of reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rank(pub Vec<f64>);

impl Rank {
    pub fn new(components: Vec<f64>) -> Self {
        Rank(components)
    }

    pub fn scalar(v: f64) -> Self {
        Rank(vec![v])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Lexicographic order; `-0.0` and `0.0` are equal.
    pub fn lex(&self, other: &Rank) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            if a < b {
                return Ordering::Less;
            }
            if a > b {
                return Ordering::Greater;
            }
        }
        Ordering::Equal
    }

    pub fn compare(&self, other: &Rank) -> Result<Ordering> {
        if self.len() != other.len() {
            return Err(SoapError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(self.lex(other))
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "<")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ">")
    }
}

/// A rank together with a strictness flag. `open` bounds sit just below the
/// closed bound of the same rank and above every smaller rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankBound {
    pub rank: Rank,
    pub open: bool,
}

impl RankBound {
    pub fn closed(rank: Rank) -> Self {
        RankBound { rank, open: false }
    }

    pub fn open(rank: Rank) -> Self {
        RankBound { rank, open: true }
    }

    pub fn lex(&self, other: &RankBound) -> Ordering {
        self.rank.lex(&other.rank).then_with(|| match (self.open, other.open) {
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => Ordering::Equal,
        })
    }

    pub fn compare(&self, other: &RankBound) -> Result<Ordering> {
        self.rank.compare(&other.rank)?;
        Ok(self.lex(other))
    }

    pub fn max(self, other: RankBound) -> RankBound {
        if other.lex(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }
}

impl From<Rank> for RankBound {
    fn from(rank: Rank) -> Self {
        RankBound::closed(rank)
    }
}

impl fmt::Display for RankBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.rank, if self.open { "open" } else { "closed" })
    }
}

/// How a job's rank `(r, closed)` must relate to a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtLeast,
    Above,
    AtMost,
    Below,
}

impl Relation {
    pub fn negate(self) -> Relation {
        match self {
            Relation::AtLeast => Relation::Below,
            Relation::Above => Relation::AtMost,
            Relation::AtMost => Relation::Above,
            Relation::Below => Relation::AtLeast,
        }
    }

    /// Whether `(r, closed)` relates to `bound` given `r` compared against
    /// the bound's rank.
    pub fn holds(self, ord: Ordering, bound_open: bool) -> bool {
        // (r, closed) >= (b, q)  iff  r >= b
        // (r, closed) >  (b, closed) iff r > b ; > (b, open) iff r >= b
        let at_least = ord != Ordering::Less;
        let above = if bound_open { at_least } else { ord == Ordering::Greater };
        match self {
            Relation::AtLeast => at_least,
            Relation::Above => above,
            Relation::AtMost => !above,
            Relation::Below => !at_least,
        }
    }
}

/// Tiebreaking between jobs of equal rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tiebreak {
    #[default]
    Fcfs,
    Lcfs,
}

impl Tiebreak {
    /// Relation under which a newly arrived job stops outranking a tagged
    /// job whose worst future rank is the bound.
    pub fn new_cutoff(self) -> Relation {
        match self {
            Tiebreak::Fcfs => Relation::AtLeast,
            Tiebreak::Lcfs => Relation::Above,
        }
    }

    /// Relation under which an older job stops outranking the tagged job.
    pub fn old_cutoff(self) -> Relation {
        match self {
            Tiebreak::Fcfs => Relation::Above,
            Tiebreak::Lcfs => Relation::AtLeast,
        }
    }
}

/// Component value `age * a + size * x + constant`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    #[serde(default)]
    pub age: f64,
    #[serde(default)]
    pub size: f64,
    #[serde(default)]
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine {
            age: 0.0,
            size: 0.0,
            constant: c,
        }
    }

    pub fn of_age(slope: f64, c: f64) -> Self {
        Affine {
            age: slope,
            size: 0.0,
            constant: c,
        }
    }

    pub fn remaining() -> Self {
        Affine {
            age: -1.0,
            size: 1.0,
            constant: 0.0,
        }
    }

    pub fn size_only() -> Self {
        Affine {
            age: 0.0,
            size: 1.0,
            constant: 0.0,
        }
    }
}

/// Rank template on the age interval `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceTemplate {
    pub start: f64,
    /// `null` or missing in JSON means unbounded.
    #[serde(default = "unbounded", with = "end_serde")]
    pub end: f64,
    pub components: Vec<Affine>,
}

fn unbounded() -> f64 {
    f64::INFINITY
}

mod end_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl PieceTemplate {
    pub fn instantiate(&self, x: f64) -> Piece {
        Piece {
            start: self.start,
            end: self.end,
            slopes: self.components.iter().map(|c| c.age).collect(),
            offsets: self
                .components
                .iter()
                .map(|c| if c.size == 0.0 { c.constant } else { c.size * x + c.constant })
                .collect(),
        }
    }

    pub fn uses_size(&self) -> bool {
        self.components.iter().any(|c| c.size != 0.0)
    }
}

/// Direction of a piece in rank order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
}

/// An instantiated piece: component `k` equals `slopes[k] * a + offsets[k]`
/// for ages in `[start, end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub slopes: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl Piece {
    pub fn eval(&self, a: f64) -> Rank {
        Rank(
            self.slopes
                .iter()
                .zip(&self.offsets)
                .map(|(s, o)| if *s == 0.0 { *o } else { s * a + o })
                .collect(),
        )
    }

    pub fn trend(&self) -> Trend {
        match self.slopes.iter().find(|s| **s != 0.0) {
            Some(s) if *s > 0.0 => Trend::Increasing,
            Some(_) => Trend::Decreasing,
            None => Trend::Constant,
        }
    }

    /// Index and slope of the component that decides the trend.
    pub fn leading(&self) -> Option<(usize, f64)> {
        self.slopes
            .iter()
            .enumerate()
            .find(|(_, s)| **s != 0.0)
            .map(|(i, s)| (i, *s))
    }

    pub fn contains(&self, a: f64) -> bool {
        a >= self.start && a < self.end
    }
}

/// Maximal age interval on which a piece compares to a target rank in a
/// fixed way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: f64,
    pub hi_closed: bool,
    pub ord: Ordering,
}

impl Span {
    fn is_empty(&self) -> bool {
        self.hi < self.lo || (self.hi == self.lo && !(self.lo_closed && self.hi_closed))
    }
}

fn classify_into(
    piece: &Piece,
    target: &Rank,
    k: usize,
    window: Span,
    out: &mut Vec<Span>,
) {
    if window.is_empty() {
        return;
    }
    if k == target.0.len() {
        out.push(Span {
            ord: Ordering::Equal,
            ..window
        });
        return;
    }
    let slope = piece.slopes[k];
    let offset = piece.offsets[k];
    let t = target.0[k];
    if slope == 0.0 {
        if offset > t {
            out.push(Span {
                ord: Ordering::Greater,
                ..window
            });
        } else if offset < t {
            out.push(Span {
                ord: Ordering::Less,
                ..window
            });
        } else {
            classify_into(piece, target, k + 1, window, out);
        }
        return;
    }
    let root = (t - offset) / slope;
    let (left, right) = if slope > 0.0 {
        (Ordering::Less, Ordering::Greater)
    } else {
        (Ordering::Greater, Ordering::Less)
    };
    if root > window.lo {
        out.push(Span {
            hi: root.min(window.hi),
            hi_closed: if root <= window.hi { false } else { window.hi_closed },
            ord: left,
            ..window
        });
    }
    let point = Span {
        lo: root,
        lo_closed: true,
        hi: root,
        hi_closed: true,
        ord: Ordering::Equal,
    };
    let inside = (root > window.lo || (root == window.lo && window.lo_closed))
        && (root < window.hi || (root == window.hi && window.hi_closed));
    if inside {
        classify_into(piece, target, k + 1, point, out);
    }
    if root < window.hi {
        out.push(Span {
            lo: root.max(window.lo),
            lo_closed: if root >= window.lo { false } else { window.lo_closed },
            ord: right,
            ..window
        });
    }
}

/// Partitions the ages `window` of a piece by how its rank compares with
/// `target`, in increasing age order with adjacent equal labels merged.
pub fn classify(piece: &Piece, target: &Rank, window: (f64, bool, f64, bool)) -> Vec<Span> {
    let mut raw = Vec::new();
    let w = Span {
        lo: window.0,
        lo_closed: window.1,
        hi: window.2,
        hi_closed: window.3,
        ord: Ordering::Equal,
    };
    classify_into(piece, target, 0, w, &mut raw);
    let mut out: Vec<Span> = Vec::with_capacity(raw.len());
    for s in raw {
        match out.last_mut() {
            Some(last) if last.ord == s.ord && last.hi == s.lo && (last.hi_closed || s.lo_closed) => {
                last.hi = s.hi;
                last.hi_closed = s.hi_closed;
            }
            _ => out.push(s),
        }
    }
    out
}

/// `inf { a in window : (r(a), closed) relation bound }` over consecutive
/// pieces, or `inf` when no such age exists. The window starts at `from`
/// (inclusive or not) and ends strictly before `end`.
pub fn first_age(
    pieces: &[Piece],
    from: f64,
    inclusive: bool,
    end: f64,
    bound: &RankBound,
    relation: Relation,
) -> f64 {
    for p in pieces {
        if p.end <= from || p.start >= end {
            continue;
        }
        let (lo, lo_closed) = if p.start > from { (p.start, true) } else { (from, inclusive) };
        let hi = p.end.min(end);
        if hi <= lo {
            continue;
        }
        for span in classify(p, &bound.rank, (lo, lo_closed, hi, false)) {
            if relation.holds(span.ord, bound.open) {
                return span.lo;
            }
        }
    }
    f64::INFINITY
}

/// Piecewise rank function of one job family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RankFunction {
    /// Explicit pieces covering `[0, inf)` (or the family's support).
    Pieces { pieces: Vec<PieceTemplate> },
    /// Nonpreemptible between checkpoints `k * spacing`: the leading
    /// component is `k * spacing - a`, followed by the inner rank.
    Discretized {
        spacing: f64,
        inner: Box<RankFunction>,
    },
}

impl RankFunction {
    pub fn pieces(pieces: Vec<PieceTemplate>) -> Self {
        RankFunction::Pieces { pieces }
    }

    /// Single piece on `[0, inf)`.
    pub fn uniform(components: Vec<Affine>) -> Self {
        RankFunction::Pieces {
            pieces: vec![PieceTemplate {
                start: 0.0,
                end: f64::INFINITY,
                components,
            }],
        }
    }

    pub fn discretized(spacing: f64, inner: RankFunction) -> Self {
        RankFunction::Discretized {
            spacing,
            inner: Box::new(inner),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            RankFunction::Pieces { pieces } => pieces.first().map_or(0, |p| p.components.len()),
            RankFunction::Discretized { inner, .. } => inner.arity() + 1,
        }
    }

    pub fn uses_size(&self) -> bool {
        match self {
            RankFunction::Pieces { pieces } => pieces.iter().any(|p| p.uses_size()),
            RankFunction::Discretized { inner, .. } => inner.uses_size(),
        }
    }

    /// Whether the pieces generated up to any ceiling form a finite list.
    pub fn is_finite(&self) -> bool {
        matches!(self, RankFunction::Pieces { .. })
    }

    /// Templates covering `[0, ceiling)` in age order.
    pub fn templates(&self, ceiling: f64) -> Vec<PieceTemplate> {
        match self {
            RankFunction::Pieces { pieces } => pieces
                .iter()
                .filter(|p| p.start < ceiling || p.start == 0.0)
                .cloned()
                .collect(),
            RankFunction::Discretized { spacing, inner } => {
                let inner = inner.templates(ceiling);
                let mut out = Vec::new();
                let mut k = 0usize;
                loop {
                    let lo = k as f64 * spacing;
                    if lo >= ceiling && k > 0 {
                        break;
                    }
                    let hi = (k + 1) as f64 * spacing;
                    for p in &inner {
                        let s = p.start.max(lo);
                        let e = p.end.min(hi);
                        if e > s {
                            let mut comps = Vec::with_capacity(p.components.len() + 1);
                            comps.push(Affine::of_age(-1.0, lo));
                            comps.extend_from_slice(&p.components);
                            out.push(PieceTemplate {
                                start: s,
                                end: e,
                                components: comps,
                            });
                        }
                    }
                    k += 1;
                }
                out
            }
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match self {
            RankFunction::Pieces { pieces } => {
                if pieces.is_empty() {
                    return Err(SoapError::InvalidPolicy(format!("family `{name}` has no pieces")));
                }
                if pieces[0].start != 0.0 {
                    return Err(SoapError::InvalidPolicy(format!(
                        "family `{name}`: first piece must start at age 0"
                    )));
                }
                let n = pieces[0].components.len();
                if n == 0 {
                    return Err(SoapError::InvalidPolicy(format!("family `{name}`: empty rank tuple")));
                }
                for w in pieces.windows(2) {
                    if w[0].end != w[1].start {
                        return Err(SoapError::InvalidPolicy(format!(
                            "family `{name}`: pieces must be contiguous ({} vs {})",
                            w[0].end, w[1].start
                        )));
                    }
                }
                for p in pieces {
                    if !(p.end > p.start) {
                        return Err(SoapError::InvalidPolicy(format!(
                            "family `{name}`: empty piece [{}, {})",
                            p.start, p.end
                        )));
                    }
                    if p.components.len() != n {
                        return Err(SoapError::LengthMismatch {
                            left: n,
                            right: p.components.len(),
                        });
                    }
                    let finite = p
                        .components
                        .iter()
                        .all(|c| c.age.is_finite() && c.size.is_finite() && c.constant.is_finite());
                    if !finite {
                        return Err(SoapError::InvalidPolicy(format!(
                            "family `{name}`: non-finite coefficient"
                        )));
                    }
                }
                Ok(())
            }
            RankFunction::Discretized { spacing, inner } => {
                if !(spacing.is_finite() && *spacing > 0.0) {
                    return Err(SoapError::InvalidPolicy(format!(
                        "family `{name}`: checkpoint spacing must be positive"
                    )));
                }
                inner.validate(name)
            }
        }
    }
}

/// One family of descriptors: either one unsized descriptor whose jobs have
/// size law `law`, or the sized descriptors `x` distributed as `law`.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub name: String,
    pub prob: f64,
    pub law: Arc<SizeDistribution>,
    pub sized: bool,
    pub rank: RankFunction,
}

/// Tail mass beyond which pieces of unbounded laws are not generated.
pub const AGE_TAIL_EPS: f64 = 1e-13;

impl Family {
    /// Largest age any job of this family can reach, or the negligible-tail
    /// ceiling for unbounded laws.
    pub fn age_ceiling(&self) -> f64 {
        self.law.negligible_beyond(AGE_TAIL_EPS)
    }

    /// Instantiated pieces for a job of size `x` (ignored when unsized),
    /// covering ages in `[0, ceiling)`.
    pub fn pieces(&self, x: f64, ceiling: f64) -> Vec<Piece> {
        self.rank
            .templates(ceiling)
            .iter()
            .map(|t| t.instantiate(x))
            .collect()
    }

    pub fn evaluate(&self, x: Option<f64>, a: f64) -> Result<Rank> {
        if self.sized != x.is_some() {
            return Err(SoapError::InvalidPolicy(format!(
                "family `{}` {} a size",
                self.name,
                if self.sized { "requires" } else { "does not take" }
            )));
        }
        let ceiling = match x {
            Some(x) => x.max(a + f64::EPSILON),
            None => self.age_ceiling().max(a),
        };
        let eval_ceiling = if self.rank.is_finite() { f64::INFINITY } else { ceiling + 1.0 };
        let size = x.unwrap_or(0.0);
        for t in self.rank.templates(eval_ceiling) {
            if a >= t.start && a < t.end {
                return Ok(t.instantiate(size).eval(a));
            }
        }
        Err(SoapError::AgeOutOfRange { age: a, ceiling })
    }
}

/// A scheduling policy: families with rank functions and a tiebreak rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub name: String,
    pub families: Vec<Family>,
    pub tiebreak: Tiebreak,
}

impl Policy {
    pub fn new(name: impl Into<String>, families: Vec<Family>, tiebreak: Tiebreak) -> Result<Self> {
        let p = Policy {
            name: name.into(),
            families,
            tiebreak,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(SoapError::InvalidPolicy("policy has no families".into()));
        }
        let total: f64 = self.families.iter().map(|f| f.prob).sum();
        if (total - 1.0).abs() > crate::distributions::MASS_TOL || self.families.iter().any(|f| f.prob < 0.0) {
            return Err(SoapError::InvalidPolicy(format!(
                "family probabilities sum to {total}"
            )));
        }
        let n = self.families[0].rank.arity();
        for f in &self.families {
            f.law.validate()?;
            f.rank.validate(&f.name)?;
            if f.rank.arity() != n {
                return Err(SoapError::LengthMismatch {
                    left: n,
                    right: f.rank.arity(),
                });
            }
            if !f.sized && f.rank.uses_size() {
                return Err(SoapError::InvalidPolicy(format!(
                    "unsized family `{}` has a size-dependent rank",
                    f.name
                )));
            }
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.families[0].rank.arity()
    }

    pub fn family(&self, index: usize) -> Result<&Family> {
        self.families.get(index).ok_or_else(|| {
            SoapError::InvalidPolicy(format!("family index {index} out of range"))
        })
    }

    pub fn family_index(&self, name: &str) -> Option<usize> {
        self.families.iter().position(|f| f.name == name)
    }

    pub fn evaluate(&self, family: usize, x: Option<f64>, a: f64) -> Result<Rank> {
        self.family(family)?.evaluate(x, a)
    }

    /// Mean job size over the family mixture.
    pub fn mean_size(&self) -> f64 {
        self.families.iter().map(|f| f.prob * f.law.mean()).sum()
    }

    /// Pieces of the tagged job `(family, x)` over its lifetime `[0, x)`.
    pub fn job_pieces(&self, family: usize, x: f64) -> Result<Vec<Piece>> {
        let f = self.family(family)?;
        Ok(f.pieces(x, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: &[f64]) -> Rank {
        Rank(v.to_vec())
    }

    #[test]
    fn lexicographic_order() {
        assert_eq!(r(&[1.0, 5.0]).compare(&r(&[2.0, 0.0])).unwrap(), Ordering::Less);
        let open = RankBound::open(r(&[0.0, 3.0]));
        let closed = RankBound::closed(r(&[0.0, 3.0]));
        assert_eq!(open.compare(&closed).unwrap(), Ordering::Less);
        let low = RankBound::closed(r(&[0.0, 2.0]));
        assert_eq!(low.compare(&open).unwrap(), Ordering::Less);
        assert_eq!(
            r(&[1.0]).compare(&r(&[1.0, 2.0])),
            Err(SoapError::LengthMismatch { left: 1, right: 2 })
        );
        assert_eq!(r(&[-0.0]).lex(&r(&[0.0])), Ordering::Equal);
    }

    #[test]
    fn relation_reduces_bounds_to_ranks() {
        use Ordering::*;
        // (r, closed) >= (b, open) iff r >= b
        assert!(Relation::AtLeast.holds(Equal, true));
        assert!(!Relation::AtLeast.holds(Less, true));
        // (r, closed) > (b, open) iff r >= b
        assert!(Relation::Above.holds(Equal, true));
        assert!(!Relation::Above.holds(Equal, false));
        assert!(Relation::AtMost.holds(Equal, false));
        assert!(Relation::Below.holds(Less, false));
    }

    #[test]
    fn classify_two_components() {
        // <1 - a, a> on [1, 2) against <0, 1>
        let p = Piece {
            start: 1.0,
            end: 2.0,
            slopes: vec![-1.0, 1.0],
            offsets: vec![1.0, 0.0],
        };
        let spans = classify(&p, &r(&[0.0, 1.0]), (1.0, true, 2.0, false));
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].ord, Ordering::Equal);
        assert_eq!((spans[0].lo, spans[0].hi), (1.0, 1.0));
        assert_eq!(spans[1].ord, Ordering::Less);
        assert!(!spans[1].lo_closed);
    }

    #[test]
    fn first_age_uses_infimum() {
        // rank 14 - a on [2, 14): first age with rank <= 8 is 6
        let p = vec![
            Piece {
                start: 0.0,
                end: 2.0,
                slopes: vec![-1.0],
                offsets: vec![8.0],
            },
            Piece {
                start: 2.0,
                end: 14.0,
                slopes: vec![-1.0],
                offsets: vec![14.0],
            },
        ];
        let b = RankBound::closed(r(&[8.0]));
        assert_eq!(first_age(&p, 0.0, true, 14.0, &b, Relation::Above), 2.0);
        assert_eq!(first_age(&p, 2.0, false, 14.0, &b, Relation::AtMost), 6.0);
        assert_eq!(first_age(&p, 6.0, false, 14.0, &b, Relation::Above), f64::INFINITY);
        // an open set still has an infimum
        assert_eq!(first_age(&p, 0.0, true, 14.0, &b, Relation::Below), 0.0);
        let b12 = RankBound::closed(r(&[12.0]));
        assert_eq!(first_age(&p, 0.0, true, 14.0, &b12, Relation::AtLeast), 2.0);
    }

    #[test]
    fn discretized_templates() {
        let fb = RankFunction::uniform(vec![Affine::of_age(1.0, 0.0)]);
        let d = RankFunction::discretized(1.0, fb);
        let t = d.templates(3.5);
        assert_eq!(t.len(), 4);
        let p = t[2].instantiate(0.0);
        assert_eq!(p.eval(2.5), r(&[-0.5, 2.5]));
        assert_eq!(p.trend(), Trend::Decreasing);
    }

    #[test]
    fn policy_validation() {
        let law = Arc::new(SizeDistribution::exponential(1.0).unwrap());
        let fam = |prob: f64, comps: Vec<Affine>| Family {
            name: "f".into(),
            prob,
            law: law.clone(),
            sized: false,
            rank: RankFunction::uniform(comps),
        };
        assert!(Policy::new("x", vec![fam(0.5, vec![Affine::constant(0.0)])], Tiebreak::Fcfs).is_err());
        assert!(matches!(
            Policy::new(
                "x",
                vec![fam(0.5, vec![Affine::constant(0.0)]), fam(0.5, vec![Affine::constant(0.0); 2])],
                Tiebreak::Fcfs
            ),
            Err(SoapError::LengthMismatch { .. })
        ));
        assert!(Policy::new("x", vec![fam(1.0, vec![Affine::remaining()])], Tiebreak::Fcfs).is_err());
    }
}
