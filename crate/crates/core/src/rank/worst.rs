//! Worst future rank: the least upper bound of a job's rank over its
//! remaining ages.

use super::{classify, Piece, Policy, RankBound, Relation, Trend};
use crate::error::{Result, SoapError};

/// Supremum contribution of one piece restricted to `[lo, hi)`.
fn piece_sup(p: &Piece, lo: f64, hi: f64) -> RankBound {
    match p.trend() {
        Trend::Increasing => RankBound::open(p.eval(hi)),
        _ => RankBound::closed(p.eval(lo)),
    }
}

/// Least upper bound of the ranks over ages `[a, x)`, or `None` for an
/// empty window.
pub fn sup_over(pieces: &[Piece], a: f64, x: f64) -> Option<RankBound> {
    let mut best: Option<RankBound> = None;
    for p in pieces {
        let lo = p.start.max(a);
        let hi = p.end.min(x);
        if hi <= lo {
            continue;
        }
        let s = piece_sup(p, lo, hi);
        best = Some(match best {
            None => s,
            Some(b) => b.max(s),
        });
    }
    best
}

fn covered(pieces: &[Piece], x: f64) -> bool {
    let mut reach = 0.0;
    for p in pieces {
        if p.start > reach {
            return false;
        }
        reach = reach.max(p.end);
        if reach >= x {
            return true;
        }
    }
    reach >= x
}

pub(crate) fn tagged_pieces(policy: &Policy, family: usize, x: f64) -> Result<Vec<Piece>> {
    let f = policy.family(family)?;
    let pieces = f.pieces(x, x);
    if !covered(&pieces, x) {
        return Err(SoapError::SizeOutOfSupport {
            size: x,
            family: f.name.clone(),
        });
    }
    Ok(pieces)
}

/// Worst future rank of a job of family `family` and size `x` at age `a`.
pub fn worst_future_rank(policy: &Policy, family: usize, x: f64, a: f64) -> Result<RankBound> {
    if !(a < x) {
        return Err(SoapError::EmptyWindow { age: a, size: x });
    }
    let pieces = tagged_pieces(policy, family, x)?;
    Ok(sup_over(&pieces, a, x).expect("window is nonempty and covered"))
}

/// Earliest age at or after `a` at which the job attains its worst future
/// rank; `x` when the bound is only approached.
pub fn worst_future_age(policy: &Policy, family: usize, x: f64, a: f64) -> Result<f64> {
    let bound = worst_future_rank(policy, family, x, a)?;
    if bound.open {
        return Ok(x);
    }
    let pieces = tagged_pieces(policy, family, x)?;
    for p in &pieces {
        let lo = p.start.max(a);
        let hi = p.end.min(x);
        if hi <= lo || p.trend() == Trend::Increasing {
            continue;
        }
        if p.eval(lo).lex(&bound.rank) == std::cmp::Ordering::Equal {
            return Ok(lo);
        }
    }
    Ok(x)
}

/// Worst future rank as a function of age over `[start, end)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ResidenceSegment {
    /// Constant bound.
    Fixed {
        start: f64,
        end: f64,
        bound: RankBound,
    },
    /// The bound is `(r(a), closed)` for the current, nonincreasing piece.
    Tracking { start: f64, end: f64, piece: Piece },
}

impl ResidenceSegment {
    pub fn start(&self) -> f64 {
        match self {
            ResidenceSegment::Fixed { start, .. } | ResidenceSegment::Tracking { start, .. } => *start,
        }
    }

    pub fn end(&self) -> f64 {
        match self {
            ResidenceSegment::Fixed { end, .. } | ResidenceSegment::Tracking { end, .. } => *end,
        }
    }

    pub fn bound_at(&self, a: f64) -> RankBound {
        match self {
            ResidenceSegment::Fixed { bound, .. } => bound.clone(),
            ResidenceSegment::Tracking { piece, .. } => RankBound::closed(piece.eval(a)),
        }
    }
}

/// Splits `[0, x)` into segments on which the worst future rank is either
/// constant or tracks the current rank.
pub fn residence_segments(pieces: &[Piece], x: f64) -> Vec<ResidenceSegment> {
    let mut rev: Vec<ResidenceSegment> = Vec::new();
    let mut suffix: Option<RankBound> = None;
    for p in pieces.iter().rev() {
        let lo = p.start;
        let hi = p.end.min(x);
        if hi <= lo {
            continue;
        }
        match p.trend() {
            Trend::Increasing | Trend::Constant => {
                let own = piece_sup(p, lo, hi);
                let b = match suffix.take() {
                    None => own,
                    Some(s) => s.max(own),
                };
                rev.push(ResidenceSegment::Fixed {
                    start: lo,
                    end: hi,
                    bound: b.clone(),
                });
                suffix = Some(b);
            }
            Trend::Decreasing => {
                let own = RankBound::closed(p.eval(lo));
                match suffix.take() {
                    None => {
                        rev.push(ResidenceSegment::Tracking {
                            start: lo,
                            end: hi,
                            piece: p.clone(),
                        });
                        suffix = Some(own);
                    }
                    Some(s) => {
                        // ages where (r(a), closed) still exceeds the suffix
                        let mut cross = hi;
                        for span in classify(p, &s.rank, (lo, true, hi, false)) {
                            if !Relation::Above.holds(span.ord, s.open) {
                                cross = span.lo;
                                break;
                            }
                        }
                        if cross < hi {
                            rev.push(ResidenceSegment::Fixed {
                                start: cross,
                                end: hi,
                                bound: s.clone(),
                            });
                        }
                        if cross > lo {
                            rev.push(ResidenceSegment::Tracking {
                                start: lo,
                                end: cross,
                                piece: p.clone(),
                            });
                        }
                        suffix = Some(s.max(own));
                    }
                }
            }
        }
    }
    rev.reverse();
    let mut out: Vec<ResidenceSegment> = Vec::with_capacity(rev.len());
    for seg in rev {
        if let (
            Some(ResidenceSegment::Fixed { end, bound, .. }),
            ResidenceSegment::Fixed {
                start: s2,
                end: e2,
                bound: b2,
            },
        ) = (out.last_mut(), &seg)
        {
            if *end == *s2 && bound.lex(b2) == std::cmp::Ordering::Equal {
                *end = *e2;
                continue;
            }
        }
        out.push(seg);
    }
    out
}
