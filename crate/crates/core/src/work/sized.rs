//! Work laws of sized families.
//!
//! Pieces are affine in both age and size, so every crossing age is affine in
//! the size and the work a job of size `x` contributes is piecewise affine in
//! `x`. The breakpoints are among the sizes where a crossing meets a piece
//! edge, age 0 or age `x`; each resulting cell is fitted from two samples and
//! checked at three more, bisecting on a mismatch.

use super::job_work;
use crate::distributions::{SizeRange, WorkComponent, WorkLaw, WorkSegment};
use crate::error::Result;
use crate::rank::{Family, RankBound, Tiebreak};

const FIT_TOL: f64 = 1e-10;
const MAX_DEPTH: u32 = 40;

struct Ctx<'a> {
    family: &'a Family,
    bound: &'a RankBound,
    tiebreak: Tiebreak,
    with_old: bool,
    max_intervals: usize,
}

impl Ctx<'_> {
    fn amounts(&self, x: f64) -> Result<Vec<f64>> {
        let pieces = self.family.pieces(x, x);
        let jw = job_work(&pieces, x, self.bound, self.tiebreak, self.max_intervals)?;
        let width = if self.with_old { jw.width() } else { 1 };
        Ok(jw.amounts(x, width))
    }
}

fn candidates(f: &Family, bound: &RankBound, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = vec![lo, hi];
    let target = &bound.rank.0;
    for t in f.rank.templates(hi) {
        out.push(t.start);
        out.push(t.end);
        for (c, &beta) in t.components.iter().zip(target) {
            let diff = beta - c.constant;
            if c.size != 0.0 {
                out.push(diff / c.size);
                if c.age != 0.0 {
                    out.push((diff - c.age * t.start) / c.size);
                    out.push((diff - c.age * t.end) / c.size);
                }
            }
            if c.age + c.size != 0.0 {
                out.push(diff / (c.age + c.size));
            }
        }
    }
    out.extend(f.law.atoms().into_iter().map(|a| a.0));
    out.extend(f.law.smooth_breaks());
    out.retain(|v| v.is_finite() && *v >= lo && *v <= hi);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn pad(mut v: Vec<f64>, n: usize) -> Vec<f64> {
    v.resize(n, 0.0);
    v
}

/// Cells `(lo, hi, slopes, offsets)` covering `(l, r)`.
fn fit(ctx: &Ctx, l: f64, r: f64, depth: u32, out: &mut Vec<(f64, f64, Vec<f64>, Vec<f64>)>) -> Result<()> {
    let w = r - l;
    let (x1, x2) = (l + 0.25 * w, l + 0.75 * w);
    let (v1, v2) = (ctx.amounts(x1)?, ctx.amounts(x2)?);
    let n = v1.len().max(v2.len());
    let (v1, v2) = (pad(v1, n), pad(v2, n));
    let slopes: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| (b - a) / (x2 - x1)).collect();
    let offsets: Vec<f64> = v1.iter().zip(&slopes).map(|(a, s)| a - s * x1).collect();
    let mut ok = true;
    for &frac in &[0.02, 0.5, 0.98] {
        let xc = l + frac * w;
        let vc = ctx.amounts(xc)?;
        if vc.len() > n {
            ok = false;
            break;
        }
        let vc = pad(vc, n);
        for j in 0..n {
            let pred = slopes[j] * xc + offsets[j];
            if (pred - vc[j]).abs() > FIT_TOL * vc[j].abs().max(1.0) {
                ok = false;
            }
        }
    }
    if ok || depth >= MAX_DEPTH {
        out.push((l, r, slopes, offsets));
        return Ok(());
    }
    let m = l + 0.5 * w;
    fit(ctx, l, m, depth + 1, out)?;
    fit(ctx, m, r, depth + 1, out)
}

/// Unweighted new and old work laws of one sized family.
pub(super) fn family_work(
    f: &Family,
    bound: &RankBound,
    tiebreak: Tiebreak,
    with_old: bool,
    max_intervals: usize,
) -> Result<(WorkLaw, Vec<WorkLaw>)> {
    let ctx = Ctx {
        family: f,
        bound,
        tiebreak,
        with_old,
        max_intervals,
    };
    let law = &f.law;
    let lo = law.support_min();
    let hi = f.age_ceiling();
    let unbounded = !law.support_max().is_finite();
    let mut per_index: Vec<Vec<WorkSegment>> = Vec::new();
    let mut push = |j: usize, seg: WorkSegment| {
        if per_index.len() <= j {
            per_index.resize_with(j + 1, Vec::new);
        }
        if seg.slope != 0.0 || seg.offset != 0.0 {
            per_index[j].push(seg);
        }
    };
    for (x, p) in law.atoms() {
        if p <= 0.0 {
            continue;
        }
        for (j, v) in ctx.amounts(x)?.into_iter().enumerate() {
            push(
                j,
                WorkSegment {
                    range: SizeRange::point(x),
                    slope: 0.0,
                    offset: v,
                },
            );
        }
    }
    if law.continuous_mass() > 0.0 {
        let cuts = candidates(f, bound, lo, hi);
        let mut cells = Vec::new();
        for w in cuts.windows(2) {
            if w[1] > w[0] && law.partial_moment(&SizeRange::open(w[0], w[1]), 0)? > 0.0 {
                fit(&ctx, w[0], w[1], 0, &mut cells)?;
            }
        }
        let last = cells.len();
        for (k, (l, r, slopes, offsets)) in cells.into_iter().enumerate() {
            // the negligible tail past the ceiling follows the last cell
            let r = if unbounded && k + 1 == last { f64::INFINITY } else { r };
            for (j, (s, o)) in slopes.into_iter().zip(offsets).enumerate() {
                push(
                    j,
                    WorkSegment {
                        range: SizeRange::open(l, r),
                        slope: s,
                        offset: o,
                    },
                );
            }
        }
    }
    let mut laws = per_index.into_iter().map(|segments| WorkLaw {
        components: vec![WorkComponent {
            weight: 1.0,
            source: f.law.clone(),
            segments,
        }],
    });
    let new = laws.next().unwrap_or_default();
    Ok((new, if with_old { laws.collect() } else { Vec::new() }))
}

#[cfg(test)]
mod tests {
    use crate::distributions::SizeDistribution;
    use crate::rank::{builtin_policy, FamilySpec, PolicyParams, Rank, RankBound};
    use crate::work::{new_work, old_work};

    fn srpt(law: SizeDistribution) -> crate::rank::Policy {
        builtin_policy(
            "srpt",
            &PolicyParams {
                families: vec![FamilySpec::new(1.0, law)],
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn srpt_old_work_is_the_capped_size() {
        // old_0 = X 1(X <= r), old_1 = r 1(X > r)
        let p = srpt(SizeDistribution::uniform(0.0, 2.0).unwrap());
        let r = 1.2;
        let bound = RankBound::closed(Rank::scalar(r));
        let o0 = old_work(&p, &bound, 0).unwrap();
        let o1 = old_work(&p, &bound, 1).unwrap();
        assert!((o0.mean().unwrap() - r * r / 4.0).abs() < 1e-13);
        assert!((o1.mean().unwrap() - r * (2.0 - r) / 2.0).abs() < 1e-13);
        assert!((o1.second_moment().unwrap() - r * r * (2.0 - r) / 2.0).abs() < 1e-13);
        assert!(old_work(&p, &bound, 2).unwrap().is_zero());
    }

    #[test]
    fn discretized_srpt_new_work() {
        // <k - a, x - a> with unit spacing: new arrivals start at <0, x>, so
        // the new work is X 1(X < r) for a bound <0, r>
        let mut pr = PolicyParams {
            families: vec![FamilySpec::new(1.0, SizeDistribution::exponential(1.0).unwrap())],
            ..Default::default()
        };
        pr.spacing = Some(1.0);
        let p = builtin_policy("discretized_srpt", &pr).unwrap();
        let r: f64 = 2.5;
        let bound = RankBound::closed(Rank::new(vec![0.0, r]));
        let m = new_work(&p, &bound).unwrap().mean().unwrap();
        let want = 1.0 - (1.0 + r) * (-r).exp();
        assert!((m - want).abs() < 1e-12, "{m} vs {want}");
    }
}
