//! Rank curves that depend on a size law: the Gittins index and expected
//! remaining size.

use super::{Affine, PieceTemplate};
use crate::distributions::{SizeDistribution, SizeRange};
use crate::error::{Result, SoapError};
use serde::{Deserialize, Serialize};

/// Interpolation grid for curves without an exact piecewise-affine form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions {
    pub knots: usize,
    pub quantile: f64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            knots: 512,
            quantile: 0.9999,
        }
    }
}

fn line(start: f64, end: f64, slope: f64, value_at_zero: f64) -> PieceTemplate {
    PieceTemplate {
        start,
        end,
        components: vec![Affine::of_age(slope, value_at_zero)],
    }
}

fn positive_atoms(d: &SizeDistribution) -> Vec<(f64, f64)> {
    d.atoms().into_iter().filter(|a| a.1 > 0.0).collect()
}

/// `(slope, value at age 0)` of each candidate index line on the age
/// interval just below `atoms[j]`, one per candidate stopping atom `m >= j`.
fn gittins_lines(atoms: &[(f64, f64)], j: usize) -> Vec<(f64, f64)> {
    let tail: f64 = atoms[j..].iter().map(|a| a.1).sum();
    let mut out = Vec::with_capacity(atoms.len() - j);
    let mut below = 0.0;
    for m in j..atoms.len() {
        below += atoms[m].1;
        let xm = atoms[m].0;
        let capped: f64 = atoms[j..].iter().map(|&(x, p)| p * x.min(xm)).sum();
        out.push((-tail / below, capped / below));
    }
    out
}

fn lower_envelope(lines: &[(f64, f64)], lo: f64, hi: f64) -> Vec<PieceTemplate> {
    let value = |l: &(f64, f64), a: f64| l.0 * a + l.1;
    let mut current = 0;
    for (i, l) in lines.iter().enumerate() {
        let (vi, vc) = (value(l, lo), value(&lines[current], lo));
        if vi < vc || (vi == vc && l.0 < lines[current].0) {
            current = i;
        }
    }
    let mut out = Vec::new();
    let mut a0 = lo;
    loop {
        let c = lines[current];
        let mut next: Option<(f64, usize)> = None;
        for (k, l) in lines.iter().enumerate() {
            if l.0 >= c.0 {
                continue;
            }
            let cross = (l.1 - c.1) / (c.0 - l.0);
            if cross > a0 && cross < hi {
                let better = match next {
                    None => true,
                    Some((a, idx)) => cross < a || (cross == a && l.0 < lines[idx].0),
                };
                if better {
                    next = Some((cross, k));
                }
            }
        }
        match next {
            Some((cross, k)) => {
                out.push(line(a0, cross, c.0, c.1));
                a0 = cross;
                current = k;
            }
            None => {
                out.push(line(a0, hi, c.0, c.1));
                return out;
            }
        }
    }
}

fn interpolated<F: Fn(f64) -> Result<f64>>(
    d: &SizeDistribution,
    opts: CurveOptions,
    f: F,
) -> Result<Vec<PieceTemplate>> {
    let knots = opts.knots.max(2);
    let top = d.quantile(opts.quantile).min(d.support_max());
    let bounded = d.support_max().is_finite();
    let ages: Vec<f64> = (0..knots)
        .map(|i| top * i as f64 / (knots - 1) as f64)
        .collect();
    let mut values = Vec::with_capacity(knots);
    for (i, &a) in ages.iter().enumerate() {
        // the last knot of a bounded law is the dead age itself
        let probe = if bounded && i == knots - 1 { a - 1e-9 * top.max(1.0) } else { a };
        values.push(f(probe)?);
    }
    let mut out = Vec::with_capacity(knots);
    for i in 0..knots - 1 {
        let slope = (values[i + 1] - values[i]) / (ages[i + 1] - ages[i]);
        out.push(line(ages[i], ages[i + 1], slope, values[i] - slope * ages[i]));
    }
    if !bounded {
        out.push(line(top, f64::INFINITY, 0.0, values[knots - 1]));
    }
    Ok(out)
}

/// Pieces of the Gittins rank `1 / G(a)` for jobs with size law `d`.
pub fn gittins_pieces(d: &SizeDistribution, opts: CurveOptions) -> Result<Vec<PieceTemplate>> {
    match d {
        SizeDistribution::Deterministic { value } => Ok(vec![line(0.0, *value, -1.0, *value)]),
        SizeDistribution::FiniteDiscrete { .. } => {
            let atoms = positive_atoms(d);
            let mut out = Vec::new();
            let mut prev = 0.0;
            for j in 0..atoms.len() {
                let hi = atoms[j].0;
                if hi > prev {
                    out.extend(lower_envelope(&gittins_lines(&atoms, j), prev, hi));
                }
                prev = hi;
            }
            Ok(out)
        }
        SizeDistribution::Exponential { rate } => Ok(vec![line(0.0, f64::INFINITY, 0.0, 1.0 / rate)]),
        SizeDistribution::Pareto { alpha, beta } => {
            Ok(vec![line(0.0, f64::INFINITY, 1.0 / alpha, beta / alpha)])
        }
        SizeDistribution::Uniform { lo, hi } => {
            let mut out = Vec::new();
            if *lo > 0.0 {
                out.push(line(0.0, *lo, -1.0, 0.5 * (lo + hi)));
            }
            out.push(line(*lo, *hi, -0.5, 0.5 * hi));
            Ok(out)
        }
        _ => interpolated(d, opts, |a| gittins_rank(d, a)),
    }
}

/// The Gittins rank at age `a`, the reciprocal of the index.
pub fn gittins_rank(d: &SizeDistribution, a: f64) -> Result<f64> {
    let tail = d.tail(a);
    if tail <= 0.0 {
        return Err(SoapError::DeadAge { age: a });
    }
    match d {
        SizeDistribution::Deterministic { value } => Ok(value - a),
        SizeDistribution::Exponential { rate } => Ok(1.0 / rate),
        SizeDistribution::Pareto { alpha, beta } => Ok((beta + a) / alpha),
        SizeDistribution::Uniform { lo, hi } => Ok(if a < *lo {
            0.5 * (lo + hi) - a
        } else {
            0.5 * (hi - a)
        }),
        SizeDistribution::FiniteDiscrete { .. } => {
            let atoms = positive_atoms(d);
            let j = atoms.iter().position(|x| x.0 > a).expect("tail is positive");
            Ok(gittins_lines(&atoms, j)
                .iter()
                .map(|(s, v)| s * a + v)
                .fold(f64::INFINITY, f64::min))
        }
        SizeDistribution::Hyperexponential { .. } => Ok(tail / d.density(a)),
        SizeDistribution::Capped { .. } => numeric_gittins(d, a),
    }
}

fn capped_mean(d: &SizeDistribution, c: f64) -> Result<f64> {
    Ok(d.partial_moment(&SizeRange::closed(0.0, c), 1)? + c * d.tail(c))
}

/// `inf_{c > a} E[min(X, c) - min(X, a)] / P(a < X <= c)` by grid search
/// over conditional quantiles refined with golden-section steps.
fn numeric_gittins(d: &SizeDistribution, a: f64) -> Result<f64> {
    let tail_a = d.tail(a);
    let base = capped_mean(d, a)?;
    let ratio = |c: f64| -> Result<f64> {
        let den = tail_a - d.tail(c);
        if den <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok((capped_mean(d, c)? - base) / den)
    };
    let mut grid: Vec<f64> = (1..=256)
        .map(|i| {
            let p = 1.0 - tail_a * (1.0 - i as f64 / 256.0);
            d.quantile(p.min(1.0 - 1e-15))
        })
        .filter(|c| *c > a)
        .collect();
    grid.extend(d.atoms().into_iter().map(|x| x.0).filter(|x| *x > a));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid.retain(|c| c.is_finite());
    if grid.is_empty() {
        return Err(SoapError::DeadAge { age: a });
    }
    let mut best = (f64::INFINITY, grid[0]);
    for &c in &grid {
        let v = ratio(c)?;
        if v < best.0 {
            best = (v, c);
        }
    }
    // atoms are exact minimizers when they are the argmin
    if d.mass_at(best.1) > 0.0 {
        return Ok(best.0);
    }
    let idx = grid.iter().position(|&c| c == best.1).unwrap();
    let mut lo = if idx == 0 { a + (grid[0] - a) * 1e-9 } else { grid[idx - 1] };
    let mut hi = if idx + 1 < grid.len() { grid[idx + 1] } else { grid[idx] };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = ratio(x1)?;
    let mut f2 = ratio(x2)?;
    for _ in 0..100 {
        if hi - lo <= 1e-12 * hi.abs().max(1.0) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = ratio(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = ratio(x2)?;
        }
    }
    Ok(best.0.min(f1).min(f2))
}

/// Pieces of the expected remaining size `E[X - a | X > a]`.
pub fn serpt_pieces(d: &SizeDistribution, opts: CurveOptions) -> Result<Vec<PieceTemplate>> {
    match d {
        SizeDistribution::Deterministic { value } => Ok(vec![line(0.0, *value, -1.0, *value)]),
        SizeDistribution::FiniteDiscrete { .. } => {
            let atoms = positive_atoms(d);
            let mut out = Vec::new();
            let mut prev = 0.0;
            for j in 0..atoms.len() {
                let hi = atoms[j].0;
                if hi > prev {
                    let tail: f64 = atoms[j..].iter().map(|a| a.1).sum();
                    let mass: f64 = atoms[j..].iter().map(|a| a.0 * a.1).sum();
                    out.push(line(prev, hi, -1.0, mass / tail));
                }
                prev = hi;
            }
            Ok(out)
        }
        SizeDistribution::Exponential { rate } => Ok(vec![line(0.0, f64::INFINITY, 0.0, 1.0 / rate)]),
        SizeDistribution::Pareto { alpha, beta } => Ok(vec![line(
            0.0,
            f64::INFINITY,
            1.0 / (alpha - 1.0),
            beta / (alpha - 1.0),
        )]),
        SizeDistribution::Uniform { lo, hi } => {
            let mut out = Vec::new();
            if *lo > 0.0 {
                out.push(line(0.0, *lo, -1.0, 0.5 * (lo + hi)));
            }
            out.push(line(*lo, *hi, -0.5, 0.5 * hi));
            Ok(out)
        }
        _ => interpolated(d, opts, |a| d.expected_remaining(a)),
    }
}
