use super::{SizeDistribution, SizeRange};
use crate::error::{Result, SoapError};
use std::sync::Arc;

/// Work `slope * X + offset` received by a job whose size `X` falls in
/// `range`; zero outside every segment of a component.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkSegment {
    pub range: SizeRange,
    pub slope: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkComponent {
    pub weight: f64,
    pub source: Arc<SizeDistribution>,
    /// Disjoint ranges.
    pub segments: Vec<WorkSegment>,
}

/// A mixture of piecewise-affine transformations of size laws. Every work
/// variable in the analysis (capped sizes, clipped intervals, size-dependent
/// cutoffs) has this form.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorkLaw {
    pub components: Vec<WorkComponent>,
}

impl WorkComponent {
    fn mass(&self) -> Result<f64> {
        let mut m = 0.0;
        for seg in &self.segments {
            m += self.source.partial_moment(&seg.range, 0)?;
        }
        Ok(m)
    }

    fn moment(&self, k: u32) -> Result<f64> {
        let mut total = 0.0;
        for seg in &self.segments {
            if seg.slope == 0.0 && seg.offset == 0.0 {
                continue;
            }
            let r = &seg.range;
            let (a, b) = (seg.slope, seg.offset);
            total += match k {
                1 => {
                    let m1 = if a != 0.0 { self.source.partial_moment(r, 1)? } else { 0.0 };
                    a * m1 + b * self.source.partial_moment(r, 0)?
                }
                _ => {
                    let m0 = self.source.partial_moment(r, 0)?;
                    let m1 = if a != 0.0 { self.source.partial_moment(r, 1)? } else { 0.0 };
                    let m2 = if a != 0.0 { self.source.partial_moment(r, 2)? } else { 0.0 };
                    a * a * m2 + 2.0 * a * b * m1 + b * b * m0
                }
            };
        }
        Ok(total)
    }

    /// `E[exp(-sW) - 1]` restricted to this component's source.
    fn lst_deficit(&self, s: f64) -> Result<f64> {
        let mut total = 0.0;
        for seg in &self.segments {
            if seg.slope == 0.0 {
                if seg.offset != 0.0 {
                    let m0 = self.source.partial_moment(&seg.range, 0)?;
                    total += m0 * (-s * seg.offset).exp_m1();
                }
                continue;
            }
            let pl = self.source.partial_lst(&seg.range, s * seg.slope)?;
            let m0 = self.source.partial_moment(&seg.range, 0)?;
            total += (-s * seg.offset).exp() * pl - m0;
        }
        Ok(total)
    }
}

impl WorkLaw {
    pub fn zero() -> Self {
        WorkLaw::default()
    }

    /// Law of `source` scaled by the identity map.
    pub fn of_size(source: Arc<SizeDistribution>) -> Self {
        WorkLaw {
            components: vec![WorkComponent {
                weight: 1.0,
                source,
                segments: vec![WorkSegment {
                    range: SizeRange::all(),
                    slope: 1.0,
                    offset: 0.0,
                }],
            }],
        }
    }

    /// Mixture with the given weights.
    pub fn mixture(parts: Vec<(f64, WorkLaw)>) -> Self {
        let mut components = Vec::new();
        for (w, law) in parts {
            if w == 0.0 {
                continue;
            }
            for mut c in law.components {
                c.weight *= w;
                components.push(c);
            }
        }
        WorkLaw { components }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| {
            c.weight == 0.0
                || c
                    .segments
                    .iter()
                    .all(|s| (s.slope == 0.0 && s.offset == 0.0) || s.range.is_empty())
        })
    }

    /// Total probability covered by segments (work may still be 0 there).
    pub fn covered_mass(&self) -> Result<f64> {
        let mut m = 0.0;
        for c in &self.components {
            m += c.weight * c.mass()?;
        }
        Ok(m)
    }

    pub fn mean(&self) -> Result<f64> {
        let mut m = 0.0;
        for c in &self.components {
            m += c.weight * c.moment(1)?;
        }
        Ok(m)
    }

    pub fn second_moment(&self) -> Result<f64> {
        let mut m = 0.0;
        for c in &self.components {
            m += c.weight * c.moment(2)?;
        }
        Ok(m)
    }

    pub fn moments(&self) -> Result<(f64, f64)> {
        Ok((self.mean()?, self.second_moment()?))
    }

    /// `1 - E[exp(-sW)]`.
    pub fn lst_complement(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        let mut d = 0.0;
        for c in &self.components {
            d += c.weight * c.lst_deficit(s)?;
        }
        Ok(-d)
    }

    /// `E[exp(-sW)]`, exactly 1 at `s = 0`.
    pub fn lst(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(1.0);
        }
        Ok(1.0 - self.lst_complement(s)?)
    }

    /// Transform of the equilibrium (stationary excess) law,
    /// `(1 - E[exp(-sW)]) / (s E[W])`.
    pub fn equilibrium_lst(&self, s: f64) -> Result<f64> {
        let mean = self.mean()?;
        if mean <= 0.0 {
            return Err(SoapError::ZeroMeanWork);
        }
        if s == 0.0 {
            return Ok(1.0);
        }
        if s * mean < 1e-9 {
            if let Ok(m2) = self.second_moment() {
                return Ok(1.0 - s * m2 / (2.0 * mean));
            }
        }
        Ok(self.lst_complement(s)? / (s * mean))
    }

    /// Atoms of a law whose sources are all discrete, merged by value.
    pub fn discrete_atoms(&self) -> Option<Vec<(f64, f64)>> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut covered = 0.0;
        for c in &self.components {
            if c.source.continuous_mass() > 0.0 {
                return None;
            }
            for (x, p) in c.source.atoms() {
                for seg in &c.segments {
                    if seg.range.contains(x) {
                        out.push((seg.slope * x + seg.offset, c.weight * p));
                        covered += c.weight * p;
                    }
                }
            }
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if total - covered > 0.0 {
            out.push((0.0, total - covered));
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (v, p) in out {
            match merged.last_mut() {
                Some(last) if (last.0 - v).abs() <= 1e-12 * v.abs().max(1.0) => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        Some(merged)
    }
}

/// The clipped variable `0` if `X < b`, `X - b` if `b <= X < c`, `c - b` if
/// `X >= c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClippedWork {
    pub source: Arc<SizeDistribution>,
    pub b: f64,
    pub c: f64,
}

impl ClippedWork {
    pub fn new(source: Arc<SizeDistribution>, b: f64, c: f64) -> Result<Self> {
        if !(b >= 0.0 && c >= b) {
            return Err(SoapError::InvalidDistribution(format!(
                "clip interval [{b}, {c}] must satisfy 0 <= b <= c"
            )));
        }
        Ok(ClippedWork { source, b, c })
    }

    pub fn segments(&self) -> Vec<WorkSegment> {
        if self.c <= self.b {
            return Vec::new();
        }
        let mut segs = vec![WorkSegment {
            range: SizeRange::half_open(self.b, self.c),
            slope: 1.0,
            offset: -self.b,
        }];
        if self.c.is_finite() {
            segs.push(WorkSegment {
                range: SizeRange::at_least(self.c),
                slope: 0.0,
                offset: self.c - self.b,
            });
        }
        segs
    }

    pub fn law(&self) -> WorkLaw {
        WorkLaw {
            components: vec![WorkComponent {
                weight: 1.0,
                source: self.source.clone(),
                segments: self.segments(),
            }],
        }
    }

    pub fn clipped_moments(&self) -> Result<(f64, f64)> {
        self.law().moments()
    }

    pub fn lst(&self, s: f64) -> Result<f64> {
        self.law().lst(s)
    }

    pub fn equilibrium_lst(&self, s: f64) -> Result<f64> {
        self.law().equilibrium_lst(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin() -> Arc<SizeDistribution> {
        Arc::new(SizeDistribution::coin_flip(2.0, 14.0).unwrap())
    }

    #[test]
    fn clip_of_coin_flip() {
        let cw = ClippedWork::new(coin(), 6.0, 14.0).unwrap();
        assert_eq!(cw.clipped_moments().unwrap(), (4.0, 32.0));
        assert_eq!(cw.law().discrete_atoms().unwrap(), vec![(0.0, 0.5), (8.0, 0.5)]);
        let whole = ClippedWork::new(coin(), 0.0, f64::INFINITY).unwrap();
        assert_eq!(whole.clipped_moments().unwrap(), (8.0, 100.0));
        let empty = ClippedWork::new(coin(), 3.0, 3.0).unwrap();
        assert_eq!(empty.clipped_moments().unwrap(), (0.0, 0.0));
        assert!(ClippedWork::new(coin(), 3.0, 2.0).is_err());
    }

    #[test]
    fn equilibrium_transforms() {
        let cw = ClippedWork::new(coin(), 6.0, 14.0).unwrap();
        for &s in &[0.01, 0.3, 2.0] {
            let want = (1.0 - (0.5 + 0.5 * f64::exp(-8.0 * s))) / (4.0 * s);
            assert!((cw.equilibrium_lst(s).unwrap() - want).abs() < 1e-14);
        }
        let det = ClippedWork::new(
            Arc::new(SizeDistribution::deterministic(10.0).unwrap()),
            0.0,
            3.0,
        )
        .unwrap();
        let s = 0.4;
        let want = (1.0 - f64::exp(-3.0 * s)) / (3.0 * s);
        assert!((det.equilibrium_lst(s).unwrap() - want).abs() < 1e-15);
        assert!((det.equilibrium_lst(1e-12).unwrap() - 1.0).abs() < 1e-11);
        let empty = ClippedWork::new(coin(), 3.0, 3.0).unwrap();
        assert_eq!(empty.equilibrium_lst(1.0), Err(SoapError::ZeroMeanWork));
    }

    #[test]
    fn clipped_exponential_mean() {
        // E[clip(Exp(1); 1, 2)] = e^-1 - e^-2
        let e = Arc::new(SizeDistribution::exponential(1.0).unwrap());
        let cw = ClippedWork::new(e, 1.0, 2.0).unwrap();
        let (m, _) = cw.clipped_moments().unwrap();
        assert!((m - ((-1.0f64).exp() - (-2.0f64).exp())).abs() < 1e-15);
        assert_eq!(cw.lst(0.0).unwrap(), 1.0);
    }

    #[test]
    fn partition_of_ages_conserves_mean() {
        let laws = [
            SizeDistribution::exponential(0.7).unwrap(),
            SizeDistribution::pareto(2.5, 1.0).unwrap(),
            SizeDistribution::coin_flip(2.0, 14.0).unwrap(),
        ];
        for d in laws {
            let src = Arc::new(d.clone());
            let edges = [0.0, 0.5, 1.0, 2.0, 3.5, 7.0, 14.0, 30.0, f64::INFINITY];
            let total: f64 = edges
                .windows(2)
                .map(|w| ClippedWork::new(src.clone(), w[0], w[1]).unwrap().clipped_moments().unwrap().0)
                .sum();
            assert!((total - d.mean()).abs() < 1e-12, "{}", d.label());
        }
    }
}
