//! Response time of a tagged job: waiting time until first service, then
//! residence time until completion.
//!
//! Waiting is driven by the old work present at arrival, measured against
//! the job's worst future rank at age 0. Residence is a stream of short busy
//! periods of new work, one per age, each against the worst future rank at
//! that age.

pub mod reference;

use crate::distributions::{SizeRange, WorkLaw};
use crate::error::{Result, SoapError};
use crate::exec::Execution;
use crate::quad::{self, Tolerance};
use crate::rank::{
    classify, residence_segments, worst_future_rank, Piece, Policy, Rank, RankBound, ResidenceSegment,
};
use crate::work::{busy_period_lst, new_work, WorkProfile};

/// Tolerance for residence integrals over ages.
pub const RESIDENCE_TOL: Tolerance = Tolerance {
    abs: 1e-13,
    rel: 1e-12,
    max_intervals: 4000,
};

/// A policy under Poisson arrivals at rate `lambda`.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub policy: Policy,
    pub lambda: f64,
}

impl SystemSpec {
    pub fn new(policy: Policy, lambda: f64) -> Result<Self> {
        let spec = SystemSpec { policy, lambda };
        spec.check()?;
        Ok(spec)
    }

    pub fn load(&self) -> f64 {
        self.lambda * self.policy.mean_size()
    }

    pub fn check(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(SoapError::ConfigInvalid(format!("arrival rate {} must be finite and >= 0", self.lambda)));
        }
        let load = self.load();
        if load >= 1.0 {
            return Err(SoapError::Unstable { load });
        }
        Ok(())
    }

    /// Arrival rate of one family.
    pub fn family_rate(&self, family: usize) -> Result<f64> {
        Ok(self.lambda * self.policy.family(family)?.prob)
    }
}

/// Mean response time of jobs of one family and size.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseResult {
    pub family: usize,
    pub x: f64,
    pub lambda: f64,
    pub mean_wait: f64,
    pub mean_residence: f64,
    pub mean_total: f64,
}

/// Ranks at which the new work of some family changes form.
fn critical_ranks(policy: &Policy) -> Vec<Rank> {
    let mut out = Vec::new();
    for f in &policy.families {
        let ceiling = f.age_ceiling();
        let sizes: Vec<f64> = if f.sized {
            let mut s = vec![f.law.support_min()];
            if f.law.support_max().is_finite() {
                s.push(f.law.support_max());
            }
            s.extend(f.law.atoms().into_iter().map(|a| a.0));
            s.extend(f.law.smooth_breaks());
            s
        } else {
            vec![0.0]
        };
        for &x in &sizes {
            let end = if f.sized { x } else { ceiling };
            for p in f.pieces(x, end) {
                out.push(p.eval(p.start));
                if p.end.is_finite() {
                    out.push(p.eval(p.end));
                }
            }
        }
    }
    out
}

/// Ages in `(lo, hi)` where a tracking piece meets a critical rank.
fn tracking_breaks(piece: &Piece, lo: f64, hi: f64, critical: &[Rank]) -> Vec<f64> {
    let mut breaks = vec![lo, hi];
    for r in critical {
        if r.len() != piece.slopes.len() {
            continue;
        }
        for span in classify(piece, r, (lo, true, hi, false)) {
            for v in [span.lo, span.hi] {
                if v > lo && v < hi {
                    breaks.push(v);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

struct Tagged<'a> {
    spec: &'a SystemSpec,
    segments: Vec<ResidenceSegment>,
    critical: Vec<Rank>,
}

impl<'a> Tagged<'a> {
    fn new(spec: &'a SystemSpec, family: usize, x: f64) -> Result<Self> {
        spec.check()?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(SoapError::ConfigInvalid(format!("job size {x} must be positive and finite")));
        }
        let pieces = crate::rank::tagged_pieces(&spec.policy, family, x)?;
        Ok(Tagged {
            spec,
            segments: residence_segments(&pieces, x),
            critical: critical_ranks(&spec.policy),
        })
    }

    /// `int_0^x g(bound(a)) da` with `g` smooth between critical ranks.
    fn integrate<G: Fn(&RankBound) -> Result<f64>>(&self, g: G) -> Result<f64> {
        let mut total = 0.0;
        for seg in &self.segments {
            match seg {
                ResidenceSegment::Fixed { start, end, bound } => total += (end - start) * g(bound)?,
                ResidenceSegment::Tracking { start, end, piece } => {
                    let breaks = tracking_breaks(piece, *start, *end, &self.critical);
                    let err = std::cell::Cell::new(None);
                    let f = |a: f64| match g(&RankBound::closed(piece.eval(a))) {
                        Ok(v) => v,
                        Err(e) => {
                            err.set(Some(e));
                            0.0
                        }
                    };
                    let v = quad::integrate_pieces(f, &breaks, RESIDENCE_TOL)?;
                    if let Some(e) = err.take() {
                        return Err(e);
                    }
                    total += v;
                }
            }
        }
        Ok(total)
    }

    fn rho_new(&self, bound: &RankBound) -> Result<f64> {
        Ok(self.spec.lambda * new_work(&self.spec.policy, bound)?.mean()?)
    }
}

fn worst_at_zero(spec: &SystemSpec, family: usize, x: f64) -> Result<RankBound> {
    worst_future_rank(&spec.policy, family, x, 0.0)
}

/// Mean waiting and residence times of a job of size `x`.
pub fn decompose(spec: &SystemSpec, family: usize, x: f64) -> Result<(f64, f64)> {
    let tagged = Tagged::new(spec, family, x)?;
    if spec.lambda == 0.0 {
        return Ok((0.0, x));
    }
    let bound = worst_at_zero(spec, family, x)?;
    let prof = WorkProfile::new(&spec.policy, &bound, spec.lambda)?;
    let wait = spec.lambda * prof.old_second_moment_sum() / (2.0 * (1.0 - prof.rho_old(0)) * (1.0 - prof.rho_new));
    let residence = tagged.integrate(|b| {
        let rho = tagged.rho_new(b)?;
        if rho >= 1.0 {
            return Err(SoapError::Unstable { load: rho });
        }
        Ok(1.0 / (1.0 - rho))
    })?;
    Ok((wait, residence))
}

pub fn mean_response(spec: &SystemSpec, family: usize, x: f64) -> Result<ResponseResult> {
    let (mean_wait, mean_residence) = decompose(spec, family, x)?;
    Ok(ResponseResult {
        family,
        x,
        lambda: spec.lambda,
        mean_wait,
        mean_residence,
        mean_total: mean_wait + mean_residence,
    })
}

/// Laplace-Stieltjes transform of the response time of one job class and
/// size. Work profiles are built once; each evaluation solves the busy-period
/// fixed points it needs.
pub struct ResponseTransform<'a> {
    tagged: Tagged<'a>,
    x: f64,
    profile: Option<WorkProfile>,
}

impl<'a> ResponseTransform<'a> {
    pub fn new(spec: &'a SystemSpec, family: usize, x: f64) -> Result<Self> {
        let tagged = Tagged::new(spec, family, x)?;
        let profile = if spec.lambda > 0.0 {
            Some(WorkProfile::new(&spec.policy, &worst_at_zero(spec, family, x)?, spec.lambda)?)
        } else {
            None
        };
        Ok(ResponseTransform { tagged, x, profile })
    }

    pub fn waiting(&self, s: f64) -> Result<f64> {
        let prof = match &self.profile {
            Some(p) if s > 0.0 => p,
            _ => return Ok(1.0),
        };
        let lambda = self.tagged.spec.lambda;
        let sigma = s + lambda * (1.0 - prof.busy_period_lst(s)?);
        let mut num = 1.0 - prof.rho_old_sum;
        let mut den = 1.0;
        for (i, law) in prof.old_work.iter().enumerate() {
            let rho = prof.rho_old[i];
            if rho <= 0.0 {
                continue;
            }
            let y = law.equilibrium_lst(sigma)?;
            if i == 0 {
                den -= rho * y;
            } else {
                num += rho * y;
            }
        }
        Ok(num / den)
    }

    pub fn residence(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(1.0);
        }
        let lambda = self.tagged.spec.lambda;
        if lambda == 0.0 {
            return Ok((-s * self.x).exp());
        }
        let policy = &self.tagged.spec.policy;
        let exponent = self.tagged.integrate(|b| {
            let nw: WorkLaw = new_work(policy, b)?;
            Ok(s + lambda * (1.0 - busy_period_lst(&nw, lambda, s)?))
        })?;
        Ok((-exponent).exp())
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(1.0);
        }
        Ok(self.waiting(s)? * self.residence(s)?)
    }
}

pub fn response_lst(spec: &SystemSpec, family: usize, x: f64, s: f64) -> Result<f64> {
    ResponseTransform::new(spec, family, x)?.eval(s)
}

/// Mean response time of one family over its size law: an exact sum over
/// atoms plus an integral against the density.
pub fn family_mean(spec: &SystemSpec, family: usize, exec: Execution) -> Result<f64> {
    Ok(range_total(spec, family, &SizeRange::all(), exec)?.1)
}

/// Mean response time of the jobs of one family whose size lies in `range`.
pub fn range_mean(spec: &SystemSpec, family: usize, range: &SizeRange, exec: Execution) -> Result<f64> {
    let (mass, total) = range_total(spec, family, range, exec)?;
    if mass <= 0.0 {
        return Err(SoapError::SizeOutOfSupport {
            size: range.lo,
            family: spec.policy.family(family)?.name.clone(),
        });
    }
    Ok(total / mass)
}

/// `(P(X in range), E[T(X) 1(X in range)])`.
fn range_total(spec: &SystemSpec, family: usize, range: &SizeRange, exec: Execution) -> Result<(f64, f64)> {
    let f = spec.policy.family(family)?;
    let law = f.law.clone();
    let atoms: Vec<(f64, f64)> = law
        .atoms()
        .into_iter()
        .filter(|a| a.1 > 0.0 && a.0 > 0.0 && range.contains(a.0))
        .collect();
    let sums = exec.try_map(&atoms, |&(x, p)| mean_response(spec, family, x).map(|r| p * r.mean_total))?;
    let mass = law.partial_moment(range, 0)?;
    let mut total: f64 = sums.iter().sum();
    let lo = law.support_min().max(range.lo);
    let hi = f.age_ceiling().min(range.hi);
    if law.continuous_mass() > 0.0 && hi > lo {
        let mut breaks = vec![lo];
        breaks.extend(law.smooth_breaks().into_iter().filter(|&b| b > lo && b < hi));
        breaks.extend(law.atoms().iter().map(|a| a.0).filter(|&b| b > lo && b < hi));
        breaks.push(hi);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let cells: Vec<(f64, f64)> = breaks.windows(2).map(|w| (w[0], w[1])).collect();
        let parts = exec.try_map(&cells, |&(a, b)| {
            let err = std::cell::Cell::new(None);
            let g = |x: f64| {
                if x <= 0.0 {
                    return 0.0;
                }
                match mean_response(spec, family, x) {
                    Ok(r) => r.mean_total * law.density(x),
                    Err(e) => {
                        err.set(Some(e));
                        0.0
                    }
                }
            };
            let v = quad::integrate(g, a, b, Tolerance::new(1e-12, 1e-9))?;
            match err.take() {
                Some(e) => Err(e),
                None => Ok(v),
            }
        })?;
        total += parts.iter().sum::<f64>();
    }
    Ok((mass, total))
}

/// Mean response time over all families and sizes.
pub fn overall_mean(spec: &SystemSpec, exec: Execution) -> Result<f64> {
    let mut total = 0.0;
    for (i, f) in spec.policy.families.iter().enumerate() {
        if f.prob > 0.0 {
            total += f.prob * family_mean(spec, i, exec)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::SizeDistribution;
    use crate::rank::{builtin_policy, FamilySpec, PolicyParams};

    fn spec(name: &str, law: SizeDistribution, lambda: f64) -> SystemSpec {
        let p = builtin_policy(
            name,
            &PolicyParams {
                families: vec![FamilySpec::new(1.0, law)],
                ..Default::default()
            },
        )
        .unwrap();
        SystemSpec::new(p, lambda).unwrap()
    }

    fn coin() -> SizeDistribution {
        SizeDistribution::coin_flip(2.0, 14.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn serpt_decomposition() {
        let s = spec("serpt", coin(), 0.1);
        let (w, r) = decompose(&s, 0, 14.0).unwrap();
        assert!(close(w, 31.25, 1e-12) && close(r, 15.5, 1e-12), "{w} {r}");
        assert!(close(mean_response(&s, 0, 2.0).unwrap().mean_total, 4.25, 1e-12));
    }

    #[test]
    fn gittins_coin_flip() {
        let s = spec("gittins", coin(), 0.1);
        assert!(close(mean_response(&s, 0, 2.0).unwrap().mean_total, 2.75, 1e-12));
        assert!(close(mean_response(&s, 0, 14.0).unwrap().mean_total, 47.75, 1e-12));
    }

    #[test]
    fn empty_system_is_pure_service() {
        let s = spec("serpt", coin(), 0.0);
        let r = mean_response(&s, 0, 14.0).unwrap();
        assert_eq!((r.mean_wait, r.mean_residence), (0.0, 14.0));
        assert_eq!(overall_mean(&s, Execution::Sequential).unwrap(), 8.0);
    }

    #[test]
    fn fcfs_is_pollaczek_khinchine() {
        let s = spec("fcfs", SizeDistribution::exponential(1.0).unwrap(), 0.5);
        let (w, r) = decompose(&s, 0, 3.0).unwrap();
        assert!(close(w, 1.0, 1e-11) && close(r, 3.0, 1e-12), "{w} {r}");
        let m = overall_mean(&s, Execution::Sequential).unwrap();
        assert!(close(m, 2.0, 1e-8), "{m}");
    }

    #[test]
    fn fcfs_transform() {
        // W(s) = (1 - rho) s / (s - lambda (1 - X(s))), times e^{-sx}
        let s = spec("fcfs", SizeDistribution::exponential(1.0).unwrap(), 0.5);
        let (lambda, rho, x, t) = (0.5, 0.5, 2.0, 1.0);
        let xs = 1.0 / (1.0 + t);
        let want = (1.0 - rho) * t / (t - lambda * (1.0 - xs)) * f64::exp(-t * x);
        let got = response_lst(&s, 0, x, t).unwrap();
        assert!((got - want).abs() < 1e-11, "{got} vs {want}");
        assert_eq!(response_lst(&s, 0, x, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn overall_gittins_beats_serpt() {
        let g = overall_mean(&spec("gittins", coin(), 0.1), Execution::Sequential).unwrap();
        let r = overall_mean(&spec("serpt", coin(), 0.1), Execution::Sequential).unwrap();
        assert!(close(g, 25.25, 1e-12) && close(r, 25.5, 1e-12), "{g} {r}");
    }

    #[test]
    fn instability_is_rejected() {
        let p = builtin_policy(
            "serpt",
            &PolicyParams {
                families: vec![FamilySpec::new(1.0, coin())],
                ..Default::default()
            },
        )
        .unwrap();
        assert!(matches!(SystemSpec::new(p, 0.2), Err(SoapError::Unstable { .. })));
    }
}
